#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bop2dc/simulation.hpp"

namespace bop2dc {

struct ConstraintSet {
    double max_fgr = 0.05;
    double max_fngr = 0.10;
    double max_fcr = 0.20;
};

void validate(const ConstraintSet& c);

struct GridAxis {
    double lo = 0.0;
    double hi = 1.0;
    double step = 0.1;

    // lo, lo + step, ... up to hi (inclusive, within 1e-9).
    std::vector<double> values() const;
};

struct GridSpec {
    GridAxis lambda_lrv{0.5, 0.99, 0.01};
    GridAxis lambda_cmv{0.01, 0.5, 0.01};
    GridAxis gamma_lrv{0.0, 1.0, 0.1};
    GridAxis gamma_cmv{0.0, 1.0, 0.1};

    std::size_t size() const;
};

enum class Objective { Optimal, MinN };
enum class Evaluation { Auto, Exact, MonteCarlo };

std::string to_string(Objective o);
Objective objective_from_string(const std::string& s);
std::string to_string(Evaluation e);
Evaluation evaluation_from_string(const std::string& s);

// Cartesian product ordered lambda_lrv (outer), lambda_cmv, gamma_lrv, gamma_cmv (inner).
std::vector<DesignParams> build_grid(const GridSpec& g);

struct CalibrationProblem {
    EndpointSpec spec;
    TrialPlan plan;
    PriorSpec prior;
    Scenario futile;
    Scenario effective;
};

// Rates used for calibration. A graduate decision counts as a go.
struct DesignMetrics {
    double fgr = 0.0;
    double fngr = 0.0;
    double cgr = 0.0;
    double fcr = 0.0;
    double expected_n_futile = 0.0;
};

DesignMetrics metrics(const OperatingCharacteristics& futile, const OperatingCharacteristics& eff);

// Largest positive constraint excess, 0 when feasible.
double constraint_violation(const DesignMetrics& m, const ConstraintSet& c);

struct CalibrationSettings {
    Objective objective = Objective::Optimal;
    ConstraintSet constraints;
    GridSpec grid;
    Evaluation evaluation = Evaluation::Auto;
    std::int64_t n_sims = 10000;
    std::uint64_t seed = 2024;
    int threads = 0;
    bool fresh_seed_validation = true;
    std::function<void(double)> progress;  // fraction of grid points evaluated
};

struct CalibrationResult {
    DesignParams design;
    OperatingCharacteristics oc_futile;
    OperatingCharacteristics oc_effective;
    DesignMetrics metrics;
    double objective_value = 0.0;
    bool feasible = false;
    double max_violation = 0.0;
    std::int64_t points_evaluated = 0;
    Objective objective = Objective::Optimal;
    Evaluation evaluation = Evaluation::Exact;  // route actually used
    std::int64_t n_sims = 0;
    std::uint64_t seed = 0;
    // Re-simulation of the chosen design with an independent seed (MC route only).
    std::optional<std::pair<OperatingCharacteristics, OperatingCharacteristics>> validation;
};

// Trial paths simulated once per calibration and replayed under every grid
// point (common random numbers).
struct SharedDatasets {
    std::vector<TrialPath> futile;
    std::vector<TrialPath> effective;

    static SharedDatasets build(const CalibrationProblem& problem, std::int64_t n_sims,
                                std::uint64_t seed, int threads);
};

std::pair<OperatingCharacteristics, OperatingCharacteristics> evaluate_point(
    const DesignParams& design, const SharedDatasets& shared, const TrialPlan& plan,
    Combination combination);

CalibrationResult calibrate(const CalibrationProblem& problem, const CalibrationSettings& settings);

}  // namespace bop2dc
