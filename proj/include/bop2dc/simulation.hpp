#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "bop2dc/decision.hpp"
#include "bop2dc/posterior.hpp"

namespace bop2dc {

// One monitored quantity. Single-endpoint designs have exactly one; joint
// categorical designs have one per derived rate theta_j = b_j . p.
struct MonitoredEndpoint {
    std::string name = "primary";
    EndpointSelector selector;  // categorical only
    TargetProfile target;
};

struct EndpointSpec {
    Family family = Family::Binary;
    Combination combination = Combination::Single;
    int categories = 0;  // K, categorical only
    std::vector<MonitoredEndpoint> endpoints;
};

void validate(const EndpointSpec& spec);

enum class Accrual { Deterministic, Poisson };
enum class DifferenceMethod { Quadrature, MonteCarlo };

struct TrialPlan {
    int max_n = 40;
    std::vector<int> interim_looks;  // strictly increasing, all < max_n; totals across arms
    int arms = 1;
    int ratio_experimental = 1;
    int ratio_control = 1;
    double accrual_rate = 1.0;  // patients per month
    Accrual accrual = Accrual::Deterministic;
    double followup_months = 0.0;
    bool allow_superiority = false;      // two-arm graduate boundary
    bool interim_go_graduates = false;   // three-decision interim variant
    DifferenceMethod difference_method = DifferenceMethod::Quadrature;
    std::int64_t difference_draws = kDefaultDifferenceDraws;

    // Interim look sizes followed by max_n.
    std::vector<int> looks() const;
    int look_count() const { return static_cast<int>(interim_looks.size()) + 1; }
};

void validate(const TrialPlan& plan);

// Truth for one arm. `value` is the response rate (binary), mean
// (continuous) or median survival in months (tte).
struct ArmTruth {
    double value = 0.0;
    double sd = 1.0;
    std::vector<double> probs;  // joint category probabilities (categorical)
};

struct Scenario {
    std::string label;
    ArmTruth experimental;
    std::optional<ArmTruth> control;
};

void validate(const Scenario& sc, const EndpointSpec& spec, const TrialPlan& plan);

// Joint cell probabilities for two binary endpoints in the order
// (1,1), (1,0), (0,1), (0,0). odds_ratio = 1 gives independence.
std::vector<double> joint_from_marginals(double p1, double p2, double odds_ratio = 1.0);

struct Patient {
    int arm = 0;  // 0 experimental, 1 control
    double enroll_time = 0.0;
    double value = 0.0;  // 0/1 response, continuous outcome or event time
    int category = 0;    // joint category (categorical)
};

using TrialData = std::vector<Patient>;

TrialData generate_trial_data(const Scenario& sc, const EndpointSpec& spec, const TrialPlan& plan,
                              std::uint64_t seed, std::uint64_t trial_index);

// Criterion probabilities at every look (rows) for every endpoint (columns),
// plus the calendar time of each analysis.
struct TrialPath {
    int endpoints = 1;
    std::vector<CriterionProbs> probs;  // look-major
    std::vector<double> look_times;

    const CriterionProbs& at(int look, int endpoint) const { return probs[look * endpoints + endpoint]; }
};

// Per-look sufficient statistics bookkeeping used by TTE analyses.
TteStats tte_stats_at(const TrialData& data, int arm, int n_included, double analysis_time);

// Computes the posterior criterion probabilities along a trial. Discrete
// families memoize by sufficient statistic, so one evaluator instance should
// be used per thread.
class PathEvaluator {
public:
    PathEvaluator(EndpointSpec spec, TrialPlan plan, PriorSpec prior);

    TrialPath evaluate(const TrialData& data);

    const EndpointSpec& spec() const { return spec_; }
    const TrialPlan& plan() const { return plan_; }

private:
    CriterionProbs single_arm(const TrialData& data, int n, double time, int endpoint);
    CriterionProbs two_arm(const TrialData& data, int n, double time, int endpoint);
    PosteriorDist arm_posterior(const TrialData& data, int arm, int n, double time, int endpoint) const;

    EndpointSpec spec_;
    TrialPlan plan_;
    PriorSpec prior_;
    struct KeyHash {
        std::size_t operator()(const std::vector<int>& k) const;
    };
    std::unordered_map<std::vector<int>, CriterionProbs, KeyHash> cache_;
};

struct TrialResult {
    Decision decision = Decision::NoGo;
    int stopped_at_look = 0;  // index into plan.looks(); last index means the final analysis
    int n_used = 0;
    double duration = 0.0;
};

// Replays the decision rules along a precomputed path. `designs` holds one
// DesignParams per monitored endpoint (a single entry is shared by all).
TrialResult decide_trial(const TrialPath& path, std::span<const DesignParams> designs,
                         const TrialPlan& plan, Combination combination);

TrialResult run_trial(const TrialData& data, std::span<const DesignParams> designs,
                      PathEvaluator& evaluator);

struct OperatingCharacteristics {
    double go_rate = 0.0;
    double nogo_rate = 0.0;
    double consider_rate = 0.0;
    double graduate_rate = 0.0;
    double avg_sample_size = 0.0;
    double avg_duration = 0.0;
    std::int64_t n_sims = 0;  // 0 for exact evaluation
    bool exact = false;

    double se(double rate) const;
};

// Accumulates trial results with integer counts; sums are formed in trial
// order so results do not depend on scheduling.
OperatingCharacteristics summarize(std::span<const TrialResult> results);

struct SimulationOptions {
    std::int64_t n_sims = 10000;
    std::uint64_t seed = 2024;
    int threads = 0;  // 0 = hardware concurrency
};

std::vector<TrialResult> simulate_trials(const Scenario& sc, std::span<const DesignParams> designs,
                                         const EndpointSpec& spec, const TrialPlan& plan,
                                         const PriorSpec& prior, const SimulationOptions& opt);

OperatingCharacteristics estimate_oc(const Scenario& sc, std::span<const DesignParams> designs,
                                     const EndpointSpec& spec, const TrialPlan& plan,
                                     const PriorSpec& prior, const SimulationOptions& opt);

// Dynamic program over cumulative response counts for a fixed look schedule
// and true response rate. A rule assigns a decision to every (look, y) with
// y = 0..n_look, flattened look by look (see offset()).
class ExactBinaryEvaluator {
public:
    ExactBinaryEvaluator(const TrialPlan& plan, double theta);

    std::size_t rule_size() const { return offsets_.back(); }
    std::size_t offset(int look) const { return offsets_[look]; }
    const std::vector<int>& looks() const { return looks_; }

    OperatingCharacteristics evaluate(std::span<const Decision> rule) const;

private:
    std::vector<int> looks_;
    std::vector<double> look_times_;
    std::vector<std::size_t> offsets_;
    std::vector<std::vector<double>> step_pmf_;  // Binomial(n_k - n_{k-1}, theta)
};

// Per-(look, y) decisions of the single binary endpoint rule.
std::vector<Decision> binary_rule(const DesignParams& design, const TrialPlan& plan,
                                  const BinaryPrior& prior, const TargetProfile& profile);

// Exact operating characteristics of a single-arm, single binary endpoint
// design by propagating the response-count distribution across looks.
OperatingCharacteristics exact_oc_binary_single_arm(const Scenario& sc, const DesignParams& design,
                                                    const TrialPlan& plan, const BinaryPrior& prior,
                                                    const TargetProfile& profile);

// Whether the exact route applies to this configuration.
bool exact_route_available(const EndpointSpec& spec, const TrialPlan& plan);

int resolve_threads(int requested);

// Static-chunk parallel loop over [0, count); fn(begin, end) per chunk.
void parallel_for(std::int64_t count, int threads,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace bop2dc
