#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bop2dc/calibration.hpp"
#include "json.hpp"

namespace bop2dc {

struct FieldError {
    std::string path;  // e.g. "plan.interim_looks[1]"; "" for document-level errors
    std::string message;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<FieldError> errors);
    const std::vector<FieldError>& errors() const { return errors_; }

private:
    std::vector<FieldError> errors_;
};

// Fully materialized design configuration.
struct DesignConfig {
    EndpointSpec spec;
    TrialPlan plan;
    PriorSpec prior;
    ConstraintSet constraints;
    Objective objective = Objective::Optimal;
    Evaluation evaluation = Evaluation::Auto;
    GridSpec grid;
    std::int64_t n_sims = 10000;
    std::uint64_t seed = 2024;
    Scenario futile;
    Scenario effective;
    std::vector<Scenario> additional;
    std::optional<DesignParams> design;

    // Canonical JSON with every default written out. Validating the echo
    // reproduces it exactly.
    nlohmann::ordered_json echo;
    std::vector<std::string> defaults_applied;  // field paths filled by defaults
    std::vector<std::string> assumptions;       // modeling choices implied by the config

    CalibrationProblem problem() const;
    // futile, effective, then the additional scenarios.
    std::vector<Scenario> scenarios() const;
};

struct ConfigOutcome {
    std::optional<DesignConfig> config;
    std::vector<FieldError> errors;

    bool ok() const { return config.has_value(); }
};

// Parse errors are reported with line and column.
ConfigOutcome parse_config(const std::string& text);
ConfigOutcome parse_config(const nlohmann::json& doc);

// Throws ConfigError.
DesignConfig load_config(const std::string& text);
DesignConfig load_config_file(const std::string& path);

nlohmann::ordered_json design_to_json(const DesignParams& d);
// Accepts {"lambda_lrv", "lambda_cmv", "gamma_lrv", "gamma_cmv"}; all required.
DesignParams design_from_json(const nlohmann::json& j, const std::string& path = "design");

nlohmann::ordered_json errors_to_json(const std::vector<FieldError>& errors);

std::string read_text_file(const std::string& path);

}  // namespace bop2dc
