#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bop2dc/config.hpp"
#include "bop2dc/report.hpp"

namespace bop2dc {

inline constexpr const char* kVersion = "0.1.0";

// Shared entry points behind the CLI, the HTTP service and the Python module,
// so every front end emits the same bytes for the same config.
struct EngineOptions {
    int threads = 0;
    std::function<void(double)> progress;
};

struct CalibrationRun {
    CalibrationResult result;
    nlohmann::ordered_json payload;
    std::string summary;  // protocol summary markdown
};

CalibrationRun run_calibration(const DesignConfig& config, const EngineOptions& opt = {});

struct SimulationRun {
    std::vector<OcRow> rows;
    std::vector<std::vector<TrialResult>> trials;  // per scenario
    nlohmann::ordered_json payload;
    std::string csv;
};

// Requires config.design.
SimulationRun run_simulation(const DesignConfig& config, const EngineOptions& opt = {});

// Decision table for single binary endpoints, probability cutoffs otherwise.
// Requires config.design.
nlohmann::ordered_json run_decision_table(const DesignConfig& config);

nlohmann::ordered_json validation_payload(const ConfigOutcome& outcome);

nlohmann::ordered_json oc_to_json(const OperatingCharacteristics& oc);
nlohmann::ordered_json table_to_json(const DecisionTable& table);

std::string trials_csv(const std::vector<TrialResult>& trials, const TrialPlan& plan);

// Pretty-printed JSON with a trailing newline.
std::string dump_payload(const nlohmann::ordered_json& j);

}  // namespace bop2dc
