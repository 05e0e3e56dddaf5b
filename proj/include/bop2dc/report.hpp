#pragma once

#include <string>
#include <vector>

#include "bop2dc/calibration.hpp"

namespace bop2dc {

// Per-look count boundaries for a single binary endpoint.
//
// For higher-is-better endpoints `stop` is the largest y with a no-go
// (-1 if none) and `go` the smallest y with a go at the final look (n + 1 if
// none). For lower-is-better endpoints the roles flip: `stop` is the smallest
// y with a no-go (n + 1 if none) and `go` the largest y with a go (-1 if none).
struct DecisionTableRow {
    int n = 0;
    bool final_look = false;
    int stop = -1;
    int go = 0;         // final look only
    int graduate = 0;   // interim looks with interim graduation only
    std::vector<Decision> by_y;  // decision for y = 0..n
};

struct DecisionTable {
    Direction direction = Direction::HigherIsBetter;
    bool has_graduate = false;
    std::vector<DecisionTableRow> rows;

    Decision decision(int look, int y) const { return rows.at(look).by_y.at(y); }
};

DecisionTable decision_table_binary(const DesignParams& design, const TrialPlan& plan,
                                    const BinaryPrior& prior, const TargetProfile& profile);

std::string render_decision_table_markdown(const DecisionTable& table);

// Probability cutoffs by look, reported for endpoints without a finite table.
std::string render_cutoffs_markdown(const DesignParams& design, const TrialPlan& plan);

struct OcRow {
    std::string scenario;
    std::string design;
    std::string theta_lrv;
    std::string theta_cmv;
    std::string theta_true;
    OperatingCharacteristics oc;
};

struct OcTableOptions {
    bool include_duration = false;
    bool include_graduate = false;
};

// Half-up rounding to one decimal of 100 * rate, e.g. 0.0435 -> "4.4".
std::string format_percent(double rate);
std::string format_one_decimal(double value);
std::string format_number(double value);  // shortest round-trip form

std::string render_oc_csv(const std::vector<OcRow>& rows, const OcTableOptions& opt);
std::string render_oc_json(const std::vector<OcRow>& rows, const OcTableOptions& opt);

// Parsed form of a rendered table: header plus string cells (RFC 4180).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable parse_csv(const std::string& text);
std::string csv_escape(const std::string& field);

// Deterministic markdown design summary. `assumptions` lists modeling
// choices made while building the problem (defaults applied, joint
// probability construction, ...).
std::string protocol_summary(const CalibrationResult& result, const CalibrationProblem& problem,
                             const ConstraintSet& constraints, const std::vector<std::string>& assumptions);

}  // namespace bop2dc
