#include "doctest.h"

#include <algorithm>
#include <string>

#include "bop2dc/config.hpp"
#include "bop2dc/engine.hpp"

using namespace bop2dc;
using nlohmann::json;

namespace {

const char* kBinary = R"({
  "endpoint": {"family": "binary"},
  "targets": [{"lrv": 0.2, "cmv": 0.3, "eff": 0.4}],
  "plan": {"max_n": 40, "interim_looks": [10, 20, 30]},
  "grid": {"lambda_lrv": {"lo": 0.9, "hi": 0.95, "step": 0.01},
           "lambda_cmv": {"lo": 0.1, "hi": 0.2, "step": 0.02}}
})";

bool has_error(const ConfigOutcome& o, const std::string& path, const std::string& needle = "") {
    return std::any_of(o.errors.begin(), o.errors.end(), [&](const FieldError& e) {
        return e.path == path && e.message.find(needle) != std::string::npos;
    });
}

}  // namespace

TEST_CASE("defaults are materialized") {
    const auto o = parse_config(std::string(kBinary));
    REQUIRE(o.ok());
    const auto& c = *o.config;
    CHECK(c.spec.family == Family::Binary);
    CHECK(c.spec.endpoints[0].target.futile == 0.2);
    CHECK(c.spec.endpoints[0].target.eff == 0.4);
    CHECK(c.plan.looks() == std::vector<int>{10, 20, 30, 40});
    CHECK(std::get<BinaryPrior>(c.prior).a == 0.1);
    CHECK(c.constraints.max_fgr == 0.05);
    CHECK(c.n_sims == 10000);
    CHECK(c.futile.experimental.value == 0.2);
    CHECK(c.effective.experimental.value == 0.4);
    CHECK(std::find(c.defaults_applied.begin(), c.defaults_applied.end(), "prior") != c.defaults_applied.end());
    CHECK(c.echo["plan"]["arms"] == 1);
    CHECK(c.scenarios().size() == 2u);
}

TEST_CASE("the echo is a fixed point") {
    for (const char* path : {"binary.json", "tte.json", "continuous.json",
                             "multiple.json", "efftox.json", "rct.json"}) {
        CAPTURE(path);
        const auto c = load_config_file(std::string(BOP2DC_CONFIG_DIR) + "/" + path);
        const auto again = load_config(c.echo.dump());
        CHECK(again.echo.dump() == c.echo.dump());
        CHECK(again.defaults_applied.empty());
    }
}

TEST_CASE("missing and unknown fields are reported by path") {
    auto o = parse_config(std::string(R"({"endpoint": {"family": "binary"}, "targets": [{"lrv": 0.2}],
                                           "plan": {"max_n": 40, "looks": [10]}, "bogus": 1})"));
    CHECK_FALSE(o.ok());
    CHECK(has_error(o, "targets[0].cmv", "missing"));
    CHECK(has_error(o, "plan.looks", "unknown field"));
    CHECK(has_error(o, "bogus", "unknown field"));
    CHECK_FALSE(has_error(o, "targets[0].eff"));

    o = parse_config(std::string(R"({"targets": [{"lrv": 0.2, "cmv": 0.3}], "plan": {"max_n": 40}})"));
    CHECK(has_error(o, "endpoint", "missing"));

    o = parse_config(std::string(R"({"endpoint": {"family": "ordinal"}, "targets": [{"lrv": 0.2, "cmv": 0.3}],
                                      "plan": {"max_n": 40, "interim_looks": [20, 10]}})"));
    CHECK(has_error(o, "endpoint.family"));
    CHECK_FALSE(o.errors.empty());
}

TEST_CASE("parse errors carry a line and column") {
    const auto o = parse_config(std::string("{\n  \"endpoint\": {\"family\": \"binary\"},\n  \"targets\": [,]\n}"));
    REQUIRE(o.errors.size() == 1u);
    CHECK(o.errors[0].path.empty());
    CHECK(o.errors[0].message.find("JSON parse error at line 3, column") == 0);
    CHECK_THROWS_AS(load_config("[1,"), ConfigError);
    try {
        load_config("{}");
    } catch (const ConfigError& e) {
        CHECK(errors_to_json(e.errors()).size() >= 3u);
    }
}

TEST_CASE("design parameters") {
    const auto d = design_from_json(json::parse(R"({"lambda_lrv": 0.93, "lambda_cmv": 0.14, "gamma_lrv": 0, "gamma_cmv": 0.8})"));
    CHECK(d == DesignParams{0.93, 0.14, 0.0, 0.8});
    CHECK(design_to_json(d).dump() == R"({"lambda_lrv":0.93,"lambda_cmv":0.14,"gamma_lrv":0.0,"gamma_cmv":0.8})");
    CHECK_THROWS_AS(design_from_json(json::parse(R"({"lambda_lrv": 0.93})")), ConfigError);
    CHECK_THROWS_AS(design_from_json(json::parse(R"({"lambda_lrv": 1.5, "lambda_cmv": 0.1, "gamma_lrv": 0, "gamma_cmv": 0})")),
                    ConfigError);
}

TEST_CASE("categorical marginals build the joint table") {
    const auto c = load_config(R"({
      "endpoint": {"family": "categorical", "combination": "coprimary", "categories": 4},
      "targets": [{"lrv": 0.3, "cmv": 0.4}, {"lrv": 0.3, "cmv": 0.2, "direction": "lower"}],
      "plan": {"max_n": 40, "interim_looks": [20]},
      "scenarios": {"futile": {"experimental": {"marginals": [0.3, 0.3], "odds_ratio": 2}}}
    })");
    REQUIRE(c.futile.experimental.probs.size() == 4u);
    const auto& p = c.futile.experimental.probs;
    CHECK(p[0] + p[1] == doctest::Approx(0.3));
    CHECK(p[0] + p[2] == doctest::Approx(0.3));
    CHECK(c.spec.endpoints[1].selector.bits == std::vector<int>{1, 0, 1, 0});
    CHECK(c.spec.endpoints[1].target.direction == Direction::LowerIsBetter);
    CHECK_FALSE(c.assumptions.empty());
}

TEST_CASE("two-arm scenarios need a control truth") {
    const char* base = R"({
      "endpoint": {"family": "binary"},
      "targets": [{"lrv": 0.0, "cmv": 0.2}],
      "plan": {"max_n": 75, "interim_looks": [30, 45, 60], "arms": 2, "allocation_ratio": [2, 1]})";
    auto o = parse_config(std::string(base) + "}");
    CHECK_FALSE(o.ok());
    o = parse_config(std::string(base) + R"(, "scenarios": {"control": {"value": 0.2}}})");
    REQUIRE(o.ok());
    CHECK(o.config->effective.experimental.value == doctest::Approx(0.4));
    CHECK(o.config->effective.control->value == 0.2);
    CHECK(o.config->plan.ratio_experimental == 2);
}

TEST_CASE("validation payload") {
    const auto good = validation_payload(parse_config(std::string(kBinary)));
    CHECK(good["valid"] == true);
    CHECK(good.contains("config"));
    const auto bad = validation_payload(parse_config(std::string("{}")));
    CHECK(bad["valid"] == false);
    CHECK(bad["errors"].is_array());
}

TEST_CASE("calibration payload") {
    const auto c = load_config(kBinary);
    const auto run = run_calibration(c);
    const auto& p = run.payload;
    CHECK(p["kind"] == "calibration");
    CHECK(p["feasible"] == true);
    CHECK(p["evaluation"] == "exact");
    CHECK(p["fresh_seed_validation"].is_null());
    CHECK(p["rules"].contains("decision_table"));
    CHECK(p["oc_table"].size() == 2u);
    CHECK(p["protocol_summary"] == run.summary);
    CHECK(dump_payload(p) == dump_payload(run_calibration(c).payload));
    CHECK(dump_payload(p).back() == '\n');
}

TEST_CASE("zero error budgets are infeasible") {
    auto doc = json::parse(kBinary);
    doc["constraints"] = {{"max_fgr", 0.0}, {"max_fngr", 0.0}, {"max_fcr", 0.0}};
    const auto run = run_calibration(load_config(doc.dump()));
    CHECK(run.payload["feasible"] == false);
    CHECK(run.payload["max_violation"].get<double>() > 0);
    CHECK(run.summary.find("**Infeasible.**") != std::string::npos);
}

TEST_CASE("simulation and decision table need a design") {
    auto doc = json::parse(kBinary);
    CHECK_THROWS_AS(run_simulation(load_config(doc.dump())), ConfigError);
    CHECK_THROWS_AS(run_decision_table(load_config(doc.dump())), ConfigError);
    doc["design"] = {{"lambda_lrv", 0.93}, {"lambda_cmv", 0.14}, {"gamma_lrv", 0}, {"gamma_cmv", 0.8}};
    doc["simulation"] = {{"n_sims", 500}, {"seed", 9}};
    const auto c = load_config(doc.dump());
    const auto sim = run_simulation(c);
    REQUIRE(sim.rows.size() == 2u);
    CHECK(sim.trials[0].size() == 500u);
    CHECK(sim.payload["scenarios"][0].contains("exact"));
    CHECK(parse_csv(sim.csv).rows.size() == 2u);
    const auto csv = trials_csv(sim.trials[0], c.plan);
    CHECK(csv.rfind("trial_id,decision,stopped_at,n_used,duration", 0) == 0);
    const auto table = run_decision_table(c);
    CHECK(table["kind"] == "decision_table");
    CHECK(table["rules"].contains("decision_table"));
    CHECK(table["rules"]["markdown"].get<std::string>().find("final") != std::string::npos);
}
