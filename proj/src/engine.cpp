#include "bop2dc/engine.hpp"

#include <cmath>

namespace bop2dc {

using ojson = nlohmann::ordered_json;

namespace {

std::string joined_targets(const EndpointSpec& spec, bool lrv) {
    std::string out;
    for (std::size_t i = 0; i < spec.endpoints.size(); ++i) {
        if (i) out += "; ";
        const auto& t = spec.endpoints[i].target;
        out += format_number(lrv ? t.lrv : t.cmv);
    }
    return out;
}

// Categorical arms are shown by their monitored rates b . p, as in the
// published tables.
std::string arm_text(const ArmTruth& a, const EndpointSpec& spec) {
    if (spec.family != Family::Categorical) return format_number(a.value);
    std::string s;
    for (std::size_t j = 0; j < spec.endpoints.size(); ++j) {
        double rate = 0;
        for (std::size_t k = 0; k < a.probs.size(); ++k)
            if (spec.endpoints[j].selector.bits[k]) rate += a.probs[k];
        s += (j ? "; " : "") + format_number(std::round(rate * 1e12) / 1e12);
    }
    return s;
}

std::string truth_text(const Scenario& sc, const EndpointSpec& spec) {
    if (!sc.control) return arm_text(sc.experimental, spec);
    return "C=" + arm_text(*sc.control, spec) + " E=" + arm_text(sc.experimental, spec);
}

OcRow make_row(const Scenario& sc, const std::string& design_label, const DesignConfig& c,
               const OperatingCharacteristics& oc) {
    return {sc.label,
            design_label,
            joined_targets(c.spec, true),
            joined_targets(c.spec, false),
            truth_text(sc, c.spec),
            oc};
}

OcTableOptions table_options(const DesignConfig& c) {
    return {c.spec.family == Family::TimeToEvent, c.plan.allow_superiority || c.plan.interim_go_graduates};
}

ojson metrics_to_json(const DesignMetrics& m) {
    ojson j;
    j["fgr"] = m.fgr;
    j["fngr"] = m.fngr;
    j["cgr"] = m.cgr;
    j["fcr"] = m.fcr;
    j["expected_n_futile"] = m.expected_n_futile;
    return j;
}

ojson cutoffs_to_json(const DesignParams& d, const TrialPlan& plan) {
    ojson rows = ojson::array();
    const auto looks = plan.looks();
    for (std::size_t k = 0; k < looks.size(); ++k) {
        const int n = looks[k];
        const bool final_look = k + 1 == looks.size();
        const auto [c_lrv, c_cmv] = interim_cutoffs(d, n, plan.max_n);
        ojson r;
        r["look"] = k + 1;
        r["n"] = n;
        r["final"] = final_look;
        r["nogo_below_lrv"] = c_lrv;
        r["nogo_below_cmv"] = c_cmv;
        if (final_look) {
            r["go_above_lrv"] = d.lambda_lrv;
            r["go_above_cmv"] = d.lambda_cmv;
        } else if (plan.interim_go_graduates) {
            r["graduate_above_lrv"] = d.lambda_lrv;
            r["graduate_above_cmv"] = d.lambda_cmv;
        } else if (plan.allow_superiority) {
            r["graduate_above_lrv"] = graduate_cutoff(d.lambda_lrv, n, plan.max_n);
            r["graduate_above_cmv"] = graduate_cutoff(d.lambda_cmv, n, plan.max_n);
        }
        rows.push_back(r);
    }
    return rows;
}

bool table_available(const DesignConfig& c) { return exact_route_available(c.spec, c.plan); }

ojson decision_rules_json(const DesignConfig& c, const DesignParams& d) {
    ojson j;
    if (table_available(c)) {
        const auto table = decision_table_binary(d, c.plan, std::get<BinaryPrior>(c.prior),
                                                 c.spec.endpoints.front().target);
        j["decision_table"] = table_to_json(table);
        j["markdown"] = render_decision_table_markdown(table);
    } else {
        j["cutoffs"] = cutoffs_to_json(d, c.plan);
        j["markdown"] = render_cutoffs_markdown(d, c.plan);
    }
    return j;
}

}  // namespace

std::string dump_payload(const ojson& j) { return j.dump(2) + "\n"; }

ojson oc_to_json(const OperatingCharacteristics& oc) {
    ojson j;
    j["go_rate"] = oc.go_rate;
    j["nogo_rate"] = oc.nogo_rate;
    j["consider_rate"] = oc.consider_rate;
    j["graduate_rate"] = oc.graduate_rate;
    j["avg_sample_size"] = oc.avg_sample_size;
    j["avg_duration"] = oc.avg_duration;
    j["n_sims"] = oc.n_sims;
    j["exact"] = oc.exact;
    return j;
}

ojson table_to_json(const DecisionTable& table) {
    ojson j;
    j["direction"] = table.direction == Direction::HigherIsBetter ? "higher" : "lower";
    ojson rows = ojson::array();
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
        const auto& r = table.rows[k];
        ojson row;
        row["look"] = k + 1;
        row["n"] = r.n;
        row["final"] = r.final_look;
        row["stop"] = r.stop;
        if (r.final_look) row["go"] = r.go;
        if (table.has_graduate && !r.final_look) row["graduate"] = r.graduate;
        ojson by_y = ojson::array();
        for (auto d : r.by_y) by_y.push_back(to_string(d));
        row["decisions"] = by_y;
        rows.push_back(row);
    }
    j["rows"] = rows;
    return j;
}

CalibrationRun run_calibration(const DesignConfig& c, const EngineOptions& opt) {
    CalibrationSettings s;
    s.objective = c.objective;
    s.constraints = c.constraints;
    s.grid = c.grid;
    s.evaluation = c.evaluation;
    s.n_sims = c.n_sims;
    s.seed = c.seed;
    s.threads = opt.threads;
    s.progress = opt.progress;
    const auto problem = c.problem();

    CalibrationRun run;
    run.result = calibrate(problem, s);
    const auto& r = run.result;
    run.summary = protocol_summary(r, problem, c.constraints, c.assumptions);

    ojson p;
    p["kind"] = "calibration";
    p["version"] = kVersion;
    p["config"] = c.echo;
    p["feasible"] = r.feasible;
    p["design"] = design_to_json(r.design);
    p["objective"] = to_string(r.objective);
    p["objective_value"] = r.objective_value;
    p["evaluation"] = to_string(r.evaluation);
    p["metrics"] = metrics_to_json(r.metrics);
    p["max_violation"] = r.max_violation;
    p["points_evaluated"] = r.points_evaluated;
    p["n_sims"] = r.n_sims;
    p["seed"] = r.seed;
    ojson oc;
    oc["futile"] = oc_to_json(r.oc_futile);
    oc["effective"] = oc_to_json(r.oc_effective);
    p["operating_characteristics"] = oc;
    if (r.validation) {
        ojson v;
        v["futile"] = oc_to_json(r.validation->first);
        v["effective"] = oc_to_json(r.validation->second);
        v["metrics"] = metrics_to_json(metrics(r.validation->first, r.validation->second));
        p["fresh_seed_validation"] = v;
    } else {
        p["fresh_seed_validation"] = nullptr;
    }
    p["rules"] = decision_rules_json(c, r.design);
    const std::string label = to_string(r.objective);
    std::vector<OcRow> rows{make_row(c.futile, label, c, r.oc_futile), make_row(c.effective, label, c, r.oc_effective)};
    // Additional scenarios are evaluated on the same route as the search.
    const std::vector<DesignParams> designs{r.design};
    for (const auto& sc : c.additional) {
        const auto oc = r.evaluation == Evaluation::Exact
                            ? exact_oc_binary_single_arm(sc, r.design, c.plan, std::get<BinaryPrior>(c.prior),
                                                         c.spec.endpoints.front().target)
                            : estimate_oc(sc, designs, c.spec, c.plan, c.prior, {c.n_sims, c.seed, opt.threads});
        rows.push_back(make_row(sc, label, c, oc));
    }
    p["oc_table"] = ojson::parse(render_oc_json(rows, table_options(c)));
    p["protocol_summary"] = run.summary;
    run.payload = std::move(p);
    return run;
}

SimulationRun run_simulation(const DesignConfig& c, const EngineOptions& opt) {
    if (!c.design) throw ConfigError(std::vector<FieldError>{
            {"design", "required for simulation (config field or --design file)"}});
    const auto scenarios = c.scenarios();
    const std::vector<DesignParams> designs{*c.design};
    SimulationOptions so{c.n_sims, c.seed, opt.threads};

    SimulationRun run;
    ojson list = ojson::array();
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const auto& sc = scenarios[i];
        auto trials = simulate_trials(sc, designs, c.spec, c.plan, c.prior, so);
        const auto oc = summarize(trials);
        ojson e;
        e["label"] = sc.label;
        e["oc"] = oc_to_json(oc);
        if (table_available(c))
            e["exact"] = oc_to_json(exact_oc_binary_single_arm(sc, *c.design, c.plan, std::get<BinaryPrior>(c.prior),
                                                               c.spec.endpoints.front().target));
        list.push_back(e);
        run.rows.push_back(make_row(sc, "custom", c, oc));
        run.trials.push_back(std::move(trials));
        if (opt.progress) opt.progress(static_cast<double>(i + 1) / static_cast<double>(scenarios.size()));
    }
    run.csv = render_oc_csv(run.rows, table_options(c));

    ojson p;
    p["kind"] = "simulation";
    p["version"] = kVersion;
    p["config"] = c.echo;
    p["design"] = design_to_json(*c.design);
    p["n_sims"] = c.n_sims;
    p["seed"] = c.seed;
    p["scenarios"] = list;
    p["oc_table"] = ojson::parse(render_oc_json(run.rows, table_options(c)));
    p["rules"] = decision_rules_json(c, *c.design);
    run.payload = std::move(p);
    return run;
}

ojson run_decision_table(const DesignConfig& c) {
    if (!c.design) throw ConfigError(std::vector<FieldError>{{"design", "required for a decision table"}});
    ojson p;
    p["kind"] = "decision_table";
    p["version"] = kVersion;
    p["design"] = design_to_json(*c.design);
    p["rules"] = decision_rules_json(c, *c.design);
    return p;
}

ojson validation_payload(const ConfigOutcome& outcome) {
    ojson p;
    p["valid"] = outcome.ok();
    if (outcome.ok()) {
        p["config"] = outcome.config->echo;
        p["defaults_applied"] = outcome.config->defaults_applied;
        p["assumptions"] = outcome.config->assumptions;
    } else {
        p["errors"] = errors_to_json(outcome.errors);
    }
    return p;
}

std::string trials_csv(const std::vector<TrialResult>& trials, const TrialPlan& plan) {
    const auto looks = plan.looks();
    std::string out = "trial_id,decision,stopped_at,n_used,duration\r\n";
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const auto& t = trials[i];
        out += std::to_string(i) + "," + to_string(t.decision) + "," + std::to_string(looks[t.stopped_at_look]) + "," +
               std::to_string(t.n_used) + "," + format_number(t.duration) + "\r\n";
    }
    return out;
}

}  // namespace bop2dc
