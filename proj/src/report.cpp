#include "bop2dc/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace bop2dc {

namespace {

bool has_decision(const std::vector<Decision>& v, Decision d) {
    for (auto x : v)
        if (x == d) return true;
    return false;
}

std::string join(const std::vector<std::string>& cells, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += sep;
        out += cells[i];
    }
    return out;
}

std::string md_row(const std::vector<std::string>& cells) { return "| " + join(cells, " | ") + " |\n"; }

std::string md_rule(std::size_t n) {
    std::string out = "|";
    for (std::size_t i = 0; i < n; ++i) out += "---|";
    return out + "\n";
}

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

std::string range_text(int lo, int hi) {
    if (lo > hi) return "none";
    if (lo == hi) return std::to_string(lo);
    return std::to_string(lo) + "-" + std::to_string(hi);
}

}  // namespace

DecisionTable decision_table_binary(const DesignParams& design, const TrialPlan& plan,
                                    const BinaryPrior& prior, const TargetProfile& profile) {
    const auto rule = binary_rule(design, plan, prior, profile);
    const auto looks = plan.looks();
    DecisionTable table;
    table.direction = profile.direction;
    const bool higher = profile.direction == Direction::HigherIsBetter;
    std::size_t pos = 0;
    for (std::size_t k = 0; k < looks.size(); ++k) {
        DecisionTableRow row;
        row.n = looks[k];
        row.final_look = k + 1 == looks.size();
        row.by_y.assign(rule.begin() + pos, rule.begin() + pos + row.n + 1);
        pos += row.n + 1;

        const int none_low = -1, none_high = row.n + 1;
        row.stop = higher ? none_low : none_high;
        row.go = higher ? none_high : none_low;
        row.graduate = higher ? none_high : none_low;
        for (int y = 0; y <= row.n; ++y) {
            const Decision d = row.by_y[y];
            if (d == Decision::NoGo) row.stop = higher ? y : std::min(row.stop, y);
            if (d == Decision::Go) row.go = higher ? std::min(row.go, y) : y;
            if (d == Decision::Graduate) row.graduate = higher ? std::min(row.graduate, y) : y;
        }
        if (has_decision(row.by_y, Decision::Graduate)) table.has_graduate = true;
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string render_decision_table_markdown(const DecisionTable& table) {
    const bool higher = table.direction == Direction::HigherIsBetter;
    std::vector<std::string> header{"Look", "n", higher ? "No-go if y <=" : "No-go if y >=",
                                    "Consider if y in", higher ? "Go if y >=" : "Go if y <="};
    if (table.has_graduate) header.push_back(higher ? "Graduate if y >=" : "Graduate if y <=");
    std::string out = md_row(header) + md_rule(header.size());
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
        const auto& r = table.rows[k];
        const bool stop_none = higher ? r.stop < 0 : r.stop > r.n;
        std::vector<std::string> cells{r.final_look ? "final" : std::to_string(k + 1), std::to_string(r.n),
                                       stop_none ? "none" : std::to_string(r.stop)};
        if (r.final_look) {
            const bool go_none = higher ? r.go > r.n : r.go < 0;
            const int lo = higher ? r.stop + 1 : r.go + 1;
            const int hi = higher ? r.go - 1 : r.stop - 1;
            cells.push_back(range_text(lo, hi));
            cells.push_back(go_none ? "none" : std::to_string(r.go));
        } else {
            cells.push_back("-");
            cells.push_back("-");
        }
        if (table.has_graduate) {
            const bool grad_none = higher ? r.graduate > r.n : r.graduate < 0;
            cells.push_back(r.final_look || grad_none ? "-" : std::to_string(r.graduate));
        }
        out += md_row(cells);
    }
    return out;
}

std::string render_cutoffs_markdown(const DesignParams& design, const TrialPlan& plan) {
    std::vector<std::string> header{"Look", "n", "No-go if P(LRV) <", "and P(CMV) <"};
    const bool grad = plan.allow_superiority || plan.interim_go_graduates;
    if (grad) {
        header.push_back("Graduate if P(LRV) >");
        header.push_back("and P(CMV) >");
    }
    std::string out = md_row(header) + md_rule(header.size());
    const auto looks = plan.looks();
    for (std::size_t k = 0; k < looks.size(); ++k) {
        const int n = looks[k];
        const bool final_look = k + 1 == looks.size();
        const auto [c_lrv, c_cmv] = interim_cutoffs(design, n, plan.max_n);
        std::vector<std::string> cells{final_look ? "final" : std::to_string(k + 1), std::to_string(n),
                                       fixed(c_lrv, 4), fixed(c_cmv, 4)};
        if (grad) {
            if (final_look) {
                cells.push_back("-");
                cells.push_back("-");
            } else if (plan.interim_go_graduates) {
                cells.push_back(fixed(design.lambda_lrv, 4));
                cells.push_back(fixed(design.lambda_cmv, 4));
            } else {
                cells.push_back(fixed(graduate_cutoff(design.lambda_lrv, n, plan.max_n), 4));
                cells.push_back(fixed(graduate_cutoff(design.lambda_cmv, n, plan.max_n), 4));
            }
        }
        out += md_row(cells);
    }
    out += "\nFinal analysis: go if P(LRV) > " + fixed(design.lambda_lrv, 4) + " and P(CMV) > " +
           fixed(design.lambda_cmv, 4) + "; no-go if P(LRV) < " + fixed(design.lambda_lrv, 4) +
           " and P(CMV) < " + fixed(design.lambda_cmv, 4) + "; consider otherwise.\n";
    return out;
}

std::string format_one_decimal(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("cannot format a non-finite value");
    // The epsilon absorbs representation error such as 0.0435 * 1000 = 43.4999...
    const double tenths = std::floor(std::abs(value) * 10.0 + 0.5 + 1e-9);
    const auto t = static_cast<long long>(tenths);
    std::string out = std::to_string(t / 10) + "." + std::to_string(t % 10);
    if (value < 0 && t != 0) out = "-" + out;
    return out;
}

std::string format_percent(double rate) { return format_one_decimal(rate * 100.0); }

std::string format_number(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

namespace {

std::vector<std::string> oc_header(const OcTableOptions& opt) {
    std::vector<std::string> h{"scenario",  "design",   "theta_lrv",   "theta_cmv",     "theta_true",
                               "go_rate_pct", "nogo_rate_pct", "consider_rate_pct"};
    if (opt.include_graduate) h.push_back("graduate_rate_pct");
    h.push_back("avg_sample_size");
    if (opt.include_duration) h.push_back("avg_duration");
    return h;
}

std::vector<std::string> oc_cells(const OcRow& r, const OcTableOptions& opt) {
    std::vector<std::string> c{r.scenario,
                               r.design,
                               r.theta_lrv,
                               r.theta_cmv,
                               r.theta_true,
                               format_percent(r.oc.go_rate),
                               format_percent(r.oc.nogo_rate),
                               format_percent(r.oc.consider_rate)};
    if (opt.include_graduate) c.push_back(format_percent(r.oc.graduate_rate));
    c.push_back(format_one_decimal(r.oc.avg_sample_size));
    if (opt.include_duration) c.push_back(format_one_decimal(r.oc.avg_duration));
    return c;
}

}  // namespace

std::string render_oc_csv(const std::vector<OcRow>& rows, const OcTableOptions& opt) {
    if (rows.empty()) throw std::invalid_argument("OC table needs at least one row");
    auto line = [](const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(cells[i]);
        }
        return out + "\r\n";
    };
    std::string out = line(oc_header(opt));
    for (const auto& r : rows) out += line(oc_cells(r, opt));
    return out;
}

std::string render_oc_json(const std::vector<OcRow>& rows, const OcTableOptions& opt) {
    if (rows.empty()) throw std::invalid_argument("OC table needs at least one row");
    const auto header = oc_header(opt);
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        const auto cells = oc_cells(r, opt);
        nlohmann::ordered_json obj;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i < 5)
                obj[header[i]] = cells[i];
            else
                obj[header[i]] = std::stod(cells[i]);
        }
        arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
}

CsvTable parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false, field_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
            field_started = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (field_started || !field.empty() || !record.empty()) {
                record.push_back(std::move(field));
                records.push_back(std::move(record));
            }
            record.clear();
            field.clear();
            field_started = false;
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted) throw std::invalid_argument("unterminated quoted field");
    if (field_started || !field.empty() || !record.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    CsvTable t;
    if (records.empty()) return t;
    t.header = std::move(records.front());
    t.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
    return t;
}

namespace {

std::string prior_text(const PriorSpec& prior) {
    return std::visit(
        [](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, BinaryPrior>) {
                return "Beta(" + format_number(p.a) + ", " + format_number(p.b) + ") on each response rate";
            } else if constexpr (std::is_same_v<T, ContinuousPrior>) {
                return "normal-inverse-gamma: mean " + format_number(p.theta0) + ", prior sample size " +
                       format_number(p.n0) + ", variance ~ IG(" + format_number(p.a) + ", " +
                       format_number(p.b) + ")";
            } else if constexpr (std::is_same_v<T, TtePrior>) {
                return "exponential event times, median ~ IG(" + format_number(p.a) + ", " +
                       format_number(p.b) + " ln 2)";
            } else {
                std::string s = "Dirichlet(";
                for (std::size_t i = 0; i < p.alpha.size(); ++i) s += (i ? ", " : "") + format_number(p.alpha[i]);
                return s + ")";
            }
        },
        prior);
}

std::string criterion_text(const MonitoredEndpoint& ep) {
    const bool higher = ep.target.direction == Direction::HigherIsBetter;
    return std::string(higher ? "higher is better" : "lower is better") + ", LRV " + format_number(ep.target.lrv) +
           ", CMV " + format_number(ep.target.cmv) + ", futile " + format_number(ep.target.futile) +
           ", effective " + format_number(ep.target.eff);
}

std::string truth_text(const Scenario& sc, Family family) {
    auto arm = [&](const ArmTruth& a) {
        if (family == Family::Categorical) {
            std::string s = "(";
            for (std::size_t i = 0; i < a.probs.size(); ++i) s += (i ? ", " : "") + format_number(a.probs[i]);
            return s + ")";
        }
        std::string s = format_number(a.value);
        if (family == Family::Continuous) s += " (sd " + format_number(a.sd) + ")";
        return s;
    };
    if (sc.control) return "experimental " + arm(sc.experimental) + ", control " + arm(*sc.control);
    return arm(sc.experimental);
}

std::string status(double value, double limit) { return value <= limit ? "met" : "violated"; }

}  // namespace

std::string protocol_summary(const CalibrationResult& result, const CalibrationProblem& problem,
                             const ConstraintSet& constraints, const std::vector<std::string>& assumptions) {
    const auto& d = result.design;
    const auto& plan = problem.plan;
    std::string out = "# BOP2-DC design summary\n\n";

    if (!result.feasible) {
        out += "**Infeasible.** No grid point satisfies all constraints. The design below is the nearest point "
               "(largest constraint excess " +
               fixed(result.max_violation, 4) + ") and is reported for diagnostics only.\n\n";
    }

    out += "## Design parameters\n\n";
    out += md_row({"Parameter", "Value"}) + md_rule(2);
    out += md_row({"lambda_LRV", format_number(d.lambda_lrv)});
    out += md_row({"lambda_CMV", format_number(d.lambda_cmv)});
    out += md_row({"gamma_LRV", format_number(d.gamma_lrv)});
    out += md_row({"gamma_CMV", format_number(d.gamma_cmv)});
    out += md_row({"Objective", to_string(result.objective)});
    out += md_row({"Evaluation", to_string(result.evaluation)});
    out += "\n";

    out += "## Trial plan\n\n";
    out += "- Endpoint family: " + to_string(problem.spec.family) + "\n";
    if (problem.spec.endpoints.size() > 1)
        out += "- Combination: " + to_string(problem.spec.combination) + "\n";
    for (const auto& ep : problem.spec.endpoints) out += "- Endpoint " + ep.name + ": " + criterion_text(ep) + "\n";
    out += "- Maximum sample size: " + std::to_string(plan.max_n) + "\n";
    std::vector<std::string> looks;
    for (int n : plan.interim_looks) looks.push_back(std::to_string(n));
    out += "- Interim looks at n = " + (looks.empty() ? std::string("none") : join(looks, ", ")) + "\n";
    if (plan.arms == 2)
        out += "- Randomized, experimental:control = " + std::to_string(plan.ratio_experimental) + ":" +
               std::to_string(plan.ratio_control) + "\n";
    else
        out += "- Single arm\n";
    out += "\n";

    out += "## Decision rules\n\n";
    out += "At the final analysis: go if P(theta > LRV | data) > lambda_LRV and P(theta > CMV | data) > lambda_CMV; "
           "no-go if both are below their thresholds; consider otherwise. At an interim look with n of N patients "
           "the trial stops for no-go if P(theta > LRV | data) < lambda_LRV (n/N)^gamma_LRV and "
           "P(theta > CMV | data) < lambda_CMV (n/N)^gamma_CMV.";
    if (plan.allow_superiority)
        out += " Interim graduation uses the boundary 2 Phi(z_{(1+lambda)/2} / sqrt(n/N)) - 1 on both criteria.";
    if (plan.interim_go_graduates) out += " An interim look that meets the final go rule graduates.";
    out += "\n\n";

    const bool table_available = problem.spec.family == Family::Binary && problem.spec.endpoints.size() == 1 &&
                                 plan.arms == 1 && std::holds_alternative<BinaryPrior>(problem.prior);
    if (table_available) {
        out += "## Decision table\n\n";
        out += "y is the cumulative number of responders.\n\n";
        out += render_decision_table_markdown(decision_table_binary(
            d, plan, std::get<BinaryPrior>(problem.prior), problem.spec.endpoints.front().target));
    } else {
        out += "## Probability cutoffs by look\n\n";
        out += render_cutoffs_markdown(d, plan);
    }
    out += "\n";

    const auto& m = result.metrics;
    out += "## Constraints\n\n";
    out += md_row({"Metric", "Limit (%)", "Achieved (%)", "Status"}) + md_rule(4);
    out += md_row({"FGR", format_percent(constraints.max_fgr), format_percent(m.fgr), status(m.fgr, constraints.max_fgr)});
    out += md_row(
        {"FNGR", format_percent(constraints.max_fngr), format_percent(m.fngr), status(m.fngr, constraints.max_fngr)});
    out += md_row({"FCR", format_percent(constraints.max_fcr), format_percent(m.fcr), status(m.fcr, constraints.max_fcr)});
    out += md_row({"CGR", "-", format_percent(m.cgr), "-"});
    out += "\nExpected sample size under the futile scenario: " + format_one_decimal(m.expected_n_futile) + "\n\n";

    out += "## Operating characteristics\n\n";
    const bool grad = plan.allow_superiority || plan.interim_go_graduates;
    std::vector<std::string> h{"Scenario", "True value", "Go (%)", "No-go (%)", "Consider (%)"};
    if (grad) h.push_back("Graduate (%)");
    h.push_back("Avg N");
    h.push_back("Avg duration");
    out += md_row(h) + md_rule(h.size());
    auto oc_line = [&](const std::string& name, const Scenario& sc, const OperatingCharacteristics& oc) {
        std::vector<std::string> c{name, truth_text(sc, problem.spec.family), format_percent(oc.go_rate),
                                   format_percent(oc.nogo_rate), format_percent(oc.consider_rate)};
        if (grad) c.push_back(format_percent(oc.graduate_rate));
        c.push_back(format_one_decimal(oc.avg_sample_size));
        c.push_back(format_one_decimal(oc.avg_duration));
        out += md_row(c);
    };
    oc_line("futile", problem.futile, result.oc_futile);
    oc_line("effective", problem.effective, result.oc_effective);
    if (result.validation) {
        oc_line("futile (fresh seed)", problem.futile, result.validation->first);
        oc_line("effective (fresh seed)", problem.effective, result.validation->second);
    }
    if (result.evaluation == Evaluation::Exact)
        out += "\nRates are exact (dynamic programming over response counts).\n";
    else
        out += "\nRates are Monte Carlo estimates from " + std::to_string(result.n_sims) +
               " simulated trials per scenario, seed " + std::to_string(result.seed) + ".\n";
    out += "\n";

    out += "## Modeling assumptions\n\n";
    out += "- Prior: " + prior_text(problem.prior) + "\n";
    out += std::string("- Accrual: ") + (plan.accrual == Accrual::Poisson ? "Poisson arrivals" : "deterministic") +
           " at " + format_number(plan.accrual_rate) +
           " patients per month; the first patient enrolls at time 0\n";
    if (problem.spec.family == Family::TimeToEvent)
        out += "- Follow-up after the last enrollment: " + format_number(plan.followup_months) +
               " months; patients still at risk at an analysis are censored\n";
    if (problem.spec.family == Family::Continuous)
        out += "- Continuous outcomes are normal; outcome standard deviation futile " +
               format_number(problem.futile.experimental.sd) + ", effective " +
               format_number(problem.effective.experimental.sd) + "\n";
    if (plan.arms == 2) {
        out += "- Arms are allocated in fixed blocks of " + std::to_string(plan.ratio_experimental) +
               " experimental then " + std::to_string(plan.ratio_control) + " control patients\n";
        out += std::string("- Difference probabilities computed by ") +
               (plan.difference_method == DifferenceMethod::Quadrature
                    ? "numerical integration"
                    : "Monte Carlo with " + std::to_string(plan.difference_draws) + " draws") +
               "\n";
    }
    out += "- Go decisions include interim graduation when computing FGR and CGR\n";
    for (const auto& a : assumptions) out += "- " + a + "\n";
    return out;
}

}  // namespace bop2dc
