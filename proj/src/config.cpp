#include "bop2dc/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace bop2dc {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

ConfigError::ConfigError(std::vector<FieldError> errors)
    : std::runtime_error(errors.empty() ? "invalid config"
                                        : (errors.front().path.empty() ? "" : errors.front().path + ": ") +
                                              errors.front().message),
      errors_(std::move(errors)) {}

namespace {

std::string join_path(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }
std::string index_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

// Walks the document, records errors with their paths and the paths that
// fell back to defaults.
class Reader {
public:
    std::vector<FieldError> errors;
    std::vector<std::string> defaults;

    void error(const std::string& path, const std::string& msg) { errors.push_back({path, msg}); }

    // Checks that j is an object holding only allowed keys.
    bool object(const json& j, const std::string& path, const std::set<std::string>& allowed) {
        if (!j.is_object()) {
            error(path, "expected an object");
            return false;
        }
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!allowed.count(it.key())) error(join_path(path, it.key()), "unknown field");
        return true;
    }

    const json* find(const json& obj, const std::string& key) const {
        if (!obj.is_object()) return nullptr;
        auto it = obj.find(key);
        return it == obj.end() ? nullptr : &*it;
    }

    std::optional<double> number(const json& obj, const std::string& key, const std::string& base,
                                 std::optional<double> def) {
        const auto path = join_path(base, key);
        const json* v = find(obj, key);
        if (!v) return fallback(path, def);
        if (!v->is_number()) {
            error(path, "expected a number");
            return std::nullopt;
        }
        const double x = v->get<double>();
        if (!std::isfinite(x)) {
            error(path, "must be finite");
            return std::nullopt;
        }
        return x;
    }

    std::optional<std::int64_t> integer(const json& obj, const std::string& key, const std::string& base,
                                        std::optional<std::int64_t> def, std::int64_t lo, std::int64_t hi) {
        const auto path = join_path(base, key);
        const json* v = find(obj, key);
        if (!v) return fallback(path, def);
        return integer_value(*v, path, lo, hi);
    }

    std::optional<std::int64_t> integer_value(const json& v, const std::string& path, std::int64_t lo,
                                              std::int64_t hi) {
        if (!v.is_number_integer()) {
            error(path, "expected an integer");
            return std::nullopt;
        }
        if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(hi)) {
            error(path, "must be at most " + std::to_string(hi));
            return std::nullopt;
        }
        const auto x = v.get<std::int64_t>();
        if (x < lo || x > hi) {
            error(path, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            return std::nullopt;
        }
        return x;
    }

    std::optional<std::uint64_t> unsigned_integer(const json& obj, const std::string& key, const std::string& base,
                                                  std::uint64_t def) {
        const auto path = join_path(base, key);
        const json* v = find(obj, key);
        if (!v) return fallback<std::uint64_t>(path, def);
        if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
            error(path, "expected a nonnegative integer");
            return std::nullopt;
        }
        return v->get<std::uint64_t>();
    }

    std::optional<bool> boolean(const json& obj, const std::string& key, const std::string& base, bool def) {
        const auto path = join_path(base, key);
        const json* v = find(obj, key);
        if (!v) return fallback<bool>(path, def);
        if (!v->is_boolean()) {
            error(path, "expected true or false");
            return std::nullopt;
        }
        return v->get<bool>();
    }

    std::optional<std::string> string(const json& obj, const std::string& key, const std::string& base,
                                      std::optional<std::string> def) {
        const auto path = join_path(base, key);
        const json* v = find(obj, key);
        if (!v) return fallback(path, def);
        if (!v->is_string()) {
            error(path, "expected a string");
            return std::nullopt;
        }
        return v->get<std::string>();
    }

    std::optional<std::vector<double>> numbers(const json& v, const std::string& path) {
        if (!v.is_array()) {
            error(path, "expected an array of numbers");
            return std::nullopt;
        }
        std::vector<double> out;
        bool ok = true;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
                error(index_path(path, i), "expected a finite number");
                ok = false;
            } else {
                out.push_back(v[i].get<double>());
            }
        }
        if (!ok) return std::nullopt;
        return out;
    }

    // Runs a library validator and turns its exception into a field error.
    template <class F>
    bool check(const std::string& path, F&& f) {
        try {
            f();
            return true;
        } catch (const std::invalid_argument& e) {
            error(path, e.what());
            return false;
        }
    }

private:
    template <class T>
    std::optional<T> fallback(const std::string& path, std::optional<T> def) {
        if (!def) {
            error(path, "required field is missing");
            return std::nullopt;
        }
        defaults.push_back(path);
        return def;
    }
};

struct ArmInput {
    ArmTruth truth;
    std::optional<std::vector<double>> marginals;
    double odds_ratio = 1.0;
};

struct ScenarioInput {
    Scenario scenario;
    ArmInput experimental;
    std::optional<ArmInput> control;
};

std::string direction_name(Direction d) { return d == Direction::HigherIsBetter ? "higher" : "lower"; }

std::string accrual_name(Accrual a) { return a == Accrual::Poisson ? "poisson" : "deterministic"; }

std::string difference_name(DifferenceMethod m) {
    return m == DifferenceMethod::MonteCarlo ? "monte_carlo" : "quadrature";
}

ojson arm_echo(const ArmInput& a, Family family) {
    ojson j;
    if (family == Family::Categorical) {
        if (a.marginals) {
            j["marginals"] = *a.marginals;
            j["odds_ratio"] = a.odds_ratio;
        } else {
            j["probs"] = a.truth.probs;
        }
    } else {
        j["value"] = a.truth.value;
        if (family == Family::Continuous) j["sd"] = a.truth.sd;
    }
    return j;
}

ojson scenario_echo(const ScenarioInput& s, Family family) {
    ojson j;
    j["label"] = s.scenario.label;
    j["experimental"] = arm_echo(s.experimental, family);
    if (s.control) j["control"] = arm_echo(*s.control, family);
    return j;
}

ojson axis_echo(const GridAxis& a) {
    ojson j;
    j["lo"] = a.lo;
    j["hi"] = a.hi;
    j["step"] = a.step;
    return j;
}

ojson prior_echo(const PriorSpec& prior) {
    ojson j;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, BinaryPrior> || std::is_same_v<T, TtePrior>) {
                j["a"] = p.a;
                j["b"] = p.b;
            } else if constexpr (std::is_same_v<T, ContinuousPrior>) {
                j["theta0"] = p.theta0;
                j["n0"] = p.n0;
                j["a"] = p.a;
                j["b"] = p.b;
            } else {
                j["alpha"] = p.alpha;
            }
        },
        prior);
    return j;
}

class Parser {
public:
    explicit Parser(const json& doc) : doc_(doc) {}

    ConfigOutcome run() {
        ConfigOutcome out;
        if (!r_.object(doc_, "", {"endpoint", "targets", "plan", "prior", "constraints", "objective", "evaluation",
                                  "grid", "simulation", "scenarios", "design"})) {
            out.errors = r_.errors;
            return out;
        }
        DesignConfig c;
        const bool endpoint_ok = endpoint(c);
        plan(c);
        if (endpoint_ok) {
            prior(c);
            scenarios(c);
        }
        constraints(c);
        settings(c);
        grid(c);
        if (const json* d = r_.find(doc_, "design")) {
            try {
                c.design = design_from_json(*d, "design");
            } catch (const ConfigError& e) {
                for (const auto& fe : e.errors()) r_.errors.push_back(fe);
            }
        }
        if (!r_.errors.empty()) {
            out.errors = r_.errors;
            return out;
        }
        c.defaults_applied = r_.defaults;
        c.echo = echo(c);
        c.assumptions = assumptions(c);
        out.config = std::move(c);
        return out;
    }

private:
    const json& section(const std::string& key) {
        static const json empty = json::object();
        const json* v = r_.find(doc_, key);
        return v ? *v : empty;
    }

    bool endpoint(DesignConfig& c) {
        const json* ep = r_.find(doc_, "endpoint");
        if (!ep) {
            r_.error("endpoint", "required field is missing");
            if (!r_.find(doc_, "targets")) r_.error("targets", "required field is missing");
            return false;
        }
        if (!r_.object(*ep, "endpoint", {"family", "combination", "categories"})) return false;
        const auto fam = r_.string(*ep, "family", "endpoint", std::nullopt);
        if (!fam) return false;
        if (!r_.check("endpoint.family", [&] { c.spec.family = family_from_string(*fam); })) return false;
        const auto comb = r_.string(*ep, "combination", "endpoint", std::string("single"));
        if (comb) r_.check("endpoint.combination", [&] { c.spec.combination = combination_from_string(*comb); });
        if (c.spec.family == Family::Categorical) {
            const auto k = r_.integer(*ep, "categories", "endpoint", std::nullopt, 2, 64);
            if (!k) return false;
            c.spec.categories = static_cast<int>(*k);
        } else if (r_.find(*ep, "categories")) {
            r_.error("endpoint.categories", "only categorical endpoints take categories");
        }

        const json* ts = r_.find(doc_, "targets");
        if (!ts) {
            r_.error("targets", "required field is missing");
            return false;
        }
        if (!ts->is_array() || ts->empty()) {
            r_.error("targets", "expected a nonempty array");
            return false;
        }
        const std::size_t before = r_.errors.size();
        for (std::size_t i = 0; i < ts->size(); ++i) {
            const auto path = index_path("targets", i);
            const json& t = (*ts)[i];
            if (!r_.object(t, path, {"name", "lrv", "cmv", "futile", "eff", "direction", "selector"})) continue;
            MonitoredEndpoint m;
            const auto name = r_.string(t, "name", path, ts->size() == 1 ? std::string("primary")
                                                                          : "endpoint" + std::to_string(i + 1));
            if (name) m.name = *name;
            const auto dir = r_.string(t, "direction", path, std::string("higher"));
            if (dir) {
                if (*dir == "higher")
                    m.target.direction = Direction::HigherIsBetter;
                else if (*dir == "lower")
                    m.target.direction = Direction::LowerIsBetter;
                else
                    r_.error(join_path(path, "direction"), "expected 'higher' or 'lower'");
            }
            const auto lrv = r_.number(t, "lrv", path, std::nullopt);
            const auto cmv = r_.number(t, "cmv", path, std::nullopt);
            if (!lrv || !cmv) continue;
            const auto futile = r_.number(t, "futile", path, lrv);
            const auto eff = r_.number(t, "eff", path, cmv);
            if (!futile || !eff) continue;
            m.target.lrv = *lrv;
            m.target.cmv = *cmv;
            m.target.futile = *futile;
            m.target.eff = *eff;
            r_.check(path, [&] { validate(m.target); });
            if (c.spec.family == Family::Categorical) {
                if (const json* sel = r_.find(t, "selector")) {
                    const auto bits = r_.numbers(*sel, join_path(path, "selector"));
                    if (bits) {
                        for (double b : *bits) m.selector.bits.push_back(static_cast<int>(b));
                        for (std::size_t k = 0; k < bits->size(); ++k)
                            if ((*bits)[k] != 0.0 && (*bits)[k] != 1.0)
                                r_.error(index_path(join_path(path, "selector"), k), "selector entries must be 0 or 1");
                    }
                } else if (c.spec.categories == 4 && ts->size() == 2 && i < 2) {
                    // Joint layout (1,1), (1,0), (0,1), (0,0) of two binary endpoints.
                    r_.defaults.push_back(join_path(path, "selector"));
                    m.selector.bits = i == 0 ? std::vector<int>{1, 1, 0, 0} : std::vector<int>{1, 0, 1, 0};
                } else {
                    r_.error(join_path(path, "selector"), "required field is missing");
                }
            } else if (r_.find(t, "selector")) {
                r_.error(join_path(path, "selector"), "only categorical endpoints take a selector");
            }
            c.spec.endpoints.push_back(std::move(m));
        }
        if (r_.errors.size() != before) return false;
        return r_.check("endpoint", [&] { validate(c.spec); });
    }

    void plan(DesignConfig& c) {
        const std::string base = "plan";
        const json* p = r_.find(doc_, base);
        if (!p) {
            r_.error(base, "required field is missing");
            return;
        }
        if (!r_.object(*p, base, {"max_n", "interim_looks", "arms", "allocation_ratio", "accrual_rate", "accrual",
                                  "followup_months", "allow_superiority", "interim_go_graduates",
                                  "difference_method", "difference_draws"}))
            return;
        auto& t = c.plan;
        const std::size_t before = r_.errors.size();
        if (auto v = r_.integer(*p, "max_n", base, std::nullopt, 1, 100000)) t.max_n = static_cast<int>(*v);
        if (const json* looks = r_.find(*p, "interim_looks")) {
            if (!looks->is_array()) {
                r_.error("plan.interim_looks", "expected an array of integers");
            } else {
                for (std::size_t i = 0; i < looks->size(); ++i)
                    if (auto v = r_.integer_value((*looks)[i], index_path("plan.interim_looks", i), 1, 100000))
                        t.interim_looks.push_back(static_cast<int>(*v));
            }
        } else {
            r_.defaults.push_back("plan.interim_looks");
        }
        if (auto v = r_.integer(*p, "arms", base, 1, 1, 2)) t.arms = static_cast<int>(*v);
        if (const json* ratio = r_.find(*p, "allocation_ratio")) {
            if (!ratio->is_array() || ratio->size() != 2) {
                r_.error("plan.allocation_ratio", "expected [experimental, control]");
            } else {
                auto e = r_.integer_value((*ratio)[0], "plan.allocation_ratio[0]", 1, 100);
                auto k = r_.integer_value((*ratio)[1], "plan.allocation_ratio[1]", 1, 100);
                if (e && k) {
                    t.ratio_experimental = static_cast<int>(*e);
                    t.ratio_control = static_cast<int>(*k);
                }
            }
        } else {
            r_.defaults.push_back("plan.allocation_ratio");
        }
        if (auto v = r_.number(*p, "accrual_rate", base, 1.0)) t.accrual_rate = *v;
        if (auto v = r_.string(*p, "accrual", base, std::string("deterministic"))) {
            if (*v == "deterministic")
                t.accrual = Accrual::Deterministic;
            else if (*v == "poisson")
                t.accrual = Accrual::Poisson;
            else
                r_.error("plan.accrual", "expected 'deterministic' or 'poisson'");
        }
        if (auto v = r_.number(*p, "followup_months", base, 0.0)) t.followup_months = *v;
        if (auto v = r_.boolean(*p, "allow_superiority", base, false)) t.allow_superiority = *v;
        if (auto v = r_.boolean(*p, "interim_go_graduates", base, false)) t.interim_go_graduates = *v;
        if (auto v = r_.string(*p, "difference_method", base, std::string("quadrature"))) {
            if (*v == "quadrature")
                t.difference_method = DifferenceMethod::Quadrature;
            else if (*v == "monte_carlo")
                t.difference_method = DifferenceMethod::MonteCarlo;
            else
                r_.error("plan.difference_method", "expected 'quadrature' or 'monte_carlo'");
        }
        if (auto v = r_.integer(*p, "difference_draws", base, kDefaultDifferenceDraws, 1,
                                std::numeric_limits<std::int32_t>::max()))
            t.difference_draws = *v;
        if (r_.errors.size() != before) return;
        r_.check(base, [&] { validate(t); });
        if (t.allow_superiority && t.arms != 2)
            r_.error("plan.allow_superiority", "superiority stopping applies to two-arm trials");
        if (t.allow_superiority && t.interim_go_graduates)
            r_.error("plan.interim_go_graduates", "choose either allow_superiority or interim_go_graduates");
    }

    void prior(DesignConfig& c) {
        const std::string base = "prior";
        const json* p = r_.find(doc_, base);
        const json empty = json::object();
        const json& obj = p ? *p : empty;
        switch (c.spec.family) {
            case Family::Binary: {
                if (!r_.object(obj, base, {"a", "b"})) return;
                BinaryPrior bp;
                if (auto v = r_.number(obj, "a", base, bp.a)) bp.a = *v;
                if (auto v = r_.number(obj, "b", base, bp.b)) bp.b = *v;
                c.prior = bp;
                break;
            }
            case Family::Continuous: {
                if (!r_.object(obj, base, {"theta0", "n0", "a", "b"})) return;
                ContinuousPrior cp;
                if (auto v = r_.number(obj, "theta0", base, cp.theta0)) cp.theta0 = *v;
                if (auto v = r_.number(obj, "n0", base, cp.n0)) cp.n0 = *v;
                if (auto v = r_.number(obj, "a", base, cp.a)) cp.a = *v;
                if (auto v = r_.number(obj, "b", base, cp.b)) cp.b = *v;
                c.prior = cp;
                break;
            }
            case Family::TimeToEvent: {
                if (!r_.object(obj, base, {"a", "b"})) return;
                TtePrior tp;
                if (auto v = r_.number(obj, "a", base, tp.a)) tp.a = *v;
                if (auto v = r_.number(obj, "b", base, tp.b)) tp.b = *v;
                c.prior = tp;
                break;
            }
            case Family::Categorical: {
                if (!r_.object(obj, base, {"alpha"})) return;
                auto cp = CategoricalPrior::vague(static_cast<std::size_t>(c.spec.categories));
                if (const json* a = r_.find(obj, "alpha")) {
                    if (auto v = r_.numbers(*a, "prior.alpha")) {
                        if (static_cast<int>(v->size()) != c.spec.categories)
                            r_.error("prior.alpha", "needs one entry per category");
                        cp.alpha = *v;
                    }
                } else {
                    r_.defaults.push_back("prior.alpha");
                }
                c.prior = cp;
                break;
            }
        }
        if (!p) {
            // Record the object itself too so clients can tell nothing was given.
            r_.defaults.push_back("prior");
        }
        r_.check(base, [&] { validate(c.prior); });
    }

    std::optional<ArmInput> arm(const json& j, const std::string& path, const DesignConfig& c) {
        ArmInput a;
        const std::size_t before = r_.errors.size();
        switch (c.spec.family) {
            case Family::Binary:
            case Family::TimeToEvent:
                if (!r_.object(j, path, {"value"})) return std::nullopt;
                if (auto v = r_.number(j, "value", path, std::nullopt)) a.truth.value = *v;
                break;
            case Family::Continuous:
                if (!r_.object(j, path, {"value", "sd"})) return std::nullopt;
                if (auto v = r_.number(j, "value", path, std::nullopt)) a.truth.value = *v;
                if (auto v = r_.number(j, "sd", path, 1.0)) a.truth.sd = *v;
                break;
            case Family::Categorical: {
                if (!r_.object(j, path, {"probs", "marginals", "odds_ratio"})) return std::nullopt;
                const json* probs = r_.find(j, "probs");
                const json* marg = r_.find(j, "marginals");
                if ((probs != nullptr) == (marg != nullptr)) {
                    r_.error(path, "give exactly one of 'probs' or 'marginals'");
                    return std::nullopt;
                }
                if (probs) {
                    if (r_.find(j, "odds_ratio")) r_.error(join_path(path, "odds_ratio"), "only used with marginals");
                    if (auto v = r_.numbers(*probs, join_path(path, "probs"))) a.truth.probs = *v;
                } else {
                    auto m = r_.numbers(*marg, join_path(path, "marginals"));
                    auto orr = r_.number(j, "odds_ratio", path, 1.0);
                    if (!m || !orr) return std::nullopt;
                    if (!marginal_layout(c)) {
                        r_.error(join_path(path, "marginals"),
                                 "marginals need 4 categories and two endpoints with the default selectors");
                        return std::nullopt;
                    }
                    if (m->size() != 2) {
                        r_.error(join_path(path, "marginals"), "expected two marginal probabilities");
                        return std::nullopt;
                    }
                    a.marginals = *m;
                    a.odds_ratio = *orr;
                    if (!r_.check(path, [&] { a.truth.probs = joint_from_marginals((*m)[0], (*m)[1], *orr); }))
                        return std::nullopt;
                }
                break;
            }
        }
        if (r_.errors.size() != before) return std::nullopt;
        return a;
    }

    static bool marginal_layout(const DesignConfig& c) {
        return c.spec.categories == 4 && c.spec.endpoints.size() == 2 &&
               c.spec.endpoints[0].selector.bits == std::vector<int>{1, 1, 0, 0} &&
               c.spec.endpoints[1].selector.bits == std::vector<int>{1, 0, 1, 0};
    }

    std::optional<ScenarioInput> scenario(const json& j, const std::string& path, const DesignConfig& c,
                                          const std::string& default_label) {
        if (!r_.object(j, path, {"label", "experimental", "control"})) return std::nullopt;
        ScenarioInput s;
        if (auto v = r_.string(j, "label", path, default_label)) s.scenario.label = *v;
        const json* e = r_.find(j, "experimental");
        if (!e) {
            r_.error(join_path(path, "experimental"), "required field is missing");
            return std::nullopt;
        }
        auto ea = arm(*e, join_path(path, "experimental"), c);
        if (!ea) return std::nullopt;
        s.experimental = *ea;
        s.scenario.experimental = ea->truth;
        if (const json* k = r_.find(j, "control")) {
            if (c.plan.arms != 2) {
                r_.error(join_path(path, "control"), "single-arm scenarios have no control arm");
                return std::nullopt;
            }
            auto ca = arm(*k, join_path(path, "control"), c);
            if (!ca) return std::nullopt;
            s.control = *ca;
            s.scenario.control = ca->truth;
        } else if (c.plan.arms == 2) {
            r_.error(join_path(path, "control"), "required field is missing");
            return std::nullopt;
        }
        if (!r_.check(path, [&] { validate(s.scenario, c.spec, c.plan); })) return std::nullopt;
        return s;
    }

    // Builds the futile or effective scenario from the target profile.
    std::optional<ScenarioInput> derived(bool effective, const std::optional<ArmInput>& control,
                                         const DesignConfig& c, const std::string& path) {
        ScenarioInput s;
        s.scenario.label = effective ? "effective" : "futile";
        auto pick = [&](const MonitoredEndpoint& m) { return effective ? m.target.eff : m.target.futile; };
        if (c.spec.family == Family::Categorical) {
            if (!marginal_layout(c)) {
                r_.error(path, "required for this categorical layout (cannot derive joint probabilities)");
                return std::nullopt;
            }
            std::vector<double> m{pick(c.spec.endpoints[0]), pick(c.spec.endpoints[1])};
            if (control) {
                if (!control->marginals) {
                    r_.error("scenarios.control", "give control marginals to derive categorical scenarios");
                    return std::nullopt;
                }
                for (int k = 0; k < 2; ++k) m[k] += (*control->marginals)[k];
            }
            s.experimental.marginals = m;
            if (!r_.check(path, [&] { s.experimental.truth.probs = joint_from_marginals(m[0], m[1], 1.0); }))
                return std::nullopt;
        } else {
            const double v = pick(c.spec.endpoints.front());
            s.experimental.truth.value = control ? control->truth.value + v : v;
            s.experimental.truth.sd = control ? control->truth.sd : 1.0;
        }
        s.scenario.experimental = s.experimental.truth;
        if (control) {
            s.control = control;
            s.scenario.control = control->truth;
        }
        if (!r_.check(path, [&] { validate(s.scenario, c.spec, c.plan); })) return std::nullopt;
        return s;
    }

    void scenarios(DesignConfig& c) {
        const std::string base = "scenarios";
        const json* sj = r_.find(doc_, base);
        const json empty = json::object();
        const json& obj = sj ? *sj : empty;
        if (!r_.object(obj, base, {"futile", "effective", "additional", "control"})) return;
        if (!r_.errors.empty()) return;  // scenarios depend on a valid plan

        std::optional<ArmInput> control;
        if (const json* k = r_.find(obj, "control")) {
            if (c.plan.arms != 2) {
                r_.error("scenarios.control", "single-arm designs have no control arm");
                return;
            }
            control = arm(*k, "scenarios.control", c);
            if (!control) return;
        }
        auto resolve = [&](const char* key, bool effective) -> std::optional<ScenarioInput> {
            const std::string path = join_path(base, key);
            if (const json* s = r_.find(obj, key)) return scenario(*s, path, c, key);
            if (c.plan.arms == 2 && !control) {
                r_.error(path, "required field is missing (or give scenarios.control to derive it)");
                return std::nullopt;
            }
            r_.defaults.push_back(path);
            return derived(effective, control, c, path);
        };
        futile_ = resolve("futile", false);
        effective_ = resolve("effective", true);
        if (futile_) c.futile = futile_->scenario;
        if (effective_) c.effective = effective_->scenario;
        if (const json* add = r_.find(obj, "additional")) {
            if (!add->is_array()) {
                r_.error("scenarios.additional", "expected an array of scenarios");
                return;
            }
            for (std::size_t i = 0; i < add->size(); ++i) {
                auto s = scenario((*add)[i], index_path("scenarios.additional", i), c,
                                  "scenario" + std::to_string(i + 3));
                if (s) {
                    additional_.push_back(*s);
                    c.additional.push_back(s->scenario);
                }
            }
        }
    }

    void constraints(DesignConfig& c) {
        const std::string base = "constraints";
        const json& obj = section(base);
        if (!r_.object(obj, base, {"max_fgr", "max_fngr", "max_fcr"})) return;
        if (auto v = r_.number(obj, "max_fgr", base, c.constraints.max_fgr)) c.constraints.max_fgr = *v;
        if (auto v = r_.number(obj, "max_fngr", base, c.constraints.max_fngr)) c.constraints.max_fngr = *v;
        if (auto v = r_.number(obj, "max_fcr", base, c.constraints.max_fcr)) c.constraints.max_fcr = *v;
        r_.check(base, [&] { validate(c.constraints); });
    }

    void settings(DesignConfig& c) {
        if (auto v = r_.string(doc_, "objective", "", std::string("optimal")))
            r_.check("objective", [&] { c.objective = objective_from_string(*v); });
        if (auto v = r_.string(doc_, "evaluation", "", std::string("auto")))
            r_.check("evaluation", [&] { c.evaluation = evaluation_from_string(*v); });
        const std::string base = "simulation";
        const json& obj = section(base);
        if (!r_.object(obj, base, {"n_sims", "seed"})) return;
        if (auto v = r_.integer(obj, "n_sims", base, 10000, 1, 100000000)) c.n_sims = *v;
        if (auto v = r_.unsigned_integer(obj, "seed", base, 2024)) c.seed = *v;
        if (c.evaluation == Evaluation::Exact && r_.errors.empty() && !exact_route_available(c.spec, c.plan))
            r_.error("evaluation", "exact evaluation needs a single-arm, single binary endpoint");
    }

    void grid(DesignConfig& c) {
        const std::string base = "grid";
        const json& obj = section(base);
        if (!r_.object(obj, base, {"lambda_lrv", "lambda_cmv", "gamma_lrv", "gamma_cmv"})) return;
        auto axis = [&](const char* key, GridAxis& a, double lo_min, double hi_max, bool open) {
            const std::string path = join_path(base, key);
            const json* j = r_.find(obj, key);
            if (!j) {
                r_.defaults.push_back(path);
                return;
            }
            if (!r_.object(*j, path, {"lo", "hi", "step"})) return;
            const auto lo = r_.number(*j, "lo", path, a.lo);
            const auto hi = r_.number(*j, "hi", path, a.hi);
            const auto step = r_.number(*j, "step", path, a.step);
            if (!lo || !hi || !step) return;
            const bool lo_ok = open ? *lo > lo_min : *lo >= lo_min;
            const bool hi_ok = open ? *hi < hi_max : *hi <= hi_max;
            if (!lo_ok || !hi_ok || *lo > *hi) {
                r_.error(path, open ? "range must lie strictly inside (0,1) with lo <= hi"
                                    : "range must be nonnegative with lo <= hi");
                return;
            }
            if (!(*step > 0)) {
                r_.error(join_path(path, "step"), "must be positive");
                return;
            }
            a = {*lo, *hi, *step};
            if (a.values().size() > 1000) r_.error(join_path(path, "step"), "axis would exceed 1000 values");
        };
        axis("lambda_lrv", c.grid.lambda_lrv, 0.0, 1.0, true);
        axis("lambda_cmv", c.grid.lambda_cmv, 0.0, 1.0, true);
        axis("gamma_lrv", c.grid.gamma_lrv, 0.0, 1e6, false);
        axis("gamma_cmv", c.grid.gamma_cmv, 0.0, 1e6, false);
    }

    ojson echo(const DesignConfig& c) const {
        ojson j;
        ojson ep;
        ep["family"] = to_string(c.spec.family);
        ep["combination"] = to_string(c.spec.combination);
        if (c.spec.family == Family::Categorical) ep["categories"] = c.spec.categories;
        j["endpoint"] = ep;
        ojson targets = ojson::array();
        for (const auto& m : c.spec.endpoints) {
            ojson t;
            t["name"] = m.name;
            t["lrv"] = m.target.lrv;
            t["cmv"] = m.target.cmv;
            t["futile"] = m.target.futile;
            t["eff"] = m.target.eff;
            t["direction"] = direction_name(m.target.direction);
            if (c.spec.family == Family::Categorical) t["selector"] = m.selector.bits;
            targets.push_back(t);
        }
        j["targets"] = targets;
        ojson p;
        p["max_n"] = c.plan.max_n;
        p["interim_looks"] = c.plan.interim_looks;
        p["arms"] = c.plan.arms;
        p["allocation_ratio"] = {c.plan.ratio_experimental, c.plan.ratio_control};
        p["accrual_rate"] = c.plan.accrual_rate;
        p["accrual"] = accrual_name(c.plan.accrual);
        p["followup_months"] = c.plan.followup_months;
        p["allow_superiority"] = c.plan.allow_superiority;
        p["interim_go_graduates"] = c.plan.interim_go_graduates;
        p["difference_method"] = difference_name(c.plan.difference_method);
        p["difference_draws"] = c.plan.difference_draws;
        j["plan"] = p;
        j["prior"] = prior_echo(c.prior);
        ojson k;
        k["max_fgr"] = c.constraints.max_fgr;
        k["max_fngr"] = c.constraints.max_fngr;
        k["max_fcr"] = c.constraints.max_fcr;
        j["constraints"] = k;
        j["objective"] = to_string(c.objective);
        j["evaluation"] = to_string(c.evaluation);
        ojson g;
        g["lambda_lrv"] = axis_echo(c.grid.lambda_lrv);
        g["lambda_cmv"] = axis_echo(c.grid.lambda_cmv);
        g["gamma_lrv"] = axis_echo(c.grid.gamma_lrv);
        g["gamma_cmv"] = axis_echo(c.grid.gamma_cmv);
        j["grid"] = g;
        ojson s;
        s["n_sims"] = c.n_sims;
        s["seed"] = c.seed;
        j["simulation"] = s;
        ojson sc;
        sc["futile"] = scenario_echo(*futile_, c.spec.family);
        sc["effective"] = scenario_echo(*effective_, c.spec.family);
        ojson add = ojson::array();
        for (const auto& a : additional_) add.push_back(scenario_echo(a, c.spec.family));
        sc["additional"] = add;
        j["scenarios"] = sc;
        if (c.design) j["design"] = design_to_json(*c.design);
        return j;
    }

    std::vector<std::string> assumptions(const DesignConfig& c) const {
        std::vector<std::string> out;
        if (c.spec.family == Family::Categorical) {
            auto note = [&](const std::string& name, const ArmInput& a) {
                if (!a.marginals) return;
                std::ostringstream os;
                os << "Scenario " << name << ": joint category probabilities built from marginals ("
                   << (*a.marginals)[0] << ", " << (*a.marginals)[1] << ") with odds ratio " << a.odds_ratio;
                if (a.odds_ratio == 1.0) os << " (independent endpoints)";
                out.push_back(os.str());
            };
            std::vector<const ScenarioInput*> all{&*futile_, &*effective_};
            for (const auto& a : additional_) all.push_back(&a);
            for (const auto* s : all) {
                note(s->scenario.label + " experimental arm", s->experimental);
                if (s->control) note(s->scenario.label + " control arm", *s->control);
            }
        }
        if (c.spec.endpoints.size() > 1)
            out.push_back("Endpoints share one set of calibrated thresholds");
        return out;
    }

    const json& doc_;
    Reader r_;
    std::optional<ScenarioInput> futile_, effective_;
    std::vector<ScenarioInput> additional_;
};

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

CalibrationProblem DesignConfig::problem() const { return {spec, plan, prior, futile, effective}; }

std::vector<Scenario> DesignConfig::scenarios() const {
    std::vector<Scenario> out{futile, effective};
    out.insert(out.end(), additional.begin(), additional.end());
    return out;
}

ConfigOutcome parse_config(const nlohmann::json& doc) { return Parser(doc).run(); }

ConfigOutcome parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte);
        std::string msg = e.what();
        // Keep only the reason after the library's own position prefix.
        if (auto pos = msg.find(": "); pos != std::string::npos) msg = msg.substr(pos + 2);
        ConfigOutcome out;
        out.errors.push_back(
            {"", "JSON parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg});
        return out;
    }
    return parse_config(doc);
}

DesignConfig load_config(const std::string& text) {
    auto out = parse_config(text);
    if (!out.ok()) throw ConfigError(out.errors);
    return std::move(*out.config);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({{"", "cannot read file '" + path + "'"}});
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

DesignConfig load_config_file(const std::string& path) { return load_config(read_text_file(path)); }

nlohmann::ordered_json design_to_json(const DesignParams& d) {
    ojson j;
    j["lambda_lrv"] = d.lambda_lrv;
    j["lambda_cmv"] = d.lambda_cmv;
    j["gamma_lrv"] = d.gamma_lrv;
    j["gamma_cmv"] = d.gamma_cmv;
    return j;
}

DesignParams design_from_json(const nlohmann::json& j, const std::string& path) {
    Reader r;
    DesignParams d;
    if (r.object(j, path, {"lambda_lrv", "lambda_cmv", "gamma_lrv", "gamma_cmv"})) {
        auto a = r.number(j, "lambda_lrv", path, std::nullopt);
        auto b = r.number(j, "lambda_cmv", path, std::nullopt);
        auto c = r.number(j, "gamma_lrv", path, std::nullopt);
        auto e = r.number(j, "gamma_cmv", path, std::nullopt);
        if (a && b && c && e) {
            d = {*a, *b, *c, *e};
            r.check(path, [&] { validate(d); });
        }
    }
    if (!r.errors.empty()) throw ConfigError(r.errors);
    return d;
}

nlohmann::ordered_json errors_to_json(const std::vector<FieldError>& errors) {
    ojson arr = ojson::array();
    for (const auto& e : errors) {
        ojson j;
        j["path"] = e.path;
        j["message"] = e.message;
        arr.push_back(j);
    }
    return arr;
}

}  // namespace bop2dc
