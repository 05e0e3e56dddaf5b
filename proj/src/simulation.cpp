#include "bop2dc/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <thread>

#include <boost/math/distributions/binomial.hpp>

#include "bop2dc/rng.hpp"

namespace bop2dc {

namespace {

void require(bool cond, const std::string& what) {
    if (!cond) throw PreconditionError(what);
}

std::uint64_t bits_of(double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, sizeof u);
    return u;
}

// Arm assignment: blocks of (r_E + r_C) patients, experimental first.
int arm_of(int index, const TrialPlan& plan) {
    if (plan.arms == 1) return 0;
    const int block = plan.ratio_experimental + plan.ratio_control;
    return (index % block) < plan.ratio_experimental ? 0 : 1;
}

double analysis_time(const TrialData& data, int n, const TrialPlan& plan) {
    const double t = data[n - 1].enroll_time;
    return n == plan.max_n ? t + plan.followup_months : t;
}

}  // namespace

std::vector<int> TrialPlan::looks() const {
    std::vector<int> out = interim_looks;
    out.push_back(max_n);
    return out;
}

void validate(const TrialPlan& plan) {
    require(plan.max_n >= 1, "plan.max_n must be positive");
    require(plan.arms == 1 || plan.arms == 2, "plan.arms must be 1 or 2");
    require(plan.interim_looks.size() <= 15, "at most 15 interim looks are supported");
    int prev = 0;
    for (int n : plan.interim_looks) {
        require(n > prev, "interim looks must be strictly increasing and positive");
        require(n < plan.max_n, "interim looks must be smaller than max_n");
        prev = n;
    }
    require(plan.ratio_experimental >= 1 && plan.ratio_control >= 1,
            "randomization ratio components must be positive integers");
    require(plan.accrual_rate > 0, "accrual rate must be positive");
    require(plan.followup_months >= 0, "follow-up must be nonnegative");
    require(plan.difference_draws >= 10000, "difference draws must be at least 1e4");
    if (plan.arms == 2) {
        for (int n : plan.looks()) {
            int e = 0;
            for (int i = 0; i < n; ++i) e += arm_of(i, plan) == 0;
            require(e >= 1 && n - e >= 1, "every look needs patients in both arms");
        }
    }
}

void validate(const EndpointSpec& spec) {
    require(!spec.endpoints.empty(), "at least one monitored endpoint is required");
    if (spec.family == Family::Categorical) {
        require(spec.categories >= 2, "categorical endpoint needs at least two joint categories");
        for (const auto& ep : spec.endpoints) {
            require(static_cast<int>(ep.selector.bits.size()) == spec.categories,
                    "selector length must equal the number of joint categories");
            validate(ep.selector);
        }
    } else {
        require(spec.endpoints.size() == 1, "only categorical designs monitor several endpoints");
    }
    if (spec.endpoints.size() == 1) {
        require(spec.combination == Combination::Single, "one endpoint requires combination 'single'");
    } else {
        require(spec.combination != Combination::Single,
                "several endpoints require combination 'multiple' or 'coprimary'");
    }
    for (const auto& ep : spec.endpoints) validate(ep.target);
}

void validate(const Scenario& sc, const EndpointSpec& spec, const TrialPlan& plan) {
    auto check_arm = [&](const ArmTruth& a) {
        switch (spec.family) {
            case Family::Binary:
                require(a.value >= 0 && a.value <= 1, "response probability must lie in [0,1]");
                break;
            case Family::Continuous:
                require(std::isfinite(a.value) && a.sd > 0, "continuous truth needs finite mean and sd > 0");
                break;
            case Family::TimeToEvent:
                require(a.value > 0, "median survival must be positive");
                break;
            case Family::Categorical: {
                require(static_cast<int>(a.probs.size()) == spec.categories,
                        "joint probabilities must have one entry per category");
                double s = 0;
                for (double p : a.probs) {
                    require(p >= 0 && p <= 1, "joint probabilities must lie in [0,1]");
                    s += p;
                }
                require(std::abs(s - 1.0) < 1e-9, "joint probabilities must sum to 1");
                break;
            }
        }
    };
    check_arm(sc.experimental);
    if (plan.arms == 2) {
        require(sc.control.has_value(), "two-arm scenario '" + sc.label + "' needs a control truth");
        check_arm(*sc.control);
    }
}

std::vector<double> joint_from_marginals(double p1, double p2, double odds_ratio) {
    require(p1 >= 0 && p1 <= 1 && p2 >= 0 && p2 <= 1, "marginals must lie in [0,1]");
    require(odds_ratio > 0, "odds ratio must be positive");
    double p11;
    if (std::abs(odds_ratio - 1.0) < 1e-12) {
        p11 = p1 * p2;
    } else {
        // Plackett: solve (p11 p00) / (p10 p01) = odds_ratio for p11.
        const double a = odds_ratio - 1.0;
        const double b = 1.0 + (p1 + p2) * (odds_ratio - 1.0);
        const double disc = b * b - 4.0 * odds_ratio * a * p1 * p2;
        p11 = (b - std::sqrt(disc)) / (2.0 * a);
    }
    return {p11, p1 - p11, p2 - p11, 1.0 - p1 - p2 + p11};
}

TrialData generate_trial_data(const Scenario& sc, const EndpointSpec& spec, const TrialPlan& plan,
                              std::uint64_t seed, std::uint64_t trial_index) {
    validate(sc, spec, plan);
    TrialData data(plan.max_n);
    Sampler outcomes(seed, trial_index, 0);
    Sampler arrivals(seed, trial_index, 1);
    double clock = 0.0;
    for (int i = 0; i < plan.max_n; ++i) {
        Patient& p = data[i];
        p.arm = arm_of(i, plan);
        if (i > 0) {
            clock += plan.accrual == Accrual::Poisson ? arrivals.exponential(1.0 / plan.accrual_rate)
                                                      : 1.0 / plan.accrual_rate;
        }
        p.enroll_time = clock;
        const ArmTruth& truth = p.arm == 0 ? sc.experimental : *sc.control;
        switch (spec.family) {
            case Family::Binary: p.value = outcomes.bernoulli(truth.value) ? 1.0 : 0.0; break;
            case Family::Continuous: p.value = truth.value + truth.sd * outcomes.normal(); break;
            case Family::TimeToEvent:
                // Exponential with mean median / ln 2.
                p.value = outcomes.exponential(truth.value / std::log(2.0));
                break;
            case Family::Categorical:
                p.category = static_cast<int>(outcomes.categorical(truth.probs));
                break;
        }
    }
    return data;
}

TteStats tte_stats_at(const TrialData& data, int arm, int n_included, double time) {
    TteStats s;
    for (int i = 0; i < n_included; ++i) {
        const Patient& p = data[i];
        if (p.arm != arm) continue;
        const double exposure = std::max(0.0, time - p.enroll_time);
        ++s.n;
        if (p.value <= exposure) {
            ++s.d;
            s.total_time += p.value;
        } else {
            s.total_time += exposure;
        }
    }
    return s;
}

std::size_t PathEvaluator::KeyHash::operator()(const std::vector<int>& k) const {
    std::uint64_t h = 0x12345;
    for (int v : k) h = mix_seed(h, static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
}

PathEvaluator::PathEvaluator(EndpointSpec spec, TrialPlan plan, PriorSpec prior)
    : spec_(std::move(spec)), plan_(std::move(plan)), prior_(std::move(prior)) {
    validate(spec_);
    validate(plan_);
    validate(prior_);
    const bool prior_matches = [&] {
        switch (spec_.family) {
            case Family::Binary: return std::holds_alternative<BinaryPrior>(prior_);
            case Family::Continuous: return std::holds_alternative<ContinuousPrior>(prior_);
            case Family::TimeToEvent: return std::holds_alternative<TtePrior>(prior_);
            case Family::Categorical:
                return std::holds_alternative<CategoricalPrior>(prior_) &&
                       static_cast<int>(std::get<CategoricalPrior>(prior_).alpha.size()) == spec_.categories;
        }
        return false;
    }();
    require(prior_matches, "prior does not match the endpoint family");
}

PosteriorDist PathEvaluator::arm_posterior(const TrialData& data, int arm, int n, double time,
                                           int endpoint) const {
    switch (spec_.family) {
        case Family::Binary: {
            BinaryStats s;
            for (int i = 0; i < n; ++i) {
                if (data[i].arm != arm) continue;
                ++s.n;
                s.y += data[i].value > 0.5;
            }
            return posterior_binary(s, std::get<BinaryPrior>(prior_));
        }
        case Family::Continuous: {
            ContinuousStats s;
            double sum = 0.0;
            for (int i = 0; i < n; ++i) {
                if (data[i].arm != arm) continue;
                ++s.n;
                sum += data[i].value;
            }
            s.mean = s.n > 0 ? sum / s.n : 0.0;
            for (int i = 0; i < n; ++i) {
                if (data[i].arm != arm) continue;
                const double dv = data[i].value - s.mean;
                s.sum_sq_dev += dv * dv;
            }
            return posterior_continuous(s, std::get<ContinuousPrior>(prior_));
        }
        case Family::TimeToEvent:
            return posterior_tte(tte_stats_at(data, arm, n, time), std::get<TtePrior>(prior_));
        case Family::Categorical: {
            CategoricalStats s;
            s.counts.assign(spec_.categories, 0);
            for (int i = 0; i < n; ++i)
                if (data[i].arm == arm) ++s.counts[data[i].category];
            return posterior_linear(s, std::get<CategoricalPrior>(prior_), spec_.endpoints[endpoint].selector);
        }
    }
    throw PreconditionError("unsupported family");
}

CriterionProbs PathEvaluator::single_arm(const TrialData& data, int n, double time, int endpoint) {
    const TargetProfile& target = spec_.endpoints[endpoint].target;
    const PosteriorDist dist = arm_posterior(data, 0, n, time, endpoint);
    if (spec_.family == Family::Binary || spec_.family == Family::Categorical) {
        const auto& beta = std::get<BetaDist>(dist);
        // Beta parameters minus the prior identify the statistic uniquely.
        std::vector<int> key{endpoint, n, static_cast<int>(std::lround(beta.a * 1e6)),
                             static_cast<int>(std::lround(beta.b * 1e6))};
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        const CriterionProbs cp = criterion_probs(dist, target);
        cache_.emplace(std::move(key), cp);
        return cp;
    }
    return criterion_probs(dist, target);
}

CriterionProbs PathEvaluator::two_arm(const TrialData& data, int n, double time, int endpoint) {
    const TargetProfile& target = spec_.endpoints[endpoint].target;
    const PosteriorDist de = arm_posterior(data, 0, n, time, endpoint);
    const PosteriorDist dc = arm_posterior(data, 1, n, time, endpoint);
    auto compute = [&] {
        if (plan_.difference_method == DifferenceMethod::Quadrature) {
            return CriterionProbs{
                oriented(tail_prob_difference_quadrature(de, dc, target.lrv), target.direction),
                oriented(tail_prob_difference_quadrature(de, dc, target.cmv), target.direction)};
        }
        // The seed is a function of the posterior parameters so memoized and
        // recomputed values coincide.
        std::uint64_t seed = 0x5eed;
        for (const auto* d : {&de, &dc}) {
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, BetaDist>) {
                        seed = mix_seed(mix_seed(seed, bits_of(v.a)), bits_of(v.b));
                    } else if constexpr (std::is_same_v<T, StudentTDist>) {
                        seed = mix_seed(mix_seed(mix_seed(seed, bits_of(v.df)), bits_of(v.location)),
                                        bits_of(v.scale));
                    } else {
                        seed = mix_seed(mix_seed(seed, bits_of(v.shape)), bits_of(v.rate));
                    }
                },
                *d);
        }
        return CriterionProbs{
            oriented(tail_prob_difference(de, dc, target.lrv, plan_.difference_draws, seed),
                     target.direction),
            oriented(tail_prob_difference(de, dc, target.cmv, plan_.difference_draws, seed),
                     target.direction)};
    };
    if (spec_.family == Family::Binary || spec_.family == Family::Categorical) {
        const auto& be = std::get<BetaDist>(de);
        const auto& bc = std::get<BetaDist>(dc);
        std::vector<int> key{endpoint, n, static_cast<int>(std::lround(be.a * 1e6)),
                             static_cast<int>(std::lround(be.b * 1e6)),
                             static_cast<int>(std::lround(bc.a * 1e6)),
                             static_cast<int>(std::lround(bc.b * 1e6))};
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        const CriterionProbs cp = compute();
        cache_.emplace(std::move(key), cp);
        return cp;
    }
    return compute();
}

TrialPath PathEvaluator::evaluate(const TrialData& data) {
    require(static_cast<int>(data.size()) == plan_.max_n, "dataset size must equal max_n");
    const auto looks = plan_.looks();
    const int ne = static_cast<int>(spec_.endpoints.size());
    TrialPath path;
    path.endpoints = ne;
    path.probs.reserve(looks.size() * ne);
    for (int n : looks) {
        const double time = analysis_time(data, n, plan_);
        path.look_times.push_back(time);
        for (int e = 0; e < ne; ++e)
            path.probs.push_back(plan_.arms == 1 ? single_arm(data, n, time, e) : two_arm(data, n, time, e));
    }
    return path;
}

TrialResult decide_trial(const TrialPath& path, std::span<const DesignParams> designs,
                         const TrialPlan& plan, Combination combination) {
    require(!designs.empty(), "at least one design parameter set is required");
    require(designs.size() == 1 || static_cast<int>(designs.size()) == path.endpoints,
            "need one design per endpoint or one shared design");
    const auto looks = plan.looks();
    const int last = static_cast<int>(looks.size()) - 1;
    std::vector<Decision> per(path.endpoints);
    auto design_for = [&](int e) -> const DesignParams& { return designs[designs.size() == 1 ? 0 : e]; };
    auto reduce = [&](Stage stage) {
        return path.endpoints == 1 ? per[0] : combine(combination, per, stage);
    };
    for (int k = 0; k < last; ++k) {
        for (int e = 0; e < path.endpoints; ++e) {
            const CriterionProbs& cp = path.at(k, e);
            const DesignParams& d = design_for(e);
            if (plan.arms == 2 && plan.allow_superiority)
                per[e] = interim_decision_rct(cp.p_lrv, cp.p_cmv, d, looks[k], plan.max_n, true);
            else if (plan.interim_go_graduates)
                per[e] = interim_decision_three_way(cp.p_lrv, cp.p_cmv, d, looks[k], plan.max_n);
            else
                per[e] = interim_decision(cp.p_lrv, cp.p_cmv, d, looks[k], plan.max_n);
        }
        const Decision dk = reduce(Stage::Interim);
        if (dk == Decision::NoGo || dk == Decision::Graduate)
            return {dk, k, looks[k], path.look_times[k]};
    }
    for (int e = 0; e < path.endpoints; ++e) {
        const CriterionProbs& cp = path.at(last, e);
        per[e] = final_decision(cp.p_lrv, cp.p_cmv, design_for(e));
    }
    return {reduce(Stage::Final), last, looks[last], path.look_times[last]};
}

TrialResult run_trial(const TrialData& data, std::span<const DesignParams> designs,
                      PathEvaluator& evaluator) {
    return decide_trial(evaluator.evaluate(data), designs, evaluator.plan(), evaluator.spec().combination);
}

double OperatingCharacteristics::se(double rate) const {
    if (exact || n_sims <= 0) return 0.0;
    return std::sqrt(rate * (1.0 - rate) / static_cast<double>(n_sims));
}

OperatingCharacteristics summarize(std::span<const TrialResult> results) {
    std::int64_t go = 0, nogo = 0, consider = 0, graduate = 0, total_n = 0;
    double total_duration = 0.0;
    for (const TrialResult& r : results) {
        switch (r.decision) {
            case Decision::Go: ++go; break;
            case Decision::NoGo: ++nogo; break;
            case Decision::Consider: ++consider; break;
            case Decision::Graduate: ++graduate; break;
            case Decision::Continue: throw PreconditionError("trial ended in 'continue'");
        }
        total_n += r.n_used;
        total_duration += r.duration;
    }
    OperatingCharacteristics oc;
    const auto n = static_cast<std::int64_t>(results.size());
    oc.n_sims = n;
    if (n == 0) return oc;
    const double dn = static_cast<double>(n);
    oc.go_rate = go / dn;
    oc.nogo_rate = nogo / dn;
    oc.consider_rate = consider / dn;
    oc.graduate_rate = graduate / dn;
    oc.avg_sample_size = static_cast<double>(total_n) / dn;
    oc.avg_duration = total_duration / dn;
    return oc;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::int64_t count, int threads,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
    threads = static_cast<int>(std::min<std::int64_t>(resolve_threads(threads), std::max<std::int64_t>(count, 1)));
    if (threads <= 1) {
        fn(0, count);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::int64_t chunk = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const std::int64_t begin = t * chunk, end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, t, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<TrialResult> simulate_trials(const Scenario& sc, std::span<const DesignParams> designs,
                                         const EndpointSpec& spec, const TrialPlan& plan,
                                         const PriorSpec& prior, const SimulationOptions& opt) {
    require(opt.n_sims >= 1, "n_sims must be positive");
    validate(sc, spec, plan);
    for (const auto& d : designs) validate(d);
    std::vector<TrialResult> results(opt.n_sims);
    parallel_for(opt.n_sims, opt.threads, [&](std::int64_t begin, std::int64_t end) {
        PathEvaluator evaluator(spec, plan, prior);
        for (std::int64_t i = begin; i < end; ++i) {
            const TrialData data = generate_trial_data(sc, spec, plan, opt.seed, static_cast<std::uint64_t>(i));
            results[i] = run_trial(data, designs, evaluator);
        }
    });
    return results;
}

OperatingCharacteristics estimate_oc(const Scenario& sc, std::span<const DesignParams> designs,
                                     const EndpointSpec& spec, const TrialPlan& plan,
                                     const PriorSpec& prior, const SimulationOptions& opt) {
    const auto results = simulate_trials(sc, designs, spec, plan, prior, opt);
    return summarize(results);
}

ExactBinaryEvaluator::ExactBinaryEvaluator(const TrialPlan& plan, double theta) : looks_(plan.looks()) {
    require(theta >= 0 && theta <= 1, "response probability must lie in [0,1]");
    offsets_.push_back(0);
    int prev = 0;
    for (int n : looks_) {
        offsets_.push_back(offsets_.back() + static_cast<std::size_t>(n + 1));
        const int step = n - prev;
        std::vector<double> pmf(step + 1);
        boost::math::binomial_distribution<double> dist(step, theta);
        for (int j = 0; j <= step; ++j) pmf[j] = boost::math::pdf(dist, j);
        step_pmf_.push_back(std::move(pmf));
        // Expected calendar time of the n-th enrollment; Poisson accrual has the same mean.
        const double t = (n - 1) / plan.accrual_rate;
        look_times_.push_back(n == plan.max_n ? t + plan.followup_months : t);
        prev = n;
    }
}

OperatingCharacteristics ExactBinaryEvaluator::evaluate(std::span<const Decision> rule) const {
    require(rule.size() == rule_size(), "rule size does not match the look schedule");
    OperatingCharacteristics oc;
    oc.exact = true;
    std::vector<double> mass = step_pmf_[0];
    std::vector<double> next;
    const int last = static_cast<int>(looks_.size()) - 1;
    double avg_n = 0.0, avg_t = 0.0;
    for (int k = 0;; ++k) {
        const Decision* r = rule.data() + offsets_[k];
        double stopped = 0.0;
        if (k == last) {
            for (int y = 0; y <= looks_[k]; ++y) {
                switch (r[y]) {
                    case Decision::Go: oc.go_rate += mass[y]; break;
                    case Decision::NoGo: oc.nogo_rate += mass[y]; break;
                    case Decision::Consider: oc.consider_rate += mass[y]; break;
                    default: throw PreconditionError("final rule must be go/consider/nogo");
                }
                stopped += mass[y];
            }
            avg_n += stopped * looks_[k];
            avg_t += stopped * look_times_[k];
            break;
        }
        for (int y = 0; y <= looks_[k]; ++y) {
            if (r[y] == Decision::NoGo) {
                oc.nogo_rate += mass[y];
            } else if (r[y] == Decision::Graduate) {
                oc.graduate_rate += mass[y];
            } else {
                continue;
            }
            stopped += mass[y];
            mass[y] = 0.0;
        }
        avg_n += stopped * looks_[k];
        avg_t += stopped * look_times_[k];
        const auto& pmf = step_pmf_[k + 1];
        next.assign(looks_[k + 1] + 1, 0.0);
        for (int y = 0; y <= looks_[k]; ++y) {
            if (mass[y] == 0.0) continue;
            for (std::size_t j = 0; j < pmf.size(); ++j) next[y + j] += mass[y] * pmf[j];
        }
        mass.swap(next);
    }
    oc.avg_sample_size = avg_n;
    oc.avg_duration = avg_t;
    return oc;
}

std::vector<Decision> binary_rule(const DesignParams& design, const TrialPlan& plan,
                                  const BinaryPrior& prior, const TargetProfile& profile) {
    validate(design);
    const auto looks = plan.looks();
    std::vector<Decision> rule;
    for (std::size_t k = 0; k < looks.size(); ++k) {
        const int n = looks[k];
        for (int y = 0; y <= n; ++y) {
            const auto cp = criterion_probs(posterior_binary({n, y}, prior), profile);
            if (n == plan.max_n)
                rule.push_back(final_decision(cp.p_lrv, cp.p_cmv, design));
            else if (plan.interim_go_graduates)
                rule.push_back(interim_decision_three_way(cp.p_lrv, cp.p_cmv, design, n, plan.max_n));
            else
                rule.push_back(interim_decision(cp.p_lrv, cp.p_cmv, design, n, plan.max_n));
        }
    }
    return rule;
}

bool exact_route_available(const EndpointSpec& spec, const TrialPlan& plan) {
    return spec.family == Family::Binary && plan.arms == 1 && spec.endpoints.size() == 1;
}

OperatingCharacteristics exact_oc_binary_single_arm(const Scenario& sc, const DesignParams& design,
                                                    const TrialPlan& plan, const BinaryPrior& prior,
                                                    const TargetProfile& profile) {
    require(plan.arms == 1, "exact evaluation supports single-arm trials only");
    validate(plan);
    validate(PriorSpec{prior});
    const ExactBinaryEvaluator evaluator(plan, sc.experimental.value);
    return evaluator.evaluate(binary_rule(design, plan, prior, profile));
}

}  // namespace bop2dc
