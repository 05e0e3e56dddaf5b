#include "bop2dc/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <mutex>

#include "bop2dc/rng.hpp"

namespace bop2dc {

namespace {

void require(bool cond, const std::string& what) {
    if (!cond) throw PreconditionError(what);
}

constexpr std::uint64_t kFutileStream = 1;
constexpr std::uint64_t kEffectiveStream = 2;
constexpr std::uint64_t kValidationStream = 0xFE55;

// Cutoffs of one criterion (LRV or CMV) for one (lambda, gamma) pair.
struct CriterionCutoffs {
    std::vector<double> interim;   // lambda (n_k/N)^gamma
    std::vector<double> graduate;  // NaN when interim graduation is off
    double lambda = 0.0;
};

CriterionCutoffs make_cutoffs(double lambda, double gamma, const TrialPlan& plan) {
    CriterionCutoffs c;
    c.lambda = lambda;
    const DesignParams same{lambda, lambda, gamma, gamma};
    for (int n : plan.interim_looks) {
        c.interim.push_back(interim_cutoffs(same, n, plan.max_n).first);
        if (plan.arms == 2 && plan.allow_superiority)
            c.graduate.push_back(graduate_cutoff(lambda, n, plan.max_n));
        else if (plan.interim_go_graduates)
            c.graduate.push_back(lambda);
        else
            c.graduate.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    return c;
}

// Bit layout for L interim looks: bit k (k < L) set when p_k is below the
// interim cutoff; bit L when the final p is below lambda; bit L+1 when it is
// above lambda; bit L+2+k when p_k exceeds the graduate cutoff.
using Code = std::uint16_t;
constexpr int kMaxFastLooks = 7;

Code look_bits(double p, int k, int interim_count, const CriterionCutoffs& c) {
    Code bits = 0;
    if (k < interim_count) {
        if (p < c.interim[k]) bits |= Code(1u << k);
        if (p > c.graduate[k]) bits |= Code(1u << (interim_count + 2 + k));
    } else {
        if (p < c.lambda) bits |= Code(1u << interim_count);
        if (p > c.lambda) bits |= Code(1u << (interim_count + 1));
    }
    return bits;
}

// Outcome bins: 2k = interim no-go at look k, 2k+1 = graduate at look k,
// 2L = final go, 2L+1 = final no-go, 2L+2 = consider.
struct Masks {
    unsigned graduate = 0;
    unsigned stop = 0;
    bool go = false;
    bool nogo = false;
};

inline int bin_of(const Masks& m, int interim_count) {
    const unsigned any = m.graduate | m.stop | (1u << interim_count);
    const int k = std::countr_zero(any);
    if (k < interim_count) return 2 * k + static_cast<int>((m.graduate >> k) & 1u);
    return 2 * interim_count + (m.go ? 0 : (m.nogo ? 1 : 2));
}

inline Masks endpoint_masks(unsigned a, unsigned b, int interim_count) {
    const unsigned interim = (1u << interim_count) - 1u;
    Masks m;
    m.graduate = (a >> (interim_count + 2)) & (b >> (interim_count + 2)) & interim;
    m.stop = a & b & interim & ~m.graduate;
    const unsigned f = (a & b) >> interim_count;
    m.go = (f & 2u) != 0;
    m.nogo = (f & 1u) != 0;
    return m;
}

inline Masks combine_masks(const Masks& x, const Masks& y, Combination c) {
    Masks m;
    if (c == Combination::Multiple) {
        m.graduate = x.graduate | y.graduate;
        m.stop = x.stop & y.stop;
        m.go = x.go || y.go;
        m.nogo = x.nogo && y.nogo;
    } else {
        m.graduate = x.graduate & y.graduate;
        m.stop = x.stop | y.stop;
        m.go = x.go && y.go;
        m.nogo = x.nogo || y.nogo;
    }
    return m;
}

// Histogram of outcome bins -> operating characteristics (rates and average
// sample size; durations are filled in when the chosen design is replayed).
OperatingCharacteristics oc_from_bins(std::span<const std::int64_t> bins, const std::vector<int>& looks,
                                      std::int64_t total) {
    const int interim_count = static_cast<int>(looks.size()) - 1;
    std::int64_t go = 0, nogo = 0, consider = 0, graduate = 0, sum_n = 0;
    for (int k = 0; k < interim_count; ++k) {
        nogo += bins[2 * k];
        graduate += bins[2 * k + 1];
        sum_n += (bins[2 * k] + bins[2 * k + 1]) * looks[k];
    }
    go = bins[2 * interim_count];
    nogo += bins[2 * interim_count + 1];
    consider = bins[2 * interim_count + 2];
    sum_n += (go + bins[2 * interim_count + 1] + consider) * looks[interim_count];
    OperatingCharacteristics oc;
    const double n = static_cast<double>(total);
    oc.n_sims = total;
    oc.go_rate = go / n;
    oc.nogo_rate = nogo / n;
    oc.consider_rate = consider / n;
    oc.graduate_rate = graduate / n;
    oc.avg_sample_size = static_cast<double>(sum_n) / n;
    return oc;
}

struct Candidate {
    std::int64_t index = -1;
    double value = 0.0;
    double violation = std::numeric_limits<double>::infinity();
    std::int64_t infeasible_index = -1;
};

bool better(Objective o, double candidate, double incumbent) {
    return o == Objective::Optimal ? candidate > incumbent : candidate < incumbent;
}

void consider_point(Candidate& best, std::int64_t index, const DesignMetrics& m,
                    const CalibrationSettings& s) {
    const double violation = constraint_violation(m, s.constraints);
    if (violation <= 0.0) {
        const double value = s.objective == Objective::Optimal ? m.cgr : m.expected_n_futile;
        if (best.index < 0 || better(s.objective, value, best.value)) {
            best.index = index;
            best.value = value;
        }
    } else if (best.index < 0 && violation < best.violation) {
        best.violation = violation;
        best.infeasible_index = index;
    }
}

// Merges chunk results in grid order; strict comparisons keep the earliest point on ties.
void merge(Candidate& into, const Candidate& from, Objective o) {
    if (from.index >= 0 && (into.index < 0 || better(o, from.value, into.value))) {
        into.index = from.index;
        into.value = from.value;
    }
    if (from.infeasible_index >= 0 && from.violation < into.violation) {
        into.violation = from.violation;
        into.infeasible_index = from.infeasible_index;
    }
}

struct Axes {
    std::vector<double> lambda_lrv, lambda_cmv, gamma_lrv, gamma_cmv;

    explicit Axes(const GridSpec& g)
        : lambda_lrv(g.lambda_lrv.values()), lambda_cmv(g.lambda_cmv.values()),
          gamma_lrv(g.gamma_lrv.values()), gamma_cmv(g.gamma_cmv.values()) {}

    std::int64_t row_size() const {
        return static_cast<std::int64_t>(lambda_cmv.size() * gamma_lrv.size() * gamma_cmv.size());
    }
    std::int64_t total() const { return row_size() * static_cast<std::int64_t>(lambda_lrv.size()); }

    DesignParams at(std::int64_t index) const {
        const auto ngc = static_cast<std::int64_t>(gamma_cmv.size());
        const auto ngl = static_cast<std::int64_t>(gamma_lrv.size());
        const auto nlc = static_cast<std::int64_t>(lambda_cmv.size());
        const std::int64_t igc = index % ngc;
        index /= ngc;
        const std::int64_t igl = index % ngl;
        index /= ngl;
        const std::int64_t ilc = index % nlc;
        const std::int64_t ill = index / nlc;
        return {lambda_lrv[ill], lambda_cmv[ilc], gamma_lrv[igl], gamma_cmv[igc]};
    }
};

class ProgressReporter {
public:
    ProgressReporter(const std::function<void(double)>& cb, std::int64_t total) : cb_(cb), total_(total) {}

    void add(std::int64_t done) {
        if (!cb_) return;
        std::lock_guard lock(mu_);
        done_ += done;
        cb_(total_ > 0 ? static_cast<double>(done_) / static_cast<double>(total_) : 1.0);
    }

private:
    const std::function<void(double)>& cb_;
    std::int64_t total_;
    std::int64_t done_ = 0;
    std::mutex mu_;
};

// Per-criterion codes for every (lambda, gamma) pair of one axis pair.
// Layout: pair-major, then dataset (or (look, y) cell for the exact route).
struct CriterionCodes {
    std::vector<Code> codes;
    std::size_t width = 0;

    const Code* row(std::size_t pair) const { return codes.data() + pair * width; }
};

template <class ProbAt>
CriterionCodes build_codes(const std::vector<double>& lambdas, const std::vector<double>& gammas,
                           const TrialPlan& plan, std::size_t width, int looks_per_item, ProbAt prob_at) {
    CriterionCodes out;
    out.width = width;
    out.codes.assign(lambdas.size() * gammas.size() * width, 0);
    const int interim_count = static_cast<int>(plan.interim_looks.size());
    for (std::size_t il = 0; il < lambdas.size(); ++il) {
        for (std::size_t ig = 0; ig < gammas.size(); ++ig) {
            const CriterionCutoffs c = make_cutoffs(lambdas[il], gammas[ig], plan);
            Code* dst = out.codes.data() + (il * gammas.size() + ig) * width;
            for (std::size_t i = 0; i < width; ++i) {
                Code bits = 0;
                for (int j = 0; j < looks_per_item; ++j) {
                    const auto [k, p] = prob_at(i, j);
                    bits |= look_bits(p, k, interim_count, c);
                }
                dst[i] = bits;
            }
        }
    }
    return out;
}

CalibrationResult calibrate_exact(const CalibrationProblem& problem, const CalibrationSettings& s) {
    const TrialPlan& plan = problem.plan;
    const auto& prior = std::get<BinaryPrior>(problem.prior);
    const TargetProfile& target = problem.spec.endpoints[0].target;
    const ExactBinaryEvaluator futile(plan, problem.futile.experimental.value);
    const ExactBinaryEvaluator effective(plan, problem.effective.experimental.value);
    const auto looks = plan.looks();
    const int interim_count = static_cast<int>(plan.interim_looks.size());

    // (look, y) cells and their criterion probabilities.
    std::vector<std::pair<int, CriterionProbs>> cells;
    for (int k = 0; k < static_cast<int>(looks.size()); ++k)
        for (int y = 0; y <= looks[k]; ++y)
            cells.emplace_back(k, criterion_probs(posterior_binary({looks[k], y}, prior), target));

    const Axes axes(s.grid);
    const auto lrv = build_codes(axes.lambda_lrv, axes.gamma_lrv, plan, cells.size(), 1,
                                 [&](std::size_t i, int) { return std::pair{cells[i].first, cells[i].second.p_lrv}; });
    const auto cmv = build_codes(axes.lambda_cmv, axes.gamma_cmv, plan, cells.size(), 1,
                                 [&](std::size_t i, int) { return std::pair{cells[i].first, cells[i].second.p_cmv}; });

    auto rule_for = [&](std::int64_t index, std::vector<Decision>& rule) {
        const auto ngc = static_cast<std::int64_t>(axes.gamma_cmv.size());
        const auto ngl = static_cast<std::int64_t>(axes.gamma_lrv.size());
        const auto nlc = static_cast<std::int64_t>(axes.lambda_cmv.size());
        const std::int64_t igc = index % ngc, igl = (index / ngc) % ngl;
        const std::int64_t ilc = (index / (ngc * ngl)) % nlc, ill = index / (ngc * ngl * nlc);
        const Code* a = lrv.row(ill * ngl + igl);
        const Code* b = cmv.row(ilc * ngc + igc);
        rule.resize(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const int k = cells[i].first;
            const Masks m = endpoint_masks(a[i], b[i], interim_count);
            if (k < interim_count) {
                rule[i] = (m.graduate >> k) & 1u ? Decision::Graduate
                          : (m.stop >> k) & 1u   ? Decision::NoGo
                                                 : Decision::Continue;
            } else {
                rule[i] = m.go ? Decision::Go : (m.nogo ? Decision::NoGo : Decision::Consider);
            }
        }
    };

    const auto rows = static_cast<std::int64_t>(axes.lambda_lrv.size());
    std::vector<Candidate> row_best(rows);
    ProgressReporter progress(s.progress, axes.total());
    parallel_for(rows, s.threads, [&](std::int64_t begin, std::int64_t end) {
        std::vector<Decision> rule;
        for (std::int64_t r = begin; r < end; ++r) {
            Candidate best;
            for (std::int64_t j = 0; j < axes.row_size(); ++j) {
                const std::int64_t index = r * axes.row_size() + j;
                rule_for(index, rule);
                const DesignMetrics m = metrics(futile.evaluate(rule), effective.evaluate(rule));
                consider_point(best, index, m, s);
            }
            row_best[r] = best;
            progress.add(axes.row_size());
        }
    });
    Candidate best;
    for (const auto& c : row_best) merge(best, c, s.objective);

    CalibrationResult result;
    result.feasible = best.index >= 0;
    const std::int64_t chosen = result.feasible ? best.index : best.infeasible_index;
    result.design = axes.at(chosen);
    std::vector<Decision> rule;
    rule_for(chosen, rule);
    result.oc_futile = futile.evaluate(rule);
    result.oc_effective = effective.evaluate(rule);
    result.evaluation = Evaluation::Exact;
    result.points_evaluated = axes.total();
    return result;
}

CalibrationResult calibrate_mc(const CalibrationProblem& problem, const CalibrationSettings& s) {
    const TrialPlan& plan = problem.plan;
    const int interim_count = static_cast<int>(plan.interim_looks.size());
    require(interim_count <= kMaxFastLooks, "grid search supports at most 7 interim looks");
    const auto looks = plan.looks();
    const int nlooks = static_cast<int>(looks.size());
    const int endpoints = static_cast<int>(problem.spec.endpoints.size());
    require(endpoints <= 2, "grid search supports at most two monitored endpoints");
    const Combination combination = problem.spec.combination;

    const SharedDatasets shared = SharedDatasets::build(problem, s.n_sims, s.seed, s.threads);
    const Axes axes(s.grid);
    const auto n = static_cast<std::size_t>(s.n_sims);

    // codes[scenario][endpoint] for each criterion
    struct ScenarioCodes {
        std::vector<CriterionCodes> lrv, cmv;
    };
    std::vector<ScenarioCodes> codes(2);
    for (int sc = 0; sc < 2; ++sc) {
        const auto& paths = sc == 0 ? shared.futile : shared.effective;
        for (int e = 0; e < endpoints; ++e) {
            codes[sc].lrv.push_back(build_codes(axes.lambda_lrv, axes.gamma_lrv, plan, n, nlooks,
                                                [&](std::size_t i, int k) {
                                                    return std::pair{k, paths[i].at(k, e).p_lrv};
                                                }));
            codes[sc].cmv.push_back(build_codes(axes.lambda_cmv, axes.gamma_cmv, plan, n, nlooks,
                                                [&](std::size_t i, int k) {
                                                    return std::pair{k, paths[i].at(k, e).p_cmv};
                                                }));
        }
    }

    const int nbins = 2 * interim_count + 3;
    auto histogram = [&](int sc, std::size_t pl, std::size_t pc, std::vector<std::int64_t>& bins) {
        bins.assign(nbins, 0);
        const Code* a0 = codes[sc].lrv[0].row(pl);
        const Code* b0 = codes[sc].cmv[0].row(pc);
        if (endpoints == 1) {
            for (std::size_t i = 0; i < n; ++i) ++bins[bin_of(endpoint_masks(a0[i], b0[i], interim_count), interim_count)];
            return;
        }
        const Code* a1 = codes[sc].lrv[1].row(pl);
        const Code* b1 = codes[sc].cmv[1].row(pc);
        for (std::size_t i = 0; i < n; ++i) {
            const Masks m = combine_masks(endpoint_masks(a0[i], b0[i], interim_count),
                                          endpoint_masks(a1[i], b1[i], interim_count), combination);
            ++bins[bin_of(m, interim_count)];
        }
    };

    const auto rows = static_cast<std::int64_t>(axes.lambda_lrv.size());
    const auto ngc = axes.gamma_cmv.size(), ngl = axes.gamma_lrv.size(), nlc = axes.lambda_cmv.size();
    std::vector<Candidate> row_best(rows);
    ProgressReporter progress(s.progress, axes.total());
    parallel_for(rows, s.threads, [&](std::int64_t begin, std::int64_t end) {
        std::vector<std::int64_t> bins;
        for (std::int64_t r = begin; r < end; ++r) {
            Candidate best;
            std::int64_t index = r * axes.row_size();
            for (std::size_t ilc = 0; ilc < nlc; ++ilc) {
                for (std::size_t igl = 0; igl < ngl; ++igl) {
                    for (std::size_t igc = 0; igc < ngc; ++igc, ++index) {
                        const std::size_t pl = static_cast<std::size_t>(r) * ngl + igl;
                        const std::size_t pc = ilc * ngc + igc;
                        histogram(0, pl, pc, bins);
                        const auto oc_f = oc_from_bins(bins, looks, s.n_sims);
                        histogram(1, pl, pc, bins);
                        const auto oc_e = oc_from_bins(bins, looks, s.n_sims);
                        consider_point(best, index, metrics(oc_f, oc_e), s);
                    }
                }
            }
            row_best[r] = best;
            progress.add(axes.row_size());
        }
    });
    Candidate best;
    for (const auto& c : row_best) merge(best, c, s.objective);

    CalibrationResult result;
    result.feasible = best.index >= 0;
    result.design = axes.at(result.feasible ? best.index : best.infeasible_index);
    std::tie(result.oc_futile, result.oc_effective) =
        evaluate_point(result.design, shared, plan, combination);
    result.evaluation = Evaluation::MonteCarlo;
    result.points_evaluated = axes.total();
    result.n_sims = s.n_sims;
    if (s.fresh_seed_validation) {
        const std::uint64_t fresh = mix_seed(s.seed, kValidationStream);
        const SharedDatasets check = SharedDatasets::build(problem, s.n_sims, fresh, s.threads);
        result.validation = evaluate_point(result.design, check, plan, combination);
    }
    return result;
}

}  // namespace

void validate(const ConstraintSet& c) {
    auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
    require(in01(c.max_fgr) && in01(c.max_fngr) && in01(c.max_fcr), "constraints must lie in [0,1]");
}

std::vector<double> GridAxis::values() const {
    require(std::isfinite(lo) && std::isfinite(hi) && step > 0 && hi >= lo,
            "grid axis needs finite lo <= hi and step > 0");
    std::vector<double> out;
    const auto count = static_cast<std::int64_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::int64_t i = 0; i < count; ++i) {
        // Round to 12 decimals so 0.5 + 3 * 0.01 prints and compares as 0.53.
        out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
    return out;
}

std::size_t GridSpec::size() const {
    return lambda_lrv.values().size() * lambda_cmv.values().size() * gamma_lrv.values().size() *
           gamma_cmv.values().size();
}

std::string to_string(Objective o) { return o == Objective::Optimal ? "optimal" : "minN"; }

Objective objective_from_string(const std::string& s) {
    if (s == "optimal") return Objective::Optimal;
    if (s == "minN") return Objective::MinN;
    throw PreconditionError("unknown objective '" + s + "'");
}

std::string to_string(Evaluation e) {
    switch (e) {
        case Evaluation::Auto: return "auto";
        case Evaluation::Exact: return "exact";
        case Evaluation::MonteCarlo: return "monte_carlo";
    }
    return "?";
}

Evaluation evaluation_from_string(const std::string& s) {
    if (s == "auto") return Evaluation::Auto;
    if (s == "exact") return Evaluation::Exact;
    if (s == "monte_carlo") return Evaluation::MonteCarlo;
    throw PreconditionError("unknown evaluation '" + s + "'");
}

std::vector<DesignParams> build_grid(const GridSpec& g) {
    const Axes axes(g);
    require(axes.total() > 0, "grid axes must be nonempty");
    std::vector<DesignParams> out;
    out.reserve(static_cast<std::size_t>(axes.total()));
    for (double ll : axes.lambda_lrv)
        for (double lc : axes.lambda_cmv)
            for (double gl : axes.gamma_lrv)
                for (double gc : axes.gamma_cmv) out.push_back({ll, lc, gl, gc});
    return out;
}

DesignMetrics metrics(const OperatingCharacteristics& futile, const OperatingCharacteristics& eff) {
    DesignMetrics m;
    m.fgr = futile.go_rate + futile.graduate_rate;
    m.fngr = eff.nogo_rate;
    m.cgr = eff.go_rate + eff.graduate_rate;
    m.fcr = std::max(futile.consider_rate, eff.consider_rate);
    m.expected_n_futile = futile.avg_sample_size;
    return m;
}

double constraint_violation(const DesignMetrics& m, const ConstraintSet& c) {
    return std::max({0.0, m.fgr - c.max_fgr, m.fngr - c.max_fngr, m.fcr - c.max_fcr});
}

SharedDatasets SharedDatasets::build(const CalibrationProblem& problem, std::int64_t n_sims,
                                     std::uint64_t seed, int threads) {
    require(n_sims >= 1, "n_sims must be positive");
    SharedDatasets out;
    for (int sc = 0; sc < 2; ++sc) {
        const Scenario& scenario = sc == 0 ? problem.futile : problem.effective;
        const std::uint64_t scenario_seed = mix_seed(seed, sc == 0 ? kFutileStream : kEffectiveStream);
        auto& paths = sc == 0 ? out.futile : out.effective;
        paths.resize(static_cast<std::size_t>(n_sims));
        parallel_for(n_sims, threads, [&](std::int64_t begin, std::int64_t end) {
            PathEvaluator evaluator(problem.spec, problem.plan, problem.prior);
            for (std::int64_t i = begin; i < end; ++i) {
                const TrialData data = generate_trial_data(scenario, problem.spec, problem.plan, scenario_seed,
                                                           static_cast<std::uint64_t>(i));
                paths[i] = evaluator.evaluate(data);
            }
        });
    }
    return out;
}

std::pair<OperatingCharacteristics, OperatingCharacteristics> evaluate_point(
    const DesignParams& design, const SharedDatasets& shared, const TrialPlan& plan,
    Combination combination) {
    const std::span<const DesignParams> designs(&design, 1);
    auto replay = [&](const std::vector<TrialPath>& paths) {
        std::vector<TrialResult> results;
        results.reserve(paths.size());
        for (const auto& p : paths) results.push_back(decide_trial(p, designs, plan, combination));
        return summarize(results);
    };
    return {replay(shared.futile), replay(shared.effective)};
}

CalibrationResult calibrate(const CalibrationProblem& problem, const CalibrationSettings& settings) {
    validate(problem.spec);
    validate(problem.plan);
    validate(problem.prior);
    validate(settings.constraints);
    validate(problem.futile, problem.spec, problem.plan);
    validate(problem.effective, problem.spec, problem.plan);
    require(Axes(settings.grid).total() > 0, "grid axes must be nonempty");

    const bool exact_ok = exact_route_available(problem.spec, problem.plan);
    Evaluation route = settings.evaluation;
    if (route == Evaluation::Auto) route = exact_ok ? Evaluation::Exact : Evaluation::MonteCarlo;
    require(route != Evaluation::Exact || exact_ok,
            "exact evaluation is available for single-arm single binary endpoints only");

    CalibrationResult result = route == Evaluation::Exact ? calibrate_exact(problem, settings)
                                                          : calibrate_mc(problem, settings);
    result.objective = settings.objective;
    result.seed = settings.seed;
    result.metrics = metrics(result.oc_futile, result.oc_effective);
    result.max_violation = constraint_violation(result.metrics, settings.constraints);
    result.objective_value =
        settings.objective == Objective::Optimal ? result.metrics.cgr : result.metrics.expected_n_futile;
    return result;
}

}  // namespace bop2dc
