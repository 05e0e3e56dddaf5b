#include "bop2dc/decision.hpp"

#include <algorithm>
#include <cmath>

namespace bop2dc {

namespace {

bool is_interim_only(Decision d) { return d == Decision::Continue || d == Decision::Graduate; }
bool is_final_only(Decision d) { return d == Decision::Go || d == Decision::Consider; }

void check_stage(std::span<const Decision> ds, Stage stage) {
    if (ds.size() < 2) throw PreconditionError("combination needs at least two endpoint decisions");
    for (Decision d : ds) {
        if ((stage == Stage::Interim && is_final_only(d)) ||
            (stage == Stage::Final && is_interim_only(d)))
            throw PreconditionError("combination input mixes interim and final decisions");
    }
}

}  // namespace

void validate(const DesignParams& d) {
    const bool finite = std::isfinite(d.lambda_lrv) && std::isfinite(d.lambda_cmv) &&
                        std::isfinite(d.gamma_lrv) && std::isfinite(d.gamma_cmv);
    if (!finite) throw PreconditionError("design parameters must be finite");
    if (!(d.lambda_lrv > 0 && d.lambda_lrv < 1 && d.lambda_cmv > 0 && d.lambda_cmv < 1))
        throw PreconditionError("lambda cutoffs must lie strictly inside (0,1)");
    if (d.gamma_lrv < 0 || d.gamma_cmv < 0)
        throw PreconditionError("gamma exponents must be nonnegative");
}

void validate(const TargetProfile& p) {
    const bool higher = p.direction == Direction::HigherIsBetter;
    const bool cmv_ok = higher ? p.cmv > p.lrv : p.cmv < p.lrv;
    const bool eff_ok = higher ? p.eff >= p.cmv : p.eff <= p.cmv;
    if (!cmv_ok) throw PreconditionError("cmv must lie strictly on the favorable side of lrv");
    if (!eff_ok) throw PreconditionError("eff must not lie on the unfavorable side of cmv");
}

std::string to_string(Decision d) {
    switch (d) {
        case Decision::Go: return "go";
        case Decision::Consider: return "consider";
        case Decision::NoGo: return "nogo";
        case Decision::Continue: return "continue";
        case Decision::Graduate: return "graduate";
    }
    return "?";
}

std::string to_string(Combination c) {
    switch (c) {
        case Combination::Single: return "single";
        case Combination::Multiple: return "multiple";
        case Combination::CoPrimary: return "coprimary";
    }
    return "?";
}

Combination combination_from_string(const std::string& s) {
    if (s == "single") return Combination::Single;
    if (s == "multiple") return Combination::Multiple;
    if (s == "coprimary") return Combination::CoPrimary;
    throw PreconditionError("unknown combination '" + s + "'");
}

CriterionProbs criterion_probs(const PosteriorDist& dist, const TargetProfile& profile) {
    return {oriented(upper_tail(dist, profile.lrv), profile.direction),
            oriented(upper_tail(dist, profile.cmv), profile.direction)};
}

Decision final_decision(double p_lrv, double p_cmv, const DesignParams& d) {
    if (p_lrv > d.lambda_lrv && p_cmv > d.lambda_cmv) return Decision::Go;
    if (p_lrv < d.lambda_lrv && p_cmv < d.lambda_cmv) return Decision::NoGo;
    return Decision::Consider;
}

std::pair<double, double> interim_cutoffs(const DesignParams& d, int n, int max_n) {
    if (n < 1 || n > max_n) throw PreconditionError("interim cutoffs need 1 <= n <= N");
    const double frac = static_cast<double>(n) / static_cast<double>(max_n);
    return {d.lambda_lrv * std::pow(frac, d.gamma_lrv), d.lambda_cmv * std::pow(frac, d.gamma_cmv)};
}

Decision interim_decision(double p_lrv, double p_cmv, const DesignParams& d, int n, int max_n) {
    const auto [c_lrv, c_cmv] = interim_cutoffs(d, n, max_n);
    return (p_lrv < c_lrv && p_cmv < c_cmv) ? Decision::NoGo : Decision::Continue;
}

double graduate_cutoff(double lambda, int n, int max_n) {
    if (n < 1 || n > max_n) throw PreconditionError("graduate cutoff needs 1 <= n <= N");
    if (!(lambda > 0 && lambda < 1)) throw PreconditionError("graduate cutoff needs 0 < lambda < 1");
    const double z = normal_quantile(0.5 * (1.0 + lambda));
    const double frac = static_cast<double>(n) / static_cast<double>(max_n);
    return 2.0 * normal_cdf(z / std::sqrt(frac)) - 1.0;
}

Decision interim_decision_rct(double p_lrv, double p_cmv, const DesignParams& d, int n, int max_n,
                              bool allow_superiority) {
    if (allow_superiority && p_lrv > graduate_cutoff(d.lambda_lrv, n, max_n) &&
        p_cmv > graduate_cutoff(d.lambda_cmv, n, max_n))
        return Decision::Graduate;
    return interim_decision(p_lrv, p_cmv, d, n, max_n);
}

Decision interim_decision_three_way(double p_lrv, double p_cmv, const DesignParams& d, int n,
                                    int max_n) {
    if (p_lrv > d.lambda_lrv && p_cmv > d.lambda_cmv) return Decision::Graduate;
    return interim_decision(p_lrv, p_cmv, d, n, max_n);
}

Decision combine_multiple(std::span<const Decision> ds, Stage stage) {
    check_stage(ds, stage);
    const auto is = [&](Decision x) { return [x](Decision d) { return d == x; }; };
    const bool all_nogo = std::all_of(ds.begin(), ds.end(), is(Decision::NoGo));
    if (stage == Stage::Interim) {
        if (std::any_of(ds.begin(), ds.end(), is(Decision::Graduate))) return Decision::Graduate;
        return all_nogo ? Decision::NoGo : Decision::Continue;
    }
    if (std::any_of(ds.begin(), ds.end(), is(Decision::Go))) return Decision::Go;
    return all_nogo ? Decision::NoGo : Decision::Consider;
}

Decision combine_coprimary(std::span<const Decision> ds, Stage stage) {
    check_stage(ds, stage);
    const auto is = [&](Decision x) { return [x](Decision d) { return d == x; }; };
    const bool any_nogo = std::any_of(ds.begin(), ds.end(), is(Decision::NoGo));
    if (stage == Stage::Interim) {
        if (std::all_of(ds.begin(), ds.end(), is(Decision::Graduate))) return Decision::Graduate;
        return any_nogo ? Decision::NoGo : Decision::Continue;
    }
    if (std::all_of(ds.begin(), ds.end(), is(Decision::Go))) return Decision::Go;
    return any_nogo ? Decision::NoGo : Decision::Consider;
}

Decision combine(Combination c, std::span<const Decision> ds, Stage stage) {
    switch (c) {
        case Combination::Multiple: return combine_multiple(ds, stage);
        case Combination::CoPrimary: return combine_coprimary(ds, stage);
        case Combination::Single:
            if (ds.size() != 1) throw PreconditionError("single-endpoint design needs one decision");
            return ds[0];
    }
    return ds[0];
}

}  // namespace bop2dc
