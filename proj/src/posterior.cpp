#include "bop2dc/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "bop2dc/rng.hpp"

namespace bop2dc {

namespace {

using namespace boost::math::policies;
using MathPolicy = policy<overflow_error<ignore_error>, underflow_error<ignore_error>>;

constexpr double kLn2 = 0.693147180559945309417232121458;

void require(bool cond, const char* what) {
    if (!cond) throw PreconditionError(what);
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

double beta_upper(const BetaDist& d, double t) {
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    return clamp01(boost::math::ibetac(d.a, d.b, t, MathPolicy{}));
}

double t_upper(const StudentTDist& d, double t) {
    const double z = (t - d.location) / d.scale;
    if (std::isnan(z)) throw PreconditionError("student-t tail: NaN argument");
    if (z == -std::numeric_limits<double>::infinity()) return 1.0;
    if (z == std::numeric_limits<double>::infinity()) return 0.0;
    if (z == 0.0) return 0.5;
    boost::math::students_t_distribution<double, MathPolicy> dist(d.df);
    return clamp01(boost::math::cdf(boost::math::complement(dist, z)));
}

double inv_gamma_upper(const InverseGammaDist& d, double t) {
    if (t <= 0.0) return 1.0;
    if (t == std::numeric_limits<double>::infinity()) return 0.0;
    const double x = d.rate / t;
    if (!std::isfinite(x)) return 1.0;
    return clamp01(boost::math::gamma_p(d.shape, x, MathPolicy{}));
}

double density(const PosteriorDist& dist, double x) {
    return std::visit(
        [x](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, BetaDist>) {
                if (x <= 0.0 || x >= 1.0) return 0.0;
                return boost::math::ibeta_derivative(d.a, d.b, x, MathPolicy{});
            } else if constexpr (std::is_same_v<T, StudentTDist>) {
                boost::math::students_t_distribution<double, MathPolicy> st(d.df);
                return boost::math::pdf(st, (x - d.location) / d.scale) / d.scale;
            } else {
                if (x <= 0.0) return 0.0;
                const double z = d.rate / x;
                return boost::math::gamma_p_derivative(d.shape, z, MathPolicy{}) * z / x;
            }
        },
        dist);
}

}  // namespace

std::string to_string(Family f) {
    switch (f) {
        case Family::Binary: return "binary";
        case Family::Continuous: return "continuous";
        case Family::TimeToEvent: return "tte";
        case Family::Categorical: return "categorical";
    }
    return "?";
}

Family family_from_string(const std::string& s) {
    if (s == "binary") return Family::Binary;
    if (s == "continuous") return Family::Continuous;
    if (s == "tte") return Family::TimeToEvent;
    if (s == "categorical") return Family::Categorical;
    throw PreconditionError("unknown endpoint family '" + s + "'");
}

void validate(const PriorSpec& prior) {
    std::visit(
        [](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, BinaryPrior> || std::is_same_v<T, TtePrior>) {
                require(p.a > 0 && p.b > 0, "prior hyperparameters must be positive");
            } else if constexpr (std::is_same_v<T, ContinuousPrior>) {
                require(p.n0 > 0 && p.a > 0 && p.b > 0, "prior hyperparameters must be positive");
                require(std::isfinite(p.theta0), "prior mean must be finite");
            } else {
                require(!p.alpha.empty(), "Dirichlet prior needs at least one category");
                for (double a : p.alpha) require(a > 0, "Dirichlet pseudo-counts must be positive");
            }
        },
        prior);
}

int CategoricalStats::n() const { return std::accumulate(counts.begin(), counts.end(), 0); }

void validate(const BinaryStats& s) {
    require(s.n >= 0 && s.y >= 0 && s.y <= s.n, "binary stats require 0 <= y <= n");
}

void validate(const ContinuousStats& s) {
    require(s.n >= 0, "continuous stats require n >= 0");
    require(s.sum_sq_dev >= 0 && std::isfinite(s.mean), "continuous stats malformed");
}

void validate(const TteStats& s) {
    require(s.n >= 0 && s.d >= 0 && s.d <= s.n, "tte stats require 0 <= d <= n");
    require(s.total_time >= 0, "tte stats require nonnegative total time");
}

void validate(const CategoricalStats& s) {
    for (int c : s.counts) require(c >= 0, "category counts must be nonnegative");
}

void validate(const EndpointSelector& sel) {
    bool any_one = false, any_zero = false;
    for (int b : sel.bits) {
        require(b == 0 || b == 1, "selector entries must be 0 or 1");
        any_one |= b == 1;
        any_zero |= b == 0;
    }
    require(any_one && any_zero, "selector needs at least one 1 and one 0");
}

BetaDist posterior_binary(const BinaryStats& stats, const BinaryPrior& prior) {
    validate(stats);
    validate(PriorSpec(prior));
    return {prior.a + stats.y, prior.b + (stats.n - stats.y)};
}

ContinuousPrior update(const ContinuousPrior& prior, const ContinuousStats& stats) {
    validate(stats);
    if (stats.n == 0) return prior;
    const double n = stats.n;
    const double dev = stats.mean - prior.theta0;
    ContinuousPrior post;
    post.theta0 = (n * stats.mean + prior.n0 * prior.theta0) / (n + prior.n0);
    post.n0 = n + prior.n0;
    post.a = prior.a + 0.5 * n;
    post.b = prior.b + 0.5 * stats.sum_sq_dev + dev * dev / (2.0 * (1.0 / n + 1.0 / prior.n0));
    return post;
}

StudentTDist posterior_continuous(const ContinuousStats& stats, const ContinuousPrior& prior) {
    require(stats.n >= 1, "continuous tail requires n >= 1");
    validate(PriorSpec(prior));
    const ContinuousPrior post = update(prior, stats);
    return {2.0 * post.a, post.theta0, std::sqrt(post.b / (post.a * post.n0))};
}

InverseGammaDist posterior_tte(const TteStats& stats, const TtePrior& prior) {
    validate(stats);
    validate(PriorSpec(prior));
    return {prior.a + stats.d, (prior.b + stats.total_time) * kLn2};
}

BetaDist posterior_linear(const CategoricalStats& stats, const CategoricalPrior& prior,
                          const EndpointSelector& sel) {
    validate(stats);
    validate(sel);
    validate(PriorSpec(prior));
    require(sel.bits.size() == prior.alpha.size() && stats.counts.size() == prior.alpha.size(),
            "selector, prior and counts must have equal length");
    double in = 0.0, out = 0.0;
    for (std::size_t k = 0; k < sel.bits.size(); ++k) {
        const double v = prior.alpha[k] + stats.counts[k];
        (sel.bits[k] ? in : out) += v;
    }
    return {in, out};
}

BinaryPrior update(const BinaryPrior& prior, const BinaryStats& stats) {
    const BetaDist d = posterior_binary(stats, prior);
    return {d.a, d.b};
}

TtePrior update(const TtePrior& prior, const TteStats& stats) {
    validate(stats);
    return {prior.a + stats.d, prior.b + stats.total_time};
}

CategoricalPrior update(const CategoricalPrior& prior, const CategoricalStats& stats) {
    validate(stats);
    require(stats.counts.size() == prior.alpha.size(), "counts and prior length differ");
    CategoricalPrior post = prior;
    for (std::size_t k = 0; k < post.alpha.size(); ++k) post.alpha[k] += stats.counts[k];
    return post;
}

double upper_tail(const PosteriorDist& dist, double t) {
    return std::visit(
        [t](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, BetaDist>) return beta_upper(d, t);
            else if constexpr (std::is_same_v<T, StudentTDist>) return t_upper(d, t);
            else return inv_gamma_upper(d, t);
        },
        dist);
}

double cdf(const PosteriorDist& dist, double t) { return 1.0 - upper_tail(dist, t); }

double quantile(const PosteriorDist& dist, double u) {
    require(u > 0.0 && u < 1.0, "quantile level must lie in (0,1)");
    return std::visit(
        [u](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, BetaDist>) {
                return boost::math::ibeta_inv(d.a, d.b, u, MathPolicy{});
            } else if constexpr (std::is_same_v<T, StudentTDist>) {
                boost::math::students_t_distribution<double, MathPolicy> st(d.df);
                return d.location + d.scale * boost::math::quantile(st, u);
            } else {
                const double g = boost::math::gamma_q_inv(d.shape, u, MathPolicy{});
                return g > 0.0 ? d.rate / g : std::numeric_limits<double>::infinity();
            }
        },
        dist);
}

Family family_of(const PosteriorDist& dist) {
    switch (dist.index()) {
        case 0: return Family::Binary;
        case 1: return Family::Continuous;
        default: return Family::TimeToEvent;
    }
}

double sample(const PosteriorDist& dist, Sampler& sampler) {
    return std::visit(
        [&sampler](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, BetaDist>) {
                return sampler.beta(d.a, d.b);
            } else if constexpr (std::is_same_v<T, StudentTDist>) {
                const double z = sampler.normal();
                const double chi2 = 2.0 * sampler.gamma(0.5 * d.df);
                return d.location + d.scale * z / std::sqrt(chi2 / d.df);
            } else {
                return d.rate / sampler.gamma(d.shape);
            }
        },
        dist);
}

double tail_prob_binary(const BinaryStats& stats, const BinaryPrior& prior, double t) {
    require(t >= 0.0 && t <= 1.0, "binary threshold must lie in [0,1]");
    return beta_upper(posterior_binary(stats, prior), t);
}

double tail_prob_continuous(const ContinuousStats& stats, const ContinuousPrior& prior, double t) {
    return t_upper(posterior_continuous(stats, prior), t);
}

double tail_prob_tte(const TteStats& stats, const TtePrior& prior, double t) {
    require(t > 0.0, "time-to-event threshold must be positive");
    return inv_gamma_upper(posterior_tte(stats, prior), t);
}

double tail_prob_linear(const CategoricalStats& stats, const CategoricalPrior& prior,
                        const EndpointSelector& sel, double t) {
    require(t >= 0.0 && t <= 1.0, "rate threshold must lie in [0,1]");
    return beta_upper(posterior_linear(stats, prior, sel), t);
}

double tail_prob_difference(const PosteriorDist& post_e, const PosteriorDist& post_c, double t,
                            std::int64_t draws, std::uint64_t seed) {
    require(post_e.index() == post_c.index(), "difference requires matching endpoint families");
    require(draws >= 10000, "difference probability needs at least 1e4 draws");
    Sampler se(seed, 0), sc(seed, 1);
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < draws; ++i) {
        const double xe = sample(post_e, se);
        const double xc = sample(post_c, sc);
        hits += (xe - xc > t) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(draws);
}

double tail_prob_difference_quadrature(const PosteriorDist& post_e, const PosteriorDist& post_c,
                                       double t) {
    require(post_e.index() == post_c.index(), "difference requires matching endpoint families");
    // P = integral of f_C(x) P(theta_E > x + t) dx over the central control
    // mass; truncation drops at most 2e-14.
    auto integrand = [&](double x) { return density(post_c, x) * upper_tail(post_e, x + t); };
    const double lo = quantile(post_c, 1e-14), hi = quantile(post_c, 1.0 - 1e-14);
    double err = 0.0;
    const auto* beta = std::get_if<BetaDist>(&post_c);
    if (beta && (beta->a < 1.0 || beta->b < 1.0)) {
        // unbounded density at an end point
        boost::math::quadrature::tanh_sinh<double> ts;
        return clamp01(ts.integrate(integrand, beta->a < 1.0 ? 0.0 : lo, beta->b < 1.0 ? 1.0 : hi, 1e-11, &err));
    }
    return clamp01(boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, lo, hi, 15, 1e-10, &err));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
    require(p > 0.0 && p < 1.0, "normal quantile level must lie in (0,1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

}  // namespace bop2dc
