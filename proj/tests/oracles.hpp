#pragma once

// Independent reference computations for tests. Nothing here calls the
// library's posterior code; sampling uses <random> rather than the in-repo
// generator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

inline double gamma_draw(std::mt19937_64& g, double shape, double rate) {
    std::gamma_distribution<double> d(shape, 1.0 / rate);
    return d(g);
}

inline double beta_draw(std::mt19937_64& g, double a, double b) {
    const double x = gamma_draw(g, a, 1.0), y = gamma_draw(g, b, 1.0);
    return x / (x + y);
}

// P(theta > t) for theta ~ Beta(a, b) by sampling.
inline double beta_tail_mc(double a, double b, double t, int draws, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    int hit = 0;
    for (int i = 0; i < draws; ++i) hit += beta_draw(g, a, b) > t;
    return static_cast<double>(hit) / draws;
}

// Normal-inverse-gamma posterior sampled hierarchically: sigma^2 from its
// inverse-gamma posterior, then theta | sigma^2 normal. Posterior
// hyperparameters are written out here from the conjugate update.
inline double continuous_tail_mc(int n, double mean, double ss, double t, double theta0, double n0, double a,
                                 double b, int draws, std::uint64_t seed) {
    const double an = a + n / 2.0;
    const double bn = b + ss / 2.0 + (mean - theta0) * (mean - theta0) / (2.0 * (1.0 / n + 1.0 / n0));
    const double mun = (n * mean + n0 * theta0) / (n + n0);
    std::mt19937_64 g(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    int hit = 0;
    for (int i = 0; i < draws; ++i) {
        const double s2 = 1.0 / gamma_draw(g, an, bn);
        const double theta = mun + std::sqrt(s2 / (n + n0)) * z(g);
        hit += theta > t;
    }
    return static_cast<double>(hit) / draws;
}

// Median survival: exponential mean ~ IG(a + d, b + total), median = mean ln 2.
inline double tte_tail_mc(int d, double total, double t, double a, double b, int draws, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    int hit = 0;
    for (int i = 0; i < draws; ++i) {
        const double mean = 1.0 / gamma_draw(g, a + d, b + total);
        hit += mean * std::log(2.0) > t;
    }
    return static_cast<double>(hit) / draws;
}

// P(b . p > t) for p ~ Dirichlet(alpha + counts).
inline double dirichlet_tail_mc(const std::vector<double>& alpha, const std::vector<int>& counts,
                                const std::vector<int>& bits, double t, int draws, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    int hit = 0;
    std::vector<double> x(alpha.size());
    for (int i = 0; i < draws; ++i) {
        double total = 0, sel = 0;
        for (std::size_t k = 0; k < alpha.size(); ++k) {
            x[k] = gamma_draw(g, alpha[k] + counts[k], 1.0);
            total += x[k];
            if (bits[k]) sel += x[k];
        }
        hit += sel / total > t;
    }
    return static_cast<double>(hit) / draws;
}

inline double log_beta_pdf(double x, double a, double b) {
    return (a - 1) * std::log(x) + (b - 1) * std::log1p(-x) + std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
}

// P(theta_E - theta_C > t) for independent Beta posteriors on an m x m
// midpoint grid over the unit square.
inline double difference_tail_grid(double ae, double be, double ac, double bc, double t, int m = 2000) {
    std::vector<double> fe(m), fc(m), x(m);
    const double h = 1.0 / m;
    for (int i = 0; i < m; ++i) {
        x[i] = (i + 0.5) * h;
        fe[i] = std::exp(log_beta_pdf(x[i], ae, be)) * h;
        fc[i] = std::exp(log_beta_pdf(x[i], ac, bc)) * h;
    }
    const double se = std::accumulate(fe.begin(), fe.end(), 0.0), sc = std::accumulate(fc.begin(), fc.end(), 0.0);
    // Suffix sums of fe give the mass with theta_E above a grid point.
    std::vector<double> suffix(m + 1, 0.0);
    for (int i = m - 1; i >= 0; --i) suffix[i] = suffix[i + 1] + fe[i];
    double p = 0;
    for (int j = 0; j < m; ++j) {
        const double cut = x[j] + t;
        // first index with x > cut
        const auto k = static_cast<int>(std::upper_bound(x.begin(), x.end(), cut) - x.begin());
        p += fc[j] * suffix[std::min(k, m)];
    }
    return p / (se * sc);
}

// Binomial probability mass by direct products, used to check totals.
inline double binom_pmf(int n, int k, double p) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                    (n - k) * std::log1p(-p));
}

}  // namespace oracle
