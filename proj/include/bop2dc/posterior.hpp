#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace bop2dc {

// Raised when an operation is called outside its documented domain.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Family { Binary, Continuous, TimeToEvent, Categorical };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Priors. All hyperparameters must be strictly positive (theta0 excepted).

struct BinaryPrior {
    double a = 0.1;
    double b = 0.1;
};

struct ContinuousPrior {
    double theta0 = 0.0;  // prior mean, endpoint units
    double n0 = 1e-3;     // prior effective sample size
    double a = 1e-6;      // inverse-gamma shape
    double b = 1e-6;      // inverse-gamma rate
};

// Inverse-gamma prior on the exponential mean (median / ln 2).
struct TtePrior {
    double a = 1e-6;
    double b = 1e-6;
};

struct CategoricalPrior {
    std::vector<double> alpha;  // Dirichlet pseudo-counts, one per joint category

    static CategoricalPrior vague(std::size_t k) {
        return {std::vector<double>(k, 1.0 / static_cast<double>(k))};
    }
};

using PriorSpec = std::variant<BinaryPrior, ContinuousPrior, TtePrior, CategoricalPrior>;

void validate(const PriorSpec& prior);

// ---------------------------------------------------------------------------
// Sufficient statistics.

struct BinaryStats {
    int n = 0;
    int y = 0;
};

struct ContinuousStats {
    int n = 0;
    double mean = 0.0;
    double sum_sq_dev = 0.0;  // sum of (Y_i - mean)^2
};

// d counts observed events (not censored); total_time is the summed observed
// follow-up in months.
struct TteStats {
    int n = 0;
    int d = 0;
    double total_time = 0.0;
};

struct CategoricalStats {
    std::vector<int> counts;

    int n() const;
};

void validate(const BinaryStats& s);
void validate(const ContinuousStats& s);
void validate(const TteStats& s);
void validate(const CategoricalStats& s);

// 0/1 vector over joint categories defining theta_j = b . p.
struct EndpointSelector {
    std::vector<int> bits;
};

void validate(const EndpointSelector& sel);

// ---------------------------------------------------------------------------
// Posterior marginals for the scalar parameter of interest.

struct BetaDist {
    double a;
    double b;
};

struct StudentTDist {
    double df;
    double location;
    double scale;
};

struct InverseGammaDist {
    double shape;
    double rate;
};

using PosteriorDist = std::variant<BetaDist, StudentTDist, InverseGammaDist>;

BetaDist posterior_binary(const BinaryStats& stats, const BinaryPrior& prior);
StudentTDist posterior_continuous(const ContinuousStats& stats, const ContinuousPrior& prior);
InverseGammaDist posterior_tte(const TteStats& stats, const TtePrior& prior);
BetaDist posterior_linear(const CategoricalStats& stats, const CategoricalPrior& prior,
                          const EndpointSelector& sel);

// Conjugate updates returning the posterior in prior form, so a batch update
// followed by another batch can be checked against a single combined update.
BinaryPrior update(const BinaryPrior& prior, const BinaryStats& stats);
ContinuousPrior update(const ContinuousPrior& prior, const ContinuousStats& stats);
TtePrior update(const TtePrior& prior, const TteStats& stats);
CategoricalPrior update(const CategoricalPrior& prior, const CategoricalStats& stats);

// P(theta > t) and P(theta <= t) for the posterior marginals.
double upper_tail(const PosteriorDist& dist, double t);
double cdf(const PosteriorDist& dist, double t);
double quantile(const PosteriorDist& dist, double u);
Family family_of(const PosteriorDist& dist);

class Sampler;
double sample(const PosteriorDist& dist, Sampler& sampler);

double tail_prob_binary(const BinaryStats& stats, const BinaryPrior& prior, double t);
double tail_prob_continuous(const ContinuousStats& stats, const ContinuousPrior& prior, double t);
double tail_prob_tte(const TteStats& stats, const TtePrior& prior, double t);
double tail_prob_linear(const CategoricalStats& stats, const CategoricalPrior& prior,
                        const EndpointSelector& sel, double t);

inline constexpr std::int64_t kDefaultDifferenceDraws = 100000;

// Monte Carlo estimate of P(theta_E - theta_C > t) from `draws` paired
// independent draws. Both marginals must share a family.
double tail_prob_difference(const PosteriorDist& post_e, const PosteriorDist& post_c, double t,
                            std::int64_t draws, std::uint64_t seed);

// Same probability by one-dimensional quadrature over the control arm's
// density: integral of f_C(x) P(theta_E > x + t) dx.
double tail_prob_difference_quadrature(const PosteriorDist& post_e, const PosteriorDist& post_c,
                                       double t);

// Standard normal helpers.
double normal_cdf(double z);
double normal_quantile(double p);

}  // namespace bop2dc
