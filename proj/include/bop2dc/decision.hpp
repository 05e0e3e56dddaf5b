#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include "bop2dc/posterior.hpp"

namespace bop2dc {

// The four calibrated thresholds for one monitored endpoint.
struct DesignParams {
    double lambda_lrv = 0.9;
    double lambda_cmv = 0.2;
    double gamma_lrv = 0.0;
    double gamma_cmv = 0.0;

    bool operator==(const DesignParams&) const = default;
};

void validate(const DesignParams& d);

enum class Direction { HigherIsBetter, LowerIsBetter };

// Reference values for one endpoint, in endpoint units. For two-arm trials
// they refer to the difference theta_E - theta_C.
struct TargetProfile {
    double lrv = 0.0;
    double cmv = 0.0;
    double futile = 0.0;
    double eff = 0.0;
    Direction direction = Direction::HigherIsBetter;
};

void validate(const TargetProfile& p);

enum class Decision : std::uint8_t { Go, Consider, NoGo, Continue, Graduate };
enum class Stage { Interim, Final };
enum class Combination { Single, Multiple, CoPrimary };

std::string to_string(Decision d);
std::string to_string(Combination c);
Combination combination_from_string(const std::string& s);

// Probabilities of the two criteria in the favorable direction:
// P(theta > lrv), P(theta > cmv) or, for lower-is-better endpoints,
// P(theta < lrv), P(theta < cmv).
struct CriterionProbs {
    double p_lrv = 0.0;
    double p_cmv = 0.0;
};

CriterionProbs criterion_probs(const PosteriorDist& dist, const TargetProfile& profile);

// Orients an upper-tail probability P(theta > t) for the endpoint direction.
inline double oriented(double upper_tail_prob, Direction dir) {
    return dir == Direction::HigherIsBetter ? upper_tail_prob : 1.0 - upper_tail_prob;
}

Decision final_decision(double p_lrv, double p_cmv, const DesignParams& d);

std::pair<double, double> interim_cutoffs(const DesignParams& d, int n, int max_n);

Decision interim_decision(double p_lrv, double p_cmv, const DesignParams& d, int n, int max_n);

// Superiority boundary of O'Brien-Fleming shape: 2 Phi(z_{(1+lambda)/2} / sqrt(n/N)) - 1.
double graduate_cutoff(double lambda, int n, int max_n);

Decision interim_decision_rct(double p_lrv, double p_cmv, const DesignParams& d, int n, int max_n,
                              bool allow_superiority);

// Interim variant with three outcomes: the final go rule (at the final
// thresholds) graduates, the interim no-go rule stops, anything else continues.
Decision interim_decision_three_way(double p_lrv, double p_cmv, const DesignParams& d, int n,
                                    int max_n);

// At least one endpoint must succeed.
Decision combine_multiple(std::span<const Decision> per_endpoint, Stage stage);
// Every endpoint must succeed.
Decision combine_coprimary(std::span<const Decision> per_endpoint, Stage stage);
Decision combine(Combination c, std::span<const Decision> per_endpoint, Stage stage);

}  // namespace bop2dc
