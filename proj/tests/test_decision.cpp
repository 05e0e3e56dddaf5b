#include "doctest.h"

#include <array>
#include <cmath>
#include <vector>

#include "bop2dc/decision.hpp"
#include "bop2dc/posterior.hpp"
#include "reference_values.hpp"

using namespace bop2dc;

namespace {

const TargetProfile kProfile{0.2, 0.3, 0.2, 0.3, Direction::HigherIsBetter};

std::vector<DesignParams> small_grid() {
    std::vector<DesignParams> out;
    for (double ll : {0.6, 0.8, 0.93, 0.99})
        for (double lc : {0.05, 0.14, 0.3, 0.5})
            for (double gl : {0.0, 0.5, 1.0})
                for (double gc : {0.0, 0.8}) out.push_back({ll, lc, gl, gc});
    return out;
}

}  // namespace

TEST_CASE("final rule regions") {
    const DesignParams d{0.9, 0.2, 0, 0};
    CHECK(final_decision(0.95, 0.5, d) == Decision::Go);
    CHECK(final_decision(0.5, 0.1, d) == Decision::NoGo);
    CHECK(final_decision(0.95, 0.1, d) == Decision::Consider);
    CHECK(final_decision(0.5, 0.5, d) == Decision::Consider);
    // boundaries are neither strict inequality
    CHECK(final_decision(0.9, 0.5, d) == Decision::Consider);
    CHECK(final_decision(0.9, 0.2, d) == Decision::Consider);
}

TEST_CASE("interim no-go at the last look equals the final no-go") {
    const int N = 40;
    for (const auto& d : small_grid()) {
        for (int y = 0; y <= N; ++y) {
            const auto p = criterion_probs(posterior_binary({N, y}, {}), kProfile);
            const bool interim_stop = interim_decision(p.p_lrv, p.p_cmv, d, N, N) == Decision::NoGo;
            const bool final_stop = final_decision(p.p_lrv, p.p_cmv, d) == Decision::NoGo;
            CHECK(interim_stop == final_stop);
        }
    }
}

TEST_CASE("interim cutoffs grow with information") {
    for (const auto& d : small_grid()) {
        double pl = -1, pc = -1;
        for (int n = 1; n <= 40; ++n) {
            const auto [cl, cc] = interim_cutoffs(d, n, 40);
            CHECK(cl >= pl);
            CHECK(cc >= pc);
            CHECK(cl <= d.lambda_lrv + 1e-15);
            CHECK(cc <= d.lambda_cmv + 1e-15);
            pl = cl;
            pc = cc;
        }
        const auto [cl, cc] = interim_cutoffs(d, 40, 40);
        CHECK(cl == doctest::Approx(d.lambda_lrv).epsilon(1e-15));
        CHECK(cc == doctest::Approx(d.lambda_cmv).epsilon(1e-15));
    }
    // gamma = 0 keeps the final threshold throughout
    const auto [cl, cc] = interim_cutoffs({0.8, 0.2, 0.0, 0.0}, 5, 40);
    CHECK(cl == 0.8);
    CHECK(cc == 0.2);
    const auto [hl, hc] = interim_cutoffs({0.8, 0.2, 1.0, 0.5}, 10, 40);
    CHECK(hl == doctest::Approx(0.2));
    CHECK(hc == doctest::Approx(0.1));
}

TEST_CASE("no-go region shrinks as thresholds tighten") {
    // A higher lambda makes no-go easier, never harder.
    for (int y = 0; y <= 40; ++y) {
        const auto p = criterion_probs(posterior_binary({40, y}, {}), kProfile);
        for (double lc : {0.1, 0.2, 0.3}) {
            bool prev = false;
            for (double ll : {0.5, 0.7, 0.9, 0.99}) {
                const bool stop = final_decision(p.p_lrv, p.p_cmv, {ll, lc, 0, 0}) == Decision::NoGo;
                CHECK((!prev || stop));
                prev = stop;
            }
        }
    }
    // More responders never turn a go into something worse.
    for (const auto& d : small_grid()) {
        int rank_prev = -1;
        for (int y = 0; y <= 40; ++y) {
            const auto p = criterion_probs(posterior_binary({40, y}, {}), kProfile);
            const auto dec = final_decision(p.p_lrv, p.p_cmv, d);
            const int rank = dec == Decision::NoGo ? 0 : dec == Decision::Consider ? 1 : 2;
            CHECK(rank >= rank_prev);
            rank_prev = rank;
        }
    }
}

TEST_CASE("lower-is-better orientation") {
    const TargetProfile tox{0.2, 0.15, 0.2, 0.15, Direction::LowerIsBetter};
    const auto post = posterior_binary({30, 2}, {});
    const auto p = criterion_probs(post, tox);
    CHECK(p.p_lrv == doctest::Approx(cdf(post, 0.2)));
    CHECK(p.p_cmv == doctest::Approx(cdf(post, 0.15)));
    CHECK(p.p_lrv > p.p_cmv);
}

TEST_CASE("graduate boundary") {
    for (double lambda : {0.5, 0.8, 0.9, 0.95, 0.99})
        for (int N : {20, 40, 75}) CHECK(std::abs(graduate_cutoff(lambda, N, N) - lambda) < 1e-12);
    for (const auto& c : ref::kGraduate)
        CHECK(std::abs(graduate_cutoff(c.lambda, c.n, c.max_n) - c.cutoff) < 1e-12);
    // decreasing toward lambda as information accrues
    double prev = 2;
    for (int n = 1; n <= 40; ++n) {
        const double g = graduate_cutoff(0.9, n, 40);
        CHECK(g < prev);
        CHECK(g >= 0.9 - 1e-12);
        prev = g;
    }
    CHECK_THROWS_AS(graduate_cutoff(0.9, 0, 40), PreconditionError);
    CHECK_THROWS_AS(graduate_cutoff(1.0, 10, 40), PreconditionError);
}

TEST_CASE("two-arm interim with and without superiority") {
    const DesignParams d{0.8, 0.2, 0, 0};
    CHECK(interim_decision_rct(0.9999, 0.999, d, 20, 40, true) == Decision::Graduate);
    CHECK(interim_decision_rct(0.9999, 0.999, d, 20, 40, false) == Decision::Continue);
    CHECK(interim_decision_rct(0.1, 0.05, d, 20, 40, true) == Decision::NoGo);
    // between the final go cutoff and the graduate boundary
    CHECK(interim_decision_rct(0.85, 0.5, d, 10, 40, true) == Decision::Continue);
}

TEST_CASE("three-way interim") {
    const DesignParams d{0.8, 0.2, 0.5, 0.5};
    CHECK(interim_decision_three_way(0.9, 0.3, d, 10, 40) == Decision::Graduate);
    CHECK(interim_decision_three_way(0.3, 0.05, d, 10, 40) == Decision::NoGo);
    CHECK(interim_decision_three_way(0.5, 0.3, d, 10, 40) == Decision::Continue);
}

TEST_CASE("combination truth tables") {
    const std::array<Decision, 3> final_values{Decision::Go, Decision::Consider, Decision::NoGo};
    const std::array<Decision, 3> interim_values{Decision::Graduate, Decision::Continue, Decision::NoGo};
    auto rank = [](Decision d) {
        switch (d) {
            case Decision::Go:
            case Decision::Graduate: return 2;
            case Decision::Consider:
            case Decision::Continue: return 1;
            default: return 0;
        }
    };
    for (int stage = 0; stage < 2; ++stage) {
        const auto& values = stage == 0 ? final_values : interim_values;
        const Stage st = stage == 0 ? Stage::Final : Stage::Interim;
        for (Decision a : values)
            for (Decision b : values) {
                const std::array<Decision, 2> pair{a, b};
                // multiple is the best of the two, coprimary the worst
                const int best = std::max(rank(a), rank(b)), worst = std::min(rank(a), rank(b));
                CHECK(rank(combine_multiple(pair, st)) == best);
                CHECK(rank(combine_coprimary(pair, st)) == worst);
                CHECK(combine(Combination::Multiple, pair, st) == combine_multiple(pair, st));
            }
    }
    const std::array<Decision, 2> mixed{Decision::Go, Decision::Continue};
    CHECK_THROWS_AS(combine_multiple(mixed, Stage::Final), PreconditionError);
    const std::array<Decision, 1> one{Decision::Go};
    CHECK(combine(Combination::Single, one, Stage::Final) == Decision::Go);
    CHECK_THROWS_AS(combine_coprimary(one, Stage::Final), PreconditionError);
}

TEST_CASE("parameter validation") {
    CHECK_NOTHROW(validate(DesignParams{0.9, 0.2, 0, 1}));
    CHECK_THROWS_AS(validate(DesignParams{1.0, 0.2, 0, 0}), PreconditionError);
    CHECK_THROWS_AS(validate(DesignParams{0.9, 0.0, 0, 0}), PreconditionError);
    CHECK_THROWS_AS(validate(DesignParams{0.9, 0.2, -0.1, 0}), PreconditionError);
    CHECK_THROWS_AS(validate(DesignParams{0.9, std::nan(""), 0, 0}), PreconditionError);
    CHECK_THROWS_AS(validate(TargetProfile{0.3, 0.2, 0.3, 0.2, Direction::HigherIsBetter}), PreconditionError);
    CHECK_NOTHROW(validate(TargetProfile{0.3, 0.2, 0.3, 0.2, Direction::LowerIsBetter}));
    CHECK(combination_from_string("coprimary") == Combination::CoPrimary);
    CHECK(to_string(Decision::Graduate) == "graduate");
}
