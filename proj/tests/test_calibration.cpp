#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "bop2dc/calibration.hpp"
#include "bop2dc/rng.hpp"

using namespace bop2dc;

namespace {

CalibrationProblem binary_problem() {
    CalibrationProblem p;
    p.spec.family = Family::Binary;
    p.spec.endpoints.push_back({"orr", {}, {0.2, 0.3, 0.2, 0.3, Direction::HigherIsBetter}});
    p.plan.max_n = 40;
    p.plan.interim_looks = {10, 20, 30};
    p.prior = BinaryPrior{};
    p.futile = {"futile", {0.2, 1, {}}, std::nullopt};
    p.effective = {"effective", {0.4, 1, {}}, std::nullopt};
    return p;
}

GridSpec small_grid() {
    GridSpec g;
    g.lambda_lrv = {0.8, 0.96, 0.04};
    g.lambda_cmv = {0.05, 0.25, 0.05};
    g.gamma_lrv = {0.0, 1.0, 0.5};
    g.gamma_cmv = {0.0, 1.0, 0.5};
    return g;
}

struct Best {
    std::int64_t index = -1;
    double value = 0;
};

// Straight scan: first feasible point with the strictly best objective.
template <class Eval>
Best brute_force(const std::vector<DesignParams>& grid, const CalibrationSettings& s, Eval eval) {
    Best best;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto [f, e] = eval(grid[i]);
        const DesignMetrics m = metrics(f, e);
        if (m.fgr > s.constraints.max_fgr || m.fngr > s.constraints.max_fngr || m.fcr > s.constraints.max_fcr)
            continue;
        const double v = s.objective == Objective::Optimal ? m.cgr : m.expected_n_futile;
        const bool improves = s.objective == Objective::Optimal ? v > best.value : v < best.value;
        if (best.index < 0 || improves) best = {static_cast<std::int64_t>(i), v};
    }
    return best;
}

}  // namespace

TEST_CASE("grid axes") {
    GridSpec g;
    CHECK(g.size() == 302500u);
    const auto v = g.lambda_lrv.values();
    CHECK(v.size() == 50u);
    CHECK(v.front() == 0.5);
    CHECK(v[3] == 0.53);
    CHECK(v.back() == 0.99);
    const auto grid = build_grid(small_grid());
    CHECK(grid.size() == small_grid().size());
    CHECK(grid[1] == DesignParams{0.8, 0.05, 0.0, 0.5});
    CHECK(grid.back() == DesignParams{0.96, 0.25, 1.0, 1.0});
    CHECK_THROWS_AS(GridAxis({0.5, 0.4, 0.1}).values(), PreconditionError);
}

TEST_CASE("metrics count graduation as go") {
    OperatingCharacteristics f, e;
    f.go_rate = 0.03;
    f.graduate_rate = 0.01;
    f.consider_rate = 0.12;
    f.avg_sample_size = 27;
    e.go_rate = 0.6;
    e.graduate_rate = 0.2;
    e.nogo_rate = 0.05;
    e.consider_rate = 0.15;
    const auto m = metrics(f, e);
    CHECK(m.fgr == doctest::Approx(0.04));
    CHECK(m.cgr == doctest::Approx(0.8));
    CHECK(m.fngr == doctest::Approx(0.05));
    CHECK(m.fcr == doctest::Approx(0.15));
    CHECK(m.expected_n_futile == 27);
    CHECK(constraint_violation(m, {0.05, 0.1, 0.2}) == 0.0);
    CHECK(constraint_violation(m, {0.01, 0.1, 0.1}) == doctest::Approx(0.05));
}

TEST_CASE("exact search matches a brute-force scan") {
    const auto problem = binary_problem();
    const auto grid = build_grid(small_grid());
    for (Objective obj : {Objective::Optimal, Objective::MinN}) {
        CalibrationSettings s;
        s.objective = obj;
        s.grid = small_grid();
        s.threads = 2;
        const auto target = problem.spec.endpoints[0].target;
        const Best want = brute_force(grid, s, [&](const DesignParams& d) {
            return std::pair{exact_oc_binary_single_arm(problem.futile, d, problem.plan, {}, target),
                             exact_oc_binary_single_arm(problem.effective, d, problem.plan, {}, target)};
        });
        const auto got = calibrate(problem, s);
        REQUIRE(want.index >= 0);
        CHECK(got.feasible);
        CHECK(got.evaluation == Evaluation::Exact);
        CHECK(got.design == grid[want.index]);
        CHECK(got.objective_value == doctest::Approx(want.value).epsilon(1e-12));
        CHECK(got.points_evaluated == static_cast<std::int64_t>(grid.size()));
    }
}

TEST_CASE("minN is never larger than the optimal design's sample size") {
    const auto problem = binary_problem();
    CalibrationSettings s;
    s.grid = small_grid();
    const auto opt = calibrate(problem, s);
    s.objective = Objective::MinN;
    const auto mn = calibrate(problem, s);
    CHECK(mn.metrics.expected_n_futile <= opt.metrics.expected_n_futile + 1e-12);
    CHECK(mn.metrics.cgr <= opt.metrics.cgr + 1e-12);
}

TEST_CASE("Monte Carlo search matches a brute-force scan") {
    CalibrationProblem p;
    p.spec.family = Family::Categorical;
    p.spec.categories = 4;
    p.spec.combination = Combination::CoPrimary;
    p.spec.endpoints.push_back({"eff", {{1, 1, 0, 0}}, {0.3, 0.4, 0.3, 0.4, Direction::HigherIsBetter}});
    p.spec.endpoints.push_back({"tox", {{1, 0, 1, 0}}, {0.3, 0.2, 0.3, 0.2, Direction::LowerIsBetter}});
    p.plan.max_n = 30;
    p.plan.interim_looks = {15};
    p.plan.interim_go_graduates = true;
    p.prior = CategoricalPrior::vague(4);
    p.futile = {"futile", {0, 1, joint_from_marginals(0.3, 0.3)}, std::nullopt};
    p.effective = {"effective", {0, 1, joint_from_marginals(0.5, 0.1)}, std::nullopt};

    CalibrationSettings s;
    s.grid = small_grid();
    s.n_sims = 400;
    s.seed = 31;
    s.threads = 1;
    s.fresh_seed_validation = true;
    s.constraints = {0.1, 0.3, 0.4};
    const auto shared = SharedDatasets::build(p, s.n_sims, s.seed, 1);
    const auto grid = build_grid(s.grid);
    const Best want = brute_force(grid, s, [&](const DesignParams& d) {
        return evaluate_point(d, shared, p.plan, p.spec.combination);
    });
    const auto got = calibrate(p, s);
    REQUIRE(want.index >= 0);
    CHECK(got.evaluation == Evaluation::MonteCarlo);
    CHECK(got.design == grid[want.index]);
    CHECK(got.objective_value == doctest::Approx(want.value).epsilon(1e-12));
    REQUIRE(got.validation.has_value());
    CHECK(got.validation->first.n_sims == 400);

    // The shared paths are the same trials a plain simulation would draw.
    const std::array<DesignParams, 1> ds{got.design};
    const auto direct = estimate_oc(p.futile, ds, p.spec, p.plan, p.prior, {400, mix_seed(31, 1), 1});
    CHECK(direct.go_rate == got.oc_futile.go_rate);
    CHECK(direct.graduate_rate == got.oc_futile.graduate_rate);
    CHECK(direct.avg_sample_size == got.oc_futile.avg_sample_size);
}

TEST_CASE("two-arm superiority search matches a brute-force scan") {
    CalibrationProblem p;
    p.spec.family = Family::Binary;
    p.spec.endpoints.push_back({"orr", {}, {0.0, 0.15, 0.0, 0.15, Direction::HigherIsBetter}});
    p.plan.max_n = 60;
    p.plan.interim_looks = {20, 40};
    p.plan.arms = 2;
    p.plan.allow_superiority = true;
    p.prior = BinaryPrior{};
    p.futile = {"futile", {0.2, 1, {}}, ArmTruth{0.2, 1, {}}};
    p.effective = {"effective", {0.5, 1, {}}, ArmTruth{0.2, 1, {}}};
    CalibrationSettings s;
    s.grid = small_grid();
    s.n_sims = 300;
    s.seed = 5;
    s.threads = 1;
    s.fresh_seed_validation = false;
    s.constraints = {0.1, 0.3, 0.5};
    const auto shared = SharedDatasets::build(p, s.n_sims, s.seed, 1);
    const auto grid = build_grid(s.grid);
    const Best want = brute_force(grid, s, [&](const DesignParams& d) {
        return evaluate_point(d, shared, p.plan, p.spec.combination);
    });
    const auto got = calibrate(p, s);
    REQUIRE(want.index >= 0);
    CHECK(got.design == grid[want.index]);
    CHECK_FALSE(got.validation.has_value());
}

TEST_CASE("ties keep the earliest grid point") {
    auto problem = binary_problem();
    problem.plan.interim_looks.clear();  // gamma has no effect without interim looks
    CalibrationSettings s;
    s.grid = small_grid();
    const auto got = calibrate(problem, s);
    CHECK(got.design.gamma_lrv == 0.0);
    CHECK(got.design.gamma_cmv == 0.0);
}

TEST_CASE("infeasible constraints report the least violating design") {
    const auto problem = binary_problem();
    CalibrationSettings s;
    s.grid = small_grid();
    s.constraints = {0.0, 0.0, 0.0};
    const auto got = calibrate(problem, s);
    CHECK_FALSE(got.feasible);
    CHECK(got.max_violation > 0);
    const auto grid = build_grid(s.grid);
    const auto target = problem.spec.endpoints[0].target;
    double least = std::numeric_limits<double>::infinity();
    for (const auto& d : grid) {
        const auto m = metrics(exact_oc_binary_single_arm(problem.futile, d, problem.plan, {}, target),
                               exact_oc_binary_single_arm(problem.effective, d, problem.plan, {}, target));
        least = std::min(least, constraint_violation(m, s.constraints));
    }
    CHECK(got.max_violation == doctest::Approx(least).epsilon(1e-12));
}

TEST_CASE("progress and thread invariance") {
    auto problem = binary_problem();
    problem.spec.endpoints[0].target = {0.2, 0.3, 0.2, 0.3, Direction::HigherIsBetter};
    CalibrationSettings s;
    s.grid = small_grid();
    s.evaluation = Evaluation::MonteCarlo;
    s.n_sims = 300;
    s.threads = 1;
    std::vector<double> seen;
    s.progress = [&](double f) { seen.push_back(f); };
    const auto a = calibrate(problem, s);
    REQUIRE(!seen.empty());
    for (std::size_t i = 1; i < seen.size(); ++i) CHECK(seen[i] >= seen[i - 1]);
    CHECK(seen.back() == doctest::Approx(1.0));
    s.progress = nullptr;
    s.threads = 3;
    const auto b = calibrate(problem, s);
    CHECK(a.design == b.design);
    CHECK(a.metrics.cgr == b.metrics.cgr);
    CHECK(a.validation->second.go_rate == b.validation->second.go_rate);
}

TEST_CASE("exact route needs a single-arm binary endpoint") {
    auto problem = binary_problem();
    problem.plan.arms = 2;
    problem.futile.control = ArmTruth{0.2, 1, {}};
    problem.effective.control = ArmTruth{0.2, 1, {}};
    CalibrationSettings s;
    s.grid = small_grid();
    s.evaluation = Evaluation::Exact;
    CHECK_THROWS_AS(calibrate(problem, s), PreconditionError);
    CHECK(objective_from_string("minN") == Objective::MinN);
    CHECK(to_string(Evaluation::MonteCarlo) == "monte_carlo");
}
