#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "anthracnose/optimizer.hpp"
#include "support.hpp"

using namespace anthracnose;
using namespace anthracnose::testing;

namespace {

bool is_subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool bang_bang(const PulseStrategy& v) {
    for (const auto& f : v.values())
        for (double x : f.values())
            if (x != 0.0 && x != 1.0) return false;
    return true;
}

}  // namespace

TEST_CASE("optimal pulse examples") {
    SUBCASE("expensive pulses are never used") {
        BaseCase t;
        t.final_cost = 0.3;
        t.pulse_cost = 1.0 + 0.3;  // p <= C_f + (T - t)
        const auto r = optimal_pulse(t.build(), ModelKind::averaged);
        CHECK(r.intervention_count() == 0);
        CHECK(r.pulses == PulseStrategy::constant(SpaceGrid::point(), 51, 1.0));
    }
    SUBCASE("free pulses are always used") {
        BaseCase t;
        t.pulse_cost = 0.0;
        const auto r = optimal_pulse(t.build(), ModelKind::averaged);
        CHECK(r.intervention_count() == 51);
        CHECK(r.pulses == PulseStrategy::constant(SpaceGrid::point(), 51, 0.0));
    }
    SUBCASE("threshold runs are redirected") {
        BaseCase t;
        t.sigma_star = 0.1;
        CHECK_THROWS_AS(optimal_pulse(t.build(), ModelKind::averaged), ValidationError);
    }
}

TEST_CASE("optimal pulse certificate and cost are consistent") {
    BaseCase t;
    t.pulse_cost = 0.4;
    t.final_cost = 0.2;
    const auto b = t.build();
    const auto r = optimal_pulse(b, ModelKind::averaged);
    CHECK(bang_bang(r.pulses));
    CHECK(r.cost.total == evaluate_cost(b, ModelKind::averaged, r.pulses).total);
    REQUIRE(r.pulse_certificate.size() == 51);
    for (const auto& c : r.pulse_certificate) {
        CHECK(c.margin[0] == c.p_plus[0] - c.c[0]);
        if (c.v[0] == 0.0) CHECK(c.margin[0] > 0.0);
        if (c.v[0] == 1.0) CHECK(c.margin[0] <= 1e-12);
    }
    CHECK(certificate_check(r, b).ok());
}

TEST_CASE("Intervention sets shrink as pulses get dearer") {
    std::vector<std::vector<std::size_t>> sets;
    for (double c : {0.25, 0.4, 0.5}) {
        BaseCase t;
        t.pulse_cost = c;
        sets.push_back(optimal_pulse(t.build(), ModelKind::averaged).intervention_points());
    }
    CHECK(sets[0].size() > sets[1].size());
    CHECK(sets[1].size() > sets[2].size());
    CHECK(is_subset(sets[1], sets[0]));
    CHECK(is_subset(sets[2], sets[1]));
}

TEST_CASE("final cost saturates above the pulse cost") {
    auto run = [](double cf) {
        BaseCase t;
        t.pulse_cost = 0.5;
        t.final_cost = cf;
        return optimal_pulse(t.build(), ModelKind::averaged);
    };
    CHECK(run(0.6).pulses == run(10.0).pulses);
    CHECK(run(0.6).pulses == run(0.75).pulses);
    const auto a = run(0.0).intervention_points(), b = run(0.25).intervention_points(),
               c = run(0.5).intervention_points();
    CHECK(is_subset(a, b));
    CHECK(is_subset(b, c));
}

TEST_CASE("uniform field problems give uniform strategies") {
    BaseCase t;
    t.grid = SpaceGrid({5, 4, 3}, 1.0);
    t.pulse_cost = 0.55;
    const auto b = t.build();
    const auto field = optimal_pulse(b, ModelKind::pde);
    const auto scalar = optimal_pulse(b.averaged(), ModelKind::averaged);
    REQUIRE(field.pulses.size() == scalar.pulses.size());
    for (std::size_t i = 0; i < field.pulses.size(); ++i) {
        CHECK(field.pulses[i].is_uniform());
        CHECK(field.pulses[i][0] == scalar.pulses.scalar(i));
    }
    CHECK(field.cost.total / t.grid.volume() == doctest::Approx(scalar.cost.total).epsilon(1e-6));
}

TEST_CASE("brute force agrees with the backward sweep") {
    std::mt19937_64 rng(61);
    for (int s = 0; s < 5; ++s) {
        BaseCase t;
        t.t_end = 10.0 / 52.0;
        t.pulse_cost = 0.05 * uniform01(rng);
        t.final_cost = uniform01(rng);
        t.u = 0.5 * uniform01(rng);
        const auto b = t.build();
        BruteForceOptions bf;
        bf.interior_samples = 200;
        bf.seed = s;
        const auto brute = brute_force_pulse(b, ModelKind::averaged, bf);
        const auto sweep = optimal_pulse(b, ModelKind::averaged);
        CHECK(brute.evaluated == 512);
        CHECK(std::abs(brute.best.cost.total - sweep.cost.total) <= 1e-10);
        CHECK(brute.best_interior_cost >= brute.best.cost.total);
    }
}

TEST_CASE("brute force edge cases") {
    SUBCASE("one candidate with a dear pulse") {
        BaseCase t;
        t.t_end = 1.5 / 52.0;
        t.pulse_cost = 0.9;
        const auto b = t.build();
        REQUIRE(b.problem.time.candidate_count() == 1);
        const auto r = brute_force_pulse(b, ModelKind::averaged);
        CHECK(r.evaluated == 2);
        CHECK(r.best.pulses.scalar(0) == 1.0);
    }
    SUBCASE("too many bits") {
        CHECK_THROWS_AS(brute_force_pulse(BaseCase{}.build(), ModelKind::averaged), ValidationError);
    }
    SUBCASE("field problems enumerate per point") {
        BaseCase t;
        t.grid = SpaceGrid({2, 2, 1}, 1.0);
        t.t_end = 4.0 / 52.0;
        t.pulse_cost = 0.01;
        auto b = t.build();
        b.problem.alpha = InhibitionPressure(ScalarField(t.grid, {0.5, 3.0, 8.0, 20.0}), 0.1, 0.2);
        b.problem.diffusion = DiffusionField::isotropic(t.grid, 0.3);
        const auto brute = brute_force_pulse(b, ModelKind::pde);
        const auto sweep = optimal_pulse(b, ModelKind::pde);
        CHECK(brute.evaluated == 4096);  // 3 candidates x 4 points
        CHECK(std::abs(brute.best.cost.total - sweep.cost.total) <= 1e-10);
    }
}

TEST_CASE("fixed point") {
    SUBCASE("passthrough") {
        BaseCase t;
        t.pulse_cost = 0.4;
        const auto b = t.build();
        const auto a = fixed_point_pulse(b, ModelKind::averaged);
        const auto c = optimal_pulse(b, ModelKind::averaged);
        CHECK(a.pulses == c.pulses);
        CHECK(a.cost.total == c.cost.total);
    }
    SUBCASE("unreachable threshold") {
        BaseCase t;
        t.sigma_star = 2.0;
        const auto r = fixed_point_pulse(t.build(), ModelKind::averaged);
        CHECK(r.realized_points.empty());
        CHECK(r.pulse_certificate.empty());
        CHECK(r.converged);
    }
    SUBCASE("matches the exhaustive search on a small thresholded instance") {
        BaseCase t;
        t.t_end = 10.0 / 52.0;
        t.pulse_cost = 0.02;
        t.final_cost = 0.5;
        t.sigma_star = 0.3;
        const auto b = t.build();
        const auto r = fixed_point_pulse(b, ModelKind::averaged);
        const auto brute = brute_force_pulse(b, ModelKind::averaged);
        CHECK(r.converged);
        CHECK(std::abs(r.cost.total - brute.best.cost.total) <= 1e-10);
    }
}

TEST_CASE("certificate check") {
    BaseCase t;
    t.pulse_cost = 0.4;
    const auto b = t.build();
    auto r = optimal_pulse(b, ModelKind::averaged);
    CHECK(certificate_check(r, b).ok());

    SUBCASE("flipping a pulse against its certificate is caught") {
        const auto pts = r.intervention_points();
        REQUIRE_FALSE(pts.empty());
        auto bad = r;
        bad.pulses[*b.problem.time.candidate_at_point(pts.front())][0] = 1.0;
        const auto report = certificate_check(bad, b);
        CHECK_FALSE(report.ok());
        CHECK(report.violations.front().kind == "pulse");
    }
    SUBCASE("degenerate ties accept any strategy") {
        // alpha = 0: p(t) = C_f + T - t whatever v is when c_i = p(tau_i+)
        auto p = constant_problem(0.0, 0.4, 1.0, 1.0 / 1040, 0.3, {0.25, 0.5, 0.75});
        Bundle tie{p, zero_control(p),
                   CostSpec::constant(p.space, 3, p.time.cell_count(), 0.0, 0.0, 0.1)};
        const std::vector<double> taus{0.25, 0.5, 0.75};
        for (std::size_t i = 0; i < 3; ++i) tie.costs.pulse_unit_costs[i][0] = 0.1 + 1.0 - taus[i];
        std::mt19937_64 rng(71);
        for (int s = 0; s < 5; ++s) {
            StrategyResult any;
            any.pulses = random_strategy(p.space, 3, rng);
            any.control = tie.control;
            CHECK(certificate_check(any, tie).ok());
        }
    }
}

TEST_CASE("mixed strategies") {
    SUBCASE("base case with sigma = 0.3 descends monotonically and certifies") {
        for (double u0 : {0.0, 0.5, 1.0}) {
            BaseCase t;
            t.control_cost = 0.002;
            t.u = u0;
            const auto b = t.build();
            const auto r = projected_gradient_mixed(b, ModelKind::averaged);
            CHECK(r.converged);
            CHECK(r.iterations <= 200);
            for (std::size_t i = 1; i < r.cost_history.size(); ++i) CHECK(r.cost_history[i] <= r.cost_history[i - 1]);
            CHECK(bang_bang(r.pulses));
            const auto report = certificate_check(r, b);
            CHECK(report.switching_agreement() >= 0.99);
            CHECK(report.switching_samples > 0);
            CHECK(r.cost.total == evaluate_cost(Bundle{b.problem, r.control, b.costs}, ModelKind::averaged,
                                                r.pulses).total);
        }
    }
    SUBCASE("no chemical effect") {
        BaseCase t;
        t.sigma = 0.0;
        t.control_cost = 0.002;
        t.u = 0.7;
        const auto b = t.build();
        const auto r = projected_gradient_mixed(b, ModelKind::averaged);
        for (std::size_t n = 0; n < r.control.cell_count(); ++n) CHECK(r.control.scalar(n) == 0.0);
        auto b0 = b;
        b0.control = zero_control(b.problem);
        CHECK(r.pulses == optimal_pulse(b0, ModelKind::averaged).pulses);
    }
    SUBCASE("prohibitive control cost") {
        BaseCase t;
        t.control_cost = 10.0;
        t.u = 1.0;
        const auto r = projected_gradient_mixed(t.build(), ModelKind::averaged);
        for (std::size_t n = 0; n < r.control.cell_count(); ++n) CHECK(r.control.scalar(n) == 0.0);
    }
    SUBCASE("constant full effort does not add interventions") {
        for (double c : {0.25, 0.4, 0.5}) {
            BaseCase t;
            t.pulse_cost = c;
            const auto free = optimal_pulse(t.build(), ModelKind::averaged);
            t.u = 1.0;
            const auto treated = optimal_pulse(t.build(), ModelKind::averaged);
            CHECK(treated.intervention_count() <= free.intervention_count());
        }
    }
    SUBCASE("field model on a small grid") {
        BaseCase t;
        t.grid = SpaceGrid({3, 2, 2}, 1.0);
        t.t_end = 13.0 / 52.0;
        t.control_cost = 0.0005;
        auto b = t.build();
        b.problem.alpha = InhibitionPressure(build_random_amplitude(t.grid, 20.0, 5), 0.1, 0.2);
        const auto r = projected_gradient_mixed(b, ModelKind::pde);
        for (std::size_t i = 1; i < r.cost_history.size(); ++i) CHECK(r.cost_history[i] <= r.cost_history[i - 1]);
        CHECK(r.iterations <= 200);
        CHECK(certificate_check(r, b).switching_agreement() >= 0.99);
    }
}
