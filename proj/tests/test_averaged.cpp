#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "anthracnose/averaged.hpp"
#include "support.hpp"

using namespace anthracnose;
using namespace anthracnose::testing;

namespace {

const auto kOne = [](double) { return 1.0; };
const auto kZero = [](double) { return 0.0; };

CostSpec costs_for(const Problem& p, double c, double C, double Cf) {
    return CostSpec::constant(p.space, p.time.candidate_count(), p.time.cell_count(), c, C, Cf);
}

}  // namespace

TEST_CASE("semiflow examples") {
    const auto grid = TimeGrid::with_pulse_times(1.0, 1e-3, {});
    CHECK(semiflow_step(0.4, 0.0, 1.0, grid, kZero, kZero, 0.3) == 0.4);
    const double expected = 0.4 * std::exp(-1.0) + (1.0 - std::exp(-1.0));
    CHECK(semiflow_step(0.4, 0.0, 1.0, grid, kOne, kZero, 0.3) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.7792723).epsilon(1e-7));
    const auto half = [](double) { return 0.5; };
    CHECK(semiflow_step(1.0 - 0.3 * 0.5, 0.0, 1.0, grid, kOne, half, 0.3) ==
          doctest::Approx(1.0 - 0.15).epsilon(1e-14));
}

TEST_CASE("semiflow composes on pulse-free spans") {
    const auto grid = TimeGrid::regular(1.0, kStep, 1.0 / 52.0);
    const InhibitionPressure a(ScalarField::uniform(SpaceGrid::point(), kBaseAmplitude), 0.75, 0.2);
    const auto alpha = [&](double t) { return a(t, 0); };
    const auto u = [](double t) { return 0.5 + 0.4 * std::sin(9.0 * t); };
    std::mt19937_64 rng(3);
    for (int s = 0; s < 50; ++s) {
        std::size_t i0 = rng() % 1041, i2 = rng() % 1041;
        if (i0 > i2) std::swap(i0, i2);
        if (i2 - i0 < 2) continue;
        const std::size_t i1 = i0 + 1 + rng() % (i2 - i0 - 1);
        const double t0 = grid.points()[i0], t1 = grid.points()[i1], t2 = grid.points()[i2];
        const double x = uniform01(rng);
        const double direct = semiflow_step(x, t0, t2, grid, alpha, u, 0.3);
        const double split =
            semiflow_step(semiflow_step(x, t0, t1, grid, alpha, u, 0.3), t1, t2, grid, alpha, u, 0.3);
        CHECK(std::abs(direct - split) <= 1e-10);
    }
}

TEST_CASE("semiflow reports a non-finite integrand") {
    const auto grid = TimeGrid::with_pulse_times(1.0, 0.1, {});
    const auto bad = [](double t) { return t > 0.5 ? std::nan("") : 1.0; };
    CHECK_THROWS_AS(semiflow_step(0.4, 0.0, 1.0, grid, bad, kZero, 0.3), SolverError);
}

TEST_CASE("run realises every candidate with sigma_star = 0") {
    const auto b = BaseCase{}.build();
    const auto v = PulseStrategy::constant(b.problem.space, 51, 1.0);
    const auto traj = simulate_averaged(b.problem, b.control, v);
    REQUIRE(traj.jumps.size() == 51);
    for (std::size_t i = 0; i < 51; ++i) {
        CHECK(traj.jumps[i].point == 20 * (i + 1));
        CHECK(traj.jumps[i].pre == traj.jumps[i].post);
    }
    CHECK(traj.values.size() == 1041);
}

TEST_CASE("threshold above one disables pulses") {
    BaseCase t;
    t.sigma_star = 2.0;
    const auto b = t.build();
    const auto traj = simulate_averaged(b.problem, b.control, PulseStrategy::constant(b.problem.space, 51, 0.0));
    CHECK(traj.jumps.empty());
}

TEST_CASE("threshold ties trigger a pulse") {
    auto p = constant_problem(0.0, 0.4, 1.0, 0.01, 0.3, {0.25, 0.5});
    p.chemical.sigma_star = 0.4;
    const auto v = PulseStrategy::uniform(p.space, {0.5, 0.5});
    const auto traj = simulate_averaged(p, zero_control(p), v);
    REQUIRE(traj.jumps.size() == 1);  // 0.2 after the first pulse is below the threshold
    CHECK(traj.jumps[0].pre == 0.4);
    CHECK(traj.jumps[0].post == 0.2);
}

TEST_CASE("jumps are exact and left-continuous") {
    const auto b = BaseCase{}.build();
    std::mt19937_64 rng(5);
    const auto v = random_strategy(b.problem.space, 51, rng);
    const auto traj = simulate_averaged(b.problem, b.control, v);
    for (const auto& j : traj.jumps) {
        CHECK(j.post == j.v * j.pre);
        CHECK(j.v == v.scalar(j.pulse_index));
        CHECK(traj.values[j.point] == j.pre);
        CHECK(traj.cell_start[j.point] == j.post);
    }
}

TEST_CASE("piecewise-constant coefficients match the closed form") {
    // alpha = 2 on [0, 0.5), 0.5 on [0.5, 1]; u = 0.8 on [0, 0.25), 0 after; pulses 0.3 and 0.6
    const SpaceGrid g = SpaceGrid::point();
    Problem p = constant_problem(1.0, 0.35, 1.0, 1.0 / 400.0, 0.4, {0.25, 0.5, 0.75});
    p.alpha = InhibitionPressure::with_profile(ScalarField::uniform(g, 1.0),
                                               [](double t) { return t < 0.5 ? 2.0 : 0.5; });
    std::vector<ScalarField> us;
    for (std::size_t n = 0; n < p.time.cell_count(); ++n) {
        us.push_back(ScalarField::uniform(g, p.time.cell_midpoint(n) < 0.25 ? 0.8 : 0.0));
    }
    const ContinuousControl u(us);
    const auto v = PulseStrategy::uniform(g, {0.3, 0.6, 1.0});
    const auto traj = simulate_averaged(p, u, v);

    auto exact = [](double t) {
        const double k1 = 1.0 - 0.4 * 0.8;
        if (t <= 0.25) return closed_form(0.35, 2.0, k1, t);
        const double x1 = 0.3 * closed_form(0.35, 2.0, k1, 0.25);
        if (t <= 0.5) return closed_form(x1, 2.0, 1.0, t - 0.25);
        const double x2 = 0.6 * closed_form(x1, 2.0, 1.0, 0.25);
        return closed_form(x2, 0.5, 1.0, t - 0.5);
    };
    for (std::size_t n = 0; n < traj.times.size(); ++n) {
        const double t = traj.times[n];
        // left limits at the pulse times
        double ref = exact(t);
        if (t == 0.25) ref = closed_form(0.35, 2.0, 1.0 - 0.32, 0.25);
        if (t == 0.5) ref = closed_form(0.3 * closed_form(0.35, 2.0, 0.68, 0.25), 2.0, 1.0, 0.25);
        CHECK(relative_error(traj.values[n], ref) <= 1e-8);
    }
}

TEST_CASE("stronger pulses never raise the trajectory") {
    const auto b = BaseCase{}.build();
    std::mt19937_64 rng(9);
    for (int s = 0; s < 10; ++s) {
        const auto v = random_strategy(b.problem.space, 51, rng);
        auto w = v;
        for (std::size_t i = 0; i < 51; ++i) w[i][0] *= uniform01(rng);
        const auto a = simulate_averaged(b.problem, b.control, v);
        const auto c = simulate_averaged(b.problem, b.control, w);
        for (std::size_t n = 0; n < a.values.size(); ++n) CHECK(c.values[n] <= a.values[n]);
    }
}

TEST_CASE("cost examples") {
    SUBCASE("zero state") {
        const auto p = constant_problem(0.0, 0.0, 1.0, 0.01);
        const auto v = PulseStrategy{};
        const auto traj = simulate_averaged(p, zero_control(p), v);
        CHECK(cost_averaged(traj, v, zero_control(p), costs_for(p, 0.5, 0.0, 0.5)).total == 0.0);
    }
    SUBCASE("constant trajectory") {
        const auto p = constant_problem(0.0, 0.4, 1.0, 0.01, 0.3, {0.5});
        const auto v = PulseStrategy::uniform(p.space, {1.0});
        const auto traj = simulate_averaged(p, zero_control(p), v);
        const auto c = cost_averaged(traj, v, zero_control(p), costs_for(p, 0.5, 0.0, 0.5));
        CHECK(c.running_state == doctest::Approx(0.4).epsilon(1e-14));
        CHECK(c.final == doctest::Approx(0.2).epsilon(1e-14));
        CHECK(c.total == doctest::Approx(0.6).epsilon(1e-14));
    }
    SUBCASE("single pulse term") {
        const auto p = constant_problem(0.0, 0.4, 1.0, 0.01, 0.3, {0.5});
        const auto v = PulseStrategy::uniform(p.space, {0.0});
        const auto traj = simulate_averaged(p, zero_control(p), v);
        const auto c = cost_averaged(traj, v, zero_control(p), costs_for(p, 0.25, 0.0, 0.0));
        CHECK(c.pulse == doctest::Approx(0.1).epsilon(1e-14));
        CHECK(c.running_state == doctest::Approx(0.2).epsilon(1e-14));
    }
    SUBCASE("control term") {
        const auto p = constant_problem(0.0, 0.4, 1.0, 0.01);
        const auto u = ContinuousControl::constant(p.space, p.time.cell_count(), 0.5);
        const auto traj = simulate_averaged(p, u, PulseStrategy{});
        CHECK(cost_averaged(traj, PulseStrategy{}, u, costs_for(p, 0.0, 0.3, 0.0)).running_control ==
              doctest::Approx(0.15).epsilon(1e-12));
    }
}

TEST_CASE("cost components add up and respect the bound") {
    std::mt19937_64 rng(21);
    for (int s = 0; s < 20; ++s) {
        BaseCase t;
        t.pulse_cost = uniform01(rng);
        t.final_cost = uniform01(rng);
        t.control_cost = 0.01 * uniform01(rng);
        t.sigma = uniform01(rng);
        auto b = t.build();
        b.control = random_control(b.problem.space, b.problem.time.cell_count(), rng, 0.0, 0.99);
        const auto v = random_strategy(b.problem.space, 51, rng);
        const auto traj = simulate_averaged(b.problem, b.control, v);
        const auto c = cost_averaged(traj, v, b.control, b.costs);
        CHECK(c.total == c.running_state + c.running_control + c.pulse + c.final);
        CHECK(c.total >= 0.0);
        CHECK(c.total <= 1.0 + 1.0 * (1.0 + t.control_cost) + 51 * t.pulse_cost + t.final_cost);
    }
}

TEST_CASE("pulse sensitivity") {
    const auto b = BaseCase{}.build();
    std::mt19937_64 rng(17);
    const auto v = random_strategy(b.problem.space, 51, rng, 0.05, 0.95);

    SUBCASE("zero direction") {
        const auto z = sensitivity_pulse_averaged(b.problem, b.control, v, PulseStrategy::constant(b.problem.space, 51, 0.0));
        for (double x : z.values) CHECK(x == 0.0);
    }
    SUBCASE("no decay keeps z constant between jumps") {
        const auto p = constant_problem(0.0, 0.4, 1.0, 0.01, 0.3, {0.3, 0.6});
        const auto nominal = PulseStrategy::uniform(p.space, {0.5, 0.5});
        const auto d = PulseStrategy::uniform(p.space, {1.0, 0.0});
        const auto z = sensitivity_pulse_averaged(p, zero_control(p), nominal, d);
        for (std::size_t n = 0; n < z.values.size(); ++n) {
            const double t = p.time.points()[n];
            const double expected = t <= 0.3 ? 0.0 : 0.4;  // d_0 Theta(tau_0), then times v_1 after 0.6
            CHECK(z.values[n] == doctest::Approx(t <= 0.6 ? expected : 0.2).epsilon(1e-14));
        }
    }
    SUBCASE("directional derivative matches central differences") {
        const auto d = random_strategy(b.problem.space, 51, rng, -1.0, 1.0);
        const auto traj = simulate_averaged(b.problem, b.control, v);
        const auto z = sensitivity_pulse_averaged(b.problem, b.control, v, d);
        const double jv = pulse_directional_derivative(traj, z, v, d, b.costs);
        const double eps = 1e-5;
        auto vp = v, vm = v;
        for (std::size_t i = 0; i < 51; ++i) {
            vp[i][0] += eps * d[i][0];
            vm[i][0] -= eps * d[i][0];
        }
        const double jp = cost_averaged(simulate_averaged(b.problem, b.control, vp), vp, b.control, b.costs).total;
        const double jm = cost_averaged(simulate_averaged(b.problem, b.control, vm), vm, b.control, b.costs).total;
        CHECK(relative_error(jv, (jp - jm) / (2 * eps)) <= 1e-6);
    }
}
