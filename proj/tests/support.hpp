// Shared builders for the test binaries.

#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "anthracnose/model.hpp"

namespace anthracnose::testing {

inline constexpr double kBaseAmplitude = 1.1512925464970229;  // 0.5 ln 10
inline constexpr double kStep = 1.0 / 1040.0;

struct BaseCase {
    SpaceGrid grid = SpaceGrid::point();
    double t_end = 1.0;
    double h = kStep;
    double pulse_cost = 0.5;
    double final_cost = 0.0;
    double control_cost = 0.0;
    double diffusion = 1.0;
    double sigma = 0.3;
    double sigma_star = 0.0;
    double u = 0.0;
    bool sine_initial = false;
    double floor = 0.2;

    Bundle build() const {
        Problem p;
        p.space = grid;
        p.time = TimeGrid::regular(t_end, h, 1.0 / 52.0);
        p.alpha = InhibitionPressure(ScalarField::uniform(grid, kBaseAmplitude), 0.75, 0.2);
        p.diffusion = DiffusionField::isotropic(grid, diffusion);
        p.chemical = {sigma, sigma_star};
        p.initial = sine_initial ? build_initial_condition(grid, 0.4, floor) : ScalarField::uniform(grid, 0.4);
        const std::size_t cells = p.time.cell_count();
        return Bundle{p, ContinuousControl::constant(grid, cells, u),
                      CostSpec::constant(grid, p.time.candidate_count(), cells, pulse_cost, control_cost,
                                         final_cost)};
    }
};

/// Constant alpha, no pulses inside (0, t_end) unless `pulse_times` is given.
inline Problem constant_problem(double alpha, double theta0, double t_end, double h, double sigma = 0.3,
                                std::vector<double> pulse_times = {}, SpaceGrid grid = SpaceGrid::point()) {
    Problem p;
    p.space = grid;
    p.time = TimeGrid::with_pulse_times(t_end, h, std::move(pulse_times));
    p.alpha = InhibitionPressure::with_profile(ScalarField::uniform(grid, alpha), [](double) { return 1.0; });
    p.diffusion = DiffusionField::isotropic(grid, 0.0);
    p.chemical = {sigma, 0.0};
    p.initial = ScalarField::uniform(grid, theta0);
    return p;
}

/// Exact solution of dTheta/dt = a (1 - Theta / k) over a span of length t.
inline double closed_form(double theta0, double a, double kappa, double t) {
    return kappa + (theta0 - kappa) * std::exp(-a * t / kappa);
}

inline double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline PulseStrategy random_strategy(const SpaceGrid& grid, std::size_t count, std::mt19937_64& rng, double lo = 0.0,
                                     double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<ScalarField> values;
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<double> f(grid.size());
        for (double& x : f) x = d(rng);
        values.emplace_back(grid, std::move(f));
    }
    return PulseStrategy(std::move(values));
}

inline ContinuousControl random_control(const SpaceGrid& grid, std::size_t cells, std::mt19937_64& rng, double lo,
                                        double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<ScalarField> samples;
    for (std::size_t n = 0; n < cells; ++n) {
        std::vector<double> f(grid.size());
        for (double& x : f) x = d(rng);
        samples.emplace_back(grid, std::move(f));
    }
    return ContinuousControl(std::move(samples));
}

inline double relative_error(double value, double reference) {
    return std::abs(value - reference) / std::max(std::abs(reference), 1e-300);
}

}  // namespace anthracnose::testing
