// Copyright 2026 The Anthracnose Control Authors
//
//    Licensed under the Apache License, Version 2.0 (the "License");
//    you may not use this file except in compliance with the License.
//    You may obtain a copy of the License at
//
//        http://www.apache.org/licenses/LICENSE-2.0
//
//    Unless required by applicable law or agreed to in writing, software
//    distributed under the License is distributed on an "AS IS" BASIS,
//    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//    See the License for the specific language governing permissions and
//    limitations under the License.

// Closed forms for one integration cell of the averaged model with frozen
// coefficients: alpha held at the cell midpoint, u at the cell's sample.
// Inside such a cell theta' = alpha (1 - theta / kappa) has the exact solution
// theta(s) = kappa + (theta0 - kappa) exp(-beta s), beta = alpha / kappa.

#pragma once

#include <array>
#include <cmath>
#include <sstream>

#include "anthracnose/core.hpp"
#include "anthracnose/model.hpp"

namespace anthracnose::detail {

/// (1 - exp(-x)) / x, continuous at 0.
inline double phi1(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x;
    return -std::expm1(-x) / x;
}

struct FrozenCell {
    double length = 0.0;
    double alpha = 0.0;
    double kappa = 1.0;  // attractor 1 - sigma u
    double beta = 0.0;   // decay rate alpha / kappa

    double decay(double s) const { return std::exp(-beta * s); }
    double state(double start, double s) const { return kappa + (start - kappa) * decay(s); }
    double state_integral(double start) const {
        return kappa * length + (start - kappa) * length * phi1(beta * length);
    }
    /// Backward costate p(s) on the cell given its value at the cell end.
    double costate(double end, double s) const {
        const double r = length - s;
        return end * decay(r) + r * phi1(beta * r);
    }
};

inline FrozenCell make_cell(double length, double alpha, double sigma, double u, double t_mid) {
    if (!std::isfinite(alpha)) {
        std::ostringstream os;
        os << "non-finite inhibition pressure at t=" << t_mid;
        throw SolverError(os.str());
    }
    FrozenCell c;
    c.length = length;
    c.alpha = alpha;
    c.kappa = 1.0 - sigma * u;
    c.beta = alpha / c.kappa;
    if (!std::isfinite(c.beta)) {
        std::ostringstream os;
        os << "non-finite decay rate at t=" << t_mid;
        throw SolverError(os.str());
    }
    return c;
}

inline FrozenCell averaged_cell(const Problem& problem, const ContinuousControl& u, std::size_t cell) {
    const double t_mid = problem.time.cell_midpoint(cell);
    return make_cell(problem.time.cell_length(cell), problem.alpha(t_mid, 0), problem.chemical.sigma,
                     u.scalar(cell), t_mid);
}

/// Five-point Gauss-Legendre rule on [0, length].
template <class F>
double gauss5(F&& f, double length) {
    static constexpr std::array<double, 5> nodes{-0.9061798459386640, -0.5384693101056831, 0.0,
                                                 0.5384693101056831, 0.9061798459386640};
    static constexpr std::array<double, 5> weights{0.2369268850561891, 0.4786286704993665,
                                                   0.5688888888888889, 0.4786286704993665,
                                                   0.2369268850561891};
    double acc = 0.0;
    for (std::size_t i = 0; i < 5; ++i) acc += weights[i] * f(0.5 * length * (nodes[i] + 1.0));
    return 0.5 * length * acc;
}

}  // namespace anthracnose::detail
