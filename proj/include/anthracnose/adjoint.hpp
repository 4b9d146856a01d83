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

// Costate p of the impulsive problem
//
//   d_t p = alpha p / (1 - sigma u) - div(A grad p) - 1,   p(T) = C_f
//   p(tau_i) = v_i p(tau_i+) + c_i (1 - v_i)
//
// Both solvers are the exact transposes of their forward schemes, so the
// gradients below agree with finite differences of the discrete cost up to
// rounding and solver tolerance.

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "anthracnose/averaged.hpp"
#include "anthracnose/model.hpp"
#include "anthracnose/pde.hpp"

namespace anthracnose {

struct AdjointJump {
    double time = 0.0;
    std::size_t point = 0;
    std::size_t pulse_index = 0;
    ScalarField p_plus;  // p(tau_i+)
    ScalarField p;       // p(tau_i)
    ScalarField v;
    ScalarField c;
};

struct AdjointTrajectory {
    SpaceGrid grid;
    std::vector<double> times;
    std::vector<ScalarField> values;  // p(t_n); pre-jump (left) value at pulse times
    std::vector<AdjointJump> jumps;

    double scalar(std::size_t point) const { return values[point][0]; }
    /// p(t_n+), the value that starts cell n going forward.
    const ScalarField& right_value(std::size_t point) const;
};

/// Chooses v_i while sweeping backward, given the pulse ordinal and p(tau_i+).
using JumpRule = std::function<ScalarField(std::size_t ordinal, const ScalarField& p_plus)>;

/// Backward sweep over the pulses at `realized_points` (ascending). The i-th
/// entry uses c_i and the v returned by `rule`.
AdjointTrajectory backward_sweep_averaged(const Problem& problem, const ContinuousControl& u, const CostSpec& costs,
                                          std::span<const std::size_t> realized_points, const JumpRule& rule);
AdjointTrajectory backward_sweep_pde(const Problem& problem, const ContinuousControl& u, const CostSpec& costs,
                                     std::span<const std::size_t> realized_points, const JumpRule& rule,
                                     const SolverOptions& options = {});

AdjointTrajectory solve_adjoint_averaged(const Problem& problem, const ContinuousControl& u, const PulseStrategy& v,
                                         const CostSpec& costs, std::span<const std::size_t> realized_points);
AdjointTrajectory solve_adjoint_pde(const Problem& problem, const ContinuousControl& u, const PulseStrategy& v,
                                    const CostSpec& costs, std::span<const std::size_t> realized_points,
                                    const SolverOptions& options = {});

struct GradientReport {
    std::vector<ScalarField> pulse_gradient;       // (p(tau_i+) - c_i) theta(tau_i), per realised pulse
    std::vector<ScalarField> continuous_gradient;  // u_bar per integration cell
    double directional_value = 0.0;                // zero when no direction is given
};

/// C - sigma alpha p theta / (1 - sigma u)^2
double u_bar(double C, double sigma, double alpha, double p, double theta, double u);

GradientReport gradient_pulse(const AveragedTrajectory& forward, const AdjointTrajectory& adjoint,
                              const CostSpec& costs, const PulseStrategy* direction = nullptr);
GradientReport gradient_pulse(const FieldTrajectory& forward, const AdjointTrajectory& adjoint,
                              const CostSpec& costs, const PulseStrategy* direction = nullptr);

/// Cell mean of p * theta, per integration cell. The averaged variant integrates
/// the frozen-cell closed forms; the PDE variant averages p and theta over the
/// cell end points. The PDE `forward` must store every field.
std::vector<ScalarField> costate_state_products(const Problem& problem, const AveragedTrajectory& forward,
                                                const AdjointTrajectory& adjoint, const ContinuousControl& u);
std::vector<ScalarField> costate_state_products(const Problem& problem, const FieldTrajectory& forward,
                                                const AdjointTrajectory& adjoint);

/// Averaged u_bar per cell: C - sigma alpha / kappa^2 times the cell mean of p Theta.
GradientReport gradient_continuous(const Problem& problem, const AveragedTrajectory& forward,
                                   const AdjointTrajectory& adjoint, const ContinuousControl& u,
                                   const CostSpec& costs, const ContinuousControl* direction = nullptr);
/// PDE u_bar per cell, with p and theta averaged over the cell end points.
/// `forward` must store every field.
GradientReport gradient_continuous(const Problem& problem, const FieldTrajectory& forward,
                                   const AdjointTrajectory& adjoint, const ContinuousControl& u,
                                   const CostSpec& costs, const ContinuousControl* direction = nullptr);

/// Forward sensitivity z_u along a control direction (verification only).
AveragedSensitivity sensitivity_continuous_averaged(const Problem& problem, const ContinuousControl& u,
                                                    const PulseStrategy& v, const ContinuousControl& direction);
FieldSensitivity sensitivity_continuous_pde(const Problem& problem, const ContinuousControl& u,
                                            const PulseStrategy& v, const ContinuousControl& direction,
                                            const SolverOptions& options = {});

/// J_u assembled from z_u: running and final state terms, pulse terms c_i (1 - v_i) z(tau_i),
/// and the control cost of the direction.
double continuous_directional_derivative(const AveragedTrajectory& forward, const AveragedSensitivity& z,
                                         const PulseStrategy& v, const ContinuousControl& direction,
                                         const CostSpec& costs);
double continuous_directional_derivative(const FieldTrajectory& forward, const FieldSensitivity& z,
                                         const PulseStrategy& v, const ContinuousControl& direction,
                                         const CostSpec& costs);

}  // namespace anthracnose
