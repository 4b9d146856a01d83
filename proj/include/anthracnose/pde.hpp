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

// Space-dependent impulsive reaction-diffusion model
//
//   d_t theta = alpha (1 - theta / (1 - sigma u)) + div(A grad theta)
//   theta(tau_i+, x) = v_i(x) theta(tau_i, x)
//   <A grad theta, n> = 0 on the boundary
//
// discretised with Crank-Nicolson in time and a seven-point face-weighted
// stencil in space. Per cell, with M = -diag(alpha / (1 - sigma u)) + div(A grad),
//
//   theta1 = (I - h/2 M)^-1 [ (I + h/2 M) theta0 + h alpha ]
//
// where alpha and u are sampled at the cell midpoint. The system is symmetric
// positive definite and is solved matrix-free with conjugate gradient.

#pragma once

#include <span>
#include <vector>

#include "anthracnose/averaged.hpp"
#include "anthracnose/cg.hpp"
#include "anthracnose/model.hpp"

namespace anthracnose {

struct SolverOptions {
    double cg_tolerance = 1e-10;
    std::size_t store_every = 1;  // keep every m-th field; jumps are always kept
};

/// Seven-point face-weighted divergence div(A grad phi) on the grid. The grid
/// sum of the result telescopes to zero because boundary faces carry no flux.
ScalarField apply_divergence(const DiffusionField& diffusion, const ScalarField& phi);
void apply_divergence(const DiffusionField& diffusion, std::span<const double> phi,
                      std::span<double> out);

/// M = -diag(decay) + div(A grad) for one integration cell.
class DiscreteOperator {
 public:
    DiscreteOperator(const DiffusionField& diffusion, std::vector<double> decay);
    /// Operator of the cell centred at t_mid: decay = alpha(t_mid, x) / (1 - sigma u(x)).
    static DiscreteOperator for_cell(const Problem& problem, const ScalarField& u_sample, double t_mid);

    std::size_t size() const { return decay_.size(); }
    const std::vector<double>& decay() const { return decay_; }

    void apply(std::span<const double> in, std::span<double> out) const;
    /// out = in + s * M in
    void apply_shifted(double s, std::span<const double> in, std::span<double> out) const;
    /// Solves (I - s M) x = rhs; x carries the initial guess.
    CgResult solve_shifted(double s, std::span<const double> rhs, std::span<double> x,
                           double tolerance) const;

 private:
    const DiffusionField* diffusion_;
    std::vector<double> decay_;
};

/// One Crank-Nicolson cell: x1 = (I - h/2 M)^-1 [(I + h/2 M) x0 + source],
/// where `source` is already scaled by h. Throws SolverError on CG failure.
void cn_advance(const DiscreteOperator& op, double h, std::span<const double> x0,
                std::span<const double> source, std::span<double> x1, double tolerance);

ScalarField cn_step(const ScalarField& theta, double t, double h, const Problem& problem,
                    const ScalarField& u_sample, const SolverOptions& options = {});

struct FieldJump {
    double time = 0.0;
    std::size_t point = 0;
    std::size_t pulse_index = 0;
    ScalarField pre;
    ScalarField post;
    ScalarField v;
};

struct FieldTrajectory {
    SpaceGrid grid;
    std::vector<double> times;            // every integration grid point
    std::vector<double> state_integrals;  // grid quadrature of theta (left limits)
    std::vector<double> l2_norms;         // grid L2 norm (left limits)
    std::vector<double> min_values;       // pointwise extremes, for invariance checks
    std::vector<double> max_values;
    std::vector<std::size_t> stored_points;
    std::vector<ScalarField> fields;      // left limits at stored_points
    std::vector<FieldJump> jumps;
    std::size_t store_every = 1;

    const ScalarField* field_at(std::size_t point) const;
    const ScalarField& final_field() const { return fields.back(); }
    std::vector<std::size_t> realized_points() const;
    /// Field at the start of cell n (post-jump). Requires every field stored.
    const ScalarField& cell_start(std::size_t cell) const;
};

/// Forward run of the full model. A candidate time becomes a pulse when the
/// grid L2 norm of theta reaches sigma_star * |Omega|.
FieldTrajectory simulate_pde(const Problem& problem, const ContinuousControl& u, const PulseStrategy& v,
                             const SolverOptions& options = {});

CostBreakdown cost_pde(const FieldTrajectory& traj, const PulseStrategy& v, const ContinuousControl& u,
                       const CostSpec& costs);

/// Grid mean of every state, with jump records averaged the same way.
AveragedTrajectory spatial_average(const FieldTrajectory& traj);

/// Tangent of the discrete forward map along a pulse or control direction.
struct FieldSensitivity {
    std::vector<double> integrals;         // grid quadrature of z at every point (left limits)
    std::vector<double> start_integrals;   // post-jump quadrature at cell starts
    std::vector<ScalarField> at_pulses;    // z(tau_i) per realised pulse
    ScalarField final_field;
};

FieldSensitivity sensitivity_pulse_pde(const Problem& problem, const ContinuousControl& u,
                                       const PulseStrategy& nominal, const PulseStrategy& direction,
                                       const SolverOptions& options = {});

double pulse_directional_derivative(const FieldTrajectory& traj, const FieldSensitivity& z,
                                    const PulseStrategy& nominal, const PulseStrategy& direction,
                                    const CostSpec& costs);

}  // namespace anthracnose
