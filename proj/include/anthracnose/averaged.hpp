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

// Spatially-averaged impulsive model
//
//   dTheta/dt = alpha(t) (1 - Theta / (1 - sigma u(t)))      between pulses
//   Theta(tau_i+) = v_i Theta(tau_i)                           at pulses
//
// Pulses are tested only at the candidate times t_k: the i-th candidate whose
// left value reaches sigma_star becomes tau_i and consumes v_i.
//
// The coefficients are frozen per integration cell (alpha at the cell
// midpoint, u at the cell sample) and the frozen problem is integrated
// exactly, so constant-coefficient runs reproduce the closed form to
// rounding.

#pragma once

#include <functional>
#include <vector>

#include "anthracnose/model.hpp"

namespace anthracnose {

struct AveragedJump {
    double time = 0.0;
    std::size_t point = 0;        // index into the time grid
    std::size_t pulse_index = 0;  // ordinal i of the realised pulse
    double pre = 0.0;             // Theta(tau_i)
    double post = 0.0;            // Theta(tau_i+)
    double v = 1.0;
};

struct AveragedTrajectory {
    std::vector<double> times;           // every integration grid point
    std::vector<double> values;          // left limits; pre-jump at pulse times
    std::vector<double> cell_start;      // value at the start of each cell (post-jump)
    std::vector<double> cell_integrals;  // integral of Theta over each cell
    std::vector<AveragedJump> jumps;

    std::vector<std::size_t> realized_points() const;
    double final_value() const { return values.back(); }
};

using TimeFunction = std::function<double(double)>;

/// Advances theta from t_from to t_to along the pulse-free flow. Coefficients
/// are frozen on the cells of `grid` (alpha and u sampled at cell midpoints),
/// so consecutive calls compose exactly.
double semiflow_step(double theta, double t_from, double t_to, const TimeGrid& grid,
                     const TimeFunction& alpha, const TimeFunction& u, double sigma);

/// Forward run of the averaged model. `problem` must live on a single-point grid
/// (see Problem::averaged()).
AveragedTrajectory simulate_averaged(const Problem& problem, const ContinuousControl& u,
                                     const PulseStrategy& v);

/// Cost of an averaged run; pulse terms use the pre-jump values.
CostBreakdown cost_averaged(const AveragedTrajectory& traj, const PulseStrategy& v,
                            const ContinuousControl& u, const CostSpec& costs);

/// Forward sensitivity z_v of Theta along a pulse direction, tangent to the
/// discrete forward map. Only used to cross-check adjoint gradients.
struct AveragedSensitivity {
    std::vector<double> values;          // left limits at grid points
    std::vector<double> cell_start;
    std::vector<double> cell_integrals;
};

AveragedSensitivity sensitivity_pulse_averaged(const Problem& problem, const ContinuousControl& u,
                                               const PulseStrategy& nominal,
                                               const PulseStrategy& direction);

/// J_v assembled from z_v: C_f z(T) + int z + sum c_i ((1 - v_i) z(tau_i) - d_i Theta(tau_i)).
double pulse_directional_derivative(const AveragedTrajectory& traj, const AveragedSensitivity& z,
                                    const PulseStrategy& nominal, const PulseStrategy& direction,
                                    const CostSpec& costs);

namespace detail {
void require_point_grid(const Problem& problem);
}

}  // namespace anthracnose
