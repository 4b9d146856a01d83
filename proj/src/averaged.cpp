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

#include "anthracnose/averaged.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cell_math.hpp"

namespace anthracnose {

namespace detail {

void require_point_grid(const Problem& problem) {
    if (problem.space.size() != 1) {
        throw ValidationError("averaged solver needs a single-point grid; use Problem::averaged()");
    }
    if (problem.time.point_count() < 2) throw ValidationError("time grid is empty");
}

}  // namespace detail

std::vector<std::size_t> AveragedTrajectory::realized_points() const {
    std::vector<std::size_t> out;
    out.reserve(jumps.size());
    for (const auto& j : jumps) out.push_back(j.point);
    return out;
}

double semiflow_step(double theta, double t_from, double t_to, const TimeGrid& grid,
                     const TimeFunction& alpha, const TimeFunction& u, double sigma) {
    if (!(t_from < t_to)) throw ValidationError("semiflow_step needs t_from < t_to");
    std::size_t cell = grid.cell_containing(t_from);
    const auto points = grid.points();
    double t = t_from;
    while (t < t_to && cell < grid.cell_count()) {
        const double end = std::min(t_to, points[cell + 1]);
        if (end > t) {
            const double mid = grid.cell_midpoint(cell);
            auto c = detail::make_cell(end - t, alpha(mid), sigma, u(mid), mid);
            theta = c.state(theta, c.length);
        }
        t = end;
        ++cell;
    }
    return theta;
}

AveragedTrajectory simulate_averaged(const Problem& problem, const ContinuousControl& u,
                                     const PulseStrategy& v) {
    detail::require_point_grid(problem);
    const TimeGrid& grid = problem.time;
    if (u.cell_count() != grid.cell_count()) {
        throw ValidationError("control sample count does not match the time grid");
    }

    AveragedTrajectory traj;
    const std::size_t n_points = grid.point_count();
    traj.times.assign(grid.points().begin(), grid.points().end());
    traj.values.resize(n_points);
    traj.cell_start.resize(n_points - 1);
    traj.cell_integrals.resize(n_points - 1);

    const double threshold = problem.chemical.sigma_star;
    double theta = problem.initial[0];
    std::size_t next_pulse = 0;

    for (std::size_t n = 0; n < n_points; ++n) {
        traj.values[n] = theta;
        if (grid.candidate_at_point(n) && theta >= threshold) {
            if (next_pulse >= v.size()) {
                throw ValidationError("pulse strategy has " + std::to_string(v.size()) +
                                      " values but more pulses were realised");
            }
            const double vi = v.scalar(next_pulse);
            const double post = vi * theta;
            traj.jumps.push_back({traj.times[n], n, next_pulse, theta, post, vi});
            theta = post;
            ++next_pulse;
        }
        if (n + 1 == n_points) break;
        const auto c = detail::averaged_cell(problem, u, n);
        traj.cell_start[n] = theta;
        traj.cell_integrals[n] = c.state_integral(theta);
        theta = c.state(theta, c.length);
    }
    return traj;
}

CostBreakdown cost_averaged(const AveragedTrajectory& traj, const PulseStrategy& v,
                            const ContinuousControl& u, const CostSpec& costs) {
    if (v.size() < traj.jumps.size()) {
        throw ValidationError("pulse strategy shorter than the realised pulse count");
    }
    if (costs.pulse_unit_costs.size() < traj.jumps.size()) {
        throw ValidationError("pulse cost list shorter than the realised pulse count");
    }
    if (u.cell_count() != traj.cell_integrals.size() ||
        costs.continuous_unit_cost.size() != traj.cell_integrals.size()) {
        throw ValidationError("control or control cost does not match the trajectory");
    }
    CostBreakdown cb;
    for (double s : traj.cell_integrals) cb.running_state += s;
    for (std::size_t n = 0; n < traj.cell_integrals.size(); ++n) {
        const double h = traj.times[n + 1] - traj.times[n];
        cb.running_control += h * costs.continuous_unit_cost[n][0] * u.scalar(n);
    }
    for (const auto& j : traj.jumps) {
        const double c = costs.pulse_unit_costs[j.pulse_index][0];
        cb.pulse += c * (1.0 - v.scalar(j.pulse_index)) * j.pre;
    }
    cb.final = costs.final_cost[0] * traj.final_value();
    cb.total = cb.running_state + cb.running_control + cb.pulse + cb.final;
    return cb;
}

AveragedSensitivity sensitivity_pulse_averaged(const Problem& problem, const ContinuousControl& u,
                                               const PulseStrategy& nominal,
                                               const PulseStrategy& direction) {
    const auto traj = simulate_averaged(problem, u, nominal);
    if (direction.size() < traj.jumps.size()) {
        throw ValidationError("direction shorter than the realised pulse count");
    }
    const std::size_t n_points = traj.times.size();
    AveragedSensitivity z;
    z.values.resize(n_points);
    z.cell_start.resize(n_points - 1);
    z.cell_integrals.resize(n_points - 1);

    double zv = 0.0;
    std::size_t j = 0;
    for (std::size_t n = 0; n < n_points; ++n) {
        z.values[n] = zv;
        if (j < traj.jumps.size() && traj.jumps[j].point == n) {
            const auto& jump = traj.jumps[j];
            zv = direction.scalar(jump.pulse_index) * jump.pre + jump.v * zv;
            ++j;
        }
        if (n + 1 == n_points) break;
        const auto c = detail::averaged_cell(problem, u, n);
        z.cell_start[n] = zv;
        z.cell_integrals[n] = zv * c.length * detail::phi1(c.beta * c.length);
        zv *= c.decay(c.length);
    }
    return z;
}

double pulse_directional_derivative(const AveragedTrajectory& traj, const AveragedSensitivity& z,
                                    const PulseStrategy& nominal, const PulseStrategy& direction,
                                    const CostSpec& costs) {
    double acc = costs.final_cost[0] * z.values.back();
    for (double s : z.cell_integrals) acc += s;
    for (const auto& j : traj.jumps) {
        const double c = costs.pulse_unit_costs[j.pulse_index][0];
        acc += c * ((1.0 - nominal.scalar(j.pulse_index)) * z.values[j.point] -
                    direction.scalar(j.pulse_index) * j.pre);
    }
    return acc;
}

}  // namespace anthracnose
