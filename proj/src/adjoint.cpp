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

#include "anthracnose/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cell_math.hpp"

namespace anthracnose {

namespace {

void check_points(const Problem& problem, std::span<const std::size_t> points, const CostSpec& costs) {
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i] + 1 >= problem.time.point_count()) {
            throw ValidationError("realised pulse point outside the time grid interior");
        }
        if (i > 0 && points[i] <= points[i - 1]) throw ValidationError("realised pulse points not ascending");
    }
    if (costs.pulse_unit_costs.size() < points.size()) {
        throw ValidationError("pulse cost list shorter than the realised pulse count");
    }
    if (!(costs.final_cost.grid() == problem.space)) throw ValidationError("final cost grid mismatch");
}

// Applies the jump at grid point n when it is the next realised pulse (walking backward).
template <class Traj>
void maybe_jump(Traj& adj, std::span<const std::size_t> points, std::ptrdiff_t& next, std::size_t n,
                const CostSpec& costs, const JumpRule& rule, ScalarField& p) {
    if (next < 0 || points[static_cast<std::size_t>(next)] != n) return;
    const auto i = static_cast<std::size_t>(next);
    AdjointJump jump;
    jump.time = adj.times[n];
    jump.point = n;
    jump.pulse_index = i;
    jump.p_plus = p;
    jump.c = costs.pulse_unit_costs[i];
    jump.v = rule(i, p);
    if (!(jump.v.grid() == p.grid())) throw ValidationError("pulse value grid mismatch");
    for (std::size_t x = 0; x < p.size(); ++x) {
        p[x] = jump.v[x] * jump.p_plus[x] + jump.c[x] * (1.0 - jump.v[x]);
    }
    jump.p = p;
    adj.jumps.push_back(std::move(jump));
    --next;
}

JumpRule fixed_rule(const PulseStrategy& v, std::size_t count) {
    if (v.size() < count) throw ValidationError("pulse strategy shorter than the realised pulse count");
    return [&v](std::size_t i, const ScalarField&) { return v[i]; };
}

void finish(AdjointTrajectory& adj) { std::reverse(adj.jumps.begin(), adj.jumps.end()); }

const AdjointJump* find_jump(const std::vector<AdjointJump>& jumps, std::size_t point) {
    auto it = std::lower_bound(jumps.begin(), jumps.end(), point,
                               [](const AdjointJump& j, std::size_t p) { return j.point < p; });
    return (it != jumps.end() && it->point == point) ? &*it : nullptr;
}

double weighted_dot(const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (std::size_t x = 0; x < a.size(); ++x) s += a[x] * b[x];
    return s * a.grid().cell_volume();
}

}  // namespace

const ScalarField& AdjointTrajectory::right_value(std::size_t point) const {
    if (const auto* j = find_jump(jumps, point)) return j->p_plus;
    return values[point];
}

AdjointTrajectory backward_sweep_averaged(const Problem& problem, const ContinuousControl& u, const CostSpec& costs,
                                          std::span<const std::size_t> realized_points, const JumpRule& rule) {
    detail::require_point_grid(problem);
    check_points(problem, realized_points, costs);
    if (u.cell_count() != problem.time.cell_count()) {
        throw ValidationError("control sample count does not match the time grid");
    }
    const std::size_t n_points = problem.time.point_count();
    AdjointTrajectory adj;
    adj.grid = problem.space;
    adj.times.assign(problem.time.points().begin(), problem.time.points().end());
    adj.values.resize(n_points);

    ScalarField p = costs.final_cost;
    adj.values[n_points - 1] = p;
    auto next = static_cast<std::ptrdiff_t>(realized_points.size()) - 1;
    for (std::size_t n = n_points - 1; n-- > 0;) {
        const auto c = detail::averaged_cell(problem, u, n);
        p[0] = c.costate(p[0], 0.0);
        maybe_jump(adj, realized_points, next, n, costs, rule, p);
        adj.values[n] = p;
    }
    finish(adj);
    return adj;
}

AdjointTrajectory backward_sweep_pde(const Problem& problem, const ContinuousControl& u, const CostSpec& costs,
                                     std::span<const std::size_t> realized_points, const JumpRule& rule,
                                     const SolverOptions& options) {
    check_points(problem, realized_points, costs);
    if (u.cell_count() != problem.time.cell_count()) {
        throw ValidationError("control sample count does not match the time grid");
    }
    const TimeGrid& grid = problem.time;
    const std::size_t n_points = grid.point_count();
    AdjointTrajectory adj;
    adj.grid = problem.space;
    adj.times.assign(grid.points().begin(), grid.points().end());
    adj.values.resize(n_points);

    ScalarField p = costs.final_cost;
    ScalarField next_p = p;
    adj.values[n_points - 1] = p;
    auto next = static_cast<std::ptrdiff_t>(realized_points.size()) - 1;
    for (std::size_t n = n_points - 1; n-- > 0;) {
        const double h = grid.cell_length(n);
        const auto op = DiscreteOperator::for_cell(problem, u.at(n), grid.cell_midpoint(n));
        const std::vector<double> source(p.size(), h);
        cn_advance(op, h, p.values(), source, next_p.values(), options.cg_tolerance);
        std::swap(p, next_p);
        maybe_jump(adj, realized_points, next, n, costs, rule, p);
        adj.values[n] = p;
    }
    finish(adj);
    return adj;
}

AdjointTrajectory solve_adjoint_averaged(const Problem& problem, const ContinuousControl& u, const PulseStrategy& v,
                                         const CostSpec& costs, std::span<const std::size_t> realized_points) {
    return backward_sweep_averaged(problem, u, costs, realized_points, fixed_rule(v, realized_points.size()));
}

AdjointTrajectory solve_adjoint_pde(const Problem& problem, const ContinuousControl& u, const PulseStrategy& v,
                                    const CostSpec& costs, std::span<const std::size_t> realized_points,
                                    const SolverOptions& options) {
    return backward_sweep_pde(problem, u, costs, realized_points, fixed_rule(v, realized_points.size()), options);
}

double u_bar(double C, double sigma, double alpha, double p, double theta, double u) {
    const double kappa = 1.0 - sigma * u;
    if (kappa < 1e-9) throw ValidationError("sigma*u too close to 1 for the control gradient");
    return C - sigma * alpha * p * theta / (kappa * kappa);
}

namespace {

template <class Forward, class PrePulse>
GradientReport pulse_report(const Forward& forward, const AdjointTrajectory& adjoint, const CostSpec& costs,
                            const PulseStrategy* direction, PrePulse&& pre) {
    if (forward.jumps.size() != adjoint.jumps.size()) {
        throw ValidationError("forward and adjoint pulse counts differ (" + std::to_string(forward.jumps.size()) +
                              " vs " + std::to_string(adjoint.jumps.size()) + ")");
    }
    if (direction && direction->size() < forward.jumps.size()) {
        throw ValidationError("direction shorter than the realised pulse count");
    }
    GradientReport r;
    for (std::size_t i = 0; i < forward.jumps.size(); ++i) {
        const auto& aj = adjoint.jumps[i];
        if (aj.point != forward.jumps[i].point) throw ValidationError("forward and adjoint pulse times differ");
        const auto& c = costs.pulse_unit_costs[forward.jumps[i].pulse_index];
        const ScalarField theta = pre(forward.jumps[i]);
        ScalarField g = theta;
        for (std::size_t x = 0; x < g.size(); ++x) g[x] = (aj.p_plus[x] - c[x]) * theta[x];
        if (direction) r.directional_value += weighted_dot(g, (*direction)[forward.jumps[i].pulse_index]);
        r.pulse_gradient.push_back(std::move(g));
    }
    return r;
}

void check_direction(const ContinuousControl* direction, std::size_t cells) {
    if (direction && direction->cell_count() != cells) {
        throw ValidationError("control direction does not match the time grid");
    }
}

}  // namespace

GradientReport gradient_pulse(const AveragedTrajectory& forward, const AdjointTrajectory& adjoint,
                              const CostSpec& costs, const PulseStrategy* direction) {
    return pulse_report(forward, adjoint, costs, direction,
                        [](const AveragedJump& j) { return ScalarField::uniform(SpaceGrid::point(), j.pre); });
}

GradientReport gradient_pulse(const FieldTrajectory& forward, const AdjointTrajectory& adjoint,
                              const CostSpec& costs, const PulseStrategy* direction) {
    return pulse_report(forward, adjoint, costs, direction, [](const FieldJump& j) { return j.pre; });
}

std::vector<ScalarField> costate_state_products(const Problem& problem, const AveragedTrajectory& forward,
                                                const AdjointTrajectory& adjoint, const ContinuousControl& u) {
    detail::require_point_grid(problem);
    const std::size_t cells = problem.time.cell_count();
    std::vector<ScalarField> out;
    out.reserve(cells);
    for (std::size_t n = 0; n < cells; ++n) {
        const auto c = detail::averaged_cell(problem, u, n);
        const double theta0 = forward.cell_start[n];
        const double p_end = adjoint.scalar(n + 1);
        const double m =
            detail::gauss5([&](double s) { return c.costate(p_end, s) * c.state(theta0, s); }, c.length) / c.length;
        out.push_back(ScalarField::uniform(problem.space, m));
    }
    return out;
}

std::vector<ScalarField> costate_state_products(const Problem& problem, const FieldTrajectory& forward,
                                                const AdjointTrajectory& adjoint) {
    const std::size_t cells = problem.time.cell_count();
    if (forward.stored_points.size() != problem.time.point_count()) {
        throw ValidationError("continuous gradient needs every forward field; run with store_every = 1");
    }
    std::vector<ScalarField> out;
    out.reserve(cells);
    for (std::size_t n = 0; n < cells; ++n) {
        const ScalarField& th0 = forward.cell_start(n);
        const ScalarField& th1 = forward.fields[n + 1];
        const ScalarField& p0 = adjoint.right_value(n);
        const ScalarField& p1 = adjoint.values[n + 1];
        ScalarField m = th0;
        for (std::size_t x = 0; x < m.size(); ++x) m[x] = 0.25 * (p0[x] + p1[x]) * (th0[x] + th1[x]);
        out.push_back(std::move(m));
    }
    return out;
}

namespace {

GradientReport control_report(const Problem& problem, const std::vector<ScalarField>& products,
                              const ContinuousControl& u, const CostSpec& costs,
                              const ContinuousControl* direction) {
    const TimeGrid& grid = problem.time;
    const std::size_t cells = grid.cell_count();
    check_direction(direction, cells);
    if (u.cell_count() != cells || costs.continuous_unit_cost.size() != cells) {
        throw ValidationError("control or control cost does not match the time grid");
    }
    const double sigma = problem.chemical.sigma;
    GradientReport r;
    r.continuous_gradient.reserve(cells);
    for (std::size_t n = 0; n < cells; ++n) {
        const double t_mid = grid.cell_midpoint(n);
        const auto& un = u.at(n);
        const auto& C = costs.continuous_unit_cost[n];
        ScalarField g = un;
        for (std::size_t x = 0; x < g.size(); ++x) {
            const double kappa = 1.0 - sigma * un[x];
            if (kappa < 1e-9) throw ValidationError("sigma*u too close to 1 for the control gradient");
            g[x] = C[x] - sigma * problem.alpha(t_mid, x) * products[n][x] / (kappa * kappa);
        }
        if (direction) r.directional_value += grid.cell_length(n) * weighted_dot(g, direction->at(n));
        r.continuous_gradient.push_back(std::move(g));
    }
    return r;
}

}  // namespace

GradientReport gradient_continuous(const Problem& problem, const AveragedTrajectory& forward,
                                   const AdjointTrajectory& adjoint, const ContinuousControl& u,
                                   const CostSpec& costs, const ContinuousControl* direction) {
    return control_report(problem, costate_state_products(problem, forward, adjoint, u), u, costs, direction);
}

GradientReport gradient_continuous(const Problem& problem, const FieldTrajectory& forward,
                                   const AdjointTrajectory& adjoint, const ContinuousControl& u,
                                   const CostSpec& costs, const ContinuousControl* direction) {
    return control_report(problem, costate_state_products(problem, forward, adjoint), u, costs, direction);
}

AveragedSensitivity sensitivity_continuous_averaged(const Problem& problem, const ContinuousControl& u,
                                                    const PulseStrategy& v, const ContinuousControl& direction) {
    const auto traj = simulate_averaged(problem, u, v);
    check_direction(&direction, problem.time.cell_count());
    const double sigma = problem.chemical.sigma;
    const std::size_t n_points = traj.times.size();
    AveragedSensitivity z;
    z.values.resize(n_points);
    z.cell_start.resize(n_points - 1);
    z.cell_integrals.resize(n_points - 1);

    double zu = 0.0;
    std::size_t j = 0;
    for (std::size_t n = 0; n < n_points; ++n) {
        z.values[n] = zu;
        if (j < traj.jumps.size() && traj.jumps[j].point == n) {
            zu *= traj.jumps[j].v;
            ++j;
        }
        if (n + 1 == n_points) break;
        const auto c = detail::averaged_cell(problem, u, n);
        const double gain = sigma * c.alpha * direction.scalar(n) / (c.kappa * c.kappa);
        const double R = traj.cell_start[n] - c.kappa;
        const double z0 = zu;
        auto at = [&](double s) {
            return c.decay(s) * z0 - gain * (c.kappa * s * detail::phi1(c.beta * s) + R * s * c.decay(s));
        };
        z.cell_start[n] = z0;
        z.cell_integrals[n] = detail::gauss5(at, c.length);
        zu = at(c.length);
    }
    return z;
}

FieldSensitivity sensitivity_continuous_pde(const Problem& problem, const ContinuousControl& u,
                                            const PulseStrategy& v, const ContinuousControl& direction,
                                            const SolverOptions& options) {
    SolverOptions fwd = options;
    fwd.store_every = 1;
    const auto traj = simulate_pde(problem, u, v, fwd);
    const TimeGrid& grid = problem.time;
    check_direction(&direction, grid.cell_count());
    const double sigma = problem.chemical.sigma;
    const std::size_t n_points = grid.point_count();
    const std::size_t n_space = problem.space.size();

    FieldSensitivity z;
    z.integrals.resize(n_points);
    z.start_integrals.resize(n_points - 1);
    ScalarField cur = ScalarField::uniform(problem.space, 0.0);
    ScalarField next = cur;
    std::vector<double> source(n_space);
    std::size_t j = 0;
    for (std::size_t n = 0; n < n_points; ++n) {
        z.integrals[n] = cur.integral();
        if (j < traj.jumps.size() && traj.jumps[j].point == n) {
            z.at_pulses.push_back(cur);
            for (std::size_t x = 0; x < n_space; ++x) cur[x] *= traj.jumps[j].v[x];
            ++j;
        }
        if (n + 1 == n_points) break;
        z.start_integrals[n] = cur.integral();
        const double h = grid.cell_length(n);
        const double t_mid = grid.cell_midpoint(n);
        const auto& th0 = traj.cell_start(n);
        const auto& th1 = traj.fields[n + 1];
        const auto& un = u.at(n);
        const auto& d = direction.at(n);
        for (std::size_t x = 0; x < n_space; ++x) {
            const double kappa = 1.0 - sigma * un[x];
            source[x] = -h * sigma * problem.alpha(t_mid, x) * d[x] * 0.5 * (th0[x] + th1[x]) / (kappa * kappa);
        }
        const auto op = DiscreteOperator::for_cell(problem, un, t_mid);
        cn_advance(op, h, cur.values(), source, next.values(), options.cg_tolerance);
        std::swap(cur, next);
    }
    z.final_field = cur;
    return z;
}

double continuous_directional_derivative(const AveragedTrajectory& forward, const AveragedSensitivity& z,
                                         const PulseStrategy& v, const ContinuousControl& direction,
                                         const CostSpec& costs) {
    double acc = costs.final_cost[0] * z.values.back();
    for (std::size_t n = 0; n < z.cell_integrals.size(); ++n) {
        const double h = forward.times[n + 1] - forward.times[n];
        acc += z.cell_integrals[n] + h * costs.continuous_unit_cost[n][0] * direction.scalar(n);
    }
    for (const auto& j : forward.jumps) {
        acc += costs.pulse_unit_costs[j.pulse_index][0] * (1.0 - v.scalar(j.pulse_index)) * z.values[j.point];
    }
    return acc;
}

double continuous_directional_derivative(const FieldTrajectory& forward, const FieldSensitivity& z,
                                         const PulseStrategy& v, const ContinuousControl& direction,
                                         const CostSpec& costs) {
    double acc = weighted_dot(costs.final_cost, z.final_field);
    for (std::size_t n = 0; n + 1 < forward.times.size(); ++n) {
        const double h = forward.times[n + 1] - forward.times[n];
        acc += 0.5 * h * (z.start_integrals[n] + z.integrals[n + 1]);
        acc += h * weighted_dot(costs.continuous_unit_cost[n], direction.at(n));
    }
    for (std::size_t i = 0; i < forward.jumps.size(); ++i) {
        const auto& j = forward.jumps[i];
        const auto& c = costs.pulse_unit_costs[j.pulse_index];
        const auto& vi = v[j.pulse_index];
        double s = 0.0;
        for (std::size_t x = 0; x < c.size(); ++x) s += c[x] * (1.0 - vi[x]) * z.at_pulses[i][x];
        acc += s * forward.grid.cell_volume();
    }
    return acc;
}

}  // namespace anthracnose
