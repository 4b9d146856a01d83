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

#include "anthracnose/pde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace anthracnose {

void apply_divergence(const DiffusionField& diffusion, std::span<const double> phi, std::span<double> out) {
    const SpaceGrid& g = diffusion.grid();
    if (phi.size() != g.size() || out.size() != g.size()) {
        throw ValidationError("divergence: field does not match the diffusion grid");
    }
    std::fill(out.begin(), out.end(), 0.0);
    const double inv_ds2 = 1.0 / (g.spacing() * g.spacing());
    for (std::size_t axis = 0; axis < 3; ++axis) {
        if (g.dims()[axis] < 2) continue;
        const std::size_t s = g.stride(axis);
        const auto& faces = diffusion.faces(axis);
        for (std::size_t p = 0; p < g.size(); ++p) {
            const double a = faces[p];
            if (a == 0.0) continue;  // includes every boundary face
            const double flux = a * (phi[p + s] - phi[p]) * inv_ds2;
            out[p] += flux;
            out[p + s] -= flux;
        }
    }
}

ScalarField apply_divergence(const DiffusionField& diffusion, const ScalarField& phi) {
    if (!(phi.grid() == diffusion.grid())) throw ValidationError("divergence: grid mismatch");
    ScalarField out = ScalarField::uniform(phi.grid(), 0.0);
    apply_divergence(diffusion, phi.values(), out.values());
    return out;
}

DiscreteOperator::DiscreteOperator(const DiffusionField& diffusion, std::vector<double> decay)
        : diffusion_(&diffusion), decay_(std::move(decay)) {
    if (decay_.size() != diffusion.grid().size()) {
        throw ValidationError("operator decay does not match the diffusion grid");
    }
}

DiscreteOperator DiscreteOperator::for_cell(const Problem& problem, const ScalarField& u_sample, double t_mid) {
    const double sigma = problem.chemical.sigma;
    std::vector<double> decay(problem.space.size());
    for (std::size_t p = 0; p < decay.size(); ++p) {
        decay[p] = problem.alpha(t_mid, p) / (1.0 - sigma * u_sample[p]);
        if (!std::isfinite(decay[p])) {
            std::ostringstream os;
            os << "non-finite decay rate at t=" << t_mid << ", point " << p;
            throw SolverError(os.str());
        }
    }
    return DiscreteOperator(problem.diffusion, std::move(decay));
}

void DiscreteOperator::apply(std::span<const double> in, std::span<double> out) const {
    apply_divergence(*diffusion_, in, out);
    for (std::size_t p = 0; p < decay_.size(); ++p) out[p] -= decay_[p] * in[p];
}

void DiscreteOperator::apply_shifted(double s, std::span<const double> in, std::span<double> out) const {
    apply(in, out);
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = in[p] + s * out[p];
}

CgResult DiscreteOperator::solve_shifted(double s, std::span<const double> rhs, std::span<double> x,
                                         double tolerance) const {
    auto lhs = [&](std::span<const double> in, std::span<double> out) { apply_shifted(-s, in, out); };
    return conjugate_gradient(lhs, rhs, x, tolerance, 10 * size());
}

void cn_advance(const DiscreteOperator& op, double h, std::span<const double> x0,
                std::span<const double> source, std::span<double> x1, double tolerance) {
    std::vector<double> rhs(op.size());
    op.apply_shifted(0.5 * h, x0, rhs);
    for (std::size_t p = 0; p < rhs.size(); ++p) rhs[p] += source[p];
    std::copy(x0.begin(), x0.end(), x1.begin());
    const auto res = op.solve_shifted(0.5 * h, rhs, x1, tolerance);
    if (!res.converged) {
        std::ostringstream os;
        os << "conjugate gradient stalled after " << res.iterations
           << " iterations, relative residual " << res.relative_residual;
        throw SolverError(os.str());
    }
}

namespace {

std::vector<double> alpha_source(const Problem& problem, double t_mid, double h) {
    std::vector<double> s(problem.space.size());
    for (std::size_t p = 0; p < s.size(); ++p) s[p] = h * problem.alpha(t_mid, p);
    return s;
}

void check_control(const Problem& problem, const ContinuousControl& u) {
    if (problem.time.point_count() < 2) throw ValidationError("time grid is empty");
    if (u.cell_count() != problem.time.cell_count()) {
        throw ValidationError("control sample count does not match the time grid");
    }
    if (!(problem.diffusion.grid() == problem.space) || !(problem.initial.grid() == problem.space)) {
        throw ValidationError("problem fields do not share the space grid");
    }
}

const FieldJump* find_jump(const std::vector<FieldJump>& jumps, std::size_t point) {
    auto it = std::lower_bound(jumps.begin(), jumps.end(), point,
                               [](const FieldJump& j, std::size_t p) { return j.point < p; });
    return (it != jumps.end() && it->point == point) ? &*it : nullptr;
}

}  // namespace

ScalarField cn_step(const ScalarField& theta, double t, double h, const Problem& problem,
                    const ScalarField& u_sample, const SolverOptions& options) {
    if (!(h > 0.0)) throw ValidationError("cn_step needs h > 0");
    const double t_mid = t + 0.5 * h;
    const auto op = DiscreteOperator::for_cell(problem, u_sample, t_mid);
    const auto source = alpha_source(problem, t_mid, h);
    ScalarField out = ScalarField::uniform(theta.grid(), 0.0);
    cn_advance(op, h, theta.values(), source, out.values(), options.cg_tolerance);
    return out;
}

const ScalarField* FieldTrajectory::field_at(std::size_t point) const {
    auto it = std::lower_bound(stored_points.begin(), stored_points.end(), point);
    if (it == stored_points.end() || *it != point) return nullptr;
    return &fields[static_cast<std::size_t>(it - stored_points.begin())];
}

std::vector<std::size_t> FieldTrajectory::realized_points() const {
    std::vector<std::size_t> out;
    for (const auto& j : jumps) out.push_back(j.point);
    return out;
}

const ScalarField& FieldTrajectory::cell_start(std::size_t cell) const {
    if (const auto* j = find_jump(jumps, cell)) return j->post;
    const auto* f = field_at(cell);
    if (!f) throw ValidationError("field not stored; run with store_every = 1");
    return *f;
}

FieldTrajectory simulate_pde(const Problem& problem, const ContinuousControl& u, const PulseStrategy& v,
                             const SolverOptions& options) {
    check_control(problem, u);
    const TimeGrid& grid = problem.time;
    const SpaceGrid& space = problem.space;
    const std::size_t n_points = grid.point_count();
    const std::size_t every = std::max<std::size_t>(1, options.store_every);
    const double threshold = problem.chemical.sigma_star * space.volume();

    FieldTrajectory traj;
    traj.grid = space;
    traj.store_every = every;
    traj.times.assign(grid.points().begin(), grid.points().end());
    traj.state_integrals.resize(n_points);
    traj.l2_norms.resize(n_points);
    traj.min_values.resize(n_points);
    traj.max_values.resize(n_points);

    ScalarField theta = problem.initial;
    ScalarField next = theta;
    std::size_t next_pulse = 0;

    for (std::size_t n = 0; n < n_points; ++n) {
        traj.state_integrals[n] = theta.integral();
        traj.l2_norms[n] = theta.l2_norm();
        traj.min_values[n] = theta.min();
        traj.max_values[n] = theta.max();
        if (n % every == 0 || n + 1 == n_points) {
            traj.stored_points.push_back(n);
            traj.fields.push_back(theta);
        }
        if (grid.candidate_at_point(n) && traj.l2_norms[n] >= threshold) {
            if (next_pulse >= v.size()) {
                throw ValidationError("pulse strategy has " + std::to_string(v.size()) +
                                      " values but more pulses were realised");
            }
            const ScalarField& vi = v[next_pulse];
            if (!(vi.grid() == space)) throw ValidationError("pulse value grid mismatch");
            FieldJump jump{traj.times[n], n, next_pulse, theta, theta, vi};
            for (std::size_t p = 0; p < space.size(); ++p) jump.post[p] = vi[p] * theta[p];
            theta = jump.post;
            traj.jumps.push_back(std::move(jump));
            ++next_pulse;
        }
        if (n + 1 == n_points) break;
        const double h = grid.cell_length(n);
        const double t_mid = grid.cell_midpoint(n);
        const auto op = DiscreteOperator::for_cell(problem, u.at(n), t_mid);
        const auto source = alpha_source(problem, t_mid, h);
        cn_advance(op, h, theta.values(), source, next.values(), options.cg_tolerance);
        std::swap(theta, next);
    }
    return traj;
}

CostBreakdown cost_pde(const FieldTrajectory& traj, const PulseStrategy& v, const ContinuousControl& u,
                       const CostSpec& costs) {
    const std::size_t cells = traj.times.size() - 1;
    if (v.size() < traj.jumps.size() || costs.pulse_unit_costs.size() < traj.jumps.size()) {
        throw ValidationError("pulse strategy or pulse costs shorter than the realised pulse count");
    }
    if (u.cell_count() != cells || costs.continuous_unit_cost.size() != cells) {
        throw ValidationError("control or control cost does not match the trajectory");
    }
    if (!(costs.final_cost.grid() == traj.grid)) throw ValidationError("final cost grid mismatch");
    const double dv = traj.grid.cell_volume();

    CostBreakdown cb;
    std::vector<double> start(traj.state_integrals.begin(), traj.state_integrals.end() - 1);
    for (const auto& j : traj.jumps) {
        if (j.point < cells) start[j.point] = j.post.integral();
    }
    for (std::size_t n = 0; n < cells; ++n) {
        const double h = traj.times[n + 1] - traj.times[n];
        cb.running_state += 0.5 * h * (start[n] + traj.state_integrals[n + 1]);
        const auto& c = costs.continuous_unit_cost[n];
        const auto& un = u.at(n);
        double s = 0.0;
        for (std::size_t p = 0; p < un.size(); ++p) s += c[p] * un[p];
        cb.running_control += h * s * dv;
    }
    for (const auto& j : traj.jumps) {
        const auto& c = costs.pulse_unit_costs[j.pulse_index];
        const auto& vi = v[j.pulse_index];
        double s = 0.0;
        for (std::size_t p = 0; p < vi.size(); ++p) s += c[p] * (1.0 - vi[p]) * j.pre[p];
        cb.pulse += s * dv;
    }
    const auto& last = traj.final_field();
    double s = 0.0;
    for (std::size_t p = 0; p < last.size(); ++p) s += costs.final_cost[p] * last[p];
    cb.final = s * dv;
    cb.total = cb.running_state + cb.running_control + cb.pulse + cb.final;
    return cb;
}

AveragedTrajectory spatial_average(const FieldTrajectory& traj) {
    AveragedTrajectory out;
    const double vol = traj.grid.volume();
    const std::size_t cells = traj.times.size() - 1;
    out.times = traj.times;
    out.values.resize(traj.times.size());
    for (std::size_t n = 0; n < traj.times.size(); ++n) out.values[n] = traj.state_integrals[n] / vol;
    out.cell_start.assign(out.values.begin(), out.values.end() - 1);
    for (const auto& j : traj.jumps) {
        const double pre = j.pre.integral() / vol;
        const double post = j.post.integral() / vol;
        out.jumps.push_back({j.time, j.point, j.pulse_index, pre, post, j.v.mean()});
        if (j.point < cells) out.cell_start[j.point] = post;
    }
    out.cell_integrals.resize(cells);
    for (std::size_t n = 0; n < cells; ++n) {
        out.cell_integrals[n] = 0.5 * (traj.times[n + 1] - traj.times[n]) * (out.cell_start[n] + out.values[n + 1]);
    }
    return out;
}

FieldSensitivity sensitivity_pulse_pde(const Problem& problem, const ContinuousControl& u,
                                       const PulseStrategy& nominal, const PulseStrategy& direction,
                                       const SolverOptions& options) {
    SolverOptions fwd_options = options;
    fwd_options.store_every = problem.time.point_count();
    const auto traj = simulate_pde(problem, u, nominal, fwd_options);
    if (direction.size() < traj.jumps.size()) {
        throw ValidationError("direction shorter than the realised pulse count");
    }
    const TimeGrid& grid = problem.time;
    const std::size_t n_points = grid.point_count();
    const std::size_t n_space = problem.space.size();
    const std::vector<double> no_source(n_space, 0.0);

    FieldSensitivity z;
    z.integrals.resize(n_points);
    z.start_integrals.resize(n_points - 1);
    ScalarField cur = ScalarField::uniform(problem.space, 0.0);
    ScalarField next = cur;
    std::size_t j = 0;
    for (std::size_t n = 0; n < n_points; ++n) {
        z.integrals[n] = cur.integral();
        if (j < traj.jumps.size() && traj.jumps[j].point == n) {
            const auto& jump = traj.jumps[j];
            z.at_pulses.push_back(cur);
            const auto& d = direction[jump.pulse_index];
            for (std::size_t p = 0; p < n_space; ++p) cur[p] = d[p] * jump.pre[p] + jump.v[p] * cur[p];
            ++j;
        }
        if (n + 1 == n_points) break;
        z.start_integrals[n] = cur.integral();
        const auto op = DiscreteOperator::for_cell(problem, u.at(n), grid.cell_midpoint(n));
        cn_advance(op, grid.cell_length(n), cur.values(), no_source, next.values(), options.cg_tolerance);
        std::swap(cur, next);
    }
    z.final_field = cur;
    return z;
}

double pulse_directional_derivative(const FieldTrajectory& traj, const FieldSensitivity& z,
                                    const PulseStrategy& nominal, const PulseStrategy& direction,
                                    const CostSpec& costs) {
    const double dv = traj.grid.cell_volume();
    double acc = 0.0;
    for (std::size_t p = 0; p < z.final_field.size(); ++p) acc += costs.final_cost[p] * z.final_field[p] * dv;
    for (std::size_t n = 0; n + 1 < traj.times.size(); ++n) {
        acc += 0.5 * (traj.times[n + 1] - traj.times[n]) * (z.start_integrals[n] + z.integrals[n + 1]);
    }
    for (std::size_t i = 0; i < traj.jumps.size(); ++i) {
        const auto& jump = traj.jumps[i];
        const auto& c = costs.pulse_unit_costs[jump.pulse_index];
        const auto& vn = nominal[jump.pulse_index];
        const auto& d = direction[jump.pulse_index];
        double s = 0.0;
        for (std::size_t p = 0; p < c.size(); ++p) {
            s += c[p] * ((1.0 - vn[p]) * z.at_pulses[i][p] - d[p] * jump.pre[p]);
        }
        acc += s * dv;
    }
    return acc;
}

}  // namespace anthracnose
