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

#include "anthracnose/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

namespace anthracnose {

std::vector<std::size_t> StrategyResult::intervention_points() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < realized_points.size() && i < pulses.size(); ++i) {
        if (pulses[i].min() < 1.0) out.push_back(realized_points[i]);
    }
    return out;
}

namespace {

Bundle model_bundle(const Bundle& bundle, ModelKind model) {
    if (model == ModelKind::averaged && bundle.problem.space.size() != 1) return bundle.averaged();
    return bundle;
}

struct Evaluation {
    CostBreakdown cost;
    std::vector<std::size_t> points;
    std::optional<AveragedTrajectory> averaged;
    std::optional<FieldTrajectory> field;
};

Evaluation run_forward(const Bundle& b, ModelKind model, const ContinuousControl& u, const PulseStrategy& v,
                       const SolverOptions& options, bool keep_fields) {
    Evaluation e;
    if (model == ModelKind::averaged) {
        e.averaged = simulate_averaged(b.problem, u, v);
        e.cost = cost_averaged(*e.averaged, v, u, b.costs);
        e.points = e.averaged->realized_points();
    } else {
        SolverOptions opt = options;
        opt.store_every = keep_fields ? 1 : b.problem.time.point_count();
        e.field = simulate_pde(b.problem, u, v, opt);
        e.cost = cost_pde(*e.field, v, u, b.costs);
        e.points = e.field->realized_points();
    }
    return e;
}

AdjointTrajectory run_sweep(const Bundle& b, ModelKind model, const ContinuousControl& u,
                            std::span<const std::size_t> points, const JumpRule& rule, const SolverOptions& options) {
    if (model == ModelKind::averaged) return backward_sweep_averaged(b.problem, u, b.costs, points, rule);
    return backward_sweep_pde(b.problem, u, b.costs, points, rule, options);
}

JumpRule bang_bang_rule(const CostSpec& costs, double tie) {
    return [&costs, tie](std::size_t i, const ScalarField& p_plus) {
        ScalarField v = p_plus;
        const auto& c = costs.pulse_unit_costs[i];
        for (std::size_t x = 0; x < v.size(); ++x) v[x] = (p_plus[x] - c[x] > tie) ? 0.0 : 1.0;
        return v;
    };
}

JumpRule fixed_rule(const PulseStrategy& v) {
    return [&v](std::size_t i, const ScalarField&) { return v[i]; };
}

// Strategy over all candidates: the sweep's choices for the realised pulses, then ones.
PulseStrategy padded_strategy(const Bundle& b, const AdjointTrajectory& adj) {
    PulseStrategy v = PulseStrategy::constant(b.problem.space, b.problem.time.candidate_count(), 1.0);
    for (const auto& j : adj.jumps) v[j.pulse_index] = j.v;
    return v;
}

std::vector<ScalarField> products_for(const Bundle& b, ModelKind model, const Evaluation& e,
                                      const AdjointTrajectory& adj, const ContinuousControl& u) {
    if (model == ModelKind::averaged) return costate_state_products(b.problem, *e.averaged, adj, u);
    return costate_state_products(b.problem, *e.field, adj);
}

std::vector<ControlCertificate> control_certificate(const Bundle& b, const std::vector<ScalarField>& products,
                                                    const ContinuousControl& u) {
    const double sigma = b.problem.chemical.sigma;
    const TimeGrid& grid = b.problem.time;
    std::vector<ControlCertificate> out;
    if (sigma >= 1.0) return out;
    for (std::size_t n = 0; n < grid.cell_count(); ++n) {
        const double t_mid = grid.cell_midpoint(n);
        ControlCertificate cc;
        cc.time = grid.points()[n];
        cc.cell = n;
        cc.switching = products[n];
        cc.margin = products[n];
        cc.u = u.at(n);
        for (std::size_t x = 0; x < cc.switching.size(); ++x) {
            cc.switching[x] = sigma * b.problem.alpha(t_mid, x) * products[n][x] / (1.0 - sigma);
            cc.margin[x] = b.costs.continuous_unit_cost[n][x] - cc.switching[x];
        }
        out.push_back(std::move(cc));
    }
    return out;
}

std::vector<PulseCertificate> pulse_certificate(const AdjointTrajectory& adj) {
    std::vector<PulseCertificate> out;
    for (const auto& j : adj.jumps) {
        PulseCertificate pc{j.time, j.point, j.pulse_index, j.p_plus, j.c, j.v, j.p_plus};
        for (std::size_t x = 0; x < pc.margin.size(); ++x) pc.margin[x] = j.p_plus[x] - j.c[x];
        out.push_back(std::move(pc));
    }
    return out;
}

// Forward run with full storage plus the adjoint under the result's own strategy.
void attach_certificates(StrategyResult& r, const Bundle& b, const OptimizerOptions& options) {
    const auto e = run_forward(b, r.model, r.control, r.pulses, options.solver, true);
    const auto adj = run_sweep(b, r.model, r.control, e.points, fixed_rule(r.pulses), options.solver);
    r.cost = e.cost;
    r.realized_points = e.points;
    r.pulse_certificate = pulse_certificate(adj);
    r.control_certificate = control_certificate(b, products_for(b, r.model, e, adj, r.control), r.control);
}

void require_pulse_costs(const Bundle& b) {
    if (b.costs.pulse_unit_costs.size() < b.problem.time.candidate_count()) {
        throw ValidationError("pulse cost list shorter than the candidate count");
    }
}

struct PulseSolve {
    PulseStrategy v;
    Evaluation eval;
    AdjointTrajectory adj;
};

// Bang-bang sweep over every candidate (sigma_star = 0) for a given control.
PulseSolve solve_pulses(const Bundle& b, ModelKind model, const ContinuousControl& u, const OptimizerOptions& options,
                        bool keep_fields) {
    const auto points = b.problem.time.candidate_points();
    PulseSolve s;
    auto sweep = run_sweep(b, model, u, points, bang_bang_rule(b.costs, options.tie_tolerance), options.solver);
    s.v = padded_strategy(b, sweep);
    s.eval = run_forward(b, model, u, s.v, options.solver, keep_fields);
    if (keep_fields) s.adj = std::move(sweep);
    return s;
}

std::string join_points(const std::vector<std::size_t>& pts) {
    std::ostringstream os;
    os << '{';
    for (std::size_t i = 0; i < pts.size(); ++i) os << (i ? "," : "") << pts[i];
    os << '}';
    return os.str();
}

}  // namespace

CostBreakdown evaluate_cost(const Bundle& bundle, ModelKind model, const PulseStrategy& v,
                            const SolverOptions& options) {
    const Bundle b = model_bundle(bundle, model);
    return run_forward(b, model, b.control, v, options, false).cost;
}

StrategyResult optimal_pulse(const Bundle& bundle, ModelKind model, const OptimizerOptions& options) {
    const Bundle b = model_bundle(bundle, model);
    if (b.problem.chemical.sigma_star != 0.0) {
        throw ValidationError("optimal_pulse requires sigma_star = 0; use fixed_point_pulse");
    }
    require_pulse_costs(b);
    auto s = solve_pulses(b, model, b.control, options, true);
    StrategyResult r;
    r.model = model;
    r.pulses = std::move(s.v);
    r.control = b.control;
    r.cost = s.eval.cost;
    r.realized_points = s.eval.points;
    r.pulse_certificate = pulse_certificate(s.adj);
    r.control_certificate = control_certificate(b, products_for(b, model, s.eval, s.adj, b.control), b.control);
    r.cost_history = {r.cost.total};
    r.iterations = 1;
    return r;
}

BruteForceResult brute_force_pulse(const Bundle& bundle, ModelKind model, const BruteForceOptions& bf,
                                   const OptimizerOptions& options) {
    const Bundle b = model_bundle(bundle, model);
    require_pulse_costs(b);
    const std::size_t k = b.problem.time.candidate_count();
    const std::size_t n_space = b.problem.space.size();
    const std::size_t bits = k * n_space;
    const std::size_t cap = std::min<std::size_t>(bf.max_bits, 20);
    if (bits > cap) {
        throw ValidationError("brute force needs " + std::to_string(bits) + " bits, cap is " + std::to_string(cap));
    }
    const std::uint64_t total = std::uint64_t{1} << bits;

    auto strategy_for = [&](std::uint64_t mask) {
        PulseStrategy v = PulseStrategy::constant(b.problem.space, k, 1.0);
        for (std::size_t f = 0; f < bits; ++f) {
            // flat index f maps to the high bits first, so numeric order is lexicographic order
            v[f / n_space][f % n_space] = static_cast<double>((mask >> (bits - 1 - f)) & 1u);
        }
        return v;
    };

    std::size_t workers = bf.threads ? bf.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<std::size_t>(std::min<std::uint64_t>(workers, total));
    struct Best {
        double cost = std::numeric_limits<double>::infinity();
        std::uint64_t mask = 0;
        std::exception_ptr error;
    };
    std::vector<Best> best(workers);
    auto work = [&](std::size_t w) {
        try {
            for (std::uint64_t m = w; m < total; m += workers) {
                const double c = run_forward(b, model, b.control, strategy_for(m), options.solver, false).cost.total;
                if (c < best[w].cost || (c == best[w].cost && m < best[w].mask)) best[w] = {c, m, nullptr};
            }
        } catch (...) {
            best[w].error = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    Best winner;
    for (const auto& wb : best) {
        if (wb.error) std::rethrow_exception(wb.error);
        if (wb.cost < winner.cost || (wb.cost == winner.cost && wb.mask < winner.mask)) winner = wb;
    }

    BruteForceResult out;
    out.evaluated = static_cast<std::size_t>(total);
    out.best.model = model;
    out.best.pulses = strategy_for(winner.mask);
    out.best.control = b.control;
    out.best.iterations = out.evaluated;
    attach_certificates(out.best, b, options);
    out.best.cost_history = {out.best.cost.total};

    if (bf.interior_samples > 0) {
        std::mt19937_64 rng(bf.seed);
        double best_interior = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < bf.interior_samples; ++s) {
            PulseStrategy v = PulseStrategy::constant(b.problem.space, k, 1.0);
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t x = 0; x < n_space; ++x) {
                    v[i][x] = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
                }
            }
            best_interior =
                std::min(best_interior, run_forward(b, model, b.control, v, options.solver, false).cost.total);
        }
        out.best_interior_cost = best_interior;
    }
    return out;
}

StrategyResult fixed_point_pulse(const Bundle& bundle, ModelKind model, std::size_t max_iterations,
                                 const OptimizerOptions& options) {
    const Bundle b = model_bundle(bundle, model);
    if (b.problem.chemical.sigma_star == 0.0) return optimal_pulse(b, model, options);
    require_pulse_costs(b);

    const std::size_t k = b.problem.time.candidate_count();
    StrategyResult r;
    r.model = model;
    r.control = b.control;
    r.converged = false;
    PulseStrategy v = PulseStrategy::constant(b.problem.space, k, 1.0);
    std::vector<std::vector<std::size_t>> seen;
    for (std::size_t it = 1; it <= max_iterations; ++it) {
        r.iterations = it;
        const auto points = run_forward(b, model, b.control, v, options.solver, false).points;
        const auto sweep = run_sweep(b, model, b.control, points, bang_bang_rule(b.costs, options.tie_tolerance),
                                     options.solver);
        PulseStrategy next = padded_strategy(b, sweep);
        const auto e = run_forward(b, model, b.control, next, options.solver, false);
        r.cost_history.push_back(e.cost.total);
        v = std::move(next);
        if (e.points == points) {
            r.converged = true;
            break;
        }
        if (std::find(seen.begin(), seen.end(), e.points) != seen.end()) {
            r.diagnostics = "cycle between pulse sets " + join_points(points) + " and " + join_points(e.points);
            break;
        }
        seen.push_back(points);
    }
    if (!r.converged && r.diagnostics.empty()) {
        r.diagnostics = "iteration cap " + std::to_string(max_iterations) + " reached";
    }
    r.pulses = std::move(v);
    attach_certificates(r, b, options);
    return r;
}

namespace {

ContinuousControl clamp_step(const ContinuousControl& u, const std::vector<ScalarField>& g, double step) {
    ContinuousControl out = u;
    for (std::size_t n = 0; n < u.cell_count(); ++n) {
        auto& un = out.at(n);
        for (std::size_t x = 0; x < un.size(); ++x) un[x] = std::clamp(un[x] - step * g[n][x], 0.0, 1.0);
    }
    return out;
}

double max_change(const ContinuousControl& a, const ContinuousControl& b) {
    double d = 0.0;
    for (std::size_t n = 0; n < a.cell_count(); ++n) {
        for (std::size_t x = 0; x < a.at(n).size(); ++x) d = std::max(d, std::abs(a.at(n)[x] - b.at(n)[x]));
    }
    return d;
}

ContinuousControl switching_control(const std::vector<ControlCertificate>& cert, const ContinuousControl& u,
                                    double tol) {
    ContinuousControl out = u;
    for (const auto& cc : cert) {
        auto& un = out.at(cc.cell);
        for (std::size_t x = 0; x < un.size(); ++x) {
            if (cc.margin[x] > tol) un[x] = 0.0;
            else if (cc.margin[x] < -tol) un[x] = 1.0;
        }
    }
    return out;
}

constexpr double kSwitchTolerance = 1e-6;

}  // namespace

StrategyResult projected_gradient_mixed(const Bundle& bundle, ModelKind model, const MixedOptions& mixed,
                                        const OptimizerOptions& options) {
    Bundle b = model_bundle(bundle, model);
    if (b.problem.chemical.sigma_star != 0.0) {
        throw ValidationError("projected_gradient_mixed requires sigma_star = 0");
    }
    require_pulse_costs(b);
    if (b.control.cell_count() != b.problem.time.cell_count()) {
        throw ValidationError("initial control does not match the time grid");
    }
    if (b.problem.chemical.sigma == 0.0) {
        b.control = ContinuousControl::constant(b.problem.space, b.problem.time.cell_count(), 0.0);
        auto r = optimal_pulse(b, model, options);
        r.control_optimized = true;
        return r;
    }

    ContinuousControl u = b.control;
    for (std::size_t n = 0; n < u.cell_count(); ++n) {
        for (std::size_t x = 0; x < u.at(n).size(); ++x) u.at(n)[x] = std::clamp(u.at(n)[x], 0.0, 1.0);
    }
    auto cur = solve_pulses(b, model, u, options, true);
    StrategyResult r;
    r.model = model;
    r.control_optimized = true;
    r.converged = false;
    r.cost_history = {cur.eval.cost.total};

    auto try_control = [&](const ContinuousControl& cand) { return solve_pulses(b, model, cand, options, true); };

    for (std::size_t it = 1; it <= mixed.max_iterations; ++it) {
        r.iterations = it;
        const double J = cur.eval.cost.total;
        const auto products = products_for(b, model, cur.eval, cur.adj, u);
        const GradientReport g =
            model == ModelKind::averaged
                ? gradient_continuous(b.problem, *cur.eval.averaged, cur.adj, u, b.costs)
                : gradient_continuous(b.problem, *cur.eval.field, cur.adj, u, b.costs);

        std::optional<PulseSolve> step;
        ContinuousControl step_u;
        double gamma = mixed.initial_step;
        for (std::size_t h = 0; h <= mixed.max_halvings; ++h, gamma *= mixed.backtrack) {
            auto cand_u = clamp_step(u, g.continuous_gradient, gamma);
            if (max_change(cand_u, u) == 0.0) break;
            auto cand = try_control(cand_u);
            if (cand.eval.cost.total < J) {
                step = std::move(cand);
                step_u = std::move(cand_u);
                break;
            }
        }

        if (mixed.switching_moves) {
            auto sw_u = switching_control(control_certificate(b, products, u), u, kSwitchTolerance);
            if (max_change(sw_u, u) > 0.0) {
                auto sw = try_control(sw_u);
                if (sw.eval.cost.total < J && (!step || sw.eval.cost.total < step->eval.cost.total)) {
                    step = std::move(sw);
                    step_u = std::move(sw_u);
                }
            }
        }
        if (!step) {
            r.converged = true;
            r.diagnostics = "no descent step after " + std::to_string(mixed.max_halvings) + " halvings";
            break;
        }
        const bool small = max_change(step_u, u) <= mixed.control_tolerance ||
                           J - step->eval.cost.total <= mixed.cost_tolerance;
        u = std::move(step_u);
        cur = std::move(*step);
        r.cost_history.push_back(cur.eval.cost.total);
        if (small) {
            r.converged = true;
            break;
        }
    }
    if (!r.converged) r.diagnostics = "iteration cap " + std::to_string(mixed.max_iterations) + " reached";

    r.pulses = std::move(cur.v);
    r.control = u;
    r.cost = cur.eval.cost;
    r.realized_points = cur.eval.points;
    // the pulse sweep's adjoint is the adjoint of (u, v*), so the certificate reuses it
    r.pulse_certificate = pulse_certificate(cur.adj);
    r.control_certificate = control_certificate(b, products_for(b, model, cur.eval, cur.adj, u), u);
    return r;
}

CertificateReport certificate_check(const StrategyResult& result, const Bundle& bundle, double tolerance,
                                    const OptimizerOptions& options) {
    const Bundle b = model_bundle(bundle, result.model);
    const auto e = run_forward(b, result.model, result.control, result.pulses, options.solver, true);
    const auto adj = run_sweep(b, result.model, result.control, e.points, fixed_rule(result.pulses), options.solver);
    const double dv = b.problem.space.cell_volume();
    CertificateReport rep;

    auto check = [&](const std::string& kind, std::size_t index, std::size_t point, double value, double weight,
                     double dd) {
        ++rep.checked;
        const double d = weight * dd;
        if (value > 0.0 && -d < -tolerance) rep.violations.push_back({kind, index, point, -d});
        if (value < 1.0 && d < -tolerance) rep.violations.push_back({kind, index, point, d});
    };

    const GradientReport gp = result.model == ModelKind::averaged ? gradient_pulse(*e.averaged, adj, b.costs)
                                                                  : gradient_pulse(*e.field, adj, b.costs);
    for (std::size_t i = 0; i < gp.pulse_gradient.size(); ++i) {
        const auto& v = result.pulses[adj.jumps[i].pulse_index];
        for (std::size_t x = 0; x < v.size(); ++x) check("pulse", i, x, v[x], dv, gp.pulse_gradient[i][x]);
    }

    if (result.control_optimized) {
        const GradientReport gc =
            result.model == ModelKind::averaged
                ? gradient_continuous(b.problem, *e.averaged, adj, result.control, b.costs)
                : gradient_continuous(b.problem, *e.field, adj, result.control, b.costs);
        for (std::size_t n = 0; n < gc.continuous_gradient.size(); ++n) {
            const double w = b.problem.time.cell_length(n) * dv;
            const auto& un = result.control.at(n);
            for (std::size_t x = 0; x < un.size(); ++x) check("control", n, x, un[x], w, gc.continuous_gradient[n][x]);
        }
        for (const auto& cc : control_certificate(b, products_for(b, result.model, e, adj, result.control),
                                                  result.control)) {
            for (std::size_t x = 0; x < cc.u.size(); ++x) {
                if (std::abs(cc.margin[x]) <= kSwitchTolerance) continue;
                ++rep.switching_samples;
                const double want = cc.margin[x] > 0.0 ? 0.0 : 1.0;
                if (cc.u[x] == want) ++rep.switching_agree;
            }
        }
    }
    return rep;
}

}  // namespace anthracnose
