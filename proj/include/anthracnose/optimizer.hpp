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

// Strategy computation for both model variants.
//
// Pulse strategies always carry one value per candidate time; the i-th
// realised pulse consumes entry i, and unused trailing entries are 1.
// With sigma_star = 0 every candidate is realised.

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "anthracnose/adjoint.hpp"
#include "anthracnose/model.hpp"
#include "anthracnose/pde.hpp"

namespace anthracnose {

enum class ModelKind { averaged, pde };

struct OptimizerOptions {
    SolverOptions solver;
    double tie_tolerance = 1e-12;  // |p - c| within this picks v = 1
};

struct PulseCertificate {
    double time = 0.0;
    std::size_t point = 0;
    std::size_t pulse_index = 0;
    ScalarField p_plus;
    ScalarField c;
    ScalarField v;
    ScalarField margin;  // p(tau_i+) - c_i
};

/// Switching test for the chemical control on one cell: u = 0 is optimal where
/// C > S = sigma alpha p theta / (1 - sigma), u = 1 where C < S.
struct ControlCertificate {
    double time = 0.0;  // cell start
    std::size_t cell = 0;
    ScalarField switching;  // S
    ScalarField margin;     // C - S
    ScalarField u;
};

struct StrategyResult {
    ModelKind model = ModelKind::averaged;
    PulseStrategy pulses;
    ContinuousControl control;
    bool control_optimized = false;
    CostBreakdown cost;
    std::vector<std::size_t> realized_points;
    std::vector<PulseCertificate> pulse_certificate;
    std::vector<ControlCertificate> control_certificate;
    std::vector<double> cost_history;
    std::size_t iterations = 0;
    bool converged = true;
    std::string diagnostics;

    /// Realised pulse points where v < 1 somewhere on the grid.
    std::vector<std::size_t> intervention_points() const;
    std::size_t intervention_count() const { return intervention_points().size(); }
};

/// Bang-bang pulse strategy from a single backward sweep. Requires sigma_star = 0.
StrategyResult optimal_pulse(const Bundle& bundle, ModelKind model, const OptimizerOptions& options = {});

struct BruteForceOptions {
    std::size_t max_bits = 20;
    std::size_t interior_samples = 0;  // random strategies in [0,1]^k, for the bang-bang check
    std::uint64_t seed = 0;
    std::size_t threads = 0;  // 0: hardware concurrency
};

struct BruteForceResult {
    StrategyResult best;
    std::size_t evaluated = 0;
    double best_interior_cost = std::numeric_limits<double>::quiet_NaN();
};

/// Exhaustive minimum over vertex strategies, one bit per (candidate, grid
/// point). Ties go to the lexicographically smallest strategy.
BruteForceResult brute_force_pulse(const Bundle& bundle, ModelKind model, const BruteForceOptions& bf = {},
                                   const OptimizerOptions& options = {});

/// Alternates forward runs and backward bang-bang sweeps on the realised
/// pulse set until the set stops changing. Delegates to optimal_pulse when
/// sigma_star = 0.
StrategyResult fixed_point_pulse(const Bundle& bundle, ModelKind model, std::size_t max_iterations = 50,
                                 const OptimizerOptions& options = {});

struct MixedOptions {
    double initial_step = 1.0;
    double backtrack = 0.5;
    std::size_t max_halvings = 40;
    std::size_t max_iterations = 200;
    double control_tolerance = 1e-6;
    double cost_tolerance = 1e-10;
    bool switching_moves = true;  // also try the bang-bang switching candidate each iteration
};

/// Projected gradient on u with backtracking, re-solving the pulse strategy
/// after every control update. Starts from bundle.control.
StrategyResult projected_gradient_mixed(const Bundle& bundle, ModelKind model, const MixedOptions& mixed = {},
                                        const OptimizerOptions& options = {});

struct CertificateViolation {
    std::string kind;  // "pulse" or "control"
    std::size_t index = 0;
    std::size_t point = 0;
    double derivative = 0.0;
};

struct CertificateReport {
    std::size_t checked = 0;
    std::vector<CertificateViolation> violations;
    std::size_t switching_samples = 0;  // control samples with |margin| > 1e-6
    std::size_t switching_agree = 0;

    bool ok() const { return violations.empty(); }
    double switching_agreement() const {
        return switching_samples == 0 ? 1.0 : static_cast<double>(switching_agree) / switching_samples;
    }
};

/// First-order check: every admissible coordinate direction has directional
/// derivative >= -tolerance. Control coordinates are checked only when the
/// result optimised u.
CertificateReport certificate_check(const StrategyResult& result, const Bundle& bundle,
                                    double tolerance = 1e-8, const OptimizerOptions& options = {});

/// Forward cost of (bundle.control, v) under the chosen model.
CostBreakdown evaluate_cost(const Bundle& bundle, ModelKind model, const PulseStrategy& v,
                            const SolverOptions& options = {});

}  // namespace anthracnose
