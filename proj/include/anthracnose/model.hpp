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

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "anthracnose/core.hpp"

namespace anthracnose {

/// Seasonal inhibition pressure alpha(t, x) = a(x) * g(t) with the default
/// profile g(t) = (t - b)^2 (1 - cos(2 pi t / c)).
///
/// A custom profile replaces g; it is used for constant and piecewise-constant
/// test problems where closed forms are available.
class InhibitionPressure {
 public:
    using Profile = std::function<double(double)>;

    InhibitionPressure() = default;
    InhibitionPressure(ScalarField amplitude, double peak_time, double period);
    static InhibitionPressure with_profile(ScalarField amplitude, Profile profile);

    double operator()(double t, std::size_t point) const { return amplitude_[point] * profile(t); }
    double profile(double t) const;

    const ScalarField& amplitude() const { return amplitude_; }
    double peak_time() const { return peak_time_; }
    double period() const { return period_; }
    bool has_custom_profile() const { return static_cast<bool>(custom_); }

    /// Same time profile with the amplitude replaced (e.g. by its spatial mean).
    InhibitionPressure with_amplitude(ScalarField amplitude) const;

 private:
    ScalarField amplitude_;
    double peak_time_ = 0.75;
    double period_ = 0.2;
    Profile custom_;
};

/// Diagonal diffusion A = diag(A1, A2, A3) sampled on cell faces. For every
/// point and axis we keep the coefficient of the face towards the next point
/// along that axis; faces leaving the domain are held at exactly zero, which
/// realises the no-flux boundary.
class DiffusionField {
 public:
    DiffusionField() = default;
    explicit DiffusionField(const SpaceGrid& grid) : DiffusionField(grid, {0.0, 0.0, 0.0}) {}
    DiffusionField(const SpaceGrid& grid, std::array<double, 3> per_axis);
    static DiffusionField isotropic(const SpaceGrid& grid, double value) {
        return DiffusionField(grid, {value, value, value});
    }

    const SpaceGrid& grid() const { return grid_; }
    /// Coefficient on the face between `point` and `point + e_axis`.
    double face(std::size_t axis, std::size_t point) const { return faces_[axis][point]; }
    void set_face(std::size_t axis, std::size_t point, double value);
    double max_coefficient() const;
    const std::vector<double>& faces(std::size_t axis) const { return faces_[axis]; }

 private:
    SpaceGrid grid_;
    std::array<std::vector<double>, 3> faces_;
};

struct ChemicalParams {
    double sigma = 0.3;       // 1 - sigma is the attractor under full chemical effort
    double sigma_star = 0.0;  // observability threshold gating pulses
};

/// Chemical effort u(t, x), constant over each integration cell.
class ContinuousControl {
 public:
    ContinuousControl() = default;
    explicit ContinuousControl(std::vector<ScalarField> samples);
    static ContinuousControl constant(const SpaceGrid& grid, std::size_t cells, double value);

    std::size_t cell_count() const { return samples_.size(); }
    const ScalarField& at(std::size_t cell) const { return samples_[cell]; }
    ScalarField& at(std::size_t cell) { return samples_[cell]; }
    double scalar(std::size_t cell) const { return samples_[cell][0]; }
    const std::vector<ScalarField>& samples() const { return samples_; }

 private:
    std::vector<ScalarField> samples_;
};

/// Multiplicative pulse values v_i, applied in order at realised pulse times.
class PulseStrategy {
 public:
    PulseStrategy() = default;
    explicit PulseStrategy(std::vector<ScalarField> values) : values_(std::move(values)) {}
    static PulseStrategy uniform(const SpaceGrid& grid, const std::vector<double>& values);
    static PulseStrategy constant(const SpaceGrid& grid, std::size_t count, double value);

    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    const ScalarField& operator[](std::size_t i) const { return values_[i]; }
    ScalarField& operator[](std::size_t i) { return values_[i]; }
    double scalar(std::size_t i) const { return values_[i][0]; }
    const std::vector<ScalarField>& values() const { return values_; }

    bool operator==(const PulseStrategy&) const = default;

 private:
    std::vector<ScalarField> values_;
};

/// Coefficients of the cost functional. The weight of the running state
/// integral is fixed at 1.
struct CostSpec {
    std::vector<ScalarField> pulse_unit_costs;       // c_i, one per candidate pulse
    std::vector<ScalarField> continuous_unit_cost;   // C per integration cell
    ScalarField final_cost;                          // C_f

    static CostSpec constant(const SpaceGrid& grid, std::size_t pulses, std::size_t cells,
                             double pulse_cost, double control_cost, double final_cost);
};

struct CostBreakdown {
    double running_state = 0.0;
    double running_control = 0.0;
    double pulse = 0.0;
    double final = 0.0;
    double total = 0.0;
};

/// Everything the forward and backward solvers need apart from the controls.
struct Problem {
    SpaceGrid space;
    TimeGrid time;
    InhibitionPressure alpha;
    DiffusionField diffusion;
    ChemicalParams chemical;
    ScalarField initial;

    /// Spatially-averaged counterpart on a single-point grid: mean amplitude,
    /// mean initial condition, no diffusion.
    Problem averaged() const;
};

/// A problem together with its fixed continuous control and cost spec.
struct Bundle {
    Problem problem;
    ContinuousControl control;
    CostSpec costs;

    Bundle averaged() const;
};

struct ValidationReport {
    std::vector<std::string> issues;
    bool ok() const { return issues.empty(); }
    std::string str() const;
};

/// Lists every violated box constraint or grid inconsistency. An empty report
/// means the bundle is acceptable input for every solver.
ValidationReport validate(const Bundle& bundle, const PulseStrategy* pulses = nullptr);

/// Throws ValidationError carrying the report when it is not empty.
void require_valid(const Bundle& bundle, const PulseStrategy* pulses = nullptr);

double eval_inhibition_pressure(const InhibitionPressure& pressure, double t, std::size_t point);

/// q1 * (sin(pi i/N1) sin(pi j/N2) sin(pi k/N3))^(1/3) + q2 on grid point (i,j,k),
/// N = points - 1 per axis, with q2 = floor and q1 set so the grid mean equals
/// target_mean. Boundary faces get exactly q2.
ScalarField build_initial_condition(const SpaceGrid& grid, double target_mean, double floor);

/// Uniform (0,1) samples from a seeded 64-bit Mersenne twister, rescaled so the
/// grid mean equals target_mean.
ScalarField build_random_amplitude(const SpaceGrid& grid, double target_mean, std::uint64_t seed);

/// u = 0 on every cell of `problem`'s time grid.
ContinuousControl zero_control(const Problem& problem);

}  // namespace anthracnose
