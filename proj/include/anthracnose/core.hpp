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
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace anthracnose {

/// Thrown when a problem description violates a box constraint or a grid
/// consistency requirement.
class ValidationError : public std::invalid_argument {
 public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine cannot produce a result (non-finite
/// integrand, linear solver stagnation, ...).
class SolverError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// Regular Cartesian grid of (N1+1) x (N2+1) x (N3+1) points with a common
/// spacing. Point (i, j, k) sits at (i, j, k) * spacing.
class SpaceGrid {
 public:
    SpaceGrid() = default;
    SpaceGrid(std::array<std::size_t, 3> dims, double spacing);

    /// Single-point grid used by the spatially-averaged model.
    static SpaceGrid point() { return SpaceGrid({1, 1, 1}, 1.0); }

    const std::array<std::size_t, 3>& dims() const { return dims_; }
    double spacing() const { return spacing_; }
    std::size_t size() const { return dims_[0] * dims_[1] * dims_[2]; }

    double cell_volume() const { return spacing_ * spacing_ * spacing_; }
    /// Measure of the domain under the grid quadrature (point count * ds^3).
    double volume() const { return static_cast<double>(size()) * cell_volume(); }

    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
        return (k * dims_[1] + j) * dims_[0] + i;
    }
    std::array<std::size_t, 3> coords(std::size_t index) const;
    /// Index offset of one step along `axis`.
    std::size_t stride(std::size_t axis) const;

    bool operator==(const SpaceGrid&) const = default;

 private:
    std::array<std::size_t, 3> dims_{1, 1, 1};
    double spacing_ = 1.0;
};

/// One real value per grid point.
class ScalarField {
 public:
    ScalarField() = default;
    ScalarField(SpaceGrid grid, std::vector<double> values);
    static ScalarField uniform(const SpaceGrid& grid, double value);

    const SpaceGrid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    double sum() const;
    double mean() const;
    double min() const;
    double max() const;
    /// Grid quadrature of the field: sum * ds^3.
    double integral() const { return sum() * grid_.cell_volume(); }
    /// Grid quadrature of the L2 norm: (sum theta^2 ds^3)^(1/2).
    double l2_norm() const;
    bool is_uniform(double tolerance = 0.0) const;

    bool operator==(const ScalarField&) const = default;

 private:
    SpaceGrid grid_;
    std::vector<double> values_;
};

/// Integration grid on [0, t_end] refined so that every candidate pulse time
/// is a grid point. Each segment between consecutive breakpoints (0, pulse
/// times, t_end) is split into equal cells no longer than `max_step`.
class TimeGrid {
 public:
    TimeGrid() = default;

    /// Candidate pulse times j * pulse_interval, j >= 1, strictly inside (0, t_end).
    static TimeGrid regular(double t_end, double max_step, double pulse_interval);
    /// Arbitrary strictly increasing candidate times in [0, t_end).
    static TimeGrid with_pulse_times(double t_end, double max_step, std::vector<double> pulse_times);

    double t_end() const { return t_end_; }
    double step() const { return max_step_; }
    double pulse_interval() const { return pulse_interval_; }

    std::span<const double> points() const { return points_; }
    std::size_t point_count() const { return points_.size(); }
    std::size_t cell_count() const { return points_.size() - 1; }
    double cell_length(std::size_t cell) const { return points_[cell + 1] - points_[cell]; }
    double cell_midpoint(std::size_t cell) const { return 0.5 * (points_[cell] + points_[cell + 1]); }
    /// Cell whose half-open span [t_n, t_{n+1}) holds t; the last cell owns t_end.
    std::size_t cell_containing(double t) const;

    std::span<const double> candidate_pulse_times() const { return pulse_times_; }
    std::span<const std::size_t> candidate_points() const { return pulse_points_; }
    std::size_t candidate_count() const { return pulse_times_.size(); }
    /// Candidate ordinal located at grid point `point`, if any.
    std::optional<std::size_t> candidate_at_point(std::size_t point) const;

 private:
    double t_end_ = 0.0;
    double max_step_ = 0.0;
    double pulse_interval_ = 0.0;
    std::vector<double> points_;
    std::vector<double> pulse_times_;
    std::vector<std::size_t> pulse_points_;
    std::vector<std::ptrdiff_t> point_to_candidate_;
};

}  // namespace anthracnose
