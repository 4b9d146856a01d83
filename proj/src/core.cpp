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

#include "anthracnose/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace anthracnose {

SpaceGrid::SpaceGrid(std::array<std::size_t, 3> dims, double spacing)
        : dims_(dims), spacing_(spacing) {
    for (auto d : dims_) {
        if (d < 1) throw ValidationError("grid dims must all be >= 1");
    }
    if (!(spacing_ > 0.0) || !std::isfinite(spacing_)) {
        throw ValidationError("grid spacing must be positive");
    }
}

std::array<std::size_t, 3> SpaceGrid::coords(std::size_t index) const {
    const std::size_t i = index % dims_[0];
    const std::size_t j = (index / dims_[0]) % dims_[1];
    const std::size_t k = index / (dims_[0] * dims_[1]);
    return {i, j, k};
}

std::size_t SpaceGrid::stride(std::size_t axis) const {
    switch (axis) {
        case 0: return 1;
        case 1: return dims_[0];
        default: return dims_[0] * dims_[1];
    }
}

ScalarField::ScalarField(SpaceGrid grid, std::vector<double> values)
        : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        throw ValidationError("field value count " + std::to_string(values_.size()) +
                              " does not match grid point count " + std::to_string(grid_.size()));
    }
}

ScalarField ScalarField::uniform(const SpaceGrid& grid, double value) {
    return ScalarField(grid, std::vector<double>(grid.size(), value));
}

double ScalarField::sum() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0);
}

double ScalarField::mean() const {
    return values_.empty() ? 0.0 : sum() / static_cast<double>(values_.size());
}

double ScalarField::min() const {
    return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double ScalarField::max() const {
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double ScalarField::l2_norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s * grid_.cell_volume());
}

bool ScalarField::is_uniform(double tolerance) const {
    if (values_.empty()) return true;
    const double first = values_.front();
    return std::all_of(values_.begin(), values_.end(),
                       [&](double v) { return std::abs(v - first) <= tolerance; });
}

namespace {

// Relative slack used when matching pulse times against t_end.
constexpr double kTimeSlack = 1e-12;

}  // namespace

TimeGrid TimeGrid::regular(double t_end, double max_step, double pulse_interval) {
    if (!(pulse_interval > 0.0)) throw ValidationError("pulse interval must be positive");
    if (!(t_end > 0.0)) throw ValidationError("t_end must be positive");
    std::vector<double> times;
    for (std::size_t j = 1;; ++j) {
        const double t = static_cast<double>(j) * pulse_interval;
        if (t >= t_end * (1.0 - kTimeSlack)) break;
        times.push_back(t);
    }
    TimeGrid grid = with_pulse_times(t_end, max_step, std::move(times));
    grid.pulse_interval_ = pulse_interval;
    return grid;
}

TimeGrid TimeGrid::with_pulse_times(double t_end, double max_step, std::vector<double> pulse_times) {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ValidationError("t_end must be positive");
    if (!(max_step > 0.0) || !std::isfinite(max_step)) throw ValidationError("step must be positive");
    for (std::size_t i = 0; i < pulse_times.size(); ++i) {
        if (pulse_times[i] < 0.0 || pulse_times[i] >= t_end) {
            throw ValidationError("candidate pulse times must lie in [0, t_end)");
        }
        if (i > 0 && !(pulse_times[i] > pulse_times[i - 1])) {
            throw ValidationError("candidate pulse times must be strictly increasing");
        }
    }

    TimeGrid grid;
    grid.t_end_ = t_end;
    grid.max_step_ = max_step;
    grid.pulse_times_ = std::move(pulse_times);

    std::vector<double> breaks{0.0};
    for (double t : grid.pulse_times_) {
        if (t > 0.0) breaks.push_back(t);
    }
    breaks.push_back(t_end);

    grid.points_.push_back(0.0);
    for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
        const double a = breaks[s];
        const double b = breaks[s + 1];
        const auto cells = static_cast<std::size_t>(
                std::max(1.0, std::ceil((b - a) / max_step - 1e-9)));
        for (std::size_t c = 1; c < cells; ++c) {
            grid.points_.push_back(a + (b - a) * static_cast<double>(c) / static_cast<double>(cells));
        }
        grid.points_.push_back(b);
    }

    grid.point_to_candidate_.assign(grid.points_.size(), -1);
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < grid.pulse_times_.size(); ++i) {
        const double t = grid.pulse_times_[i];
        while (cursor < grid.points_.size() && grid.points_[cursor] < t) ++cursor;
        // Breakpoints are inserted verbatim, so the match is exact.
        grid.pulse_points_.push_back(cursor);
        grid.point_to_candidate_[cursor] = static_cast<std::ptrdiff_t>(i);
    }
    return grid;
}

std::size_t TimeGrid::cell_containing(double t) const {
    if (t <= points_.front()) return 0;
    auto it = std::upper_bound(points_.begin(), points_.end(), t);
    const auto idx = static_cast<std::size_t>(it - points_.begin());
    return std::min(idx == 0 ? 0 : idx - 1, cell_count() - 1);
}

std::optional<std::size_t> TimeGrid::candidate_at_point(std::size_t point) const {
    if (point >= point_to_candidate_.size() || point_to_candidate_[point] < 0) return std::nullopt;
    return static_cast<std::size_t>(point_to_candidate_[point]);
}

}  // namespace anthracnose
