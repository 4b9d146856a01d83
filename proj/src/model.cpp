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

#include "anthracnose/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace anthracnose {

InhibitionPressure::InhibitionPressure(ScalarField amplitude, double peak_time, double period)
        : amplitude_(std::move(amplitude)), peak_time_(peak_time), period_(period) {}

InhibitionPressure InhibitionPressure::with_profile(ScalarField amplitude, Profile profile) {
    InhibitionPressure p;
    p.amplitude_ = std::move(amplitude);
    p.custom_ = std::move(profile);
    return p;
}

double InhibitionPressure::profile(double t) const {
    if (custom_) return custom_(t);
    const double d = t - peak_time_;
    return d * d * (1.0 - std::cos(2.0 * std::numbers::pi * t / period_));
}

InhibitionPressure InhibitionPressure::with_amplitude(ScalarField amplitude) const {
    InhibitionPressure p = *this;
    p.amplitude_ = std::move(amplitude);
    return p;
}

double eval_inhibition_pressure(const InhibitionPressure& pressure, double t, std::size_t point) {
    return pressure(t, point);
}

DiffusionField::DiffusionField(const SpaceGrid& grid, std::array<double, 3> per_axis) : grid_(grid) {
    const auto& dims = grid.dims();
    for (std::size_t axis = 0; axis < 3; ++axis) {
        faces_[axis].assign(grid.size(), 0.0);
        for (std::size_t p = 0; p < grid.size(); ++p) {
            if (grid.coords(p)[axis] + 1 < dims[axis]) faces_[axis][p] = per_axis[axis];
        }
    }
}

void DiffusionField::set_face(std::size_t axis, std::size_t point, double value) {
    if (grid_.coords(point)[axis] + 1 >= grid_.dims()[axis]) {
        throw ValidationError("cannot set a face that leaves the domain");
    }
    faces_[axis][point] = value;
}

double DiffusionField::max_coefficient() const {
    double m = 0.0;
    for (const auto& f : faces_) {
        for (double v : f) m = std::max(m, v);
    }
    return m;
}

ContinuousControl::ContinuousControl(std::vector<ScalarField> samples) : samples_(std::move(samples)) {}

ContinuousControl ContinuousControl::constant(const SpaceGrid& grid, std::size_t cells, double value) {
    return ContinuousControl(std::vector<ScalarField>(cells, ScalarField::uniform(grid, value)));
}

PulseStrategy PulseStrategy::uniform(const SpaceGrid& grid, const std::vector<double>& values) {
    std::vector<ScalarField> fields;
    fields.reserve(values.size());
    for (double v : values) fields.push_back(ScalarField::uniform(grid, v));
    return PulseStrategy(std::move(fields));
}

PulseStrategy PulseStrategy::constant(const SpaceGrid& grid, std::size_t count, double value) {
    return PulseStrategy(std::vector<ScalarField>(count, ScalarField::uniform(grid, value)));
}

CostSpec CostSpec::constant(const SpaceGrid& grid, std::size_t pulses, std::size_t cells,
                            double pulse_cost, double control_cost, double final_cost) {
    CostSpec c;
    c.pulse_unit_costs.assign(pulses, ScalarField::uniform(grid, pulse_cost));
    c.continuous_unit_cost.assign(cells, ScalarField::uniform(grid, control_cost));
    c.final_cost = ScalarField::uniform(grid, final_cost);
    return c;
}

namespace {

ScalarField mean_field(const ScalarField& f) {
    return ScalarField::uniform(SpaceGrid::point(), f.mean());
}

std::vector<ScalarField> mean_fields(const std::vector<ScalarField>& fs) {
    std::vector<ScalarField> out;
    out.reserve(fs.size());
    for (const auto& f : fs) out.push_back(mean_field(f));
    return out;
}

}  // namespace

Problem Problem::averaged() const {
    Problem p;
    p.space = SpaceGrid::point();
    p.time = time;
    p.alpha = alpha.with_amplitude(mean_field(alpha.amplitude()));
    p.diffusion = DiffusionField(p.space);
    p.chemical = chemical;
    p.initial = mean_field(initial);
    return p;
}

Bundle Bundle::averaged() const {
    Bundle b;
    b.problem = problem.averaged();
    b.control = ContinuousControl(mean_fields(control.samples()));
    b.costs.pulse_unit_costs = mean_fields(costs.pulse_unit_costs);
    b.costs.continuous_unit_cost = mean_fields(costs.continuous_unit_cost);
    b.costs.final_cost = mean_field(costs.final_cost);
    return b;
}

std::string ValidationReport::str() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < issues.size(); ++i) {
        if (i) os << "; ";
        os << issues[i];
    }
    return os.str();
}

namespace {

class Reporter {
 public:
    explicit Reporter(ValidationReport& r) : report_(r) {}

    void add(std::string msg) { report_.issues.push_back(std::move(msg)); }

    void grid_match(const ScalarField& f, const SpaceGrid& g, const std::string& what) {
        if (!(f.grid() == g) || f.size() != g.size()) add(what + ": grid mismatch");
    }

    // Reports the first offending point only; one line per field keeps the
    // report readable on large grids.
    void box(const ScalarField& f, double lo, double hi, const std::string& what) {
        for (std::size_t p = 0; p < f.size(); ++p) {
            if (!(f[p] >= lo && f[p] <= hi)) {
                std::ostringstream os;
                os << what << " out of [" << lo << "," << hi << "] at point " << p << " (value " << f[p] << ")";
                add(os.str());
                return;
            }
        }
    }

    void nonnegative(const ScalarField& f, const std::string& what) {
        for (std::size_t p = 0; p < f.size(); ++p) {
            if (!(f[p] >= 0.0) || !std::isfinite(f[p])) {
                std::ostringstream os;
                os << what << " negative or non-finite at point " << p << " (value " << f[p] << ")";
                add(os.str());
                return;
            }
        }
    }

 private:
    ValidationReport& report_;
};

}  // namespace

ValidationReport validate(const Bundle& bundle, const PulseStrategy* pulses) {
    ValidationReport report;
    Reporter r(report);
    const Problem& pb = bundle.problem;
    const SpaceGrid& g = pb.space;
    const std::size_t cells = pb.time.point_count() > 0 ? pb.time.cell_count() : 0;

    if (pb.time.point_count() < 2) r.add("time grid is empty");

    const double sigma = pb.chemical.sigma;
    if (!(sigma >= 0.0 && sigma <= 1.0)) r.add("sigma out of [0,1]");
    if (!(pb.chemical.sigma_star >= 0.0)) r.add("sigma_star must be >= 0");

    r.grid_match(pb.alpha.amplitude(), g, "alpha amplitude");
    r.nonnegative(pb.alpha.amplitude(), "alpha amplitude (H1)");
    if (!pb.alpha.has_custom_profile() && !(pb.alpha.period() > 0.0)) r.add("alpha period must be > 0");

    if (!(pb.diffusion.grid() == g)) {
        r.add("diffusion: grid mismatch");
    } else {
        for (std::size_t axis = 0; axis < 3; ++axis) {
            const auto& faces = pb.diffusion.faces(axis);
            for (std::size_t p = 0; p < faces.size(); ++p) {
                const bool boundary = g.coords(p)[axis] + 1 >= g.dims()[axis];
                if (!(faces[p] >= 0.0)) {
                    r.add("diffusion coefficient negative on axis " + std::to_string(axis));
                    break;
                }
                if (boundary && faces[p] != 0.0) {
                    r.add("diffusion coefficient nonzero on boundary face, axis " + std::to_string(axis));
                    break;
                }
            }
        }
    }

    r.grid_match(pb.initial, g, "initial condition");
    r.box(pb.initial, 0.0, 1.0, "initial condition rho");

    if (bundle.control.cell_count() != cells) {
        r.add("control has " + std::to_string(bundle.control.cell_count()) + " samples, time grid has " +
              std::to_string(cells) + " cells");
    }
    for (std::size_t n = 0; n < bundle.control.cell_count(); ++n) {
        const ScalarField& u = bundle.control.at(n);
        r.grid_match(u, g, "control sample " + std::to_string(n));
        const std::size_t before = report.issues.size();
        r.box(u, 0.0, 1.0, "H6 violation: control u at cell " + std::to_string(n));
        if (report.issues.size() != before) break;
        bool singular = false;
        for (double v : u.values()) singular = singular || sigma * v > 1.0 - 1e-9;
        if (singular) {
            r.add("sigma*u reaches 1 at cell " + std::to_string(n) + " (attractor vanishes)");
            break;
        }
    }

    const CostSpec& c = bundle.costs;
    if (c.pulse_unit_costs.size() < pb.time.candidate_count()) {
        r.add("pulse cost list shorter than candidate pulse count");
    }
    for (std::size_t i = 0; i < c.pulse_unit_costs.size(); ++i) {
        r.grid_match(c.pulse_unit_costs[i], g, "pulse cost " + std::to_string(i));
        r.nonnegative(c.pulse_unit_costs[i], "pulse cost " + std::to_string(i));
    }
    if (c.continuous_unit_cost.size() != cells) r.add("continuous cost length does not match cell count");
    for (std::size_t n = 0; n < c.continuous_unit_cost.size(); ++n) {
        const std::size_t before = report.issues.size();
        r.grid_match(c.continuous_unit_cost[n], g, "continuous cost " + std::to_string(n));
        r.nonnegative(c.continuous_unit_cost[n], "continuous cost " + std::to_string(n));
        if (report.issues.size() != before) break;
    }
    r.grid_match(c.final_cost, g, "final cost");
    r.nonnegative(c.final_cost, "final cost");

    if (pulses) {
        if (pulses->size() > pb.time.candidate_count()) {
            r.add("pulse strategy longer than candidate pulse count");
        }
        for (std::size_t i = 0; i < pulses->size(); ++i) {
            r.grid_match((*pulses)[i], g, "pulse value " + std::to_string(i));
            r.box((*pulses)[i], 0.0, 1.0, "H7 violation: pulse value " + std::to_string(i));
        }
    }
    return report;
}

void require_valid(const Bundle& bundle, const PulseStrategy* pulses) {
    auto report = validate(bundle, pulses);
    if (!report.ok()) throw ValidationError(report.str());
}

ScalarField build_initial_condition(const SpaceGrid& grid, double target_mean, double floor) {
    if (!(floor >= 0.0 && floor < target_mean && target_mean <= 1.0)) {
        throw ValidationError("initial condition requires 0 <= floor < target_mean <= 1");
    }
    const auto& dims = grid.dims();
    if (dims[0] < 2 || dims[1] < 2 || dims[2] < 2) {
        throw ValidationError("initial profile needs at least two points per axis");
    }
    std::vector<double> shape(grid.size(), 0.0);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const auto c = grid.coords(p);
        double prod = 1.0;
        for (std::size_t a = 0; a < 3; ++a) {
            // sin(pi) is not exactly 0 in floating point; the far face is pinned below
            prod *= c[a] + 1 == dims[a] ? 0.0
                                        : std::sin(std::numbers::pi * static_cast<double>(c[a]) /
                                                   static_cast<double>(dims[a] - 1));
        }
        shape[p] = std::cbrt(prod);
    }
    double shape_mean = 0.0;
    for (double s : shape) shape_mean += s;
    shape_mean /= static_cast<double>(shape.size());
    if (!(shape_mean > 0.0)) {
        throw ValidationError("initial profile vanishes on this grid; mean cannot exceed the floor");
    }
    const double q1 = (target_mean - floor) / shape_mean;
    const double peak = q1 * *std::max_element(shape.begin(), shape.end()) + floor;
    if (peak > 1.0) {
        throw ValidationError("initial profile exceeds 1 for the requested mean and floor");
    }
    std::vector<double> values(grid.size());
    for (std::size_t p = 0; p < grid.size(); ++p) values[p] = q1 * shape[p] + floor;
    return ScalarField(grid, std::move(values));
}

ScalarField build_random_amplitude(const SpaceGrid& grid, double target_mean, std::uint64_t seed) {
    if (!(target_mean > 0.0)) throw ValidationError("amplitude mean must be positive");
    std::mt19937_64 rng(seed);
    std::vector<double> values(grid.size());
    // 53 random bits, shifted by half an ulp to land strictly inside (0, 1).
    for (double& v : values) v = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    double sum = 0.0;
    for (double v : values) sum += v;
    const double scale = target_mean * static_cast<double>(values.size()) / sum;
    for (double& v : values) v *= scale;
    return ScalarField(grid, std::move(values));
}

ContinuousControl zero_control(const Problem& problem) {
    return ContinuousControl::constant(problem.space, problem.time.cell_count(), 0.0);
}

}  // namespace anthracnose
