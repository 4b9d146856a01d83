#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <span>
#include <sstream>

#include "anthracnose/adjoint.hpp"
#include "anthracnose/averaged.hpp"
#include "anthracnose/io.hpp"
#include "anthracnose/optimizer.hpp"
#include "anthracnose/pde.hpp"

namespace py = pybind11;
using namespace anthracnose;

namespace {

using Entries = std::map<std::string, std::string>;

Config resolve(const Entries& entries) {
    Config user;
    for (const auto& [k, v] : entries) user.set(k, v);
    return default_config().merged(user);
}

py::array_t<double> vector_array(std::span<const double> v) { return py::array_t<double>(v.size(), v.data()); }

// rows x points
py::array_t<double> field_rows(const std::vector<ScalarField>& rows, std::size_t points) {
    py::array_t<double> out({rows.size(), points});
    auto m = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t p = 0; p < points; ++p) m(i, p) = rows[i][p];
    return out;
}

py::dict cost_dict(const CostBreakdown& c) {
    py::dict d;
    d["running_state"] = c.running_state;
    d["running_control"] = c.running_control;
    d["pulse"] = c.pulse;
    d["final"] = c.final;
    d["total"] = c.total;
    return d;
}

PulseStrategy pulses_for(const Config& c, const Bundle& b, const std::optional<std::vector<double>>& pulses) {
    if (pulses) return PulseStrategy::uniform(b.problem.space, *pulses);
    return PulseStrategy::constant(b.problem.space, b.problem.time.candidate_count(), c.number("pulse.v"));
}

SolverOptions solver_for(const Config& c) {
    SolverOptions o;
    o.store_every = c.count("store_every");
    return o;
}

py::dict simulate(const Entries& entries, const std::optional<std::vector<double>>& pulses) {
    const Config c = resolve(entries);
    const Bundle b = bundle_from_config(c);
    py::dict d;
    if (model_of(c) == ModelKind::averaged) {
        const Bundle a = b.problem.space.size() == 1 ? b : b.averaged();
        const auto v = pulses_for(c, a, pulses);
        require_valid(a, &v);
        const auto traj = simulate_averaged(a.problem, a.control, v);
        d["model"] = "averaged";
        d["t"] = vector_array(traj.times);
        d["theta"] = vector_array(traj.values);
        d["cost"] = cost_dict(cost_averaged(traj, v, a.control, a.costs));
        d["pulses_realized"] = traj.jumps.size();
        return d;
    }
    const auto v = pulses_for(c, b, pulses);
    require_valid(b, &v);
    const auto traj = simulate_pde(b.problem, b.control, v, solver_for(c));
    const auto mean = spatial_average(traj);
    d["model"] = "pde";
    d["t"] = vector_array(traj.times);
    d["theta"] = vector_array(mean.values);
    d["theta_min"] = vector_array(traj.min_values);
    d["theta_max"] = vector_array(traj.max_values);
    std::vector<double> stored;
    for (std::size_t n : traj.stored_points) stored.push_back(traj.times[n]);
    d["snapshot_t"] = vector_array(stored);
    d["snapshots"] = field_rows(traj.fields, traj.grid.size());
    d["cost"] = cost_dict(cost_pde(traj, v, b.control, b.costs));
    d["pulses_realized"] = traj.jumps.size();
    return d;
}

py::dict strategy_dict(const StrategyResult& r, const Bundle& b) {
    py::dict d;
    const std::size_t points = b.problem.space.size();
    d["model"] = r.model == ModelKind::averaged ? "averaged" : "pde";
    d["pulses"] = field_rows(r.pulses.values(), r.pulses.empty() ? points : r.pulses[0].size());
    std::vector<double> times;
    for (std::size_t n : r.realized_points) times.push_back(b.problem.time.points()[n]);
    d["pulse_times"] = vector_array(times);
    d["intervention_points"] = r.intervention_points();
    d["intervention_count"] = r.intervention_count();
    d["cost"] = cost_dict(r.cost);
    d["cost_history"] = vector_array(r.cost_history);
    d["iterations"] = r.iterations;
    d["converged"] = r.converged;
    if (r.control_optimized) d["control"] = field_rows(r.control.samples(), points);
    return d;
}

Bundle model_bundle(const Config& c, ModelKind model) {
    const Bundle b = bundle_from_config(c);
    return model == ModelKind::averaged && b.problem.space.size() != 1 ? b.averaged() : b;
}

py::dict optimize_pulse(const Entries& entries) {
    const Config c = resolve(entries);
    const ModelKind model = model_of(c);
    const Bundle b = model_bundle(c, model);
    OptimizerOptions o;
    o.solver = solver_for(c);
    const auto r = optimal_pulse(b, model, o);
    auto d = strategy_dict(r, b);
    d["certificate_ok"] = certificate_check(r, b, 1e-8, o).ok();
    return d;
}

py::dict optimize_mixed(const Entries& entries) {
    const Config c = resolve(entries);
    const ModelKind model = model_of(c);
    const Bundle b = model_bundle(c, model);
    OptimizerOptions o;
    o.solver = solver_for(c);
    const auto r = projected_gradient_mixed(b, model, MixedOptions{}, o);
    auto d = strategy_dict(r, b);
    const auto report = certificate_check(r, b, 1e-8, o);
    d["switching_agreement"] = report.switching_agreement();
    d["switching_samples"] = report.switching_samples;
    return d;
}

py::dict brute_force(const Entries& entries, std::size_t interior_samples) {
    const Config c = resolve(entries);
    const ModelKind model = model_of(c);
    const Bundle b = model_bundle(c, model);
    BruteForceOptions bf;
    bf.interior_samples = interior_samples;
    bf.seed = c.count("seed");
    const auto r = brute_force_pulse(b, model, bf);
    auto d = strategy_dict(r.best, b);
    d["evaluated"] = r.evaluated;
    d["best_interior_cost"] = r.best_interior_cost;
    return d;
}

py::tuple alpha_profile(const Entries& entries) {
    const Config c = resolve(entries);
    const Bundle b = bundle_from_config(c);
    const auto& t = b.problem.time.points();
    py::array_t<double> values({t.size(), b.problem.space.size()});
    auto m = values.mutable_unchecked<2>();
    for (std::size_t n = 0; n < t.size(); ++n)
        for (std::size_t p = 0; p < b.problem.space.size(); ++p) m(n, p) = eval_inhibition_pressure(b.problem.alpha, t[n], p);
    return py::make_tuple(vector_array(t), values);
}

py::tuple run(const std::string& command, const Entries& entries, const std::filesystem::path& out) {
    std::ostringstream log;
    const int code = run_command(command, resolve(entries), out, log);
    return py::make_tuple(code, log.str());
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "anthracnose");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    py::gil_scoped_release release;
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

PYBIND11_MODULE(_anthracnose, m) {
    m.doc() = "Pulse and chemical control of a seasonal inhibition model";
    m.attr("__version__") = kVersion;
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

    m.def("default_config", [] { return default_config().entries(); });
    m.def("presets", [] {
        py::list out;
        for (const auto& p : presets()) {
            py::dict d;
            d["name"] = p.name;
            d["description"] = p.description;
            d["command"] = p.command;
            py::list members;
            for (const auto& [name, overrides] : p.members) members.append(py::make_tuple(name, overrides.entries()));
            d["members"] = members;
            out.append(d);
        }
        return out;
    });
    m.def("simulate", &simulate, py::arg("config"), py::arg("pulses") = std::nullopt);
    m.def("optimize_pulse", &optimize_pulse, py::arg("config"));
    m.def("optimize_mixed", &optimize_mixed, py::arg("config"));
    m.def("brute_force", &brute_force, py::arg("config"), py::arg("interior_samples") = 0);
    m.def("alpha_profile", &alpha_profile, py::arg("config"));
    m.def("run", &run, py::arg("command"), py::arg("config"), py::arg("out"));
    m.def("run_cli", &cli, py::arg("args"));
}
