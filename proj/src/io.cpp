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

#include "anthracnose/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "anthracnose/adjoint.hpp"
#include "anthracnose/averaged.hpp"
#include "anthracnose/pde.hpp"

namespace anthracnose {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool is_bookkeeping(const std::string& key) { return key.rfind("run.", 0) == 0 || key.rfind("result.", 0) == 0; }

}  // namespace

double parse_number(const std::string& text) {
    const std::string s = trim(text);
    auto parse_one = [&](const std::string& part) {
        double v = 0.0;
        const auto* end = part.data() + part.size();
        auto [ptr, ec] = std::from_chars(part.data(), end, v);
        if (part.empty() || ec != std::errc() || ptr != end) throw ValidationError("not a number: '" + text + "'");
        return v;
    };
    const auto slash = s.find('/');
    if (slash == std::string::npos) return parse_one(s);
    const double den = parse_one(trim(s.substr(slash + 1)));
    if (den == 0.0) throw ValidationError("zero denominator in '" + text + "'");
    return parse_one(trim(s.substr(0, slash))) / den;
}

std::string format_number(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

ScalarField load_field_csv(const SpaceGrid& grid, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read field file " + path.string());
    std::string line;
    if (!std::getline(in, line) || trim(line) != "i,j,k,value") {
        throw ValidationError(path.string() + ": header must be 'i,j,k,value'");
    }
    std::vector<double> values(grid.size(), 0.0);
    std::vector<bool> seen(grid.size(), false);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const std::string where = path.string() + " line " + std::to_string(lineno);
        std::vector<std::string> cols;
        std::istringstream row(line);
        for (std::string col; std::getline(row, col, ',');) cols.push_back(trim(col));
        if (cols.size() != 4) throw ValidationError(where + ": expected 4 columns");
        std::array<std::size_t, 3> ijk{};
        for (std::size_t a = 0; a < 3; ++a) {
            const double v = parse_number(cols[a]);
            if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(grid.dims()[a])) {
                throw ValidationError(where + ": index out of range");
            }
            ijk[a] = static_cast<std::size_t>(v);
        }
        const std::size_t p = grid.index(ijk[0], ijk[1], ijk[2]);
        if (seen[p]) throw ValidationError(where + ": point listed twice");
        seen[p] = true;
        values[p] = parse_number(cols[3]);
    }
    for (std::size_t p = 0; p < grid.size(); ++p) {
        if (!seen[p]) throw ValidationError(path.string() + ": no value for point " + std::to_string(p));
    }
    return ScalarField(grid, std::move(values));
}

Config Config::parse(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
        if (c.has(key)) throw ValidationError("config line " + std::to_string(lineno) + ": duplicate key " + key);
        c.values_[key] = trim(line.substr(eq + 1));
    }
    return c;
}

Config Config::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const std::string& Config::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ValidationError("missing config key " + key);
    return it->second;
}

double Config::number(const std::string& key) const {
    try {
        return parse_number(get(key));
    } catch (const ValidationError& e) {
        throw ValidationError(key + ": " + e.what());
    }
}

std::size_t Config::count(const std::string& key) const {
    const double v = number(key);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) throw ValidationError(key + " must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }
void Config::set(const std::string& key, double value) { values_[key] = format_number(value); }

Config Config::merged(const Config& overrides) const {
    Config c = *this;
    for (const auto& [k, v] : overrides.values_) c.values_[k] = v;
    return c;
}

std::string Config::str() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
    return os.str();
}

Config default_config() {
    return Config::parse(R"(model = averaged
grid = 1x1x1
ds = 1
T = 1
h = 1/1040
pulse_interval = 1/52
sigma = 0.3
sigma_star = 0
alpha.mode = uniform
alpha.file =
alpha.a = 1.1512925464970229
alpha.b = 0.75
alpha.c = 0.2
diffusion = 1
initial.mode = uniform
initial.file =
initial.mean = 0.4
initial.floor = 0.2
cost.pulse = 0.5
cost.final = 0
cost.control = 0.002
control.u = 0
pulse.v = 1
store_every = 1
seed = 0
cg_tolerance = 1e-10
check.u = 0.5
fd.eps = 1e-5
brute.max_bits = 20
brute.interior_samples = 200
)");
}

namespace {

// Defaults overlaid with `config`; run.* and result.* entries are dropped.
Config resolved(const Config& config) {
    const Config defaults = default_config();
    Config c = defaults;
    for (const auto& [k, v] : config.entries()) {
        if (is_bookkeeping(k)) continue;
        if (!defaults.has(k)) throw ValidationError("unknown config key " + k);
        c.set(k, v);
    }
    return c;
}

SpaceGrid parse_grid(const std::string& text, double ds) {
    std::array<std::size_t, 3> dims{};
    std::stringstream ss(text);
    std::string part;
    std::size_t axis = 0;
    while (std::getline(ss, part, 'x')) {
        if (axis == 3) throw ValidationError("grid must be NxMxK");
        const double v = parse_number(part);
        if (!(v >= 1.0) || v != std::floor(v)) throw ValidationError("grid sizes must be positive integers");
        dims[axis++] = static_cast<std::size_t>(v);
    }
    if (axis != 3) throw ValidationError("grid must be NxMxK");
    if (!(ds > 0.0)) throw ValidationError("ds must be > 0");
    return SpaceGrid(dims, ds);
}

SolverOptions solver_options(const Config& c) {
    SolverOptions o;
    o.cg_tolerance = c.number("cg_tolerance");
    o.store_every = std::max<std::size_t>(1, c.count("store_every"));
    return o;
}

}  // namespace

ModelKind model_of(const Config& config) {
    const std::string m = resolved(config).get("model");
    if (m == "averaged") return ModelKind::averaged;
    if (m == "pde") return ModelKind::pde;
    throw ValidationError("model must be 'averaged' or 'pde', got '" + m + "'");
}

Bundle bundle_from_config(const Config& config) {
    const Config c = resolved(config);
    const SpaceGrid grid = parse_grid(c.get("grid"), c.number("ds"));
    Problem p;
    p.space = grid;
    p.time = TimeGrid::regular(c.number("T"), c.number("h"), c.number("pulse_interval"));
    p.chemical = {c.number("sigma"), c.number("sigma_star")};

    const std::string amode = c.get("alpha.mode");
    ScalarField amplitude;
    if (amode == "uniform") {
        amplitude = ScalarField::uniform(grid, c.number("alpha.a"));
    } else if (amode == "random") {
        amplitude = build_random_amplitude(grid, c.number("alpha.a"), c.count("seed"));
    } else if (amode == "file") {
        amplitude = load_field_csv(grid, c.get("alpha.file"));
    } else {
        throw ValidationError("alpha.mode must be 'uniform', 'random' or 'file'");
    }
    p.alpha = InhibitionPressure(amplitude, c.number("alpha.b"), c.number("alpha.c"));
    p.diffusion = DiffusionField::isotropic(grid, c.number("diffusion"));

    const std::string imode = c.get("initial.mode");
    if (imode == "uniform") {
        p.initial = ScalarField::uniform(grid, c.number("initial.mean"));
    } else if (imode == "sine") {
        p.initial = build_initial_condition(grid, c.number("initial.mean"), c.number("initial.floor"));
    } else if (imode == "file") {
        p.initial = load_field_csv(grid, c.get("initial.file"));
    } else {
        throw ValidationError("initial.mode must be 'uniform', 'sine' or 'file'");
    }

    Bundle b;
    b.problem = std::move(p);
    const std::size_t cells = b.problem.time.cell_count();
    b.control = ContinuousControl::constant(grid, cells, c.number("control.u"));
    b.costs = CostSpec::constant(grid, b.problem.time.candidate_count(), cells, c.number("cost.pulse"),
                                 c.number("cost.control"), c.number("cost.final"));
    require_valid(b);
    return b;
}

namespace {

Config overrides(std::initializer_list<std::pair<const char*, std::string>> kv) {
    Config c;
    for (const auto& [k, v] : kv) c.set(k, v);
    return c;
}

std::vector<ExperimentPreset> build_presets() {
    std::vector<ExperimentPreset> out;
    out.push_back({"fig1", "inhibition pressure profile", "alpha-profile", {{"alpha", Config{}}}});

    ExperimentPreset fig2{"fig2", "pulse-only strategies for c in {0.25, 0.4, 0.5}, C_f = 0", "optimize-pulse", {}};
    ExperimentPreset fig3{"fig3", "as fig2 with constant chemical control u = 1, sigma = 0.3", "optimize-pulse", {}};
    for (const char* c : {"0.25", "0.4", "0.5"}) {
        fig2.members.push_back({std::string("c") + c, overrides({{"cost.pulse", c}, {"cost.final", "0"}})});
        fig3.members.push_back({std::string("c") + c, overrides({{"cost.pulse", c}, {"cost.final", "0"},
                                                                 {"control.u", "1"}, {"sigma", "0.3"}})});
    }
    out.push_back(std::move(fig2));
    out.push_back(std::move(fig3));

    ExperimentPreset fig4{"fig4", "final cost sweep C_f in {0, 0.25, 0.5} with c = 0.5", "optimize-pulse", {}};
    for (const char* cf : {"0", "0.25", "0.5"}) {
        fig4.members.push_back({std::string("cf") + cf, overrides({{"cost.pulse", "0.5"}, {"cost.final", cf}})});
    }
    out.push_back(std::move(fig4));

    auto pde = [](const char* diffusion) {
        return overrides({{"model", "pde"}, {"grid", "11x11x4"}, {"diffusion", diffusion}, {"cost.pulse", "0.55"},
                          {"cost.final", "0"}, {"initial.mode", "sine"}, {"store_every", "20"}});
    };
    out.push_back({"fig5", "11x11x4 points (10x10x3 cells), A = I, c = 0.55, centred initial infection", "optimize-pulse",
                   {{"pde", pde("1")}, {"averaged", pde("1").merged(overrides({{"model", "averaged"}}))}}});
    out.push_back({"fig6", "as fig5 with A = 10 I", "optimize-pulse",
                   {{"pde", pde("10")}, {"averaged", pde("10").merged(overrides({{"model", "averaged"}}))}}});
    out.push_back({"fig7", "11x11x4 points, random amplitude a(x), uniform initial state", "optimize-pulse",
                   {{"pde", overrides({{"model", "pde"}, {"grid", "11x11x4"}, {"diffusion", "1"},
                                       {"cost.pulse", "0.55"}, {"cost.final", "0"}, {"alpha.mode", "random"},
                                       {"seed", "2024"}, {"store_every", "20"}})}}});
    out.push_back({"mixed", "chemical and pulse control, sigma = 0.3, C = 0.002, c = 0.5", "optimize-mixed",
                   {{"mixed", overrides({{"sigma", "0.3"}, {"cost.control", "0.002"}, {"cost.pulse", "0.5"}})}}});
    return out;
}

}  // namespace

const std::vector<ExperimentPreset>& presets() {
    static const std::vector<ExperimentPreset> all = build_presets();
    return all;
}

const ExperimentPreset& find_preset(const std::string& name) {
    for (const auto& p : presets()) {
        if (p.name == name) return p;
    }
    std::string names;
    for (const auto& p : presets()) names += (names.empty() ? "" : ", ") + p.name;
    throw ValidationError("unknown preset '" + name + "' (available: " + names + ")");
}

// ---------------------------------------------------------------------------
// CSV output

namespace {

class CsvFile {
 public:
    CsvFile(const fs::path& path, const char* header) : file_(std::fopen(path.string().c_str(), "w")) {
        if (!file_) throw std::runtime_error("cannot write " + path.string());
        std::fputs(header, file_);
        std::fputc('\n', file_);
    }
    ~CsvFile() {
        if (file_) std::fclose(file_);
    }
    CsvFile(const CsvFile&) = delete;
    CsvFile& operator=(const CsvFile&) = delete;

    CsvFile& num(double v) {
        sep();
        std::fprintf(file_, "%.17g", v);
        return *this;
    }
    CsvFile& text(const char* v) {
        sep();
        std::fputs(v, file_);
        return *this;
    }
    CsvFile& idx(std::size_t v) {
        sep();
        std::fprintf(file_, "%zu", v);
        return *this;
    }
    CsvFile& coords(const SpaceGrid& g, std::size_t point) {
        const auto c = g.coords(point);
        return idx(c[0]).idx(c[1]).idx(c[2]);
    }
    void end() {
        std::fputc('\n', file_);
        first_ = true;
    }

 private:
    void sep() {
        if (!first_) std::fputc(',', file_);
        first_ = false;
    }
    std::FILE* file_;
    bool first_ = true;
};

bool is_point_grid(const SpaceGrid& g) { return g.size() == 1; }

}  // namespace

void emit_alpha_profile(const Config& config, const fs::path& path) {
    const Bundle b = bundle_from_config(config);
    const Problem p = b.problem.averaged();
    CsvFile f(path, "t,alpha");
    for (double t : p.time.points()) f.num(t).num(p.alpha(t, 0)).end();
}

void write_averaged_trajectory(const AveragedTrajectory& traj, const fs::path& path) {
    CsvFile f(path, "t,theta,is_pulse,v_applied");
    std::size_t j = 0;
    for (std::size_t n = 0; n < traj.times.size(); ++n) {
        const bool pulse = j < traj.jumps.size() && traj.jumps[j].point == n;
        f.num(traj.times[n]).num(traj.values[n]).idx(pulse ? 1 : 0).num(pulse ? traj.jumps[j].v : 1.0).end();
        if (pulse) ++j;
    }
}

void write_field_summary(const FieldTrajectory& traj, const fs::path& path) {
    CsvFile f(path, "t,mean_theta,l2_norm,is_pulse");
    const double vol = traj.grid.volume();
    std::size_t j = 0;
    for (std::size_t n = 0; n < traj.times.size(); ++n) {
        const bool pulse = j < traj.jumps.size() && traj.jumps[j].point == n;
        f.num(traj.times[n]).num(traj.state_integrals[n] / vol).num(traj.l2_norms[n]).idx(pulse ? 1 : 0).end();
        if (pulse) ++j;
    }
}

void write_field_snapshots(const FieldTrajectory& traj, const fs::path& path) {
    CsvFile f(path, "t,i,j,k,theta");
    for (std::size_t s = 0; s < traj.stored_points.size(); ++s) {
        const double t = traj.times[traj.stored_points[s]];
        const auto& field = traj.fields[s];
        for (std::size_t x = 0; x < field.size(); ++x) f.num(t).coords(traj.grid, x).num(field[x]).end();
    }
}

void write_adjoint(const AdjointTrajectory& adj, std::size_t store_every, const fs::path& path) {
    const std::size_t last = adj.times.size() - 1;
    if (is_point_grid(adj.grid)) {
        CsvFile f(path, "t,p");
        for (std::size_t n = 0; n <= last; ++n) f.num(adj.times[n]).num(adj.scalar(n)).end();
        return;
    }
    CsvFile f(path, "t,i,j,k,p");
    const std::size_t every = std::max<std::size_t>(1, store_every);
    for (std::size_t n = 0; n <= last; ++n) {
        if (n % every != 0 && n != last) continue;
        for (std::size_t x = 0; x < adj.grid.size(); ++x) f.num(adj.times[n]).coords(adj.grid, x).num(adj.values[n][x]).end();
    }
}

void write_strategy(const StrategyResult& result, const TimeGrid& time, const fs::path& path) {
    const auto pts = time.points();
    if (result.pulses.empty() || is_point_grid(result.pulses[0].grid())) {
        CsvFile f(path, "tau_i,v_i");
        for (std::size_t i = 0; i < result.realized_points.size(); ++i) {
            f.num(pts[result.realized_points[i]]).num(result.pulses.scalar(i)).end();
        }
        return;
    }
    CsvFile f(path, "tau_i,i,j,k,v");
    for (std::size_t i = 0; i < result.realized_points.size(); ++i) {
        const auto& v = result.pulses[i];
        for (std::size_t x = 0; x < v.size(); ++x) f.num(pts[result.realized_points[i]]).coords(v.grid(), x).num(v[x]).end();
    }
}

void write_pulse_certificate(const StrategyResult& result, const fs::path& path) {
    const bool point = result.pulse_certificate.empty() || is_point_grid(result.pulse_certificate[0].v.grid());
    CsvFile f(path, point ? "tau_i,p_plus,c_i,v_i,margin" : "tau_i,i,j,k,p_plus,c_i,v_i,margin");
    for (const auto& pc : result.pulse_certificate) {
        for (std::size_t x = 0; x < pc.v.size(); ++x) {
            f.num(pc.time);
            if (!point) f.coords(pc.v.grid(), x);
            f.num(pc.p_plus[x]).num(pc.c[x]).num(pc.v[x]).num(pc.margin[x]).end();
        }
    }
}

void write_control(const ContinuousControl& u, const TimeGrid& time, const fs::path& path) {
    const bool point = u.cell_count() == 0 || is_point_grid(u.at(0).grid());
    CsvFile f(path, point ? "t,u" : "t,i,j,k,u");
    for (std::size_t n = 0; n < u.cell_count(); ++n) {
        const auto& un = u.at(n);
        for (std::size_t x = 0; x < un.size(); ++x) {
            f.num(time.points()[n]);
            if (!point) f.coords(un.grid(), x);
            f.num(un[x]).end();
        }
    }
}

void write_control_certificate(const StrategyResult& result, const fs::path& path) {
    const bool point = result.control_certificate.empty() || is_point_grid(result.control_certificate[0].u.grid());
    CsvFile f(path, point ? "t,switching,margin,u" : "t,i,j,k,switching,margin,u");
    for (const auto& cc : result.control_certificate) {
        for (std::size_t x = 0; x < cc.u.size(); ++x) {
            f.num(cc.time);
            if (!point) f.coords(cc.u.grid(), x);
            f.num(cc.switching[x]).num(cc.margin[x]).num(cc.u[x]).end();
        }
    }
}

void write_manifest(const Config& config, const std::string& command,
                    const std::map<std::string, std::string>& results, const fs::path& path) {
    Config m = resolved(config);
    m.set("run.command", command);
    m.set("run.version", kVersion);
    for (const auto& [k, v] : results) m.set("result." + k, v);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << m.str();
}

// ---------------------------------------------------------------------------
// Commands

namespace {

using Results = std::map<std::string, std::string>;

void put_cost(Results& r, const CostBreakdown& c) {
    r["cost.total"] = format_number(c.total);
    r["cost.running_state"] = format_number(c.running_state);
    r["cost.running_control"] = format_number(c.running_control);
    r["cost.pulse"] = format_number(c.pulse);
    r["cost.final"] = format_number(c.final);
}

std::string points_list(const std::vector<std::size_t>& pts) {
    std::string s;
    for (std::size_t p : pts) s += (s.empty() ? "" : " ") + std::to_string(p);
    return s;
}

PulseStrategy configured_pulses(const Config& c, const Bundle& b) {
    return PulseStrategy::constant(b.problem.space, b.problem.time.candidate_count(), c.number("pulse.v"));
}

void write_strategy_outputs(const StrategyResult& r, const Bundle& b, const Config& c, const fs::path& out,
                            Results& res) {
    const SolverOptions so = solver_options(c);
    write_strategy(r, b.problem.time, out / "strategy.csv");
    write_pulse_certificate(r, out / "certificate.csv");
    if (r.model == ModelKind::averaged) {
        const Bundle a = b.problem.space.size() == 1 ? b : b.averaged();
        const auto traj = simulate_averaged(a.problem, r.control, r.pulses);
        write_averaged_trajectory(traj, out / "trajectory.csv");
        write_adjoint(solve_adjoint_averaged(a.problem, r.control, r.pulses, a.costs, traj.realized_points()), 1,
                      out / "adjoint.csv");
    } else {
        const auto traj = simulate_pde(b.problem, r.control, r.pulses, so);
        write_field_summary(traj, out / "summary.csv");
        write_field_snapshots(traj, out / "snapshots.csv");
        write_adjoint(solve_adjoint_pde(b.problem, r.control, r.pulses, b.costs, traj.realized_points(), so),
                      so.store_every, out / "adjoint.csv");
        res["theta.min"] = format_number(*std::min_element(traj.min_values.begin(), traj.min_values.end()));
        res["theta.max"] = format_number(*std::max_element(traj.max_values.begin(), traj.max_values.end()));
    }
    put_cost(res, r.cost);
    res["pulses.realized"] = std::to_string(r.realized_points.size());
    res["pulses.interventions"] = std::to_string(r.intervention_count());
    res["pulses.intervention_points"] = points_list(r.intervention_points());
    res["iterations"] = std::to_string(r.iterations);
    res["converged"] = r.converged ? "1" : "0";
    if (!r.diagnostics.empty()) res["diagnostics"] = r.diagnostics;
}

int cmd_simulate_averaged(const Config& c, const fs::path& out, std::ostream& log, Results& res) {
    const Bundle full = bundle_from_config(c);
    const Bundle b = full.problem.space.size() == 1 ? full : full.averaged();
    const auto v = configured_pulses(c, b);
    const auto traj = simulate_averaged(b.problem, b.control, v);
    write_averaged_trajectory(traj, out / "trajectory.csv");
    const auto cost = cost_averaged(traj, v, b.control, b.costs);
    put_cost(res, cost);
    res["pulses.realized"] = std::to_string(traj.jumps.size());
    log << "J = " << format_number(cost.total) << ", " << traj.jumps.size() << " pulses, Theta(T) = "
        << format_number(traj.final_value()) << '\n';
    return 0;
}

int cmd_simulate_pde(const Config& c, const fs::path& out, std::ostream& log, Results& res) {
    const Bundle b = bundle_from_config(c);
    const auto v = configured_pulses(c, b);
    const auto traj = simulate_pde(b.problem, b.control, v, solver_options(c));
    write_field_summary(traj, out / "summary.csv");
    write_field_snapshots(traj, out / "snapshots.csv");
    const auto cost = cost_pde(traj, v, b.control, b.costs);
    put_cost(res, cost);
    const double lo = *std::min_element(traj.min_values.begin(), traj.min_values.end());
    const double hi = *std::max_element(traj.max_values.begin(), traj.max_values.end());
    res["pulses.realized"] = std::to_string(traj.jumps.size());
    res["theta.min"] = format_number(lo);
    res["theta.max"] = format_number(hi);
    log << "J = " << format_number(cost.total) << ", " << traj.jumps.size() << " pulses, theta in ["
        << format_number(lo) << ", " << format_number(hi) << "]\n";
    return 0;
}

int cmd_optimize_pulse(const Config& c, const fs::path& out, std::ostream& log, Results& res) {
    const Bundle b = bundle_from_config(c);
    const ModelKind model = model_of(c);
    OptimizerOptions opt;
    opt.solver = solver_options(c);
    const StrategyResult r = b.problem.chemical.sigma_star == 0.0 ? optimal_pulse(b, model, opt)
                                                                  : fixed_point_pulse(b, model, 50, opt);
    write_strategy_outputs(r, b, c, out, res);
    log << "J* = " << format_number(r.cost.total) << ", " << r.intervention_count() << " interventions of "
        << r.realized_points.size() << " pulses";
    if (!r.converged) log << " (" << r.diagnostics << ")";
    log << '\n';
    return r.converged ? 0 : 2;
}

int cmd_optimize_mixed(const Config& c, const fs::path& out, std::ostream& log, Results& res) {
    const Bundle b = bundle_from_config(c);
    const ModelKind model = model_of(c);
    OptimizerOptions opt;
    opt.solver = solver_options(c);
    const StrategyResult r = projected_gradient_mixed(b, model, MixedOptions{}, opt);
    write_strategy_outputs(r, b, c, out, res);
    write_control(r.control, b.problem.time, out / "control.csv");
    write_control_certificate(r, out / "control_certificate.csv");
    {
        CsvFile f(out / "history.csv", "iteration,J");
        for (std::size_t i = 0; i < r.cost_history.size(); ++i) f.idx(i).num(r.cost_history[i]).end();
    }
    const auto rep = certificate_check(r, b, 1e-8, opt);
    res["certificate.violations"] = std::to_string(rep.violations.size());
    res["certificate.switching_agreement"] = format_number(rep.switching_agreement());
    log << "J* = " << format_number(r.cost.total) << " after " << r.iterations << " iterations, "
        << r.intervention_count() << " pulse interventions, switching agreement "
        << format_number(rep.switching_agreement()) << '\n';
    return 0;
}

int cmd_brute_force(const Config& c, const fs::path& out, std::ostream& log, Results& res) {
    const Bundle b = bundle_from_config(c);
    const ModelKind model = model_of(c);
    BruteForceOptions bf;
    bf.max_bits = c.count("brute.max_bits");
    bf.interior_samples = c.count("brute.interior_samples");
    bf.seed = c.count("seed");
    OptimizerOptions opt;
    opt.solver = solver_options(c);
    const auto r = brute_force_pulse(b, model, bf, opt);
    write_strategy_outputs(r.best, b, c, out, res);
    res["brute.evaluated"] = std::to_string(r.evaluated);
    if (!std::isnan(r.best_interior_cost)) res["brute.best_interior_cost"] = format_number(r.best_interior_cost);
    log << "min J = " << format_number(r.best.cost.total) << " over " << r.evaluated << " vertex strategies";
    if (!std::isnan(r.best_interior_cost)) log << ", best interior " << format_number(r.best_interior_cost);
    log << '\n';
    return 0;
}

int cmd_gradient_check(const Config& c, const fs::path& out, std::ostream& log, Results& res) {
    Bundle b = bundle_from_config(c);
    const ModelKind model = model_of(c);
    if (model == ModelKind::averaged && b.problem.space.size() != 1) b = b.averaged();
    const SolverOptions so = solver_options(c);
    const double eps = c.number("fd.eps");
    const SpaceGrid& g = b.problem.space;
    const std::size_t k = b.problem.time.candidate_count();
    const std::size_t cells = b.problem.time.cell_count();
    b.control = ContinuousControl::constant(g, cells, c.number("check.u"));

    std::mt19937_64 rng(c.count("seed"));
    auto unit = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    PulseStrategy v = PulseStrategy::constant(g, k, 1.0), dv = v;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t x = 0; x < g.size(); ++x) {
            v[i][x] = 0.1 + 0.8 * unit();
            dv[i][x] = 2.0 * unit() - 1.0;
        }
    }
    ContinuousControl du = b.control;
    for (std::size_t n = 0; n < cells; ++n) {
        for (std::size_t x = 0; x < g.size(); ++x) du.at(n)[x] = 2.0 * unit() - 1.0;
    }

    double adj_v = 0.0, adj_u = 0.0;
    if (model == ModelKind::averaged) {
        const auto traj = simulate_averaged(b.problem, b.control, v);
        const auto adj = solve_adjoint_averaged(b.problem, b.control, v, b.costs, traj.realized_points());
        adj_v = gradient_pulse(traj, adj, b.costs, &dv).directional_value;
        adj_u = gradient_continuous(b.problem, traj, adj, b.control, b.costs, &du).directional_value;
    } else {
        const auto traj = simulate_pde(b.problem, b.control, v, SolverOptions{so.cg_tolerance, 1});
        const auto adj = solve_adjoint_pde(b.problem, b.control, v, b.costs, traj.realized_points(), so);
        adj_v = gradient_pulse(traj, adj, b.costs, &dv).directional_value;
        adj_u = gradient_continuous(b.problem, traj, adj, b.control, b.costs, &du).directional_value;
    }

    auto cost_at = [&](const Bundle& bb, const PulseStrategy& vv) { return evaluate_cost(bb, model, vv, so).total; };
    PulseStrategy vp = v, vm = v;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t x = 0; x < g.size(); ++x) {
            vp[i][x] += eps * dv[i][x];
            vm[i][x] -= eps * dv[i][x];
        }
    }
    const double fd_v = (cost_at(b, vp) - cost_at(b, vm)) / (2.0 * eps);
    Bundle bp = b, bm = b;
    for (std::size_t n = 0; n < cells; ++n) {
        for (std::size_t x = 0; x < g.size(); ++x) {
            bp.control.at(n)[x] += eps * du.at(n)[x];
            bm.control.at(n)[x] -= eps * du.at(n)[x];
        }
    }
    const double fd_u = (cost_at(bp, v) - cost_at(bm, v)) / (2.0 * eps);

    auto rel = [](double a, double f) { return std::abs(a - f) / std::max(std::abs(f), 1e-300); };
    const double err_v = rel(adj_v, fd_v), err_u = rel(adj_u, fd_u);
    const double worst = std::max(err_v, err_u);
    {
        CsvFile f(out / "gradient_check.csv", "direction,adjoint,finite_difference,relative_error");
        f.text("pulse").num(adj_v).num(fd_v).num(err_v).end();
        f.text("control").num(adj_u).num(fd_u).num(err_u).end();
    }
    res["gradient.pulse_relative_error"] = format_number(err_v);
    res["gradient.control_relative_error"] = format_number(err_u);
    res["gradient.max_relative_error"] = format_number(worst);
    log << "pulse: adjoint " << format_number(adj_v) << " fd " << format_number(fd_v) << '\n'
        << "control: adjoint " << format_number(adj_u) << " fd " << format_number(fd_u) << '\n'
        << "max relative error " << format_number(worst) << '\n';
    return worst <= 1e-4 ? 0 : 1;
}

int cmd_alpha_profile(const Config& c, const fs::path& out, std::ostream& log, Results& res) {
    emit_alpha_profile(c, out / "alpha.csv");
    const Bundle b = bundle_from_config(c);
    res["rows"] = std::to_string(b.problem.time.point_count());
    log << "wrote " << b.problem.time.point_count() << " rows to alpha.csv\n";
    return 0;
}

}  // namespace

int run_command(const std::string& command, const Config& config, const fs::path& out, std::ostream& log) {
    using Fn = int (*)(const Config&, const fs::path&, std::ostream&, Results&);
    static const std::map<std::string, Fn> table{
        {"simulate-averaged", cmd_simulate_averaged}, {"simulate-pde", cmd_simulate_pde},
        {"optimize-pulse", cmd_optimize_pulse},       {"optimize-mixed", cmd_optimize_mixed},
        {"brute-force", cmd_brute_force},             {"gradient-check", cmd_gradient_check},
        {"alpha-profile", cmd_alpha_profile},
    };
    auto it = table.find(command);
    if (it == table.end()) {
        log << "unknown command " << command << '\n';
        return 64;
    }
    try {
        fs::create_directories(out);
        Results res;
        const int code = it->second(resolved(config), out, log, res);
        res["exit_code"] = std::to_string(code);
        write_manifest(config, command, res, out / "manifest.txt");
        return code;
    } catch (const ValidationError& e) {
        log << "validation error: " << e.what() << '\n';
        return 1;
    } catch (const SolverError& e) {
        log << "solver error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace anthracnose
