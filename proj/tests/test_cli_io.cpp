#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "anthracnose/io.hpp"
#include "support.hpp"

using namespace anthracnose;
using namespace anthracnose::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("anthracnose_cli_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "anthracnose");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

// relative path -> contents for every file below root
std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    }
    return out;
}

}  // namespace

TEST_CASE("numbers") {
    CHECK(parse_number("1/1040") == 1.0 / 1040.0);
    CHECK(parse_number(" 0.25 ") == 0.25);
    CHECK(parse_number("10 / 52") == 10.0 / 52.0);
    CHECK_THROWS_AS(parse_number("abc"), ValidationError);
    CHECK_THROWS_AS(parse_number("1/0"), ValidationError);
    CHECK_THROWS_AS(parse_number(""), ValidationError);
    for (double x : {0.1, 1.0 / 3.0, 1.1512925464970229, 1e-300, 123456789.125}) {
        CHECK(parse_number(format_number(x)) == x);
    }
}

TEST_CASE("config text") {
    const auto c = Config::parse("# comment\nsigma = 0.2  # trailing\n\n  h=1/100\n");
    CHECK(c.get("sigma") == "0.2");
    CHECK(c.number("h") == 0.01);
    CHECK_FALSE(c.has("T"));
    CHECK_THROWS_AS(Config::parse("sigma 0.2"), ValidationError);
    CHECK_THROWS_AS(Config::parse("sigma = 1\nsigma = 2"), ValidationError);
    CHECK(Config::parse(c.str()).entries() == c.entries());
}

TEST_CASE("default config is the base-case bundle") {
    const auto b = bundle_from_config(Config{});
    CHECK(model_of(Config{}) == ModelKind::averaged);
    CHECK(b.problem.space.size() == 1);
    CHECK(b.problem.time.t_end() == 1.0);
    CHECK(b.problem.time.point_count() == 1041);
    CHECK(b.problem.time.candidate_count() == 51);
    CHECK(b.problem.chemical.sigma == 0.3);
    CHECK(b.problem.initial[0] == 0.4);
    CHECK(b.problem.alpha.amplitude()[0] == doctest::Approx(0.5 * std::log(10.0)).epsilon(1e-15));
    CHECK(b.costs.pulse_unit_costs[0][0] == 0.5);
    CHECK(validate(b).ok());
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(bundle_from_config(Config::parse("sigmaa = 0.3")), ValidationError);
    CHECK_THROWS_AS(bundle_from_config(Config::parse("sigma = 1.5")), ValidationError);
    CHECK_THROWS_AS(bundle_from_config(Config::parse("grid = 3x3")), ValidationError);
    CHECK_THROWS_AS(model_of(Config::parse("model = spectral")), ValidationError);
}

TEST_CASE("fields from CSV") {
    const auto dir = scratch("fields");
    const SpaceGrid g({3, 2, 2}, 1.0);
    std::ostringstream csv;
    csv << "i,j,k,value\n";
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t i = 0; i < 3; ++i) csv << i << ',' << j << ',' << k << ',' << 0.05 * (i + 3 * j + 6 * k) << '\n';
    write_text(dir / "rho.csv", csv.str());
    const auto f = load_field_csv(g, dir / "rho.csv");
    for (std::size_t p = 0; p < g.size(); ++p) CHECK(f[p] == doctest::Approx(0.05 * p).epsilon(1e-15));

    write_text(dir / "short.csv", "i,j,k,value\n0,0,0,1\n");
    CHECK_THROWS_AS(load_field_csv(g, dir / "short.csv"), ValidationError);
    write_text(dir / "twice.csv", "i,j,k,value\n0,0,0,1\n0,0,0,1\n");
    CHECK_THROWS_AS(load_field_csv(g, dir / "twice.csv"), ValidationError);
    write_text(dir / "header.csv", "x,y,z,v\n");
    CHECK_THROWS_AS(load_field_csv(g, dir / "header.csv"), ValidationError);

    const auto cfg = Config::parse("model = pde\ngrid = 3x2x2\ninitial.mode = file\ninitial.file = " +
                                   (dir / "rho.csv").string() + "\nalpha.mode = file\nalpha.file = " +
                                   (dir / "rho.csv").string());
    const auto b = bundle_from_config(cfg);
    CHECK(b.problem.initial == f);
    CHECK(b.problem.alpha.amplitude() == f);
}

TEST_CASE("alpha profile file") {
    const auto dir = scratch("alpha");
    emit_alpha_profile(Config{}, dir / "alpha.csv");
    std::ifstream in(dir / "alpha.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,alpha");
    std::vector<std::pair<double, double>> rows;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        rows.emplace_back(parse_number(line.substr(0, comma)), parse_number(line.substr(comma + 1)));
    }
    CHECK(rows.size() == 1041);
    // dense scan of a (t-b)^2 (1 - cos(2 pi t / c)) for the global peak
    const double a = 0.5 * std::log(10.0);
    auto alpha = [&](double t) { return a * (t - 0.75) * (t - 0.75) * (1.0 - std::cos(2.0 * std::numbers::pi * t / 0.2)); };
    double peak_t = 0.0;
    for (int n = 0; n <= 1000000; ++n) {
        const double t = n * 1e-6;
        if (alpha(t) > alpha(peak_t)) peak_t = t;
    }
    auto best = rows.front();
    auto window_best = rows.front();
    window_best.second = -1.0;
    for (const auto& r : rows) {
        if (r.first == 0.75) CHECK(r.second == 0.0);
        CHECK(r.second == doctest::Approx(alpha(r.first)).epsilon(1e-12));
        if (r.second > best.second) best = r;
        if (r.first >= 0.85 && r.first <= 0.95 && r.second > window_best.second) window_best = r;
    }
    CHECK(std::abs(best.first - peak_t) <= kStep);
    double window_t = 0.85;
    for (int n = 0; n <= 100000; ++n) {
        const double t = 0.85 + n * 1e-6;
        if (alpha(t) > alpha(window_t)) window_t = t;
    }
    CHECK(window_t > 0.86);
    CHECK(window_t < 0.94);
    CHECK(std::abs(window_best.first - window_t) <= kStep);
}

TEST_CASE("presets resolve to valid bundles") {
    std::set<std::string> names;
    for (const auto& p : presets()) {
        CHECK(names.insert(p.name).second);
        for (const auto& [member, overrides] : p.members) {
            INFO(p.name << "/" << member);
            CHECK_NOTHROW(bundle_from_config(overrides));
        }
    }
    for (const char* n : {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "mixed"}) CHECK(names.count(n));
    CHECK_THROWS(find_preset("fig99"));
}

TEST_CASE("exit codes") {
    const auto dir = scratch("codes");
    CHECK(cli({"simulate-averaged", "--out", (dir / "ok").string()}) == 0);
    CHECK(fs::exists(dir / "ok" / "trajectory.csv"));
    CHECK(fs::exists(dir / "ok" / "manifest.txt"));

    write_text(dir / "bad.cfg", "sigma = 2\n");
    CHECK(cli({"--config", (dir / "bad.cfg").string(), "simulate-averaged", "--out", (dir / "bad").string()}) == 1);
    CHECK(cli({"no-such-command"}) == 64);
    CHECK(cli({"simulate-averaged", "--no-such-flag"}) == 64);
    CHECK(cli({"preset", "fig99", "--out", (dir / "p").string()}) == 64);

    CHECK(cli({"gradient-check", "--out", (dir / "grad").string()}) == 0);
    const auto csv = slurp(dir / "grad" / "gradient_check.csv");
    CHECK(csv.rfind("direction,adjoint,finite_difference,relative_error\npulse,", 0) == 0);
}

TEST_CASE("trajectory CSV layout") {
    const auto dir = scratch("layout");
    write_text(dir / "run.cfg", "cost.pulse = 0.4\n");
    REQUIRE(cli({"--config", (dir / "run.cfg").string(), "optimize-pulse", "--out", (dir / "a").string()}) == 0);
    std::istringstream traj(slurp(dir / "a" / "trajectory.csv"));
    std::string line;
    std::getline(traj, line);
    CHECK(line == "t,theta,is_pulse,v_applied");
    std::size_t rows = 0, pulses = 0;
    while (std::getline(traj, line)) {
        ++rows;
        std::vector<std::string> cols;
        std::istringstream row(line);
        for (std::string col; std::getline(row, col, ',');) cols.push_back(col);
        REQUIRE(cols.size() == 4);
        pulses += cols[2] == "1";
    }
    CHECK(rows == 1041);
    CHECK(pulses == 51);
    CHECK(slurp(dir / "a" / "strategy.csv").rfind("tau_i,v_i\n", 0) == 0);
    CHECK(slurp(dir / "a" / "certificate.csv").rfind("tau_i,p_plus,c_i,v_i,margin\n", 0) == 0);
}

TEST_CASE("manifest round trip") {
    const auto dir = scratch("manifest");
    write_text(dir / "run.cfg", "cost.pulse = 0.4\ncost.final = 0.25\nsigma = 0.2\n");
    REQUIRE(cli({"--config", (dir / "run.cfg").string(), "optimize-pulse", "--out", (dir / "a").string()}) == 0);
    const auto manifest = Config::load(dir / "a" / "manifest.txt");
    CHECK(manifest.get("run.command") == "optimize-pulse");
    CHECK(manifest.get("cost.pulse") == "0.4");
    REQUIRE(cli({"--config", (dir / "a" / "manifest.txt").string(), "optimize-pulse", "--out",
                 (dir / "b").string()}) == 0);
    CHECK(tree(dir / "a") == tree(dir / "b"));
}

TEST_CASE("seeded presets are byte-identical across runs") {
    const auto dir = scratch("repro");
    REQUIRE(cli({"preset", "fig7", "--out", (dir / "a").string()}) == 0);
    REQUIRE(cli({"preset", "fig7", "--out", (dir / "b").string()}) == 0);
    const auto a = tree(dir / "a"), b = tree(dir / "b");
    CHECK(a.size() >= 5);
    CHECK(a == b);
    REQUIRE(cli({"preset", "fig7", "--seed", "7", "--out", (dir / "c").string()}) == 0);
    CHECK(tree(dir / "c") != a);
}
