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

#include <algorithm>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "anthracnose/io.hpp"

namespace anthracnose {

namespace {

struct Flags {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> store_every;
};

Config load_config(const Flags& f) {
    Config c = f.config.empty() ? Config{} : Config::load(f.config);
    if (f.seed) c.set("seed", std::to_string(*f.seed));
    if (f.store_every) c.set("store_every", std::to_string(*f.store_every));
    return c;
}

// Members run concurrently into their own directories; logs are printed in
// member order once all have finished.
int run_preset(const std::string& name, const Flags& flags) {
    const ExperimentPreset& preset = find_preset(name);
    const Config base = load_config(flags);
    const std::filesystem::path root = std::filesystem::path(flags.out) / preset.name;
    std::vector<std::ostringstream> logs(preset.members.size());
    std::vector<int> codes(preset.members.size(), 0);
    std::vector<std::thread> pool;
    for (std::size_t m = 0; m < preset.members.size(); ++m) {
        pool.emplace_back([&, m] {
            const auto& [member, overrides] = preset.members[m];
            Config resolved = base.merged(overrides);
            if (flags.seed) resolved.set("seed", std::to_string(*flags.seed));
            codes[m] = run_command(preset.command, resolved, root / member, logs[m]);
        });
    }
    for (auto& t : pool) t.join();
    int worst = 0;
    for (std::size_t m = 0; m < preset.members.size(); ++m) {
        std::cout << preset.name << '/' << preset.members[m].first << ": " << logs[m].str();
        worst = std::max(worst, codes[m]);
    }
    return worst;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Pulse and chemical control of a seasonal inhibition model"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Flags flags;
    app.add_option("--config", flags.config, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--out", flags.out, "output directory")->capture_default_str();
    app.add_option("--seed", flags.seed, "seed for random amplitudes and gradient-check directions");
    app.add_option("--store-every", flags.store_every, "keep every m-th field in PDE snapshots");
    app.fallthrough();

    std::string preset_name;
    const std::vector<std::pair<const char*, const char*>> commands{
        {"simulate-averaged", "forward run of the spatially-averaged model"},
        {"simulate-pde", "forward run of the reaction-diffusion model"},
        {"optimize-pulse", "optimal bang-bang pulse strategy"},
        {"optimize-mixed", "pulse strategy and chemical control by projected gradient"},
        {"brute-force", "exhaustive search over vertex pulse strategies"},
        {"gradient-check", "adjoint gradients against central finite differences"},
        {"alpha-profile", "inhibition pressure on the time grid"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);
    auto* preset = app.add_subcommand("preset", "run a named experiment preset");
    preset->add_option("name", preset_name, "preset name")->required();
    auto* list = app.add_subcommand("list-presets", "print preset names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 64;
    }

    try {
        if (list->parsed()) {
            for (const auto& p : presets()) std::cout << p.name << "  " << p.description << '\n';
            return 0;
        }
        if (preset->parsed()) {
            const bool known = std::any_of(presets().begin(), presets().end(),
                                           [&](const ExperimentPreset& p) { return p.name == preset_name; });
            if (!known) {
                std::cerr << "unknown preset '" << preset_name << "'\n" << preset->help();
                return 64;
            }
            return run_preset(preset_name, flags);
        }
        const std::string command = app.get_subcommands().front()->get_name();
        return run_command(command, load_config(flags), flags.out, std::cout);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace anthracnose
