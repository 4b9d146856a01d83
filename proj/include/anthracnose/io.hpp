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

// Configuration files, experiment presets and CSV output.
//
// A config is plain text, one `key = value` per line, `#` starts a comment.
// Numbers may be written as fractions (`h = 1/1040`). Run manifests use the
// same format, so a manifest can be fed back as a config.

#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "anthracnose/model.hpp"
#include "anthracnose/optimizer.hpp"

namespace anthracnose {

inline constexpr const char* kVersion = "1.0.0";

class Config {
 public:
    Config() = default;

    static Config parse(const std::string& text);
    static Config load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::string& get(const std::string& key) const;
    double number(const std::string& key) const;
    std::size_t count(const std::string& key) const;
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);

    /// Applies every entry of `overrides` on top of this config.
    Config merged(const Config& overrides) const;
    /// Sorted `key = value` lines.
    std::string str() const;
    const std::map<std::string, std::string>& entries() const { return values_; }

 private:
    std::map<std::string, std::string> values_;
};

/// Parses a decimal or `a/b` fraction.
double parse_number(const std::string& text);
/// %.17g, so the value round-trips.
std::string format_number(double value);

/// Field from a CSV with header `i,j,k,value`, one row per grid point.
ScalarField load_field_csv(const SpaceGrid& grid, const std::filesystem::path& path);

/// Every recognised key with its default (averaged model, base-case values).
Config default_config();

ModelKind model_of(const Config& config);
Bundle bundle_from_config(const Config& config);

struct ExperimentPreset {
    std::string name;
    std::string description;
    std::string command;  // subcommand run for every member
    std::vector<std::pair<std::string, Config>> members;  // run name, overrides on default_config()
};

const std::vector<ExperimentPreset>& presets();
const ExperimentPreset& find_preset(const std::string& name);

/// `t,alpha` at every integration grid point, with the spatial mean amplitude.
void emit_alpha_profile(const Config& config, const std::filesystem::path& path);

void write_averaged_trajectory(const AveragedTrajectory& traj, const std::filesystem::path& path);
void write_field_summary(const FieldTrajectory& traj, const std::filesystem::path& path);
void write_field_snapshots(const FieldTrajectory& traj, const std::filesystem::path& path);
void write_adjoint(const AdjointTrajectory& adj, std::size_t store_every, const std::filesystem::path& path);
void write_strategy(const StrategyResult& result, const TimeGrid& time, const std::filesystem::path& path);
void write_pulse_certificate(const StrategyResult& result, const std::filesystem::path& path);
void write_control(const ContinuousControl& u, const TimeGrid& time, const std::filesystem::path& path);
void write_control_certificate(const StrategyResult& result, const std::filesystem::path& path);

/// Config plus run.* entries (command, version, seed) and result.* entries.
void write_manifest(const Config& config, const std::string& command, const std::map<std::string, std::string>& results,
                    const std::filesystem::path& path);

/// Runs one subcommand against `config`, writing into `out`. Returns the exit code.
int run_command(const std::string& command, const Config& config, const std::filesystem::path& out,
                std::ostream& log);

/// Command-line entry point: 0 ok, 1 validation failure, 2 solver failure, 64 usage.
int run_cli(int argc, char** argv);

}  // namespace anthracnose
