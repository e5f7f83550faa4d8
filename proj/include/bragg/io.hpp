#pragma once

#include "bragg/scenarios.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace bragg {

enum class Analysis { Transfer, Bloch };

/// One simulation as described by a config file. Everything is recoil-scaled.
struct SimConfig {
    ScenarioParams params = mirror_defaults();
    Analysis analysis = Analysis::Transfer;
    double sigma_q = 0.0;
    int q_points = 21;
    std::string trajectory_path;  // empty: derived by the caller
    std::string summary_path;

    bool operator==(const SimConfig&) const = default;
};

/// Every violation found in a config text, one message each.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

class IoError : public std::runtime_error {
public:
    IoError(const std::filesystem::path& path, const std::string& cause);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Keys that must appear in every config, and the extra ones splitter mode needs.
const std::vector<std::string>& required_keys();
const std::vector<std::string>& splitter_required_keys();

/// Flat `key = value` text; `#` starts a comment. Throws ConfigError listing
/// unknown, duplicate, missing and out-of-range keys together.
SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::filesystem::path& path);

/// Inverse of parse_config: parse_config(emit_config(c)) == c.
std::string emit_config(const SimConfig& cfg);

/// Sets one key as if it appeared in the file, then revalidates.
void apply_override(SimConfig& cfg, const std::string& key, const std::string& value);

/// Writes `contents` to `path` through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

/// CSV: t, P_-N .. P_N, v_mean, norm (2N + 4 columns) at 12 significant digits.
std::string trajectory_csv(const Trajectory& traj);
void emit_trajectory(const Trajectory& traj, const std::filesystem::path& path);

using ordered_json = nlohmann::ordered_json;

ordered_json config_json(const SimConfig& cfg);
ordered_json metrics_json(const SummaryMetrics& m);
ordered_json summary_json(const SimConfig& cfg, const RunResult& run);
void emit_summary(const ordered_json& summary, const std::filesystem::path& path);

}  // namespace bragg
