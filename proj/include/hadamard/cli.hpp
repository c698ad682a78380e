#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hadamard/errors.hpp"

namespace hadamard::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitInternal = 4;

/// Schema violation. what() is "<field path>: <message>".
class SchemaError : public ConfigError {
public:
    SchemaError(const std::string& path, const std::string& message);
    [[nodiscard]] const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct ExperimentConfig {
    std::string command;  // classify, vdw, kirchhoff, instability, majorant, fbi
    nlohmann::json parameters = nlohmann::json::object();
    std::string output_dir;
    std::uint64_t seed = 0;

    [[nodiscard]] nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
};

/// JSON parse that rejects duplicate object keys (SchemaError with the key path).
nlohmann::json parse_json_strict(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& file);

struct RunResult {
    int status = kExitOk;  // kExitOk or kExitNumerical (blow-up or infeasibility recorded)
    std::string message;
    nlohmann::json report;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::map<std::string, std::string> artifacts;  // extra files, name -> contents
    std::vector<std::string> files;                 // written, relative to output_dir
    double wall_time = 0.0;
};

/// Validates and runs the command in memory. Throws SchemaError before any work
/// when the parameters do not match the command schema.
RunResult execute(const ExperimentConfig& cfg);

/// execute() followed by writing report.json, results.csv (when there are rows), the
/// artifacts and manifest.json into cfg.output_dir. Nothing is written when
/// validation fails.
RunResult run(const ExperimentConfig& cfg);

/// Re-runs the config echoed in a manifest into output_dir.
RunResult rerun_from_manifest(const std::filesystem::path& manifest, const std::string& output_dir);

/// {"command", "output_dir", "seed", "base": {...}, "vary": [{...}, ...]} or
/// {"output_dir", "runs": [config, ...]}. Parameter sets must be pairwise distinct.
std::vector<ExperimentConfig> expand_sweep(const nlohmann::json& j);

struct SweepRun {
    ExperimentConfig config;
    int status = kExitOk;
    std::string message;
};

struct SweepResult {
    std::vector<SweepRun> runs;  // ordered by (command, parameters)
    std::vector<std::string> key_columns;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    int status = kExitOk;  // worst run status
};

/// Runs every config into output_dir/run_NNN (possibly concurrently), records failures
/// and writes merged.csv and sweep.json. Throws SchemaError for duplicate parameter sets.
SweepResult sweep(std::vector<ExperimentConfig> configs, const std::string& output_dir);

/// CSV text with a header line; fields containing ',' or '"' are quoted.
std::string to_csv(const std::vector<std::string>& columns, const std::vector<std::vector<std::string>>& rows);

/// Reads a CSV written by to_csv (no embedded newlines).
std::vector<std::map<std::string, std::string>> read_csv(const std::filesystem::path& file);

/// Exit status for an exception escaping run/sweep.
int exit_status_for(const std::exception& e);

}  // namespace hadamard::cli
