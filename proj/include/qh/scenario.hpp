#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qh/config.hpp"
#include "qh/grid.hpp"
#include "qh/snapshot.hpp"

namespace qh {

// A machine-checkable outcome: value relation threshold (or lower <= value <= upper for "in").
struct Check {
    std::string name;
    double value = 0.0;
    std::string relation;  // "<=", ">=", "<", "in", "=="
    double threshold = 0.0;
    double upper = 0.0;
    bool pass = false;

    static Check at_most(std::string name, double value, double limit);
    static Check at_least(std::string name, double value, double limit);
    static Check below(std::string name, double value, double limit);
    static Check within(std::string name, double value, double lo, double hi);
    static Check holds(std::string name, bool ok);
};

// One simulated history with its density snapshots (paths relative to the output directory).
struct RunRecord {
    std::string name;
    std::string kind;
    Grid grid;
    nlohmann::json info = nlohmann::json::object();
    std::vector<std::pair<double, std::string>> series;
};

struct ExperimentOutput {
    std::vector<Check> checks;
    nlohmann::json metrics = nlohmann::json::object();
    std::vector<RunRecord> runs;
    std::vector<std::string> files;  // further artifacts, relative paths

    bool passed() const;
};

struct ExperimentContext {
    std::filesystem::path out;
    std::size_t workers = 1;
    std::uint64_t seed = 1;
    SnapshotMode snapshot_mode = SnapshotMode::Text;

    // Writes a density snapshot under `out` and returns its relative path.
    std::string snapshot(const std::string& run, std::size_t index, const ScalarField& f, double t) const;
    // Opens `out/relative` for writing (creating directories) and registers nothing.
    std::filesystem::path path(const std::string& relative) const;
};

using ExperimentJob = std::function<ExperimentOutput(const ExperimentContext&)>;

struct ExperimentKind {
    std::string name;
    std::string summary;
    // Reads and validates every key the experiment uses; no compute happens here.
    std::function<ExperimentJob(const Config&)> prepare;
};

const std::vector<ExperimentKind>& experiment_kinds();

struct Scenario {
    Config config;
    std::string name;
    std::string experiment;
    std::string system;
    std::string description;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    SnapshotMode snapshot_mode = SnapshotMode::Text;
    ExperimentJob job;
};

struct ScenarioOverrides {
    std::optional<std::size_t> workers;
    std::optional<std::uint64_t> seed;
};

// Parses and validates; throws ConfigError with line and key on any problem.
Scenario load_scenario(const Config& cfg, const ScenarioOverrides& overrides = {});

// Git-style blob hash (SHA-1 of "blob <size>\0" + content), lowercase hex.
std::string content_hash(const std::string& bytes);

enum class RunStatus { Pass, Fail, Error };

struct RunOutcome {
    RunStatus status = RunStatus::Error;
    std::filesystem::path manifest;
    ExperimentOutput output;
    std::string error;
};

// Runs the scenario into `out`, writing manifest.json atomically: a "running" manifest before
// compute, the final one after. Solver errors are caught and recorded with status "error".
RunOutcome run_scenario(const Scenario& s, const std::filesystem::path& out);

enum class DistanceMetric { L1, L2, Linf };

DistanceMetric metric_from_string(const std::string& s);

struct Comparison {
    std::vector<double> t;
    std::vector<double> distance;
    double max = 0.0;
    double mean = 0.0;
};

// Distances between the density series of run `run_a` in manifest A and `run_b` in B (empty
// names pick each manifest's first run). Grids and time bases must agree, else GridMismatch.
Comparison compare_runs(const std::filesystem::path& manifest_a, const std::string& run_a,
                        const std::filesystem::path& manifest_b, const std::string& run_b, DistanceMetric metric);

void write_comparison_csv(const std::filesystem::path& path, const Comparison& c, DistanceMetric metric);

// Writes `text` to a sibling temporary file and renames it over `path`.
void write_atomically(const std::filesystem::path& path, const std::string& text);

}  // namespace qh
