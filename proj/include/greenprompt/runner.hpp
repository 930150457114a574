#pragma once

#include "greenprompt/corpus.hpp"
#include "greenprompt/energy_meter.hpp"
#include "greenprompt/llm_client.hpp"
#include "greenprompt/metrics.hpp"
#include "greenprompt/prompt_engine.hpp"
#include "greenprompt/run_record.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace greenprompt {

struct RunError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Everything needed to execute (and later resume) one experiment grid:
/// snippets x pets x configs x repetitions, with the shot-example pool and
/// scoring settings pinned alongside.
struct ExperimentPlan {
    std::vector<Snippet> snippets;
    std::vector<Snippet> example_pool;
    std::vector<Pet> pets;
    std::vector<ConfigId> configs;
    int repetitions = 5;
    double pause_s = 10.0;
    EndpointConfig endpoint;
    MeterConfig meter;
    std::uint64_t seed = 0;
    NormalizeOptions normalize;
    UncontrolledThresholds uncontrolled;

    std::size_t total_runs() const {
        return snippets.size() * pets.size() * configs.size() *
               static_cast<std::size_t>(repetitions);
    }
};

nlohmann::json to_json(const ExperimentPlan& plan);
ExperimentPlan plan_from_json(const nlohmann::json& j);

/// FNV-1a over the canonical plan serialization; resume uses it to detect a
/// modified manifest.
std::string plan_fingerprint(const ExperimentPlan& plan);

struct RunManifest {
    ExperimentPlan plan;
    nlohmann::json environment;
    std::string started_at;
    std::string status;               // "running" or "complete"
    bool warmup_performed = false;
    std::vector<std::string> resumed_at;
};

using ProgressFn =
    std::function<void(const RunRecord& record, std::size_t done, std::size_t total)>;

/// Executes the full grid in deterministic order (snippet-major, then PET,
/// then config, then repetition), wrapping every completion in its own
/// measurement window, persisting one record line per run, and pausing
/// between runs. An unrecorded warm-up completion precedes the first
/// recorded run. Returns the final manifest with status "complete".
RunManifest run_experiment(const ExperimentPlan& plan, const std::filesystem::path& out_dir,
                           const ProgressFn& progress = nullptr);

/// Re-executes only the grid cells that have no persisted record, under the
/// manifest's original plan. A record file whose final line was torn by a
/// crash is truncated back to its last complete record first. The api_key is
/// not persisted, so pass it again when the endpoint needs one.
RunManifest resume(const std::filesystem::path& out_dir,
                   const std::optional<std::string>& api_key = std::nullopt,
                   const ProgressFn& progress = nullptr);

RunManifest load_manifest(const std::filesystem::path& out_dir);
void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest);

struct LoadedRecords {
    std::vector<RunRecord> records;
    std::vector<std::filesystem::path> torn_files; // trailing partial line detected
};

/// Reads every records/*.jsonl line. A torn final line (crash artifact) is
/// reported, not an error; a malformed line anywhere else is.
LoadedRecords load_records_detailed(const std::filesystem::path& out_dir);

/// Convenience wrapper that tolerates torn tails silently.
std::vector<RunRecord> load_records(const std::filesystem::path& out_dir);

/// Re-scores every successful record from its stored raw answer with the
/// given settings, rewrites the record files, and notes the new settings in
/// the manifest. Returns the number of records re-scored.
std::size_t rescore_run(const std::filesystem::path& out_dir, const NormalizeOptions& normalize,
                        const UncontrolledThresholds& uncontrolled);

} // namespace greenprompt
