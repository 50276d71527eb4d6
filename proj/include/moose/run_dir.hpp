#pragma once

#include "moose/engine.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace moose {

struct RunManifest {
    std::string run_id;
    std::string preset;
    std::string engine_mode;
    std::string backend;
    nlohmann::json config;
    std::map<std::string, std::string> input_hashes;
    std::map<std::string, std::string> template_hashes;
    std::int64_t seed = 0;
    std::int64_t started_at_ms = 0;
    std::int64_t finished_at_ms = 0;
    /// Filled in when the run completes.
    nlohmann::json summary = nlohmann::json::object();
};

nlohmann::json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

std::int64_t now_unix_ms();
/// UTC "YYYYmmddTHHMMSSZ".
std::string utc_stamp();

/// Creates `out_dir/run_id`; throws ConfigError when it already exists.
std::filesystem::path create_run_dir(const std::filesystem::path& out_dir, const std::string& run_id);

void write_manifest(const std::filesystem::path& run_dir, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& run_dir);

void write_text_file(const std::filesystem::path& path, std::string_view text);

/// hypotheses.jsonl, trace.jsonl and the completed manifest.
void write_run_outputs(const std::filesystem::path& run_dir, const RunResult& result, RunManifest manifest);

std::vector<HypothesisRecord> read_hypotheses(const std::filesystem::path& run_dir);

} // namespace moose
