#include "moose/run_dir.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

namespace moose {

using nlohmann::json;

json to_json(const RunManifest& m) {
    return {{"run_id", m.run_id},
            {"preset", m.preset},
            {"engine_mode", m.engine_mode},
            {"backend", m.backend},
            {"config", m.config},
            {"input_hashes", m.input_hashes},
            {"template_hashes", m.template_hashes},
            {"seed", m.seed},
            {"started_at_ms", m.started_at_ms},
            {"finished_at_ms", m.finished_at_ms},
            {"summary", m.summary}};
}

RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.preset = j.value("preset", std::string());
    m.engine_mode = j.value("engine_mode", std::string());
    m.backend = j.value("backend", std::string());
    m.config = j.value("config", json::object());
    m.input_hashes = j.value("input_hashes", std::map<std::string, std::string>{});
    m.template_hashes = j.value("template_hashes", std::map<std::string, std::string>{});
    m.seed = j.value("seed", std::int64_t{0});
    m.started_at_ms = j.value("started_at_ms", std::int64_t{0});
    m.finished_at_ms = j.value("finished_at_ms", std::int64_t{0});
    m.summary = j.value("summary", json::object());
    return m;
}

std::int64_t now_unix_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::string utc_stamp() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

std::filesystem::path create_run_dir(const std::filesystem::path& out_dir, const std::string& run_id) {
    if (run_id.empty() || run_id.find('/') != std::string::npos) throw ConfigError("invalid run id '" + run_id + "'");
    std::filesystem::create_directories(out_dir);
    auto dir = out_dir / run_id;
    if (!std::filesystem::create_directory(dir)) {
        throw ConfigError("run '" + run_id + "' already exists in " + out_dir.string());
    }
    return dir;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + path.string() + "'");
        out << text;
        if (!out) throw Error("write to '" + path.string() + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

void write_manifest(const std::filesystem::path& run_dir, const RunManifest& manifest) {
    write_text_file(run_dir / "manifest.json", to_json(manifest).dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& run_dir) {
    try {
        return manifest_from_json(json::parse(read_text_file(run_dir / "manifest.json")));
    } catch (const json::exception& e) {
        throw ParseError((run_dir / "manifest.json").string() + ": " + e.what());
    }
}

void write_run_outputs(const std::filesystem::path& run_dir, const RunResult& result, RunManifest manifest) {
    write_text_file(run_dir / "hypotheses.jsonl", records_to_jsonl(result.records));
    if (result.trace) write_text_file(run_dir / "trace.jsonl", to_jsonl(result.trace->snapshot()));
    json failures = json::array();
    for (const auto& f : result.failures) {
        failures.push_back({{"passage_id", f.chunk.passage_id}, {"chunk_index", f.chunk.chunk_index}, {"error", f.message}});
    }
    manifest.summary = {{"records", result.records.size()},
                        {"backgrounds_attempted", result.backgrounds_attempted},
                        {"failures", failures},
                        {"counters", result.counters},
                        {"calls", result.trace ? result.trace->size() : 0}};
    manifest.finished_at_ms = now_unix_ms();
    write_manifest(run_dir, manifest);
}

std::vector<HypothesisRecord> read_hypotheses(const std::filesystem::path& run_dir) {
    auto path = run_dir / "hypotheses.jsonl";
    return records_from_jsonl(read_text_file(path), path.string());
}

} // namespace moose
