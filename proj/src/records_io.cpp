#include "moose/engine.hpp"

namespace moose {

using nlohmann::json;

namespace {

json chunk_json(const ChunkRef& c) { return {{"passage_id", c.passage_id}, {"chunk_index", c.chunk_index}}; }
ChunkRef chunk_from(const json& j) { return {j.at("passage_id").get<std::string>(), j.at("chunk_index").get<std::size_t>()}; }

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& value) {
    j[key] = value ? json(*value) : json(nullptr);
}

std::optional<std::string> opt_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

} // namespace

json to_json(const PipelineConfig& cfg) {
    return {{"past_iterations", cfg.past_iterations},
            {"present_iterations", cfg.present_iterations},
            {"proposals_per_call", cfg.proposals_per_call},
            {"title_topk", cfg.title_topk},
            {"survey_topk", cfg.survey_topk},
            {"enable_ff1", cfg.enable_ff1},
            {"enable_ff2", cfg.enable_ff2},
            {"enable_past_feedback", cfg.enable_past_feedback},
            {"enable_survey_access", cfg.enable_survey_access},
            {"past_feedback_mode", to_string(cfg.past_feedback_mode)},
            {"corpus_mode", to_string(cfg.corpus_mode)},
            {"seed", cfg.seed},
            {"chunk_size_words", cfg.chunk_size_words},
            {"background_limit", cfg.background_limit},
            {"title_batch_size", cfg.title_batch_size},
            {"workers", cfg.workers},
            {"model_name", cfg.model_name}};
}

PipelineConfig apply_overrides(PipelineConfig cfg, const json& overrides) {
    if (overrides.is_null()) return cfg;
    if (!overrides.is_object()) throw ConfigError("config overrides must be a JSON object");
    for (const auto& [key, value] : overrides.items()) {
        try {
            if (key == "past_iterations") cfg.past_iterations = value.get<std::size_t>();
            else if (key == "present_iterations") cfg.present_iterations = value.get<std::size_t>();
            else if (key == "proposals_per_call") cfg.proposals_per_call = value.get<std::size_t>();
            else if (key == "title_topk") cfg.title_topk = value.get<std::size_t>();
            else if (key == "survey_topk") cfg.survey_topk = value.get<std::size_t>();
            else if (key == "enable_ff1") cfg.enable_ff1 = value.get<bool>();
            else if (key == "enable_ff2") cfg.enable_ff2 = value.get<bool>();
            else if (key == "enable_past_feedback") cfg.enable_past_feedback = value.get<bool>();
            else if (key == "enable_survey_access") cfg.enable_survey_access = value.get<bool>();
            else if (key == "past_feedback_mode") {
                auto mode = value.get<std::string>();
                if (mode == "heuristic") cfg.past_feedback_mode = PastFeedbackMode::Heuristic;
                else if (mode == "model") cfg.past_feedback_mode = PastFeedbackMode::Model;
                else throw ConfigError("unknown past_feedback_mode '" + mode + "'");
            } else if (key == "corpus_mode") cfg.corpus_mode = corpus_mode_from_string(value.get<std::string>());
            else if (key == "seed") cfg.seed = value.get<std::int64_t>();
            else if (key == "chunk_size_words") cfg.chunk_size_words = value.get<std::size_t>();
            else if (key == "background_limit") cfg.background_limit = value.get<std::size_t>();
            else if (key == "title_batch_size") cfg.title_batch_size = value.get<std::size_t>();
            else if (key == "workers") cfg.workers = value.get<std::size_t>();
            else if (key == "model_name") cfg.model_name = value.get<std::string>();
            else throw ConfigError("unknown config key '" + key + "'");
        } catch (const json::exception& e) {
            throw ConfigError("config key '" + key + "': " + e.what());
        }
    }
    return cfg;
}

json to_json(const HypothesisRecord& r) {
    json j;
    j["id"] = r.id;
    j["method"] = r.method;
    j["text"] = r.text;
    if (r.background) {
        json bg{{"text", r.background->text}, {"source_chunk", chunk_json(r.background->source_chunk)}};
        put_optional(bg, "reason", r.background->reason);
        j["background"] = std::move(bg);
    } else {
        j["background"] = nullptr;
    }
    if (r.inspiration_set) {
        json titles = json::array();
        for (const auto& t : r.inspiration_set->titles) {
            json tj{{"title", t.title}};
            put_optional(tj, "reason", t.reason);
            titles.push_back(std::move(tj));
        }
        json insp = json::array();
        for (const auto& i : r.inspiration_set->inspirations) insp.push_back({{"text", i.text}, {"passage_id", i.passage_id}});
        j["inspiration_set"] = {{"titles", titles}, {"inspirations", insp}, {"past_iteration", r.inspiration_set->past_iteration}};
    } else {
        j["inspiration_set"] = nullptr;
    }
    j["suggestion"] = r.suggestion ? json(r.suggestion->text) : json(nullptr);
    j["present_iteration"] = r.present_iteration;
    put_optional(j, "parent_id", r.parent_id);
    if (r.feedback_used) {
        j["feedback_used"] = {{"clarity", r.feedback_used->clarity},
                              {"reality", r.feedback_used->reality},
                              {"novelty", r.feedback_used->novelty}};
    } else {
        j["feedback_used"] = nullptr;
    }
    j["proposal_index"] = r.proposal_index;
    j["is_final"] = r.is_final;
    j["source_chunk"] = r.source_chunk ? chunk_json(*r.source_chunk) : json(nullptr);
    put_optional(j, "paper_id", r.paper_id);
    return j;
}

HypothesisRecord record_from_json(const json& j) {
    HypothesisRecord r;
    r.id = j.at("id").get<std::string>();
    r.method = j.value("method", std::string());
    r.text = j.at("text").get<std::string>();
    if (j.contains("background") && !j["background"].is_null()) {
        const auto& bg = j["background"];
        r.background = Background{bg.at("text").get<std::string>(), opt_string(bg, "reason"), chunk_from(bg.at("source_chunk"))};
    }
    if (j.contains("inspiration_set") && !j["inspiration_set"].is_null()) {
        const auto& s = j["inspiration_set"];
        InspirationSet set;
        for (const auto& t : s.at("titles")) set.titles.push_back({t.at("title").get<std::string>(), opt_string(t, "reason")});
        for (const auto& i : s.at("inspirations")) {
            set.inspirations.push_back({i.at("text").get<std::string>(), i.at("passage_id").get<std::string>()});
        }
        set.past_iteration = s.at("past_iteration").get<std::size_t>();
        r.inspiration_set = std::move(set);
    }
    if (auto s = opt_string(j, "suggestion")) r.suggestion = Suggestion{*s};
    r.present_iteration = j.value("present_iteration", std::size_t{0});
    r.parent_id = opt_string(j, "parent_id");
    if (j.contains("feedback_used") && !j["feedback_used"].is_null()) {
        const auto& f = j["feedback_used"];
        r.feedback_used = FeedbackBundle{f.at("clarity").get<std::string>(), f.at("reality").get<std::string>(),
                                         f.at("novelty").get<std::string>()};
    }
    r.proposal_index = j.value("proposal_index", std::size_t{0});
    r.is_final = j.value("is_final", true);
    if (j.contains("source_chunk") && !j["source_chunk"].is_null()) r.source_chunk = chunk_from(j["source_chunk"]);
    r.paper_id = opt_string(j, "paper_id");
    return r;
}

std::string records_to_jsonl(const std::vector<HypothesisRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out.push_back('\n');
    }
    return out;
}

std::vector<HypothesisRecord> records_from_jsonl(std::string_view text, std::string_view source_name) {
    std::vector<HypothesisRecord> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (normalize_whitespace(line).empty()) continue;
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ParseError(std::string(source_name) + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

} // namespace moose
