#include "moose/corpus.hpp"

#include "moose/errors.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <regex>
#include <sstream>

namespace moose {

using nlohmann::json;

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string_view> split_words(std::string_view text) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) words.push_back(text.substr(start, i - start));
    }
    return words;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Strict YYYY-MM-DD with a real calendar day.
bool valid_iso_date(const std::string& text) {
    static const std::regex pattern(R"(^(\d{4})-(\d{2})-(\d{2})$)");
    std::smatch m;
    if (!std::regex_match(text, m, pattern)) return false;
    std::chrono::year_month_day ymd{std::chrono::year{std::stoi(m[1])},
                                    std::chrono::month{static_cast<unsigned>(std::stoi(m[2]))},
                                    std::chrono::day{static_cast<unsigned>(std::stoi(m[3]))}};
    return ymd.ok();
}

template <typename Fn>
void for_each_record(std::string_view text, std::string_view source_name, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        ++line_no;
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (std::all_of(line.begin(), line.end(), is_space)) {
            if (end == text.size()) break;
            continue;
        }
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string(source_name) + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
        }
        if (!record.is_object()) {
            throw ParseError(std::string(source_name) + ":" + std::to_string(line_no) + ": record is not a JSON object");
        }
        try {
            fn(record, line_no);
        } catch (const json::exception& e) {
            throw ParseError(std::string(source_name) + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (end == text.size()) break;
    }
}

std::string required_string(const json& record, const char* key, std::string_view where) {
    auto it = record.find(key);
    if (it == record.end()) throw ParseError(std::string(where) + ": missing key '" + key + "'");
    if (!it->is_string()) throw ParseError(std::string(where) + ": key '" + key + "' must be a string");
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& record, const char* key, std::string_view where) {
    auto it = record.find(key);
    if (it == record.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ParseError(std::string(where) + ": key '" + key + "' must be a string");
    return it->get<std::string>();
}

} // namespace

std::string_view to_string(Role role) {
    switch (role) {
    case Role::Background: return "background";
    case Role::Inspiration: return "inspiration";
    case Role::Survey: return "survey";
    }
    return "background";
}

Role role_from_string(std::string_view text) {
    if (text == "background") return Role::Background;
    if (text == "inspiration") return Role::Inspiration;
    if (text == "survey") return Role::Survey;
    throw ParseError("unknown passage role '" + std::string(text) + "'");
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    for (auto word : split_words(text)) {
        if (!out.empty()) out.push_back(' ');
        out.append(word);
    }
    return out;
}

std::vector<Chunk> chunk_passage(const Passage& passage, std::size_t chunk_size_words) {
    if (chunk_size_words == 0) throw ConfigError("chunk_size_words must be at least 1");
    auto words = split_words(passage.body);
    std::vector<Chunk> chunks;
    for (std::size_t start = 0; start < words.size(); start += chunk_size_words) {
        std::size_t stop = std::min(words.size(), start + chunk_size_words);
        Chunk chunk{passage.id, chunks.size(), {}};
        for (std::size_t i = start; i < stop; ++i) {
            if (i > start) chunk.text.push_back(' ');
            chunk.text.append(words[i]);
        }
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

Corpus::Corpus(std::vector<Passage> passages) : passages_(std::move(passages)) {
    for (std::size_t i = 0; i < passages_.size(); ++i) {
        const auto& p = passages_[i];
        if (p.id.empty()) throw ValidationError("passage at position " + std::to_string(i) + " has an empty id");
        if (normalize_whitespace(p.title).empty()) throw ValidationError("passage '" + p.id + "' has an empty title");
        if (!by_id_.emplace(p.id, i).second) throw ValidationError("duplicate passage id '" + p.id + "'");
        by_title_[p.title].push_back(i);
    }
    for (auto& [title, indices] : by_title_) {
        std::sort(indices.begin(), indices.end(),
                  [this](std::size_t a, std::size_t b) { return passages_[a].id < passages_[b].id; });
    }
}

const Passage* Corpus::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &passages_[it->second];
}

std::vector<const Passage*> Corpus::find_by_title(std::string_view title) const {
    std::vector<const Passage*> out;
    auto it = by_title_.find(std::string(title));
    if (it == by_title_.end()) return out;
    for (auto i : it->second) out.push_back(&passages_[i]);
    return out;
}

std::map<Role, std::size_t> Corpus::role_counts() const {
    std::map<Role, std::size_t> counts{{Role::Background, 0}, {Role::Inspiration, 0}, {Role::Survey, 0}};
    for (const auto& p : passages_) ++counts[p.role];
    return counts;
}

std::vector<const Passage*> Corpus::with_role(Role role) const {
    std::vector<const Passage*> out;
    for (const auto& p : passages_) {
        if (p.role == role) out.push_back(&p);
    }
    std::sort(out.begin(), out.end(), [](const Passage* a, const Passage* b) { return a->id < b->id; });
    return out;
}

CorpusHandle parse_corpus(std::string_view text, std::string_view source_name) {
    std::vector<Passage> passages;
    for_each_record(text, source_name, [&](const json& record, std::size_t line_no) {
        std::string where = std::string(source_name) + ":" + std::to_string(line_no);
        Passage p;
        p.id = required_string(record, "id", where);
        p.title = required_string(record, "title", where);
        p.body = required_string(record, "body", where);
        try {
            p.role = role_from_string(required_string(record, "role", where));
        } catch (const ParseError& e) {
            throw ParseError(where + ": " + e.what());
        }
        p.source_url = optional_string(record, "source_url", where);
        p.date = optional_string(record, "date", where);
        if (p.date && !valid_iso_date(*p.date)) {
            throw ParseError(where + ": date '" + *p.date + "' is not an ISO-8601 calendar date");
        }
        passages.push_back(std::move(p));
    });
    return std::make_shared<const Corpus>(std::move(passages));
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CorpusHandle load_corpus(const std::filesystem::path& path) {
    return parse_corpus(read_text_file(path), path.string());
}

std::string serialize_corpus(const Corpus& corpus) {
    std::string out;
    for (const auto& p : corpus.passages()) {
        json record{{"id", p.id}, {"title", p.title}, {"body", p.body}, {"role", to_string(p.role)}};
        if (p.source_url) record["source_url"] = *p.source_url;
        if (p.date) record["date"] = *p.date;
        out += record.dump();
        out.push_back('\n');
    }
    return out;
}

std::string_view to_string(CorpusMode mode) {
    return mode == CorpusMode::Standard ? "standard" : "randomized";
}

CorpusMode corpus_mode_from_string(std::string_view text) {
    if (text == "standard") return CorpusMode::Standard;
    if (text == "randomized") return CorpusMode::Randomized;
    throw ConfigError("unknown corpus mode '" + std::string(text) + "'");
}

CorpusView select_corpus_view(const CorpusHandle& corpus, CorpusMode mode) {
    if (!corpus) throw ConfigError("corpus not loaded");
    CorpusView view{corpus, mode, {}, {}, corpus->with_role(Role::Survey)};
    auto backgrounds = corpus->with_role(Role::Background);
    auto inspirations = corpus->with_role(Role::Inspiration);
    if (mode == CorpusMode::Standard) {
        if (backgrounds.empty()) throw ConfigError("standard corpus mode requires at least one background passage");
        if (inspirations.empty()) throw ConfigError("standard corpus mode requires at least one inspiration passage");
        view.background_pool = std::move(backgrounds);
        view.inspiration_pool = std::move(inspirations);
    } else {
        if (inspirations.empty()) throw ConfigError("randomized corpus mode requires at least one inspiration passage");
        view.background_pool = inspirations;
        view.inspiration_pool = std::move(inspirations);
        view.inspiration_pool.insert(view.inspiration_pool.end(), backgrounds.begin(), backgrounds.end());
        std::sort(view.inspiration_pool.begin(), view.inspiration_pool.end(),
                  [](const Passage* a, const Passage* b) { return a->id < b->id; });
    }
    return view;
}

namespace {

constexpr std::pair<Subject, std::string_view> kSubjectNames[] = {
    {Subject::Communication, "Communication"},
    {Subject::Psychology, "Psychology"},
    {Subject::HumanResourceManagement, "Human Resource Management"},
    {Subject::InformationSystem, "Information System"},
    {Subject::InternationalBusiness, "International Business"},
    {Subject::Management, "Management"},
    {Subject::Marketing, "Marketing"},
};

} // namespace

std::string_view to_string(Subject subject) {
    for (const auto& [s, name] : kSubjectNames) {
        if (s == subject) return name;
    }
    return "Marketing";
}

Subject subject_from_string(std::string_view text) {
    auto wanted = lower(text);
    for (const auto& [s, name] : kSubjectNames) {
        if (lower(name) == wanted) return s;
    }
    throw ParseError("unknown subject '" + std::string(text) + "'");
}

std::string_view to_string(Complexity complexity) {
    switch (complexity) {
    case Complexity::Easy: return "Easy";
    case Complexity::Medium: return "Medium";
    case Complexity::Hard: return "Hard";
    }
    return "Easy";
}

Complexity complexity_from_string(std::string_view text) {
    auto wanted = lower(text);
    if (wanted == "easy") return Complexity::Easy;
    if (wanted == "medium") return Complexity::Medium;
    if (wanted == "hard") return Complexity::Hard;
    throw ParseError("unknown complexity '" + std::string(text) + "'");
}

Benchmark parse_benchmark(std::string_view text, const Corpus& corpus, std::string_view source_name) {
    Benchmark benchmark;
    for_each_record(text, source_name, [&](const json& record, std::size_t line_no) {
        std::string where = std::string(source_name) + ":" + std::to_string(line_no);
        BenchmarkEntry e;
        e.paper_id = required_string(record, "paper_id", where);
        e.publication_link = required_string(record, "publication_link", where);
        e.publication_date = required_string(record, "publication_date", where);
        e.gt_hypothesis = required_string(record, "gt_hypothesis", where);
        e.gt_background_passage_id = required_string(record, "gt_background_passage_id", where);
        e.reasoning_process = required_string(record, "reasoning_process", where);
        try {
            e.subject = subject_from_string(required_string(record, "subject", where));
            e.reasoning_complexity = complexity_from_string(required_string(record, "reasoning_complexity", where));
            e.association_complexity = complexity_from_string(required_string(record, "association_complexity", where));
        } catch (const ParseError& err) {
            throw ParseError(where + ": " + err.what());
        }
        const auto& ids = record.at("gt_inspiration_passage_ids");
        if (!ids.is_array()) throw ParseError(where + ": gt_inspiration_passage_ids must be an array");
        e.gt_inspiration_passage_ids = ids.get<std::vector<std::string>>();

        if (!valid_iso_date(e.publication_date)) {
            throw ParseError(where + ": publication_date '" + e.publication_date + "' is not an ISO-8601 date");
        }
        if (e.publication_date < "2023-01-01") {
            benchmark.warnings.push_back(where + ": paper '" + e.paper_id + "' published before 2023-01-01");
        }

        const auto* bg = corpus.find(e.gt_background_passage_id);
        if (bg == nullptr) {
            throw ValidationError(where + ": background passage '" + e.gt_background_passage_id + "' not in corpus");
        }
        if (bg->role != Role::Background) {
            throw ValidationError(where + ": passage '" + bg->id + "' is not a background passage");
        }
        if (e.gt_inspiration_passage_ids.empty()) {
            throw ValidationError(where + ": paper '" + e.paper_id + "' lists no inspiration passages");
        }
        for (const auto& id : e.gt_inspiration_passage_ids) {
            const auto* p = corpus.find(id);
            if (p == nullptr) throw ValidationError(where + ": inspiration passage '" + id + "' not in corpus");
            if (p->role != Role::Inspiration) {
                throw ValidationError(where + ": passage '" + id + "' is not an inspiration passage");
            }
        }
        for (const auto& prior : benchmark.entries) {
            if (prior.paper_id == e.paper_id) throw ValidationError(where + ": duplicate paper_id '" + e.paper_id + "'");
        }
        benchmark.entries.push_back(std::move(e));
    });
    for (const auto& w : benchmark.warnings) spdlog::warn("{}", w);
    return benchmark;
}

Benchmark load_benchmark(const std::filesystem::path& path, const Corpus& corpus) {
    return parse_benchmark(read_text_file(path), corpus, path.string());
}

std::map<Subject, std::size_t> subject_histogram(const Benchmark& benchmark) {
    std::map<Subject, std::size_t> out;
    for (const auto& [s, name] : kSubjectNames) out[s] = 0;
    for (const auto& e : benchmark.entries) ++out[e.subject];
    return out;
}

namespace {
std::map<Complexity, std::size_t> empty_complexity_histogram() {
    return {{Complexity::Easy, 0}, {Complexity::Medium, 0}, {Complexity::Hard, 0}};
}
} // namespace

std::map<Complexity, std::size_t> reasoning_histogram(const Benchmark& benchmark) {
    auto out = empty_complexity_histogram();
    for (const auto& e : benchmark.entries) ++out[e.reasoning_complexity];
    return out;
}

std::map<Complexity, std::size_t> association_histogram(const Benchmark& benchmark) {
    auto out = empty_complexity_histogram();
    for (const auto& e : benchmark.entries) ++out[e.association_complexity];
    return out;
}

} // namespace moose
