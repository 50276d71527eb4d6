#include "moose/evaluation.hpp"

#include "moose/parsing.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace moose::eval {

using nlohmann::json;

std::string_view to_string(Aspect aspect) {
    switch (aspect) {
    case Aspect::Validness: return "validness";
    case Aspect::Novelty: return "novelty";
    case Aspect::Helpfulness: return "helpfulness";
    }
    return "validness";
}

Rubric Rubric::standard(Aspect aspect) {
    Rubric r;
    r.aspect = aspect;
    switch (aspect) {
    case Aspect::Validness:
        r.levels = {"The hypothesis completely violates the reality.",
                    "The hypothesis has at least one major confliction with the reality or only establishes in very "
                    "rare circumstances that are not mentioned in this hypothesis.",
                    "The hypothesis has at least one moderate conflict or several minor conflicts.",
                    "The hypothesis almost completely reflects the reality, but has only one or two minor "
                    "conflictions that can be easily modified.",
                    "The hypothesis completely reflects the reality."};
        break;
    case Aspect::Novelty:
        r.levels = {"The hypothesis is not novel at all and not inspiring for human researchers.",
                    "The full hypothesis is not novel, but the way it combines the topics can be inspiring for human "
                    "researchers.",
                    "The main argument is not novel, only one or two sub-arguments appear to be novel.",
                    "The main argument or several sub-arguments of the hypothesis are novel.",
                    "The hypothesis is completely novel and has not been proposed by any existing literature."};
        break;
    case Aspect::Helpfulness:
        r.levels = {"The hypothesis is not helpful and not inspiring at all.",
                    "Modifying this hypothesis might not deserve the efforts, but a small part of this hypothesis is "
                    "inspiring for human researchers to develop a new hypothesis.",
                    "The hypothesis should be largely modified or reconstructed by human researchers to adopt it.",
                    "The hypothesis is novel enough and can be directly adopted by human researchers for publication "
                    "after minor modifications.",
                    "The hypothesis is novel, valid, clear, and specific enough that it is itself a mature research "
                    "hypothesis, and human researchers can directly adopt it for publication with no modifications "
                    "needed."};
        break;
    }
    return r;
}

void Rubric::validate() const {
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (parsing::trim(levels[i]).empty()) {
            throw ValidationError("rubric for " + std::string(to_string(aspect)) + " lacks level " + std::to_string(i + 1));
        }
    }
}

std::string Rubric::render() const {
    std::string out;
    for (int level = 5; level >= 1; --level) {
        out += std::to_string(level) + (level == 1 ? " point: " : " points: ") + levels[static_cast<std::size_t>(level - 1)] + "\n";
    }
    return out;
}

double ScoreTriple::get(Aspect aspect) const {
    switch (aspect) {
    case Aspect::Validness: return validness;
    case Aspect::Novelty: return novelty;
    case Aspect::Helpfulness: return helpfulness;
    }
    return validness;
}

void ScoreTriple::set(Aspect aspect, double value) {
    switch (aspect) {
    case Aspect::Validness: validness = value; break;
    case Aspect::Novelty: novelty = value; break;
    case Aspect::Helpfulness: helpfulness = value; break;
    }
}

void ScoreTriple::validate() const {
    for (auto a : kAspects) {
        double v = get(a);
        if (!(v >= 1.0 && v <= 5.0)) {
            throw ValidationError(std::string(to_string(a)) + " score " + format_score(v) + " outside [1, 5]");
        }
    }
}

int judge(const HypothesisRecord& record, const Rubric& rubric, Gateway& gateway, const TemplateStore& templates,
          GenParams params) {
    rubric.validate();
    params.temperature = 0.0;
    auto prompt = templates.render("judge", {{"aspect", std::string(to_string(rubric.aspect))},
                                             {"rubric", rubric.render()},
                                             {"hypothesis", record.text}});
    auto response = gateway.generate(prompt, params, tags::kJudge, record.id);
    if (auto score = parsing::parse_score(response)) return *score;
    response = gateway.generate(prompt + templates.get("reask"), params, tags::kJudge, record.id);
    if (auto score = parsing::parse_score(response)) return *score;
    throw ParseError("judge output has no score line after re-ask: " + response);
}

std::vector<ScoredRecord> judge_records(const std::vector<HypothesisRecord>& records, Gateway& gateway,
                                        const TemplateStore& templates, const GenParams& params) {
    std::array<Rubric, 3> rubrics{Rubric::standard(Aspect::Validness), Rubric::standard(Aspect::Novelty),
                                  Rubric::standard(Aspect::Helpfulness)};
    std::vector<ScoredRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        ScoredRecord s{r.id, r.method, r.present_iteration, {}};
        for (const auto& rubric : rubrics) s.scores.set(rubric.aspect, judge(r, rubric, gateway, templates, params));
        out.push_back(std::move(s));
    }
    return out;
}

std::string scores_to_jsonl(const std::vector<ScoredRecord>& scores) {
    std::string out;
    for (const auto& s : scores) {
        json j{{"record_id", s.record_id},
               {"method", s.method},
               {"present_iteration", s.present_iteration},
               {"validness", s.scores.validness},
               {"novelty", s.scores.novelty},
               {"helpfulness", s.scores.helpfulness}};
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

std::vector<ScoredRecord> scores_from_jsonl(std::string_view text, std::string_view source_name) {
    std::vector<ScoredRecord> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (parsing::trim(line).empty()) continue;
        try {
            auto j = json::parse(line);
            ScoredRecord s{j.at("record_id").get<std::string>(), j.value("method", std::string()),
                           j.value("present_iteration", std::size_t{0}),
                           {j.at("validness").get<double>(), j.at("novelty").get<double>(), j.at("helpfulness").get<double>()}};
            s.scores.validate();
            out.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw ParseError(std::string(source_name) + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(std::string(source_name) + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

GroupBy group_by_from_string(std::string_view text) {
    if (text == "method") return GroupBy::Method;
    if (text == "present-iteration" || text == "iteration") return GroupBy::PresentIteration;
    if (text == "method-averaged" || text == "method-averaged-over-iterations") return GroupBy::MethodAveragedOverIterations;
    throw ConfigError("unknown grouping '" + std::string(text) + "' (method, present-iteration, method-averaged)");
}

namespace {

// Sorting before summing keeps the result independent of input order.
ScoreTriple mean_of(std::vector<ScoreTriple> values) {
    std::sort(values.begin(), values.end());
    ScoreTriple sum{};
    for (const auto& v : values) {
        sum.validness += v.validness;
        sum.novelty += v.novelty;
        sum.helpfulness += v.helpfulness;
    }
    auto n = static_cast<double>(values.size());
    return {sum.validness / n, sum.novelty / n, sum.helpfulness / n};
}

} // namespace

std::vector<AggregateRow> aggregate(const std::vector<ScoredRecord>& scores, GroupBy group_by) {
    if (scores.empty()) throw ValidationError("cannot aggregate an empty score list");
    std::vector<AggregateRow> rows;
    switch (group_by) {
    case GroupBy::Method: {
        std::map<std::string, std::vector<ScoreTriple>> groups;
        for (const auto& s : scores) groups[s.method].push_back(s.scores);
        for (auto& [method, values] : groups) rows.push_back({method, values.size(), mean_of(values)});
        break;
    }
    case GroupBy::PresentIteration: {
        std::map<std::size_t, std::vector<ScoreTriple>> groups;
        for (const auto& s : scores) groups[s.present_iteration].push_back(s.scores);
        for (auto& [iteration, values] : groups) rows.push_back({std::to_string(iteration), values.size(), mean_of(values)});
        break;
    }
    case GroupBy::MethodAveragedOverIterations: {
        std::map<std::string, std::map<std::size_t, std::vector<ScoreTriple>>> groups;
        for (const auto& s : scores) groups[s.method][s.present_iteration].push_back(s.scores);
        for (auto& [method, by_iteration] : groups) {
            std::vector<ScoreTriple> iteration_means;
            std::size_t n = 0;
            for (auto& [iteration, values] : by_iteration) {
                n += values.size();
                iteration_means.push_back(mean_of(values));
            }
            rows.push_back({method, n, mean_of(iteration_means)});
        }
        break;
    }
    }
    return rows;
}

std::string format_score(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", value);
    return buf;
}

std::string render_table(const std::vector<AggregateRow>& rows) {
    std::size_t width = 5;
    for (const auto& r : rows) width = std::max(width, r.group.size());
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.append(w - s.size(), ' ');
        return s;
    };
    std::string out = pad("group", width) + "  " + pad("n", 6) + "  validness  novelty  helpfulness\n";
    for (const auto& r : rows) {
        out += pad(r.group, width) + "  " + pad(std::to_string(r.n), 6) + "  " + pad(format_score(r.mean.validness), 9) +
               "  " + pad(format_score(r.mean.novelty), 7) + "  " + format_score(r.mean.helpfulness) + "\n";
    }
    return out;
}

std::string render_csv(const std::vector<AggregateRow>& rows) {
    std::string out = "group,n,validness,novelty,helpfulness\n";
    for (const auto& r : rows) {
        out += r.group + "," + std::to_string(r.n) + "," + format_score(r.mean.validness) + "," +
               format_score(r.mean.novelty) + "," + format_score(r.mean.helpfulness) + "\n";
    }
    return out;
}

double soft_credit(int abs_difference) {
    static constexpr std::array<double, 5> credit{1.00, 0.75, 0.50, 0.25, 0.00};
    if (abs_difference < 0 || abs_difference > 4) throw ValidationError("score difference outside 0..4");
    return credit[static_cast<std::size_t>(abs_difference)];
}

ConsistencyReport consistency(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) {
        throw ValidationError("score lists differ in length (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    }
    if (a.empty()) throw ValidationError("consistency needs at least one score pair");
    std::size_t exact = 0;
    double soft = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < 1 || a[i] > 5 || b[i] < 1 || b[i] > 5) throw ValidationError("scores must be integers in 1..5");
        int diff = std::abs(a[i] - b[i]);
        if (diff == 0) ++exact;
        soft += soft_credit(diff);
    }
    auto n = static_cast<double>(a.size());
    return {static_cast<double>(exact) / n, soft / n, a.size()};
}

int round_half_up(double score) { return static_cast<int>(std::floor(score + 0.5)); }

std::vector<ExpertScore> parse_expert_csv(std::string_view text, std::string_view source_name) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    std::vector<ExpertScore> rows;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (parsing::trim(line).empty()) continue;
        auto where = std::string(source_name) + ":" + std::to_string(line_no);
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(parsing::trim(field));
        if (!header_seen) {
            if (fields != std::vector<std::string>{"record_id", "rater_id", "validness", "novelty", "helpfulness"}) {
                throw ParseError(where + ": expected header record_id,rater_id,validness,novelty,helpfulness");
            }
            header_seen = true;
            continue;
        }
        if (fields.size() != 5) throw ParseError(where + ": expected 5 fields, got " + std::to_string(fields.size()));
        ExpertScore row{fields[0], {}, fields[1]};
        for (std::size_t i = 0; i < 3; ++i) {
            double v = 0;
            try {
                std::size_t used = 0;
                v = std::stod(fields[2 + i], &used);
                if (used != fields[2 + i].size()) throw std::invalid_argument("trailing text");
            } catch (const std::exception&) {
                throw ParseError(where + ": '" + fields[2 + i] + "' is not a number");
            }
            row.scores.set(kAspects[i], v);
        }
        try {
            row.scores.validate();
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
        rows.push_back(std::move(row));
    }
    if (!header_seen) throw ParseError(std::string(source_name) + ": missing header");
    return rows;
}

std::vector<ExpertScore> import_expert_scores(const std::filesystem::path& path) {
    return parse_expert_csv(read_text_file(path), path.string());
}

std::vector<RecordMean> mean_over_raters(const std::vector<ExpertScore>& rows) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<ScoreTriple>> by_record;
    for (const auto& r : rows) {
        auto [it, inserted] = by_record.try_emplace(r.record_id);
        if (inserted) order.push_back(r.record_id);
        it->second.push_back(r.scores);
    }
    std::vector<RecordMean> out;
    for (const auto& id : order) {
        const auto& values = by_record[id];
        out.push_back({id, mean_of(values), values.size()});
    }
    return out;
}

std::vector<ScoreTriple> group_position_means(const std::vector<RecordMean>& means, std::size_t group_size) {
    if (group_size == 0) throw ConfigError("group size must be positive");
    if (means.empty() || means.size() % group_size != 0) {
        throw ValidationError(std::to_string(means.size()) + " records do not form whole groups of " +
                              std::to_string(group_size));
    }
    std::vector<ScoreTriple> columns;
    for (std::size_t pos = 0; pos < group_size; ++pos) {
        std::vector<ScoreTriple> values;
        for (std::size_t i = pos; i < means.size(); i += group_size) values.push_back(means[i].mean);
        columns.push_back(mean_of(values));
    }
    return columns;
}

AspectConsistency expert_vs_judge(const std::vector<ExpertScore>& experts, const std::vector<ScoredRecord>& judged) {
    std::map<std::string, const ScoredRecord*> by_id;
    for (const auto& s : judged) by_id[s.record_id] = &s;
    AspectConsistency out;
    std::map<Aspect, std::pair<std::vector<int>, std::vector<int>>> pairs;
    for (const auto& m : mean_over_raters(experts)) {
        auto it = by_id.find(m.record_id);
        if (it == by_id.end()) continue;
        for (auto a : kAspects) {
            pairs[a].first.push_back(round_half_up(m.mean.get(a)));
            pairs[a].second.push_back(round_half_up(it->second->scores.get(a)));
        }
    }
    if (pairs.empty()) throw ValidationError("no expert-scored record has judge scores");
    for (auto& [a, p] : pairs) out.by_aspect[a] = consistency(p.first, p.second);
    return out;
}

AspectConsistency between_raters(const std::vector<ExpertScore>& experts) {
    std::map<std::string, std::vector<const ExpertScore*>> by_record;
    for (const auto& e : experts) by_record[e.record_id].push_back(&e);
    std::map<Aspect, std::pair<std::vector<int>, std::vector<int>>> pairs;
    for (const auto& [id, rows] : by_record) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = i + 1; j < rows.size(); ++j) {
                for (auto a : kAspects) {
                    pairs[a].first.push_back(round_half_up(rows[i]->scores.get(a)));
                    pairs[a].second.push_back(round_half_up(rows[j]->scores.get(a)));
                }
            }
        }
    }
    if (pairs.empty()) throw ValidationError("no record was scored by two raters");
    AspectConsistency out;
    for (auto& [a, p] : pairs) out.by_aspect[a] = consistency(p.first, p.second);
    return out;
}

std::string render_consistency(const AspectConsistency& report, std::string_view title) {
    std::string out = std::string(title) + "\n";
    out += "                  validness  novelty  helpfulness\n";
    auto row = [&](const char* label, auto field) {
        std::string line = label;
        for (auto a : kAspects) {
            auto it = report.by_aspect.find(a);
            line += "  " + (it == report.by_aspect.end() ? std::string("  -  ") : format_score(field(it->second)));
            line += a == Aspect::Validness ? "    " : (a == Aspect::Novelty ? "  " : "");
        }
        out += line + "\n";
    };
    row("hard consistency", [](const ConsistencyReport& r) { return r.hard; });
    row("soft consistency", [](const ConsistencyReport& r) { return r.soft; });
    std::size_t n = report.by_aspect.empty() ? 0 : report.by_aspect.begin()->second.n;
    out += "n = " + std::to_string(n) + "\n";
    return out;
}

} // namespace moose::eval
