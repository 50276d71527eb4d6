#pragma once

#include "moose/engine.hpp"
#include "moose/llm.hpp"
#include "moose/prompts.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace moose::eval {

enum class Aspect { Validness, Novelty, Helpfulness };

std::string_view to_string(Aspect aspect);
inline constexpr std::array<Aspect, 3> kAspects{Aspect::Validness, Aspect::Novelty, Aspect::Helpfulness};

/// Five-level scoring standard; levels[0] describes 1 point, levels[4] describes 5 points.
struct Rubric {
    Aspect aspect = Aspect::Validness;
    std::array<std::string, 5> levels;

    static Rubric standard(Aspect aspect);
    void validate() const;
    /// "5 points: ...\n4 points: ..." listing, highest level first.
    [[nodiscard]] std::string render() const;
};

struct ScoreTriple {
    double validness = 0.0;
    double novelty = 0.0;
    double helpfulness = 0.0;

    [[nodiscard]] double get(Aspect aspect) const;
    void set(Aspect aspect, double value);
    /// Throws ValidationError unless every value lies in [1, 5].
    void validate() const;

    bool operator==(const ScoreTriple&) const = default;
    auto operator<=>(const ScoreTriple&) const = default;
};

/// One judge call. Temperature is forced to 0; a response without a "Score:" line
/// is re-asked once, then rejected with the raw text attached.
int judge(const HypothesisRecord& record, const Rubric& rubric, Gateway& gateway, const TemplateStore& templates,
          GenParams params = GenParams::judge());

struct ScoredRecord {
    std::string record_id;
    std::string method;
    std::size_t present_iteration = 0;
    ScoreTriple scores;

    bool operator==(const ScoredRecord&) const = default;
};

/// Three judge calls per record, one rubric each, in record order.
std::vector<ScoredRecord> judge_records(const std::vector<HypothesisRecord>& records, Gateway& gateway,
                                        const TemplateStore& templates, const GenParams& params = GenParams::judge());

std::string scores_to_jsonl(const std::vector<ScoredRecord>& scores);
std::vector<ScoredRecord> scores_from_jsonl(std::string_view text, std::string_view source_name = "<memory>");

enum class GroupBy { Method, PresentIteration, MethodAveragedOverIterations };

GroupBy group_by_from_string(std::string_view text);

struct AggregateRow {
    std::string group;
    std::size_t n = 0;
    ScoreTriple mean;
};

/// Arithmetic means per group, rows ordered by group key. MethodAveragedOverIterations
/// averages the per-iteration means of each method, so every iteration weighs equally.
std::vector<AggregateRow> aggregate(const std::vector<ScoredRecord>& scores, GroupBy group_by);

/// Fixed 3-decimal rendering ("3.954").
std::string format_score(double value);
std::string render_table(const std::vector<AggregateRow>& rows);
std::string render_csv(const std::vector<AggregateRow>& rows);

struct ConsistencyReport {
    double hard = 0.0;
    double soft = 0.0;
    std::size_t n = 0;

    bool operator==(const ConsistencyReport&) const = default;
};

/// Soft credit for an absolute score difference of 0..4: 1.00/0.75/0.50/0.25/0.00.
double soft_credit(int abs_difference);

/// Hard = share of exact matches, soft = mean soft credit. Inputs must be integers 1..5.
ConsistencyReport consistency(const std::vector<int>& a, const std::vector<int>& b);

/// Rounds half-up before comparing, for fractional expert scores.
int round_half_up(double score);

struct ExpertScore {
    std::string record_id;
    ScoreTriple scores;
    std::string rater_id;

    bool operator==(const ExpertScore&) const = default;
};

/// CSV with header `record_id,rater_id,validness,novelty,helpfulness`.
std::vector<ExpertScore> parse_expert_csv(std::string_view text, std::string_view source_name = "<memory>");
std::vector<ExpertScore> import_expert_scores(const std::filesystem::path& path);

struct RecordMean {
    std::string record_id;
    ScoreTriple mean;
    std::size_t raters = 0;
};

/// Average across raters per record, in first-appearance order.
std::vector<RecordMean> mean_over_raters(const std::vector<ExpertScore>& rows);

/// Reshapes record means into consecutive groups of `group_size` and averages each
/// position over the groups. Throws when the count is not a multiple of group_size.
std::vector<ScoreTriple> group_position_means(const std::vector<RecordMean>& means, std::size_t group_size = 8);

struct AspectConsistency {
    std::map<Aspect, ConsistencyReport> by_aspect;
};

/// Expert (rater mean, rounded half-up) against judge scores on the records both cover.
AspectConsistency expert_vs_judge(const std::vector<ExpertScore>& experts, const std::vector<ScoredRecord>& judged);

/// Pairwise agreement between raters, pooled over every pair of raters sharing a record.
AspectConsistency between_raters(const std::vector<ExpertScore>& experts);

std::string render_consistency(const AspectConsistency& report, std::string_view title);

} // namespace moose::eval
