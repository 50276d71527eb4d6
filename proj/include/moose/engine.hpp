#pragma once

#include "moose/corpus.hpp"
#include "moose/llm.hpp"
#include "moose/parsing.hpp"
#include "moose/prompts.hpp"
#include "moose/retrieval.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace moose {

/// Module tags written into every CallRecord.
namespace tags {
inline constexpr std::string_view kBackgroundFinder = "background_finder";
inline constexpr std::string_view kTitleFinder = "inspiration_title_finder";
inline constexpr std::string_view kInspirationFinder = "inspiration_finder";
inline constexpr std::string_view kSuggestor = "suggestor";
inline constexpr std::string_view kProposer = "proposer";
inline constexpr std::string_view kClarityChecker = "clarity_checker";
inline constexpr std::string_view kRealityChecker = "reality_checker";
inline constexpr std::string_view kNoveltyChecker = "novelty_checker";
inline constexpr std::string_view kInspirationFeedback = "inspiration_feedback";
inline constexpr std::string_view kBaseline = "baseline";
inline constexpr std::string_view kJudge = "judge";
} // namespace tags

/// Usage counters that are not gateway calls.
namespace counters {
inline constexpr std::string_view kSurveyRetrieval = "survey_retrieval";
inline constexpr std::string_view kInspirationFeedback = "inspiration_feedback";
} // namespace counters

struct ChunkRef {
    std::string passage_id;
    std::size_t chunk_index = 0;

    bool operator==(const ChunkRef&) const = default;
};

struct Background {
    std::string text;
    /// Justification, present only with future-feedback-1.
    std::optional<std::string> reason;
    ChunkRef source_chunk;

    bool operator==(const Background&) const = default;
};

struct SelectedTitle {
    std::string title;
    std::optional<std::string> reason;

    bool operator==(const SelectedTitle&) const = default;
};

struct Inspiration {
    std::string text;
    std::string passage_id;

    bool operator==(const Inspiration&) const = default;
};

struct InspirationSet {
    std::vector<SelectedTitle> titles;
    std::vector<Inspiration> inspirations;
    std::size_t past_iteration = 0;

    bool operator==(const InspirationSet&) const = default;
};

struct Suggestion {
    std::string text;

    bool operator==(const Suggestion&) const = default;
};

struct FeedbackBundle {
    std::string clarity;
    std::string reality;
    std::string novelty;

    bool operator==(const FeedbackBundle&) const = default;
};

struct HypothesisRecord {
    std::string id;
    /// Preset or engine mode that produced the record.
    std::string method;
    std::string text;
    std::optional<Background> background;
    std::optional<InspirationSet> inspiration_set;
    std::optional<Suggestion> suggestion;
    std::size_t present_iteration = 0;
    std::optional<std::string> parent_id;
    std::optional<FeedbackBundle> feedback_used;
    std::size_t proposal_index = 0;
    /// Last refinement of its chain.
    bool is_final = true;
    std::optional<ChunkRef> source_chunk;
    std::optional<std::string> paper_id;

    bool operator==(const HypothesisRecord&) const = default;
};

enum class PastFeedbackMode { Heuristic, Model };

struct PipelineConfig {
    std::size_t past_iterations = 1;
    std::size_t present_iterations = 4;
    std::size_t proposals_per_call = 4;
    std::size_t title_topk = 8;
    std::size_t survey_topk = 3;
    bool enable_ff1 = true;
    bool enable_ff2 = true;
    bool enable_past_feedback = true;
    bool enable_survey_access = true;
    PastFeedbackMode past_feedback_mode = PastFeedbackMode::Heuristic;
    CorpusMode corpus_mode = CorpusMode::Standard;
    std::int64_t seed = 0;
    std::size_t chunk_size_words = kDefaultChunkSizeWords;
    /// Process only the first N background chunks (sampled N for random ablations); 0 means all.
    std::size_t background_limit = 0;
    std::size_t title_batch_size = 200;
    std::size_t workers = 1;
    std::string model_name;

    /// Throws ConfigError on inconsistent values.
    void validate() const;

    bool operator==(const PipelineConfig&) const = default;
};

nlohmann::json to_json(const PipelineConfig& cfg);
/// Applies the keys present in `overrides` on top of `base`; unknown keys are rejected.
PipelineConfig apply_overrides(PipelineConfig base, const nlohmann::json& overrides);

nlohmann::json to_json(const HypothesisRecord& record);
HypothesisRecord record_from_json(const nlohmann::json& j);
std::string records_to_jsonl(const std::vector<HypothesisRecord>& records);
std::vector<HypothesisRecord> records_from_jsonl(std::string_view text, std::string_view source_name = "<memory>");

struct BackgroundFailure {
    ChunkRef chunk;
    std::string message;
};

struct RunResult {
    std::string method;
    std::vector<HypothesisRecord> records;
    std::shared_ptr<Trace> trace;
    std::map<std::string, std::size_t> counters;
    std::vector<BackgroundFailure> failures;
    std::size_t backgrounds_attempted = 0;
};

/// Raised when every background of a run failed.
class RunFailure : public Error {
  public:
    using Error::Error;
};

enum class AblationVariant { RandBackground, RandBoth, BM25Inspirations, GtBackgroundInspirations, GtHypothesesPassthrough };

std::string_view to_string(AblationVariant variant);
AblationVariant ablation_from_string(std::string_view text);
std::string_view to_string(PastFeedbackMode mode);

std::string make_record_id(const ChunkRef& chunk, std::size_t past_iteration, std::size_t proposal_index,
                           std::size_t present_iteration);

/// The multi-module hypothesis pipeline. Every module call goes through the gateway;
/// the engine itself holds only per-run counters.
class Engine {
  public:
    Engine(Gateway& gateway, const TemplateStore& templates, PipelineConfig cfg);

    std::optional<Background> find_background(const Chunk& chunk);

    /// Matches returned titles to `all_titles`; unmatched titles are dropped.
    std::vector<SelectedTitle> find_inspiration_titles(const std::vector<std::string>& all_titles, const Background& bg,
                                                       const std::optional<std::string>& past_feedback);

    InspirationSet find_inspirations(const Background& bg, const std::vector<SelectedTitle>& selected,
                                     const CorpusView& view);

    /// Extraction step on already-resolved passages (used directly by the retrieval ablations).
    InspirationSet extract_inspirations(const Background& bg,
                                        const std::vector<std::pair<const Passage*, std::optional<std::string>>>& passages);

    Suggestion suggest(const Background& bg, const InspirationSet& inspirations);

    struct Prior {
        const HypothesisRecord* record = nullptr;
        const FeedbackBundle* feedback = nullptr;
    };

    std::vector<HypothesisRecord> propose(const Background& bg, const InspirationSet& inspirations,
                                          const std::optional<Suggestion>& suggestion, std::optional<Prior> prior,
                                          std::size_t n_proposals);

    FeedbackBundle check(const HypothesisRecord& hypothesis, const TitleIndex* survey_index);

    std::string past_feedback(const std::vector<SelectedTitle>& titles, const std::vector<HypothesisRecord>& hypotheses,
                              const std::vector<FeedbackBundle>& bundles, PastFeedbackMode mode);

    /// Full loop nest for one background chunk.
    std::vector<HypothesisRecord> run_background(const Chunk& chunk, const CorpusView& view,
                                                 const std::vector<std::string>& all_titles,
                                                 const TitleIndex* survey_index);

    [[nodiscard]] std::map<std::string, std::size_t> counters() const;
    [[nodiscard]] const PipelineConfig& config() const noexcept { return cfg_; }
    void set_method(std::string method) { method_ = std::move(method); }

  private:
    std::string reason_block(const std::optional<std::string>& reason) const;
    std::string render_inspirations(const InspirationSet& inspirations) const;
    void bump(std::string_view counter);

    Gateway& gateway_;
    const TemplateStore& templates_;
    PipelineConfig cfg_;
    std::string method_ = "moose";
    mutable std::mutex counter_mutex_;
    std::map<std::string, std::size_t> counters_;
};

/// Background-pool chunks in passage-id order, truncated to cfg.background_limit.
std::vector<Chunk> background_chunks(const CorpusView& view, const PipelineConfig& cfg);

/// Distinct inspiration-pool titles in passage-id order.
std::vector<std::string> inspiration_titles(const CorpusView& view);

RunResult run_pipeline(const CorpusView& view, const TitleIndex* survey_index, const PipelineConfig& cfg,
                       Gateway& gateway, const TemplateStore& templates, std::string method = "moose");

RunResult run_baseline(const CorpusView& view, const PipelineConfig& cfg, Gateway& gateway,
                       const TemplateStore& templates, std::string method = "baseline");

RunResult run_ablation(const CorpusView& view, const PipelineConfig& cfg, Gateway& gateway,
                       const TemplateStore& templates, AblationVariant variant, const Benchmark* benchmark,
                       std::string method = {});

} // namespace moose
