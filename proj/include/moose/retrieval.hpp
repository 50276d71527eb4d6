#pragma once

#include "moose/corpus.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace moose {

/// Lowercases, removes ASCII punctuation and splits on whitespace.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct ScoredDoc {
    std::string passage_id;
    double score = 0.0;

    bool operator==(const ScoredDoc&) const = default;
};

/// Inverted BM25 index over short documents (passage titles or survey chunks).
class TitleIndex {
  public:
    struct Posting {
        std::size_t doc = 0;
        std::uint32_t tf = 0;
    };

    [[nodiscard]] std::size_t doc_count() const noexcept { return ids_.size(); }
    [[nodiscard]] double avg_doc_len() const noexcept { return avg_doc_len_; }

    /// Document frequency of `term`; zero when unseen.
    [[nodiscard]] std::size_t document_frequency(std::string_view term) const;
    [[nodiscard]] std::map<std::string, std::size_t> term_stats() const;
    [[nodiscard]] std::map<std::string, std::uint32_t> term_frequencies(std::string_view doc_id) const;

    [[nodiscard]] const std::vector<std::string>& doc_ids() const noexcept { return ids_; }
    [[nodiscard]] const std::string& text(std::string_view doc_id) const;
    [[nodiscard]] double idf(std::string_view term) const;

    [[nodiscard]] std::vector<ScoredDoc> top_k(std::string_view query, std::size_t k, const Bm25Params& params = {}) const;

    friend TitleIndex build_index(const std::vector<std::pair<std::string, std::string>>& docs);

  private:
    std::vector<std::string> ids_;
    std::vector<std::string> texts_;
    std::vector<std::uint32_t> doc_len_;
    std::unordered_map<std::string, std::size_t> id_to_doc_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    double avg_doc_len_ = 0.0;
};

/// Throws ConfigError on an empty list and ValidationError on duplicate ids.
TitleIndex build_index(const std::vector<std::pair<std::string, std::string>>& docs);

/// Okapi BM25 ranking. Zero-score documents are dropped; ties go to the smaller id.
std::vector<ScoredDoc> bm25_topk(const TitleIndex& index, std::string_view query, std::size_t k,
                                 const Bm25Params& params = {});

/// Document id used for survey chunks: "<passage_id>#<chunk_index>".
std::string chunk_doc_id(const Chunk& chunk);

/// Index over the chunks of the given survey passages; nullopt when there is nothing to index.
std::optional<TitleIndex> build_survey_index(const std::vector<const Passage*>& surveys,
                                             std::size_t chunk_size_words = kDefaultChunkSizeWords);

/// Like bm25_topk but tolerates a missing index (no survey corpus), returning an empty list.
std::vector<ScoredDoc> survey_chunks_topk(const TitleIndex* survey_index, std::string_view hypothesis_text,
                                          std::size_t k, const Bm25Params& params = {});

/// Reproducible selection of `n` distinct ids. Throws ConfigError when n exceeds ids.size().
std::vector<std::string> sample_random(const std::vector<std::string>& ids, std::size_t n, std::uint64_t seed);

} // namespace moose
