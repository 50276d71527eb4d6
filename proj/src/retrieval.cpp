#include "moose/retrieval.hpp"

#include "moose/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_set>

namespace moose {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else if (c < 0x80 && std::ispunct(c)) {
            continue;
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

TitleIndex build_index(const std::vector<std::pair<std::string, std::string>>& docs) {
    if (docs.empty()) throw ConfigError("cannot build an index over zero documents");
    TitleIndex index;
    std::uint64_t total_len = 0;
    for (const auto& [id, text] : docs) {
        std::size_t doc = index.ids_.size();
        if (!index.id_to_doc_.emplace(id, doc).second) throw ValidationError("duplicate document id '" + id + "'");
        index.ids_.push_back(id);
        index.texts_.push_back(text);

        auto tokens = tokenize(text);
        index.doc_len_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total_len += tokens.size();

        std::map<std::string, std::uint32_t> tf;
        for (auto& t : tokens) ++tf[t];
        for (auto& [term, count] : tf) index.postings_[term].push_back({doc, count});
    }
    index.avg_doc_len_ = static_cast<double>(total_len) / static_cast<double>(docs.size());
    return index;
}

std::size_t TitleIndex::document_frequency(std::string_view term) const {
    auto it = postings_.find(std::string(term));
    return it == postings_.end() ? 0 : it->second.size();
}

std::map<std::string, std::size_t> TitleIndex::term_stats() const {
    std::map<std::string, std::size_t> out;
    for (const auto& [term, list] : postings_) out[term] = list.size();
    return out;
}

std::map<std::string, std::uint32_t> TitleIndex::term_frequencies(std::string_view doc_id) const {
    std::map<std::string, std::uint32_t> out;
    auto it = id_to_doc_.find(std::string(doc_id));
    if (it == id_to_doc_.end()) return out;
    for (const auto& [term, list] : postings_) {
        for (const auto& p : list) {
            if (p.doc == it->second) out[term] = p.tf;
        }
    }
    return out;
}

const std::string& TitleIndex::text(std::string_view doc_id) const {
    auto it = id_to_doc_.find(std::string(doc_id));
    if (it == id_to_doc_.end()) throw Error("unknown document id '" + std::string(doc_id) + "'");
    return texts_[it->second];
}

// Non-negative idf variant: log(1 + (N - df + 0.5) / (df + 0.5)).
double TitleIndex::idf(std::string_view term) const {
    auto n = static_cast<double>(doc_count());
    auto df = static_cast<double>(document_frequency(term));
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<ScoredDoc> TitleIndex::top_k(std::string_view query, std::size_t k, const Bm25Params& params) const {
    std::vector<double> scores(ids_.size(), 0.0);
    std::vector<bool> hit(ids_.size(), false);
    for (const auto& term : tokenize(query)) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        double w = idf(term);
        for (const auto& p : it->second) {
            double tf = p.tf;
            double norm = params.k1 * (1.0 - params.b + params.b * doc_len_[p.doc] / avg_doc_len_);
            scores[p.doc] += w * tf * (params.k1 + 1.0) / (tf + norm);
            hit[p.doc] = true;
        }
    }
    std::vector<ScoredDoc> out;
    for (std::size_t d = 0; d < ids_.size(); ++d) {
        if (hit[d] && scores[d] > 0.0) out.push_back({ids_[d], scores[d]});
    }
    std::sort(out.begin(), out.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.passage_id < b.passage_id;
    });
    if (out.size() > k) out.resize(k);
    return out;
}

std::vector<ScoredDoc> bm25_topk(const TitleIndex& index, std::string_view query, std::size_t k,
                                 const Bm25Params& params) {
    if (k == 0) throw ConfigError("k must be at least 1");
    return index.top_k(query, k, params);
}

std::string chunk_doc_id(const Chunk& chunk) { return chunk.passage_id + "#" + std::to_string(chunk.index); }

std::optional<TitleIndex> build_survey_index(const std::vector<const Passage*>& surveys, std::size_t chunk_size_words) {
    std::vector<std::pair<std::string, std::string>> docs;
    for (const auto* p : surveys) {
        for (auto& c : chunk_passage(*p, chunk_size_words)) docs.emplace_back(chunk_doc_id(c), std::move(c.text));
    }
    if (docs.empty()) return std::nullopt;
    return build_index(docs);
}

std::vector<ScoredDoc> survey_chunks_topk(const TitleIndex* survey_index, std::string_view hypothesis_text,
                                          std::size_t k, const Bm25Params& params) {
    if (survey_index == nullptr) return {};
    return bm25_topk(*survey_index, hypothesis_text, k, params);
}

std::vector<std::string> sample_random(const std::vector<std::string>& ids, std::size_t n, std::uint64_t seed) {
    if (n > ids.size()) {
        throw ConfigError("cannot sample " + std::to_string(n) + " ids from " + std::to_string(ids.size()));
    }
    // Partial Fisher-Yates on the raw engine output: std::uniform_int_distribution
    // differs between standard libraries, so bounded draws are done by rejection here.
    std::mt19937_64 engine(seed);
    auto bounded = [&engine](std::uint64_t bound) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x;
        do {
            x = engine();
        } while (x >= limit);
        return x % bound;
    };
    std::vector<std::string> pool = ids;
    for (std::size_t i = 0; i < n; ++i) {
        auto j = i + bounded(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    return pool;
}

} // namespace moose
