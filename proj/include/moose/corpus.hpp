#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace moose {

enum class Role { Background, Inspiration, Survey };

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);

/// One web document of the raw corpus or the survey corpus.
struct Passage {
    std::string id;
    std::string title;
    std::string body;
    Role role = Role::Background;
    std::optional<std::string> source_url;
    std::optional<std::string> date;

    bool operator==(const Passage&) const = default;
};

struct Chunk {
    std::string passage_id;
    std::size_t index = 0;
    std::string text;

    bool operator==(const Chunk&) const = default;
};

inline constexpr std::size_t kDefaultChunkSizeWords = 1000;

/// Greedy whitespace split into runs of at most `chunk_size_words` words.
/// A word is a maximal run of non-whitespace characters.
std::vector<Chunk> chunk_passage(const Passage& passage, std::size_t chunk_size_words = kDefaultChunkSizeWords);

/// Collapses every whitespace run to a single space and trims both ends.
std::string normalize_whitespace(std::string_view text);

/// Immutable, validated passage collection with id and exact-title lookup.
class Corpus {
  public:
    explicit Corpus(std::vector<Passage> passages);

    [[nodiscard]] const std::vector<Passage>& passages() const noexcept { return passages_; }
    [[nodiscard]] std::size_t size() const noexcept { return passages_.size(); }

    [[nodiscard]] const Passage* find(std::string_view id) const;

    /// Passages whose title equals `title` exactly, ordered by ascending id.
    [[nodiscard]] std::vector<const Passage*> find_by_title(std::string_view title) const;

    [[nodiscard]] std::map<Role, std::size_t> role_counts() const;
    [[nodiscard]] std::vector<const Passage*> with_role(Role role) const;

  private:
    std::vector<Passage> passages_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_title_;
};

using CorpusHandle = std::shared_ptr<const Corpus>;

/// Parses one passage per line. Blank lines are skipped.
CorpusHandle parse_corpus(std::string_view text, std::string_view source_name = "<memory>");
CorpusHandle load_corpus(const std::filesystem::path& path);

std::string serialize_corpus(const Corpus& corpus);

enum class CorpusMode { Standard, Randomized };

std::string_view to_string(CorpusMode mode);
CorpusMode corpus_mode_from_string(std::string_view text);

/// Role-filtered pools the engine draws backgrounds and inspirations from.
struct CorpusView {
    CorpusHandle corpus;
    CorpusMode mode = CorpusMode::Standard;
    std::vector<const Passage*> background_pool;
    std::vector<const Passage*> inspiration_pool;
    std::vector<const Passage*> survey_pool;
};

/// Standard: backgrounds from Background passages, inspirations from Inspiration passages.
/// Randomized: backgrounds from Inspiration passages, inspirations from both roles.
CorpusView select_corpus_view(const CorpusHandle& corpus, CorpusMode mode);

enum class Subject {
    Communication,
    Psychology,
    HumanResourceManagement,
    InformationSystem,
    InternationalBusiness,
    Management,
    Marketing,
};

enum class Complexity { Easy, Medium, Hard };

std::string_view to_string(Subject subject);
Subject subject_from_string(std::string_view text);
std::string_view to_string(Complexity complexity);
Complexity complexity_from_string(std::string_view text);

struct BenchmarkEntry {
    std::string paper_id;
    std::string publication_link;
    std::string publication_date;
    Subject subject = Subject::Marketing;
    std::string gt_hypothesis;
    std::string gt_background_passage_id;
    std::vector<std::string> gt_inspiration_passage_ids;
    std::string reasoning_process;
    Complexity reasoning_complexity = Complexity::Easy;
    Complexity association_complexity = Complexity::Easy;

    bool operator==(const BenchmarkEntry&) const = default;
};

struct Benchmark {
    std::vector<BenchmarkEntry> entries;
    /// Non-fatal findings, e.g. publication dates before 2023.
    std::vector<std::string> warnings;
};

/// Parses benchmark lines and resolves every passage reference against `corpus`.
Benchmark parse_benchmark(std::string_view text, const Corpus& corpus, std::string_view source_name = "<memory>");
Benchmark load_benchmark(const std::filesystem::path& path, const Corpus& corpus);

std::map<Subject, std::size_t> subject_histogram(const Benchmark& benchmark);
std::map<Complexity, std::size_t> reasoning_histogram(const Benchmark& benchmark);
std::map<Complexity, std::size_t> association_histogram(const Benchmark& benchmark);

std::string read_text_file(const std::filesystem::path& path);

} // namespace moose
