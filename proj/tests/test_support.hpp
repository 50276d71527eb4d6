#pragma once

#include "moose/corpus.hpp"
#include "moose/llm.hpp"

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

namespace moose::testing {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(MOOSE_FIXTURES) / name; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("moose-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

inline ScriptedBackend::Entry reply(std::string matcher, std::string response, int times = -1) {
    return {std::move(matcher), std::move(response), std::nullopt, times};
}

inline ScriptedBackend::Entry failure(std::string matcher, GatewayError::Kind kind, int times = 1) {
    return {std::move(matcher), {}, kind, times};
}

/// Gateway over a scripted backend with a fake clock, so retries never sleep.
inline Gateway scripted_gateway(std::vector<ScriptedBackend::Entry> script) {
    return Gateway(std::make_shared<ScriptedBackend>(std::move(script)), RetryPolicy{}, std::make_shared<FakeClock>());
}

inline Passage make_passage(std::string id, std::string title, std::string body, Role role) {
    Passage p;
    p.id = std::move(id);
    p.title = std::move(title);
    p.body = std::move(body);
    p.role = role;
    return p;
}

inline CorpusHandle make_corpus(std::vector<Passage> passages) {
    return std::make_shared<const Corpus>(std::move(passages));
}

} // namespace moose::testing
