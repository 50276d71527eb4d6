#pragma once

#include "moose/errors.hpp"

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace moose {

struct GenParams {
    double temperature = 0.9;
    double top_p = 0.9;
    int max_output_tokens = 1024;
    std::string model_name;

    /// Generation modules: sampling at 0.9 / 0.9.
    static GenParams generation(std::string model = {});
    /// Checker modules share generation sampling with a smaller output budget.
    static GenParams checker(std::string model = {});
    /// Judge: greedy (temperature 0) for stable scores.
    static GenParams judge(std::string model = {});

    /// Throws ConfigError when a field is out of range.
    void validate() const;

    bool operator==(const GenParams&) const = default;
};

struct CompletionRequest {
    std::string system_prompt;
    std::string prompt;
    GenParams params;
    std::string module_tag;
};

/// A text-generation endpoint. Implementations throw GatewayError on failure.
class Backend {
  public:
    virtual ~Backend() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual bool is_remote() const { return false; }
};

/// Deterministic stand-in for a remote endpoint. Each call consumes the first
/// live entry whose matcher occurs in the prompt ("*" matches anything).
class ScriptedBackend final : public Backend {
  public:
    struct Entry {
        std::string matcher;
        std::string response;
        /// When set, the entry raises instead of answering.
        std::optional<GatewayError::Kind> error;
        /// Number of calls the entry can serve; negative means unlimited.
        int times = 1;
    };

    explicit ScriptedBackend(std::vector<Entry> script);

    std::string complete(const CompletionRequest& request) override;
    [[nodiscard]] std::string name() const override { return "scripted"; }

    [[nodiscard]] std::size_t remaining() const;

  private:
    mutable std::mutex mutex_;
    std::vector<Entry> script_;
};

/// Parses a JSONL script: {"match": "...", "response": "..."} or
/// {"match": "...", "error": "transient|auth|empty"}, optional "times".
std::vector<ScriptedBackend::Entry> parse_script(std::string_view text, std::string_view source_name = "<memory>");
std::vector<ScriptedBackend::Entry> load_script(const std::filesystem::path& path);

enum class Provider { OpenAiChat, AnthropicMessages };

struct RemoteOptions {
    Provider provider = Provider::OpenAiChat;
    std::string base_url;
    std::string api_key;
    std::chrono::seconds timeout{120};
};

/// Chat-completion client for one of the two supported wire formats.
class RemoteBackend final : public Backend {
  public:
    explicit RemoteBackend(RemoteOptions options);

    std::string complete(const CompletionRequest& request) override;
    [[nodiscard]] std::string name() const override;
    [[nodiscard]] bool is_remote() const override { return true; }

  private:
    RemoteOptions options_;
};

/// Builds a remote backend reading the key from PROVIDER_A_API_KEY / PROVIDER_B_API_KEY.
std::shared_ptr<Backend> make_remote_backend(Provider provider, std::string base_url = {});

/// Wire-format helpers, exposed for tests.
std::string build_request_body(Provider provider, const CompletionRequest& request);
std::string parse_response_body(Provider provider, std::string_view body);

class Clock {
  public:
    virtual ~Clock() = default;
    virtual std::chrono::nanoseconds now() = 0;
    virtual void sleep_for(std::chrono::nanoseconds d) = 0;
};

class SystemClock final : public Clock {
  public:
    std::chrono::nanoseconds now() override;
    void sleep_for(std::chrono::nanoseconds d) override;
};

/// Manual clock for tests: sleeping advances time instantly.
class FakeClock final : public Clock {
  public:
    std::chrono::nanoseconds now() override;
    void sleep_for(std::chrono::nanoseconds d) override;
    void advance(std::chrono::nanoseconds d) { sleep_for(d); }

  private:
    std::mutex mutex_;
    std::chrono::nanoseconds now_{0};
};

/// Sliding-window limiter: at most `per_second` acquisitions in any one-second window.
class RateLimiter {
  public:
    RateLimiter(double per_second, std::shared_ptr<Clock> clock);
    void acquire();

  private:
    std::mutex mutex_;
    std::size_t limit_;
    std::shared_ptr<Clock> clock_;
    std::deque<std::chrono::nanoseconds> recent_;
};

struct RetryPolicy {
    int retry_limit = 3;
    std::chrono::milliseconds base_delay{1000};
    double multiplier = 2.0;
};

struct CallRecord {
    std::uint64_t sequence_no = 0;
    std::string module_tag;
    std::string prompt;
    GenParams params;
    std::string response;
    double latency_ms = 0.0;
    int retries = 0;
    /// Id of the record the call concerns (e.g. the hypothesis a checker reviewed).
    std::string subject;
    /// Wall-clock start, milliseconds since the Unix epoch.
    std::int64_t started_at_ms = 0;
    std::optional<std::string> error;
};

/// Append-only call log shared by all workers of a run.
class Trace {
  public:
    std::uint64_t append(CallRecord record);
    [[nodiscard]] std::vector<CallRecord> snapshot() const;
    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] std::size_t count_tag(std::string_view module_tag) const;

  private:
    mutable std::mutex mutex_;
    std::vector<CallRecord> records_;
};

std::string to_jsonl(const std::vector<CallRecord>& records);
void write_trace(const std::filesystem::path& path, const Trace& trace);

/// Backend plus retry, rate limiting and tracing; the handle every engine call goes through.
class Gateway {
  public:
    explicit Gateway(std::shared_ptr<Backend> backend, RetryPolicy retry = {}, std::shared_ptr<Clock> clock = nullptr,
                     std::shared_ptr<Trace> trace = nullptr);

    /// Returns the model text and appends a CallRecord to the trace.
    std::string generate(std::string_view prompt, const GenParams& params, std::string_view module_tag,
                         std::string_view subject = {});

    void set_rate_limit(double calls_per_second);
    void set_system_prompt(std::string system_prompt) { system_prompt_ = std::move(system_prompt); }
    void set_jitter_seed(std::uint64_t seed);

    [[nodiscard]] Trace& trace() noexcept { return *trace_; }
    [[nodiscard]] const Trace& trace() const noexcept { return *trace_; }
    [[nodiscard]] std::shared_ptr<Trace> shared_trace() const noexcept { return trace_; }
    [[nodiscard]] const Backend& backend() const noexcept { return *backend_; }

  private:
    std::chrono::nanoseconds backoff(int attempt);

    std::shared_ptr<Backend> backend_;
    RetryPolicy retry_;
    std::shared_ptr<Clock> clock_;
    std::shared_ptr<Trace> trace_;
    std::unique_ptr<RateLimiter> limiter_;
    std::string system_prompt_;
    std::mutex jitter_mutex_;
    std::mt19937_64 jitter_{0x6d6f6f7365ULL};
};

} // namespace moose
