#include "moose/llm.hpp"

#include "moose/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

namespace moose {

using nlohmann::json;

GenParams GenParams::generation(std::string model) { return {0.9, 0.9, 1024, std::move(model)}; }
GenParams GenParams::checker(std::string model) { return {0.9, 0.9, 512, std::move(model)}; }
GenParams GenParams::judge(std::string model) { return {0.0, 0.9, 512, std::move(model)}; }

void GenParams::validate() const {
    if (!(temperature >= 0.0 && temperature <= 2.0)) throw ConfigError("temperature must lie in [0, 2]");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in (0, 1]");
    if (max_output_tokens <= 0) throw ConfigError("max_output_tokens must be positive");
}

// ---------------------------------------------------------------- scripted

ScriptedBackend::ScriptedBackend(std::vector<Entry> script) : script_(std::move(script)) {
    if (script_.empty()) throw ConfigError("scripted backend needs at least one entry");
}

std::string ScriptedBackend::complete(const CompletionRequest& request) {
    std::lock_guard lock(mutex_);
    bool any_live = false;
    for (auto& entry : script_) {
        if (entry.times == 0) continue;
        any_live = true;
        if (entry.matcher != "*" && request.prompt.find(entry.matcher) == std::string::npos) continue;
        if (entry.times > 0) --entry.times;
        if (entry.error) {
            switch (*entry.error) {
            case GatewayError::Kind::Transient:
                throw GatewayError(*entry.error, "scripted transient failure");
            case GatewayError::Kind::Auth:
                throw GatewayError(*entry.error, "scripted authentication failure");
            default:
                throw GatewayError(*entry.error, "scripted failure");
            }
        }
        return entry.response;
    }
    if (!any_live) throw GatewayError(GatewayError::Kind::ScriptExhausted, "script exhausted");
    throw GatewayError(GatewayError::Kind::NoMatch, "no script entry matches prompt for module '" + request.module_tag + "'");
}

std::size_t ScriptedBackend::remaining() const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(
        std::count_if(script_.begin(), script_.end(), [](const Entry& e) { return e.times != 0; }));
}

std::vector<ScriptedBackend::Entry> parse_script(std::string_view text, std::string_view source_name) {
    std::vector<ScriptedBackend::Entry> entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (normalize_whitespace(line).empty()) continue;
        auto where = std::string(source_name) + ":" + std::to_string(line_no);
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(where + ": invalid JSON: " + e.what());
        }
        ScriptedBackend::Entry entry;
        entry.matcher = record.value("match", std::string("*"));
        entry.times = record.value("times", 1);
        if (record.contains("error")) {
            auto kind = record.at("error").get<std::string>();
            if (kind == "transient") entry.error = GatewayError::Kind::Transient;
            else if (kind == "auth") entry.error = GatewayError::Kind::Auth;
            else if (kind == "empty") entry.response.clear();
            else throw ParseError(where + ": unknown error kind '" + kind + "'");
        } else if (record.contains("response")) {
            entry.response = record.at("response").get<std::string>();
        } else {
            throw ParseError(where + ": entry needs 'response' or 'error'");
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::vector<ScriptedBackend::Entry> load_script(const std::filesystem::path& path) {
    return parse_script(read_text_file(path), path.string());
}

// ---------------------------------------------------------------- clocks

std::chrono::nanoseconds SystemClock::now() { return std::chrono::steady_clock::now().time_since_epoch(); }

void SystemClock::sleep_for(std::chrono::nanoseconds d) {
    if (d.count() > 0) std::this_thread::sleep_for(d);
}

std::chrono::nanoseconds FakeClock::now() {
    std::lock_guard lock(mutex_);
    return now_;
}

void FakeClock::sleep_for(std::chrono::nanoseconds d) {
    std::lock_guard lock(mutex_);
    if (d.count() > 0) now_ += d;
}

RateLimiter::RateLimiter(double per_second, std::shared_ptr<Clock> clock)
    : limit_(static_cast<std::size_t>(std::floor(per_second))), clock_(std::move(clock)) {
    if (limit_ == 0) throw ConfigError("rate limit must allow at least one call per second");
}

void RateLimiter::acquire() {
    std::lock_guard lock(mutex_);
    constexpr std::chrono::nanoseconds window = std::chrono::seconds(1);
    auto now = clock_->now();
    while (!recent_.empty() && now - recent_.front() >= window) recent_.pop_front();
    if (recent_.size() >= limit_) {
        clock_->sleep_for(recent_.front() + window - now);
        now = clock_->now();
        while (!recent_.empty() && now - recent_.front() >= window) recent_.pop_front();
    }
    recent_.push_back(now);
}

// ---------------------------------------------------------------- trace

std::uint64_t Trace::append(CallRecord record) {
    std::lock_guard lock(mutex_);
    record.sequence_no = records_.size();
    records_.push_back(std::move(record));
    return records_.back().sequence_no;
}

std::vector<CallRecord> Trace::snapshot() const {
    std::lock_guard lock(mutex_);
    return records_;
}

std::size_t Trace::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

std::size_t Trace::count_tag(std::string_view module_tag) const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(),
                                                  [&](const CallRecord& r) { return r.module_tag == module_tag; }));
}

std::string to_jsonl(const std::vector<CallRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        json j{{"sequence_no", r.sequence_no},
               {"module_tag", r.module_tag},
               {"prompt", r.prompt},
               {"params",
                {{"temperature", r.params.temperature},
                 {"top_p", r.params.top_p},
                 {"max_output_tokens", r.params.max_output_tokens},
                 {"model_name", r.params.model_name}}},
               {"response", r.response},
               {"latency_ms", r.latency_ms},
               {"retries", r.retries},
               {"subject", r.subject},
               {"started_at_ms", r.started_at_ms}};
        if (r.error) j["error"] = *r.error;
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

void write_trace(const std::filesystem::path& path, const Trace& trace) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << to_jsonl(trace.snapshot());
}

// ---------------------------------------------------------------- gateway

Gateway::Gateway(std::shared_ptr<Backend> backend, RetryPolicy retry, std::shared_ptr<Clock> clock,
                 std::shared_ptr<Trace> trace)
    : backend_(std::move(backend)),
      retry_(retry),
      clock_(clock ? std::move(clock) : std::make_shared<SystemClock>()),
      trace_(trace ? std::move(trace) : std::make_shared<Trace>()) {
    if (!backend_) throw ConfigError("gateway needs a backend");
    if (retry_.retry_limit < 0) throw ConfigError("retry_limit must be non-negative");
}

void Gateway::set_rate_limit(double calls_per_second) {
    limiter_ = calls_per_second > 0 ? std::make_unique<RateLimiter>(calls_per_second, clock_) : nullptr;
}

void Gateway::set_jitter_seed(std::uint64_t seed) {
    std::lock_guard lock(jitter_mutex_);
    jitter_.seed(seed);
}

// Full jitter: uniform in [0, base * multiplier^attempt].
std::chrono::nanoseconds Gateway::backoff(int attempt) {
    double cap = std::chrono::duration<double>(retry_.base_delay).count() * std::pow(retry_.multiplier, attempt);
    double u;
    {
        std::lock_guard lock(jitter_mutex_);
        u = std::generate_canonical<double, 53>(jitter_);
    }
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::duration<double>(cap * u));
}

std::string Gateway::generate(std::string_view prompt, const GenParams& params, std::string_view module_tag,
                              std::string_view subject) {
    if (normalize_whitespace(prompt).empty()) throw ConfigError("prompt must be non-empty");
    params.validate();

    CompletionRequest request{system_prompt_, std::string(prompt), params, std::string(module_tag)};
    CallRecord record;
    record.module_tag = module_tag;
    record.prompt = prompt;
    record.params = params;
    record.subject = subject;
    record.started_at_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count();
    auto start = clock_->now();
    auto finish = [&](std::optional<std::string> error) {
        record.latency_ms = std::chrono::duration<double, std::milli>(clock_->now() - start).count();
        record.error = std::move(error);
        trace_->append(record);
    };

    for (int attempt = 0;; ++attempt) {
        record.retries = attempt;
        try {
            if (limiter_) limiter_->acquire();
            std::string text = backend_->complete(request);
            if (normalize_whitespace(text).empty()) {
                throw GatewayError(GatewayError::Kind::EmptyCompletion, "empty completion");
            }
            record.response = text;
            finish(std::nullopt);
            return text;
        } catch (const GatewayError& e) {
            if (!e.retryable()) {
                finish(e.what());
                throw;
            }
            if (attempt >= retry_.retry_limit) {
                std::string msg = "retry limit (" + std::to_string(retry_.retry_limit) +
                                  ") exhausted for module '" + std::string(module_tag) + "': " + e.what();
                finish(msg);
                throw GatewayError(GatewayError::Kind::RetriesExhausted, msg);
            }
            clock_->sleep_for(backoff(attempt));
        }
    }
}

} // namespace moose
