#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "moose/llm.hpp"

#include <json.hpp>

#include <cstdlib>
#include <regex>

namespace moose {

using nlohmann::json;

namespace {

constexpr const char* kOpenAiDefaultUrl = "https://api.openai.com";
constexpr const char* kAnthropicDefaultUrl = "https://api.anthropic.com";
constexpr const char* kAnthropicVersion = "2023-06-01";

struct SplitUrl {
    std::string origin;
    std::string prefix;
};

// "https://host:port/base" -> {"https://host:port", "/base"}
SplitUrl split_url(const std::string& url) {
    static const std::regex pattern(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, pattern)) throw ConfigError("invalid base URL '" + url + "'");
    std::string prefix = m[2].matched ? m[2].str() : std::string();
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {m[1].str(), prefix};
}

GatewayError classify_status(int status, const std::string& body) {
    std::string msg = "HTTP " + std::to_string(status) + ": " + body.substr(0, 300);
    if (status == 401 || status == 403) return {GatewayError::Kind::Auth, msg};
    if (status == 408 || status == 409 || status == 429 || status >= 500) return {GatewayError::Kind::Transient, msg};
    return {GatewayError::Kind::Other, msg};
}

} // namespace

std::string build_request_body(Provider provider, const CompletionRequest& request) {
    json body;
    body["model"] = request.params.model_name;
    body["temperature"] = request.params.temperature;
    body["top_p"] = request.params.top_p;
    body["max_tokens"] = request.params.max_output_tokens;
    if (provider == Provider::OpenAiChat) {
        json messages = json::array();
        if (!request.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
        messages.push_back({{"role", "user"}, {"content", request.prompt}});
        body["messages"] = std::move(messages);
    } else {
        if (!request.system_prompt.empty()) body["system"] = request.system_prompt;
        body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});
    }
    return body.dump();
}

std::string parse_response_body(Provider provider, std::string_view body) {
    json parsed;
    try {
        parsed = json::parse(body);
    } catch (const json::parse_error& e) {
        throw GatewayError(GatewayError::Kind::Transient, std::string("malformed response body: ") + e.what());
    }
    try {
        if (provider == Provider::OpenAiChat) {
            const auto& choices = parsed.at("choices");
            if (choices.empty()) throw GatewayError(GatewayError::Kind::EmptyCompletion, "empty completion");
            const auto& content = choices.at(0).at("message").at("content");
            return content.is_null() ? std::string() : content.get<std::string>();
        }
        std::string text;
        for (const auto& block : parsed.at("content")) {
            if (block.value("type", std::string()) == "text") text += block.at("text").get<std::string>();
        }
        return text;
    } catch (const json::exception& e) {
        throw GatewayError(GatewayError::Kind::Other, std::string("unexpected response shape: ") + e.what());
    }
}

RemoteBackend::RemoteBackend(RemoteOptions options) : options_(std::move(options)) {
    if (options_.base_url.empty()) {
        options_.base_url = options_.provider == Provider::OpenAiChat ? kOpenAiDefaultUrl : kAnthropicDefaultUrl;
    }
    split_url(options_.base_url);
}

std::string RemoteBackend::name() const {
    return options_.provider == Provider::OpenAiChat ? "provider-a" : "provider-b";
}

std::string RemoteBackend::complete(const CompletionRequest& request) {
    auto url = split_url(options_.base_url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);

    httplib::Headers headers;
    std::string path;
    if (options_.provider == Provider::OpenAiChat) {
        headers.emplace("Authorization", "Bearer " + options_.api_key);
        path = url.prefix + "/v1/chat/completions";
    } else {
        headers.emplace("x-api-key", options_.api_key);
        headers.emplace("anthropic-version", kAnthropicVersion);
        path = url.prefix + "/v1/messages";
    }

    auto result = client.Post(path, headers, build_request_body(options_.provider, request), "application/json");
    if (!result) {
        throw GatewayError(GatewayError::Kind::Transient, "transport error: " + httplib::to_string(result.error()));
    }
    if (result->status != 200) throw classify_status(result->status, result->body);
    return parse_response_body(options_.provider, result->body);
}

std::shared_ptr<Backend> make_remote_backend(Provider provider, std::string base_url) {
    const char* var = provider == Provider::OpenAiChat ? "PROVIDER_A_API_KEY" : "PROVIDER_B_API_KEY";
    const char* key = std::getenv(var);
    if (key == nullptr || *key == '\0') throw ConfigError(std::string(var) + " is not set");
    return std::make_shared<RemoteBackend>(RemoteOptions{provider, std::move(base_url), key});
}

} // namespace moose
