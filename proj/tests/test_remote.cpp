// Remote backends against a local mock server; no external network.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "moose/llm.hpp"

#include <doctest.h>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <thread>

using namespace moose;
using nlohmann::json;

namespace {

class MockServer {
  public:
    MockServer() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockServer() {
        server_.stop();
        thread_.join();
    }

    httplib::Server& server() { return server_; }
    [[nodiscard]] std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

CompletionRequest request(std::string prompt = "hello") {
    auto params = GenParams::generation("test-model");
    return {"be brief", std::move(prompt), params, "proposer"};
}

} // namespace

TEST_CASE("request bodies for both wire formats") {
    auto a = json::parse(build_request_body(Provider::OpenAiChat, request()));
    CHECK(a["model"] == "test-model");
    CHECK(a["temperature"] == 0.9);
    CHECK(a["top_p"] == 0.9);
    CHECK(a["max_tokens"] == 1024);
    REQUIRE(a["messages"].size() == 2);
    CHECK(a["messages"][0]["role"] == "system");
    CHECK(a["messages"][1]["content"] == "hello");

    auto b = json::parse(build_request_body(Provider::AnthropicMessages, request()));
    CHECK(b["system"] == "be brief");
    REQUIRE(b["messages"].size() == 1);
    CHECK(b["messages"][0]["role"] == "user");
}

TEST_CASE("response bodies for both wire formats") {
    CHECK(parse_response_body(Provider::OpenAiChat, R"({"choices":[{"message":{"role":"assistant","content":"hi"}}]})") ==
          "hi");
    CHECK(parse_response_body(Provider::AnthropicMessages,
                              R"({"content":[{"type":"text","text":"a"},{"type":"tool_use"},{"type":"text","text":"b"}]})") ==
          "ab");
    CHECK_THROWS_AS(parse_response_body(Provider::OpenAiChat, R"({"choices":[]})"), GatewayError);
    CHECK_THROWS_AS(parse_response_body(Provider::OpenAiChat, "not json"), GatewayError);
    CHECK_THROWS_AS(parse_response_body(Provider::AnthropicMessages, R"({"oops":1})"), GatewayError);
}

TEST_CASE("provider A over HTTP with headers, auth and retries") {
    MockServer mock;
    std::atomic<int> calls{0};
    mock.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        ++calls;
        if (req.get_header_value("Authorization") != "Bearer secret") {
            res.status = 401;
            res.set_content(R"({"error":"bad key"})", "application/json");
            return;
        }
        if (calls == 1) {
            res.status = 429;
            return;
        }
        auto body = json::parse(req.body);
        json out{{"choices", {{{"message", {{"role", "assistant"}, {"content", "echo: " + body["messages"].back()["content"].get<std::string>()}}}}}}};
        res.set_content(out.dump(), "application/json");
    });

    Gateway gw(std::make_shared<RemoteBackend>(RemoteOptions{Provider::OpenAiChat, mock.url(), "secret"}), RetryPolicy{},
               std::make_shared<FakeClock>());
    CHECK(gw.generate("hello", GenParams::generation("m"), "proposer") == "echo: hello");
    CHECK(gw.trace().snapshot()[0].retries == 1);
    CHECK(gw.backend().is_remote());

    Gateway bad(std::make_shared<RemoteBackend>(RemoteOptions{Provider::OpenAiChat, mock.url(), "wrong"}), RetryPolicy{},
                std::make_shared<FakeClock>());
    int before = calls;
    try {
        bad.generate("hello", GenParams::generation("m"), "proposer");
        FAIL("expected auth failure");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayError::Kind::Auth);
    }
    CHECK(calls == before + 1);
}

TEST_CASE("provider B over HTTP with a path prefix") {
    MockServer mock;
    mock.server().Post("/proxy/v1/messages", [&](const httplib::Request& req, httplib::Response& res) {
        if (req.get_header_value("x-api-key") != "k" || req.get_header_value("anthropic-version") != "2023-06-01") {
            res.status = 403;
            return;
        }
        res.set_content(R"({"content":[{"type":"text","text":"Score: 4"}]})", "application/json");
    });
    RemoteBackend backend({Provider::AnthropicMessages, mock.url() + "/proxy/", "k"});
    CHECK(backend.complete(request()) == "Score: 4");
    CHECK(backend.name() == "provider-b");
}

TEST_CASE("server errors are transient and exhaust retries") {
    MockServer mock;
    std::atomic<int> calls{0};
    mock.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 503;
    });
    Gateway gw(std::make_shared<RemoteBackend>(RemoteOptions{Provider::OpenAiChat, mock.url(), "k"}), RetryPolicy{},
               std::make_shared<FakeClock>());
    try {
        gw.generate("x", GenParams::generation("m"), "proposer");
        FAIL("expected retries to run out");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayError::Kind::RetriesExhausted);
    }
    CHECK(calls == 4);
}

TEST_CASE("missing credentials and bad URLs") {
    ::unsetenv("PROVIDER_A_API_KEY");
    CHECK_THROWS_AS(make_remote_backend(Provider::OpenAiChat), ConfigError);
    ::setenv("PROVIDER_B_API_KEY", "abc", 1);
    CHECK(make_remote_backend(Provider::AnthropicMessages)->is_remote());
    CHECK_THROWS_AS(RemoteBackend({Provider::OpenAiChat, "ftp://example", "k"}), ConfigError);
}
