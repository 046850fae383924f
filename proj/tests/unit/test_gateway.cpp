#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <sstream>
#include <thread>
#include <vector>

#include <httplib.h>

#include "longqa/gateway/gateway.hpp"

using namespace longqa;
using namespace longqa::gateway;
using nlohmann::json;

namespace {

ChatRequest simple_request(const std::string& user) {
    ChatRequest r;
    r.model = "gpt-4o-mini";
    r.messages = {{Role::system, "be terse"}, {Role::user, user}};
    return r;
}

FunctionSchema properties_schema() {
    return {"extract_properties",
            "Extract (metric, subject) pairs.",
            {{"type", "object"},
             {"properties",
              {{"properties",
                {{"type", "array"},
                 {"items",
                  {{"type", "object"},
                   {"properties", {{"metric", {{"type", "string"}}}, {"subject", {{"type", "string"}}}}},
                   {"required", {"metric", "subject"}}}}}}}},
             {"required", {"properties"}}}};
}

ChatRequest function_request() {
    auto r = simple_request("Which company has the highest 'Administrative Expenses'?");
    r.tools = {properties_schema()};
    r.tool_choice = "extract_properties";
    return r;
}

std::shared_ptr<ScriptedBackend> scripted(const std::vector<std::pair<ChatRequest, ChatResponse>>& entries) {
    std::stringstream ss;
    for (const auto& [req, resp] : entries) {
        ss << json{{"request_hash", request_hash(req)}, {"response", to_json(resp)}}.dump() << '\n';
    }
    return std::make_shared<ScriptedBackend>(ss, TokenScheme::heuristic(), "test");
}

GatewayOptions fast_options() {
    GatewayOptions o;
    o.sleep = [](std::chrono::milliseconds) {};
    return o;
}

}  // namespace

TEST_CASE("request defaults follow the inference settings") {
    ChatRequest r;
    CHECK(r.temperature == 0.0);
    CHECK(r.max_output_tokens == 1024);
}

TEST_CASE("request validation") {
    ChatRequest r;
    CHECK_THROWS_AS(r.validate(), PipelineError);
    r.messages = {{Role::system, "s"}, {Role::assistant, "a"}};
    CHECK_THROWS_AS(r.validate(), PipelineError);
    r.messages = {{Role::user, "q"}};
    CHECK_NOTHROW(r.validate());
    r.tools = {properties_schema(), properties_schema()};
    CHECK_THROWS_AS(r.validate(), PipelineError);
}

TEST_CASE("request hash ignores JSON key insertion order") {
    auto a = function_request();
    auto b = function_request();
    json params = json::object();
    params["required"] = {"properties"};
    params["properties"] = a.tools[0].parameters["properties"];
    params["type"] = "object";
    b.tools[0].parameters = params;
    CHECK(request_hash(a) == request_hash(b));
    CHECK(request_hash(a).size() == 64);
    b.messages[1].content += "?";
    CHECK(request_hash(a) != request_hash(b));
}

TEST_CASE("scripted backend replays recorded responses verbatim") {
    ChatResponse recorded{std::string("AULT ALLIANCE, INC."), {}, {10, 3}};
    const auto req = simple_request("q1");
    Gateway gw(scripted({{req, recorded}}), fast_options());
    TokenAccount account;
    CHECK(gw.send_chat(req, "summarization", account) == recorded);
    CHECK_THROWS_AS(gw.send_chat(simple_request("other"), "summarization", account), FixtureMissError);
    try {
        gw.send_chat(simple_request("other"), "x", account);
    } catch (const FixtureMissError& e) {
        CHECK(e.kind() == ErrorKind::fixture_miss);
    }
}

TEST_CASE("scripted backend fills missing usage from the token scheme") {
    const auto req = simple_request("abcdefgh");  // 8 bytes + "be terse" 8 bytes
    std::stringstream ss;
    ss << json{{"request_hash", request_hash(req)}, {"response", {{"text", "abcd"}}}}.dump() << '\n';
    ScriptedBackend backend(ss, TokenScheme::heuristic());
    const auto resp = backend.complete(req);
    CHECK(resp.usage.input_tokens == 4);
    CHECK(resp.usage.output_tokens == 1);
}

TEST_CASE("scripted transcript errors") {
    std::stringstream bad("{not json}\n");
    CHECK_THROWS_AS(ScriptedBackend(bad, TokenScheme::heuristic()), ConfigError);
    std::stringstream conflict;
    conflict << json{{"request_hash", "h"}, {"response", {{"text", "a"}}}}.dump() << '\n'
             << json{{"request_hash", "h"}, {"response", {{"text", "b"}}}}.dump() << '\n';
    CHECK_THROWS_AS(ScriptedBackend(conflict, TokenScheme::heuristic()), ConfigError);
}

TEST_CASE("account sums usage per stage") {
    const auto r1 = simple_request("one");
    const auto r2 = simple_request("two");
    Gateway gw(scripted({{r1, {std::string("a"), {}, {10, 1}}}, {r2, {std::string("b"), {}, {15, 2}}}}), fast_options());
    TokenAccount account;
    gw.send_chat(r1, "retrieval", account);
    gw.send_chat(r2, "retrieval", account);
    const auto stages = account.stages();
    CHECK(stages.at("retrieval").calls == 2);
    CHECK(stages.at("retrieval").input_tokens == 25);
    CHECK(stages.at("retrieval").output_tokens == 3);
}

TEST_CASE("efficiency totals") {
    TokenAccount empty;
    const auto zero = efficiency_totals(empty);
    CHECK(zero.total_input_tokens == 0);
    CHECK(zero.total_output_tokens == 0);
    CHECK(zero.per_stage.empty());

    TokenAccount account;
    account.record("a", {100, 7});
    account.record("b", {50, 3});
    const auto t = efficiency_totals(account);
    CHECK(t.total_input_tokens == 150);
    CHECK(t.total_output_tokens == 10);
    CHECK(t.total_calls == 2);
    CHECK(account_from_json(to_json(account)) == account);
}

TEST_CASE("token account tolerates concurrent appenders") {
    TokenAccount account;
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 1000; ++i) account.record("retrieval", {2, 1});
        });
    }
    for (auto& t : threads) t.join();
    CHECK(account.stages().at("retrieval").calls == 8000);
    CHECK(account.total().input_tokens == 16000);
}

TEST_CASE("call_function returns validated arguments") {
    const json args = {{"properties", {{{"metric", "Administrative Expenses"}, {"subject", "X's 2024 annual report"}}}}};
    const auto req = function_request();
    Gateway gw(scripted({{req, {std::nullopt, {{"extract_properties", args}}, {5, 5}}}}), fast_options());
    TokenAccount account;
    CHECK(gw.call_function(req, "extraction", account) == args);
}

TEST_CASE("call_function failure modes") {
    TokenAccount account;
    const auto req = function_request();
    SUBCASE("plain text answer") {
        Gateway gw(scripted({{req, {std::string("no tools here"), {}, {1, 1}}}}), fast_options());
        CHECK_THROWS_AS(gw.call_function(req, "extraction", account), ExtractionError);
    }
    SUBCASE("missing required field is named") {
        const json args = {{"properties", {{{"metric", "revenue"}}}}};
        Gateway gw(scripted({{req, {std::nullopt, {{"extract_properties", args}}, {1, 1}}}}), fast_options());
        try {
            gw.call_function(req, "extraction", account);
            FAIL("expected a validation error");
        } catch (const ValidationError& e) {
            CHECK(e.field == "properties[0].subject");
        }
    }
    SUBCASE("wrong argument type") {
        const json args = {{"properties", "revenue"}};
        Gateway gw(scripted({{req, {std::nullopt, {{"extract_properties", args}}, {1, 1}}}}), fast_options());
        CHECK_THROWS_AS(gw.call_function(req, "extraction", account), ValidationError);
    }
    SUBCASE("preconditions") {
        Gateway gw(scripted({}), fast_options());
        auto no_choice = req;
        no_choice.tool_choice.reset();
        CHECK_THROWS_AS(gw.call_function(no_choice, "extraction", account), PipelineError);
    }
}

TEST_CASE("recorded exchanges replay through the scripted backend") {
    auto callback = std::make_shared<CallbackBackend>(
        [](const ChatRequest& r) { return ChatResponse{r.messages.back().content + "!", {}, {}}; },
        TokenScheme::heuristic());
    auto recorder = std::make_shared<RecordingBackend>(callback);
    Gateway live(recorder, fast_options());
    TokenAccount live_account;
    const auto a = live.send_chat(simple_request("alpha"), "s", live_account);
    live.send_chat(simple_request("beta"), "s", live_account);
    CHECK(recorder->size() == 2);

    std::stringstream transcript;
    recorder->write_transcript(transcript);
    Gateway replay(std::make_shared<ScriptedBackend>(transcript, TokenScheme::heuristic()), fast_options());
    TokenAccount replay_account;
    CHECK(replay.send_chat(simple_request("alpha"), "s", replay_account) == a);
    replay.send_chat(simple_request("beta"), "s", replay_account);
    CHECK(replay_account == live_account);
}

// ---------------------------------------------------------------------------
// HTTP wire client against a local server.

namespace {

struct LocalServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    LocalServer() {
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LocalServer() {
        server.stop();
        thread.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"; }
};

const json kCompletion = {
    {"choices", {{{"message", {{"role", "assistant"}, {"content", "42"}}}}}},
    {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 1}}}};

}  // namespace

TEST_CASE("http backend speaks the chat-completions wire format") {
    ::setenv("LONGQA_TEST_KEY", "sk-test", 1);
    LocalServer local;
    std::atomic<int> hits{0};
    json seen;
    std::string auth;
    local.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        seen = json::parse(req.body);
        auth = req.get_header_value("Authorization");
        res.set_content(kCompletion.dump(), "application/json");
    });
    auto backend = std::make_shared<HttpBackend>(HttpBackendConfig{local.url(), "LONGQA_TEST_KEY", std::chrono::seconds(5)},
                                                 TokenScheme::heuristic());
    Gateway gw(backend, fast_options());
    TokenAccount account;
    const auto resp = gw.send_chat(function_request(), "extraction", account);
    CHECK(resp.text == "42");
    CHECK(resp.usage == Usage{12, 1});
    CHECK(hits == 1);
    CHECK(auth == "Bearer sk-test");
    CHECK(seen["temperature"] == 0.0);
    CHECK(seen["max_tokens"] == 1024);
    CHECK(seen["tool_choice"]["function"]["name"] == "extract_properties");
    CHECK(seen["tools"][0]["type"] == "function");
}

TEST_CASE("http backend retries transient failures and charges their input") {
    ::setenv("LONGQA_TEST_KEY", "sk-test", 1);
    LocalServer local;
    std::atomic<int> hits{0};
    local.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        const int n = ++hits;
        if (n <= 2) {
            res.status = n == 1 ? 429 : 503;
            res.set_content("busy", "text/plain");
            return;
        }
        res.set_content(kCompletion.dump(), "application/json");
    });
    auto backend = std::make_shared<HttpBackend>(HttpBackendConfig{local.url(), "LONGQA_TEST_KEY", std::chrono::seconds(5)},
                                                 TokenScheme::heuristic());
    std::vector<std::chrono::milliseconds> sleeps;
    auto options = fast_options();
    options.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
    Gateway gw(backend, options);
    TokenAccount account;
    const auto req = simple_request("abcdefgh");
    gw.send_chat(req, "answering", account);
    CHECK(hits == 3);
    REQUIRE(sleeps.size() == 2);
    CHECK(sleeps[0].count() <= 500);
    CHECK(sleeps[1].count() <= 1000);
    const auto tally = account.stages().at("answering");
    CHECK(tally.calls == 1);
    CHECK(tally.failed_attempts == 2);
    CHECK(tally.input_tokens == 12 + 2 * estimate_input_tokens(req, TokenScheme::heuristic()));
}

TEST_CASE("http backend error taxonomy") {
    ::setenv("LONGQA_TEST_KEY", "sk-test", 1);
    LocalServer local;
    std::atomic<int> hits{0};
    std::string mode;
    local.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        if (mode == "always-500") {
            res.status = 500;
        } else if (mode == "400") {
            res.status = 400;
        } else {
            res.set_content("{\"choices\": []}", "application/json");
        }
    });
    auto backend = std::make_shared<HttpBackend>(HttpBackendConfig{local.url(), "LONGQA_TEST_KEY", std::chrono::seconds(5)},
                                                 TokenScheme::heuristic());
    Gateway gw(backend, fast_options());
    TokenAccount account;

    mode = "always-500";
    CHECK_THROWS_AS(gw.send_chat(simple_request("q"), "s", account), TransportError);
    CHECK(hits == 5);

    hits = 0;
    mode = "400";
    CHECK_THROWS_AS(gw.send_chat(simple_request("q"), "s", account), TransportError);
    CHECK(hits == 1);

    hits = 0;
    mode = "malformed";
    CHECK_THROWS_AS(gw.send_chat(simple_request("q"), "s", account), ProtocolError);
    CHECK(hits == 1);
}

TEST_CASE("http backend requires its credential variable") {
    ::unsetenv("LONGQA_MISSING_KEY");
    CHECK_THROWS_AS(HttpBackend(HttpBackendConfig{"http://127.0.0.1:1/x", "LONGQA_MISSING_KEY", std::chrono::seconds(1)},
                                TokenScheme::heuristic()),
                    ConfigError);
}

TEST_CASE("rate limiter waits once the bucket is empty") {
    std::vector<std::chrono::milliseconds> waits;
    RateLimiter limiter(60.0, [&](std::chrono::milliseconds d) {
        waits.push_back(d);
        std::this_thread::sleep_for(d);
    });
    limiter.acquire();  // bucket holds one request at 60/min
    CHECK(waits.empty());
    RateLimiter unlimited(0);
    for (int i = 0; i < 100; ++i) unlimited.acquire();
}

TEST_CASE("retry policy ceilings grow geometrically") {
    RetryPolicy p;
    CHECK(p.max_attempts == 5);
    CHECK(p.ceiling(1).count() == 500);
    CHECK(p.ceiling(2).count() == 1000);
    CHECK(p.ceiling(4).count() == 4000);
}
