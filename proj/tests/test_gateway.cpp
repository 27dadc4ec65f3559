#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "stt/gateway.hpp"

using namespace stt;

namespace {

GenerationRequest request_with(const std::string& prompt, int max_tokens = 64) {
    GenerationRequest r;
    r.prompt = prompt;
    r.max_new_tokens = max_tokens;
    r.stop = {"`"};
    return r;
}

// In-process completion endpoint for exercising the wire client.
struct TestServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> hits{0};

    explicit TestServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server.Post("/v1/completions", [this, handler](const httplib::Request& req,
                                                       httplib::Response& res) {
            ++hits;
            handler(req, res);
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~TestServer() {
        server.stop();
        thread.join();
    }
    BackendConfig config() const {
        BackendConfig c;
        c.kind = BackendConfig::Kind::remote;
        c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";
        c.model = "test-model";
        c.max_retries = 2;
        c.retry_base_ms = 1;
        c.timeout_seconds = 5;
        return c;
    }
};

std::string completion_body(const std::string& text, const std::string& finish) {
    nlohmann::json j;
    j["choices"] = {{{"text", text}, {"finish_reason", finish}}};
    return j.dump();
}

}  // namespace

TEST_CASE("mock scripted lookup strips the stop sequence") {
    MockBackend mock;
    mock.script_exact("prompt-1", "Hallo`");
    GenerationResult r = mock.generate(request_with("prompt-1"));
    REQUIRE(r.ok());
    CHECK(r.response.text == "Hallo");
    CHECK(r.response.terminated_by_stop);
    CHECK(r.response.raw_finish_reason == "stop");
}

TEST_CASE("mock response without the stop sequence is length-capped") {
    MockBackend mock;
    mock.script_exact("p", "runs on and on without end");
    GenerationResult r = mock.generate(request_with("p", 8));
    REQUIRE(r.ok());
    CHECK(r.response.text == "runs on and on without end");
    CHECK_FALSE(r.response.terminated_by_stop);
    CHECK(r.response.raw_finish_reason == "length");
}

TEST_CASE("mock echo returns the final source slot") {
    MockBackend mock;
    GenerationResult r =
        mock.generate(request_with("en: `Hi`\nde: `Hallo`\n\nen: `Guten Tag`\nde: `"));
    REQUIRE(r.ok());
    CHECK(r.response.text == "Guten Tag");
    CHECK(r.response.terminated_by_stop);
}

TEST_CASE("mock substring rules can inject failures") {
    MockBackend mock;
    mock.add_rule({"boom", "", "injected outage"});
    mock.add_rule({"long", "no closing tick here", ""});
    CHECK(mock.generate(request_with("please boom now")).error == "injected outage");
    GenerationResult r = mock.generate(request_with("a long one"));
    REQUIRE(r.ok());
    CHECK_FALSE(r.response.terminated_by_stop);
}

TEST_CASE("exact scripts are consumed as a queue") {
    MockBackend mock;
    mock.script_exact("p", "first`");
    mock.script_exact("p", "second`");
    CHECK(mock.generate(request_with("p")).response.text == "first");
    CHECK(mock.generate(request_with("p")).response.text == "second");
    // queue exhausted: echo takes over
    CHECK(mock.generate(request_with("p")).ok());
}

TEST_CASE("requests carry the configured token budget") {
    GenerationRequest r = request_with("solve it", 512);
    CHECK(r.max_new_tokens == 512);
    CHECK(r.temperature == 0.0);
}

TEST_CASE("request validation happens in-slot") {
    MockBackend mock;
    GenerationRequest bad = request_with("p");
    bad.max_new_tokens = 0;
    auto results = mock.generate_batch({bad}, 1);
    REQUIRE(results.size() == 1);
    CHECK_FALSE(results[0].ok());

    GenerationRequest too_many_stops = request_with("p");
    too_many_stops.stop = {"a", "b", "c", "d", "e"};
    CHECK_FALSE(mock.generate_batch({too_many_stops}, 1)[0].ok());
}

TEST_CASE("batch output is index-aligned at any concurrency level") {
    MockBackend mock;
    std::vector<GenerationRequest> requests;
    for (int i = 0; i < 23; ++i)
        requests.push_back(request_with("en: `a`\nde: `b`\n\nen: `text " + std::to_string(i) +
                                        "`\nde: `"));
    auto sequential = mock.generate_batch(requests, 1);
    auto concurrent = mock.generate_batch(requests, 8);
    REQUIRE(sequential.size() == concurrent.size());
    for (size_t i = 0; i < requests.size(); ++i) {
        CHECK(sequential[i].response.text == "text " + std::to_string(i));
        CHECK(sequential[i].response.text == concurrent[i].response.text);
    }
}

TEST_CASE("one failing slot does not abort the batch") {
    MockBackend mock;
    mock.add_rule({"fails", "", "backend exploded"});
    std::vector<GenerationRequest> requests = {
        request_with("en: `a`\nde: `b`\n\nen: `ok one`\nde: `"),
        request_with("this fails"),
        request_with("en: `a`\nde: `b`\n\nen: `ok two`\nde: `"),
    };
    auto results = mock.generate_batch(requests, 4);
    CHECK(results[0].ok());
    CHECK_FALSE(results[1].ok());
    CHECK(results[2].ok());
}

TEST_CASE("empty batch is a precondition error") {
    MockBackend mock;
    CHECK_THROWS_AS(mock.generate_batch({}, 1), ValidationError);
}

TEST_CASE("backend config invariants") {
    BackendConfig c;
    c.max_in_flight = 0;
    CHECK_THROWS_AS(validate_backend_config(c), ValidationError);
    c = BackendConfig{};
    c.kind = BackendConfig::Kind::remote;
    CHECK_THROWS_AS(validate_backend_config(c), ValidationError);  // endpoint missing
}

TEST_CASE("http backend parses a completion response") {
    TestServer server([](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        CHECK(body["model"] == "test-model");
        CHECK(body["prompt"] == "翻译 this");
        CHECK(body["max_tokens"] == 64);
        CHECK(body["stop"][0] == "`");
        res.set_content(completion_body("Hallo`", "stop"), "application/json");
    });
    HttpBackend backend(server.config());
    GenerationResult r = backend.generate(request_with("翻译 this"));
    REQUIRE(r.ok());
    CHECK(r.response.text == "Hallo");  // stop sequence stripped
    CHECK(r.response.terminated_by_stop);
}

TEST_CASE("http backend maps length termination") {
    TestServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content(completion_body("partial transl", "length"), "application/json");
    });
    HttpBackend backend(server.config());
    GenerationResult r = backend.generate(request_with("p"));
    REQUIRE(r.ok());
    CHECK_FALSE(r.response.terminated_by_stop);
    CHECK(r.response.raw_finish_reason == "length");
}

TEST_CASE("unknown finish reasons are preserved but not trusted") {
    TestServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content(completion_body("text", "content_filter"), "application/json");
    });
    HttpBackend backend(server.config());
    GenerationResult r = backend.generate(request_with("p"));
    REQUIRE(r.ok());
    CHECK_FALSE(r.response.terminated_by_stop);
    CHECK(r.response.raw_finish_reason == "content_filter");
}

TEST_CASE("rate limiting retries and never duplicates a success") {
    TestServer server([](const httplib::Request&, httplib::Response& res) {
        static std::atomic<int> n{0};
        if (n.fetch_add(1) == 0) {
            res.status = 429;
            res.set_header("Retry-After", "0");
        } else {
            res.set_content(completion_body("ok`", "stop"), "application/json");
        }
    });
    HttpBackend backend(server.config());
    GenerationResult r = backend.generate(request_with("p"));
    REQUIRE(r.ok());
    CHECK(r.response.text == "ok");
    CHECK(server.hits.load() == 2);
}

TEST_CASE("auth failures are surfaced without retry") {
    TestServer server([](const httplib::Request&, httplib::Response& res) {
        res.status = 401;
    });
    HttpBackend backend(server.config());
    GenerationResult r = backend.generate(request_with("p"));
    CHECK_FALSE(r.ok());
    CHECK(r.error.find("authentication") != std::string::npos);
    CHECK(server.hits.load() == 1);
}

TEST_CASE("bearer token comes from the configured environment variable") {
    ::setenv("STT_TEST_TOKEN", "sekrit", 1);
    TestServer server([](const httplib::Request& req, httplib::Response& res) {
        CHECK(req.get_header_value("Authorization") == "Bearer sekrit");
        res.set_content(completion_body("ok`", "stop"), "application/json");
    });
    BackendConfig config = server.config();
    config.auth_env = "STT_TEST_TOKEN";
    HttpBackend backend(config);
    CHECK(backend.generate(request_with("p")).ok());
    ::unsetenv("STT_TEST_TOKEN");
}

TEST_CASE("malformed payloads fail without retry") {
    TestServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content("not json at all", "text/plain");
    });
    HttpBackend backend(server.config());
    GenerationResult r = backend.generate(request_with("p"));
    CHECK_FALSE(r.ok());
    CHECK(r.error.find("malformed") != std::string::npos);
    CHECK(server.hits.load() == 1);
}

TEST_CASE("server errors are retried up to the cap then surfaced") {
    TestServer server([](const httplib::Request&, httplib::Response& res) {
        res.status = 503;
    });
    HttpBackend backend(server.config());  // max_retries = 2
    GenerationResult r = backend.generate(request_with("p"));
    CHECK_FALSE(r.ok());
    CHECK(server.hits.load() == 3);
}

TEST_CASE("an unreachable endpoint surfaces after the retries") {
    BackendConfig config;
    config.kind = BackendConfig::Kind::remote;
    config.endpoint = "http://127.0.0.1:9/v1";  // discard port, nothing listens
    config.model = "m";
    config.max_retries = 1;
    config.retry_base_ms = 1;
    config.timeout_seconds = 1;
    HttpBackend backend(config);
    GenerationResult r = backend.generate(request_with("p"));
    CHECK_FALSE(r.ok());
    CHECK(r.error.find("attempts") != std::string::npos);
}
