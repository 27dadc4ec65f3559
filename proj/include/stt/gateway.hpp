#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "stt/sha256.hpp"
#include "stt/util.hpp"

namespace stt {

struct GenerationRequest {
    std::string prompt;
    int max_new_tokens = 1;
    std::vector<std::string> stop;
    double temperature = 0.0;  // greedy by default, for reproducible filtering
};

inline void validate_request(const GenerationRequest& request) {
    if (request.max_new_tokens < 1)
        throw ValidationError("max_new_tokens must be at least 1");
    if (request.stop.size() > 4) throw ValidationError("at most 4 stop sequences");
    if (request.temperature < 0) throw ValidationError("temperature must be non-negative");
}

struct GenerationResponse {
    std::string text;                // stop sequence excluded
    bool terminated_by_stop = false; // true iff the backend stopped on a stop
                                     // sequence, not on the length cap
    std::string raw_finish_reason;
};

// One slot of a batch: either a response or an error, never both.
struct GenerationResult {
    GenerationResponse response;
    std::string error;

    bool ok() const { return error.empty(); }
};

struct BackendConfig {
    enum class Kind { remote, mock };
    Kind kind = Kind::mock;
    std::string endpoint;     // base URL, e.g. "http://127.0.0.1:8080/v1"
    std::string model;
    std::string auth_env;     // environment variable holding the bearer token
    double timeout_seconds = 60.0;
    int max_retries = 3;
    int max_in_flight = 1;
    int retry_base_ms = 250;  // first backoff delay; doubles per attempt
    std::string script_path;  // mock only
    std::string echo_prefix;  // mock only
};

inline void validate_backend_config(const BackendConfig& config) {
    if (config.max_in_flight < 1) throw ValidationError("max_in_flight must be at least 1");
    if (config.max_retries < 0) throw ValidationError("max_retries must be non-negative");
    if (config.kind == BackendConfig::Kind::remote && config.endpoint.empty())
        throw ValidationError("remote backend needs an endpoint URL");
}

class Backend {
public:
    virtual ~Backend() = default;

    // May be called concurrently from the batch worker pool.
    virtual GenerationResult generate(const GenerationRequest& request) = 0;

    // Runs the requests through a bounded worker pool.  Slot i of the result
    // always corresponds to request i, whatever the completion order, so the
    // output is deterministic for any max_in_flight.  Per-item errors stay in
    // their slot and never abort the batch.
    std::vector<GenerationResult> generate_batch(const std::vector<GenerationRequest>& requests,
                                                 int max_in_flight) {
        if (requests.empty()) throw ValidationError("generate_batch: empty request list");
        if (max_in_flight < 1) throw ValidationError("max_in_flight must be at least 1");
        std::vector<GenerationResult> results(requests.size());
        size_t workers = std::min<size_t>(static_cast<size_t>(max_in_flight), requests.size());
        if (workers == 1) {
            for (size_t i = 0; i < requests.size(); ++i) results[i] = checked_generate(requests[i]);
            return results;
        }
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < requests.size(); i = next.fetch_add(1))
                    results[i] = checked_generate(requests[i]);
            });
        }
        for (auto& t : pool) t.join();
        return results;
    }

    size_t calls_made() const { return calls_.load(); }

protected:
    std::atomic<size_t> calls_{0};

private:
    GenerationResult checked_generate(const GenerationRequest& request) {
        try {
            validate_request(request);
            return generate(request);
        } catch (const std::exception& e) {
            GenerationResult r;
            r.error = e.what();
            return r;
        }
    }
};

// ---------------------------------------------------------------------------
// Scripted deterministic backend; makes the whole pipeline runnable offline.
//
// Resolution order per request: exact-prompt scripts (consumed as a queue,
// keyed by a hash of the full prompt), then substring rules, then the default
// echo.  Echo parses the final source slot out of the translation prompt and
// returns it terminated with the stop sequence, so unscripted requests behave
// like a perfect identity translator.

class MockBackend : public Backend {
public:
    struct Rule {
        std::string match;  // substring of the prompt
        std::string text;   // raw completion; no stop sequence inside means a
                            // length-capped generation
        std::string error;  // non-empty: the slot fails with this message
    };

    void script_exact(const std::string& prompt, std::string text) {
        std::lock_guard<std::mutex> lock(mutex_);
        exact_[sha256_key(prompt)].push_back(std::move(text));
    }

    void add_rule(Rule rule) {
        std::lock_guard<std::mutex> lock(mutex_);
        rules_.push_back(std::move(rule));
    }

    void set_echo_prefix(std::string prefix) { echo_prefix_ = std::move(prefix); }

    // {"echo_prefix": str?, "rules": [{"match": str, "text": str?, "error": str?}]}
    void load_script(const std::string& path);

    GenerationResult generate(const GenerationRequest& request) override {
        ++calls_;
        std::string raw;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (auto it = exact_.find(sha256_key(request.prompt));
                it != exact_.end() && !it->second.empty()) {
                raw = it->second.front();
                it->second.erase(it->second.begin());
                return finish(raw, request);
            }
            for (const Rule& rule : rules_) {
                if (request.prompt.find(rule.match) == std::string::npos) continue;
                if (!rule.error.empty()) {
                    GenerationResult r;
                    r.error = rule.error;
                    return r;
                }
                return finish(rule.text, request);
            }
        }
        return finish(echo_prefix_ + final_source_slot(request.prompt) + "`", request);
    }

    // Source text of the dangling open-backtick slot that
    // build_translation_prompt leaves at the end of the prompt.
    static std::string final_source_slot(std::string_view prompt) {
        // prompt tail: ...<src>: `SOURCE`\n<tgt>: `
        size_t open = prompt.rfind('`');
        if (open == std::string_view::npos) return std::string(prompt);
        size_t close = prompt.rfind('`', open - 1);
        if (close == std::string_view::npos || close == 0) return std::string(prompt);
        size_t start = prompt.rfind('`', close - 1);
        if (start == std::string_view::npos) return std::string(prompt);
        return std::string(prompt.substr(start + 1, close - start - 1));
    }

private:
    static std::string sha256_key(std::string_view prompt) { return sha256_hex(prompt); }

    static GenerationResult finish(const std::string& raw, const GenerationRequest& request) {
        GenerationResult result;
        size_t cut = std::string::npos;
        for (const std::string& stop : request.stop) {
            if (stop.empty()) continue;
            size_t pos = raw.find(stop);
            if (pos != std::string::npos && pos < cut) cut = pos;
        }
        if (cut != std::string::npos) {
            result.response.text = raw.substr(0, cut);
            result.response.terminated_by_stop = true;
            result.response.raw_finish_reason = "stop";
        } else {
            result.response.text = raw;
            result.response.terminated_by_stop = false;
            result.response.raw_finish_reason = "length";
        }
        return result;
    }

    std::mutex mutex_;
    std::unordered_map<std::string, std::vector<std::string>> exact_;
    std::vector<Rule> rules_;
    std::string echo_prefix_;
};

// ---------------------------------------------------------------------------
// OpenAI-compatible completion client.
//
// POST <endpoint>/completions with {model, prompt, max_tokens, stop,
// temperature}; reads choices[0].text and choices[0].finish_reason.  The
// bearer token comes from the environment variable named in the config and is
// never logged or echoed.

class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig config) : config_(std::move(config)) {
        validate_backend_config(config_);
        split_endpoint(config_.endpoint, base_url_, base_path_);
        if (!config_.auth_env.empty()) {
            if (const char* token = std::getenv(config_.auth_env.c_str())) token_ = token;
        }
    }

    GenerationResult generate(const GenerationRequest& request) override {
        nlohmann::ordered_json body;
        body["model"] = config_.model;
        body["prompt"] = request.prompt;
        body["max_tokens"] = request.max_new_tokens;
        if (!request.stop.empty()) body["stop"] = request.stop;
        body["temperature"] = request.temperature;
        const std::string payload = body.dump();

        std::string last_error = "request not attempted";
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) backoff(attempt);
            ++calls_;
            httplib::Client client(base_url_);
            client.set_connection_timeout(timeout_sec(), timeout_usec());
            client.set_read_timeout(timeout_sec(), timeout_usec());
            client.set_write_timeout(timeout_sec(), timeout_usec());
            httplib::Headers headers;
            if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

            auto res = client.Post(base_path_ + "/completions", headers, payload,
                                   "application/json");
            if (!res) {  // connection failure or timeout: retry
                last_error = "backend unreachable: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 401 || res->status == 403) {
                GenerationResult r;
                r.error = "authentication failed (HTTP " + std::to_string(res->status) + ")";
                return r;  // retrying cannot help
            }
            if (res->status == 429) {
                last_error = "rate limited (HTTP 429)";
                server_delay_ms_ = retry_after_ms(*res);
                continue;
            }
            if (res->status >= 500) {
                last_error = "backend error (HTTP " + std::to_string(res->status) + ")";
                continue;
            }
            if (res->status != 200) {
                GenerationResult r;
                r.error = "backend rejected request (HTTP " + std::to_string(res->status) + ")";
                return r;
            }
            return parse_completion(res->body, request);
        }
        GenerationResult r;
        r.error = last_error + " after " + std::to_string(config_.max_retries + 1) + " attempts";
        return r;
    }

private:
    static void split_endpoint(const std::string& endpoint, std::string& base_url,
                               std::string& base_path) {
        size_t scheme = endpoint.find("://");
        if (scheme == std::string::npos)
            throw ValidationError("endpoint must include a scheme: " + endpoint);
        size_t path = endpoint.find('/', scheme + 3);
        if (path == std::string::npos) {
            base_url = endpoint;
            base_path.clear();
        } else {
            base_url = endpoint.substr(0, path);
            base_path = endpoint.substr(path);
            while (!base_path.empty() && base_path.back() == '/') base_path.pop_back();
        }
    }

    GenerationResult parse_completion(const std::string& body, const GenerationRequest& request) {
        GenerationResult result;
        nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() ||
            j["choices"].empty()) {
            result.error = "malformed backend payload";
            return result;
        }
        const auto& choice = j["choices"][0];
        if (!choice.contains("text") || !choice["text"].is_string()) {
            result.error = "malformed backend payload: choices[0].text missing";
            return result;
        }
        result.response.text = choice["text"].get<std::string>();
        std::string finish;
        if (choice.contains("finish_reason") && choice["finish_reason"].is_string())
            finish = choice["finish_reason"].get<std::string>();
        result.response.raw_finish_reason = finish;
        result.response.terminated_by_stop = (finish == "stop");
        // some servers include the stop sequence in the text; the contract
        // excludes it
        if (result.response.terminated_by_stop) {
            for (const std::string& stop : request.stop) {
                if (!stop.empty() && result.response.text.size() >= stop.size() &&
                    result.response.text.compare(result.response.text.size() - stop.size(),
                                                 stop.size(), stop) == 0) {
                    result.response.text.resize(result.response.text.size() - stop.size());
                    break;
                }
            }
        }
        return result;
    }

    void backoff(int attempt) {
        long long ms = config_.retry_base_ms > 0
                           ? static_cast<long long>(config_.retry_base_ms) << (attempt - 1)
                           : 0;
        long long server = server_delay_ms_.exchange(0);
        if (server > ms) ms = server;
        if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }

    static long long retry_after_ms(const httplib::Response& res) {
        std::string v = res.get_header_value("Retry-After");
        if (v.empty()) return 0;
        try {
            return static_cast<long long>(std::stod(v) * 1000.0);
        } catch (...) {
            return 0;
        }
    }

    time_t timeout_sec() const { return static_cast<time_t>(config_.timeout_seconds); }
    long timeout_usec() const {
        double frac = config_.timeout_seconds - static_cast<double>(timeout_sec());
        return static_cast<long>(frac * 1e6);
    }

    BackendConfig config_;
    std::string base_url_;
    std::string base_path_;
    std::string token_;
    std::atomic<long long> server_delay_ms_{0};
};

inline void MockBackend::load_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open mock script " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ValidationError("malformed mock script " + path);
    if (j.contains("echo_prefix")) echo_prefix_ = j["echo_prefix"].get<std::string>();
    if (j.contains("rules")) {
        for (const auto& r : j["rules"]) {
            Rule rule;
            rule.match = r.at("match").get<std::string>();
            if (r.contains("text")) rule.text = r["text"].get<std::string>();
            if (r.contains("error")) rule.error = r["error"].get<std::string>();
            add_rule(std::move(rule));
        }
    }
}

inline std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
    validate_backend_config(config);
    if (config.kind == BackendConfig::Kind::mock) {
        auto mock = std::make_unique<MockBackend>();
        mock->set_echo_prefix(config.echo_prefix);
        if (!config.script_path.empty()) mock->load_script(config.script_path);
        return mock;
    }
    return std::make_unique<HttpBackend>(config);
}

}  // namespace stt
