#include "pairforge/backend.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pairforge/util.hpp"

namespace pairforge::backend {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

const char* message_role_name(MessageRole r) {
    switch (r) {
        case MessageRole::system: return "system";
        case MessageRole::user: return "user";
        case MessageRole::assistant: return "assistant";
    }
    return "user";
}

const char* finish_reason_name(FinishReason f) {
    switch (f) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::error: return "error";
    }
    return "?";
}

std::int64_t backoff_delay_ms(const RetryPolicy& policy, int failed_attempt, double unit) {
    double nominal = policy.base_ms * std::pow(policy.factor, failed_attempt - 1);
    double jitter = 1.0 + policy.jitter_frac * (2.0 * unit - 1.0);
    double ms = nominal * jitter;
    if (ms < 0) ms = 0;
    return static_cast<std::int64_t>(ms);
}

// ---------------------------------------------------------------------------
// Mock transport
// ---------------------------------------------------------------------------

static FinishReason finish_from_name(const std::string& s) {
    if (s == "length") return FinishReason::length;
    if (s == "error") return FinishReason::error;
    return FinishReason::stop;
}

MockRules mock_rules_from_json(const std::string& json_text) {
    MockRules out;
    json root = json::parse(json_text);
    if (root.contains("default")) {
        const auto& d = root["default"];
        out.default_response = d.value("response", out.default_response);
        out.default_finish = finish_from_name(d.value("finish_reason", "stop"));
    }
    for (const auto& r : root.value("rules", json::array())) {
        MockRule rule;
        const auto& m = r.at("match");
        rule.match_kind = m.value("type", "substring");
        if (rule.match_kind != "substring" && rule.match_kind != "digest") {
            fail("malformed_mock_rules", "match type must be substring or digest");
        }
        rule.value = m.at("value").get<std::string>();
        rule.response = r.at("response").get<std::string>();
        rule.finish = finish_from_name(r.value("finish_reason", "stop"));
        rule.fail_first = r.value("fail_first", 0);
        out.rules.push_back(std::move(rule));
    }
    return out;
}

MockRules load_mock_rules(const std::string& path) {
    return mock_rules_from_json(read_file(path));
}

GenResult MockTransport::run_once(const GenRequest& req) {
    total_calls_.fetch_add(1);
    int now_in_flight = in_flight_.fetch_add(1) + 1;
    int peak = peak_in_flight_.load();
    while (now_in_flight > peak && !peak_in_flight_.compare_exchange_weak(peak, now_in_flight)) {
    }
    // Hold the in-flight count across a tiny window so overlapping callers
    // are actually observed overlapping.
    std::this_thread::sleep_for(std::chrono::milliseconds(1));

    const std::string digest = sha256_hex(req.prompt.text);
    {
        std::lock_guard<std::mutex> lock(log_mu_);
        prompt_digests_.push_back(digest);
    }

    GenResult res;
    res.finish_reason = rules_.default_finish;
    res.text = rules_.default_response;
    for (std::size_t i = 0; i < rules_.rules.size(); ++i) {
        const MockRule& rule = rules_.rules[i];
        const bool hit = rule.match_kind == "substring" ? contains(req.prompt.text, rule.value)
                                                        : digest == rule.value;
        if (!hit) continue;
        if (rule.fail_first > 0) {
            std::lock_guard<std::mutex> lock(log_mu_);
            if (fail_budget_spent_[i] < rule.fail_first) {
                ++fail_budget_spent_[i];
                in_flight_.fetch_sub(1);
                throw TransientError("scripted transient failure");
            }
        }
        res.text = rule.response;
        res.finish_reason = rule.finish;
        break;
    }
    in_flight_.fetch_sub(1);
    return res;
}

std::vector<std::string> MockTransport::prompt_digests() const {
    std::lock_guard<std::mutex> lock(log_mu_);
    return prompt_digests_;
}

void MockTransport::reset_counters() {
    std::lock_guard<std::mutex> lock(log_mu_);
    total_calls_.store(0);
    peak_in_flight_.store(0);
    prompt_digests_.clear();
}

// ---------------------------------------------------------------------------
// HTTP transport
// ---------------------------------------------------------------------------

namespace {

// Split http://host[:port]/prefix into client origin and path prefix.
struct ParsedUrl {
    std::string origin;
    std::string prefix;
};

ParsedUrl parse_base_url(const std::string& base_url) {
    std::size_t scheme = base_url.find("://");
    if (scheme == std::string::npos) {
        fail("bad_endpoint_url", "base_url must start with http:// or https://: " + base_url);
    }
    std::size_t path = base_url.find('/', scheme + 3);
    if (path == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path), prefix};
}

}  // namespace

GenResult HttpTransport::run_once(const GenRequest& req) {
    json body;
    std::string path;
    if (cfg_.api_schema == "chat") {
        if (req.seeded) {
            throw PermanentError("seeded_chat_request",
                                 "chat-schema endpoint cannot serve assistant-prefill "
                                 "requests; use a completions-schema endpoint");
        }
        if (req.messages.empty()) {
            throw PermanentError("empty_chat_request", "chat request carries no messages");
        }
        json msgs = json::array();
        for (const ChatMessage& m : req.messages) {
            msgs.push_back({{"role", message_role_name(m.role)}, {"content", m.content}});
        }
        body = {{"model", cfg_.model},
                {"messages", std::move(msgs)},
                {"max_tokens", req.max_new_tokens},
                {"temperature", req.temperature}};
        path = "/chat/completions";
    } else {
        body = {{"model", cfg_.model},
                {"prompt", req.prompt.text},
                {"max_tokens", req.max_new_tokens},
                {"temperature", req.temperature}};
        path = "/completions";
    }
    if (!req.stop_sequences.empty()) body["stop"] = req.stop_sequences;
    if (req.seed) body["seed"] = *req.seed;

    ParsedUrl url = parse_base_url(cfg_.base_url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);
    client.set_read_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);

    httplib::Headers headers;
    if (!cfg_.api_key_env.empty()) {
        const char* key = std::getenv(cfg_.api_key_env.c_str());
        if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    auto resp = client.Post(url.prefix + path, headers, body.dump(), "application/json");
    if (!resp) {
        throw TransientError("transport failure: " + httplib::to_string(resp.error()));
    }
    if (resp->status == 429 || resp->status >= 500) {
        throw TransientError("upstream status " + std::to_string(resp->status));
    }
    if (resp->status != 200) {
        throw PermanentError("upstream_status_" + std::to_string(resp->status),
                             "upstream returned status " + std::to_string(resp->status));
    }

    json parsed;
    try {
        parsed = json::parse(resp->body);
    } catch (const json::exception&) {
        throw PermanentError("malformed_upstream_response", "response body is not JSON");
    }
    if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
        parsed["choices"].empty()) {
        throw PermanentError("malformed_upstream_response", "no choices in response");
    }
    const json& choice = parsed["choices"][0];

    GenResult res;
    if (cfg_.api_schema == "chat") {
        if (!choice.contains("message") || !choice["message"].contains("content")) {
            throw PermanentError("malformed_upstream_response", "no message content");
        }
        res.text = choice["message"]["content"].get<std::string>();
    } else {
        if (!choice.contains("text")) {
            throw PermanentError("malformed_upstream_response", "no text in first choice");
        }
        res.text = choice["text"].get<std::string>();
    }
    res.finish_reason = finish_from_name(choice.value("finish_reason", "stop"));
    return res;
}

// ---------------------------------------------------------------------------
// Endpoint: policy around a transport
// ---------------------------------------------------------------------------

Endpoint::Endpoint(EndpointConfig cfg, std::unique_ptr<Transport> transport)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      jitter_state_(0x9e3779b97f4a7c15ULL ^ std::hash<std::string>{}(cfg_.name)) {
    mock_ = dynamic_cast<MockTransport*>(transport_.get());
}

void Endpoint::acquire_slot() {
    std::unique_lock<std::mutex> lock(slot_mu_);
    slot_cv_.wait(lock, [&] { return slots_in_use_ < cfg_.max_concurrency; });
    ++slots_in_use_;
}

void Endpoint::release_slot() {
    {
        std::lock_guard<std::mutex> lock(slot_mu_);
        --slots_in_use_;
    }
    slot_cv_.notify_one();
}

void Endpoint::rate_gate() {
    if (cfg_.rps <= 0) return;
    const auto interval =
        std::chrono::microseconds(static_cast<std::int64_t>(1e6 / cfg_.rps));
    Clock::time_point my_slot;
    {
        std::lock_guard<std::mutex> lock(rate_mu_);
        auto now = Clock::now();
        my_slot = next_send_ < now ? now : next_send_;
        next_send_ = my_slot + interval;
    }
    std::this_thread::sleep_until(my_slot);
}

GenResult Endpoint::generate(const GenRequest& req) {
    const auto started = Clock::now();
    auto elapsed_ms = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started)
            .count();
    };
    auto error_result = [&](std::string code, int attempt) {
        GenResult res;
        res.finish_reason = FinishReason::error;
        res.error = std::move(code);
        res.attempt = attempt;
        res.latency_ms = elapsed_ms();
        return res;
    };

    // Pre-flight; no slot, no network.
    if (!req.prompt.open_assistant) {
        return error_result("closed_prompt", 0);
    }
    if (req.prompt.text.size() > req.max_input_chars) {
        return error_result("prompt_too_long", 0);
    }
    if (req.max_new_tokens <= 0) {
        return error_result("bad_request", 0);
    }

    acquire_slot();
    struct SlotGuard {
        Endpoint* ep;
        ~SlotGuard() { ep->release_slot(); }
    } guard{this};

    const int max_attempts = cfg_.retry.max_retries + 1;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        rate_gate();
        try {
            GenResult res = transport_->run_once(req);
            res.attempt = attempt;
            // Truncate at the earliest stop sequence; the match itself is
            // excluded.
            std::size_t cut = std::string::npos;
            for (const std::string& stop : req.stop_sequences) {
                if (stop.empty()) continue;
                std::size_t hit = res.text.find(stop);
                if (hit != std::string::npos && (cut == std::string::npos || hit < cut)) {
                    cut = hit;
                }
            }
            if (cut != std::string::npos) {
                res.text.resize(cut);
                res.finish_reason = FinishReason::stop;
            }
            res.latency_ms = elapsed_ms();
            return res;
        } catch (const PermanentError& e) {
            return error_result(e.code, attempt);
        } catch (const TransientError&) {
            if (attempt == max_attempts) {
                return error_result("transport_exhausted", attempt);
            }
            total_retries_.fetch_add(1);
            SplitMix64 rng(jitter_state_.fetch_add(0x6a09e667f3bcc909ULL));
            std::int64_t delay = backoff_delay_ms(cfg_.retry, attempt, rng.unit());
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
    }
    return error_result("transport_exhausted", max_attempts);  // unreachable
}

EndpointPtr make_endpoint(const EndpointConfig& cfg) {
    std::unique_ptr<Transport> transport;
    if (cfg.kind == "mock") {
        if (cfg.rules_path.empty()) {
            fail("bad_endpoint_config", "mock endpoint \"" + cfg.name + "\" needs rules_path");
        }
        transport = std::make_unique<MockTransport>(load_mock_rules(cfg.rules_path));
    } else if (cfg.kind == "http") {
        if (cfg.base_url.empty()) {
            fail("bad_endpoint_config", "http endpoint \"" + cfg.name + "\" needs base_url");
        }
        transport = std::make_unique<HttpTransport>(cfg);
    } else {
        fail("bad_endpoint_config", "unknown endpoint kind: " + cfg.kind);
    }
    return std::make_shared<Endpoint>(cfg, std::move(transport));
}

// ---------------------------------------------------------------------------
// Request builders
// ---------------------------------------------------------------------------

std::string flatten_messages(const std::vector<ChatMessage>& messages) {
    std::string out;
    for (const ChatMessage& m : messages) {
        out += "<|";
        out += message_role_name(m.role);
        out += "|>\n";
        out += m.content;
        out += "\n";
    }
    return out;
}

GenRequest make_completion_request(const chat::ChatTemplate& tmpl,
                                   const std::vector<chat::ChatTurn>& turns,
                                   const std::optional<std::string>& assistant_seed,
                                   int max_new_tokens, std::size_t max_input_chars) {
    GenRequest req;
    req.prompt = chat::render(tmpl, turns, assistant_seed);
    req.seeded = assistant_seed.has_value() && !assistant_seed->empty();
    for (const chat::ChatTurn& t : turns) {
        req.messages.push_back({t.role == chat::Role::user ? MessageRole::user
                                                           : MessageRole::assistant,
                                t.content});
    }
    req.max_new_tokens = max_new_tokens;
    req.max_input_chars = max_input_chars;
    req.stop_sequences = {tmpl.assistant_close, tmpl.user_open};
    return req;
}

GenRequest make_chat_request(const std::vector<ChatMessage>& messages, int max_new_tokens,
                             std::size_t max_input_chars) {
    GenRequest req;
    req.messages = messages;
    req.prompt.text = flatten_messages(messages);
    req.prompt.open_assistant = true;
    req.seeded = false;
    req.max_new_tokens = max_new_tokens;
    req.max_input_chars = max_input_chars;
    return req;
}

}  // namespace pairforge::backend
