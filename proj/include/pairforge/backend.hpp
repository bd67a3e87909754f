#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pairforge/chat_template.hpp"
#include "pairforge/types.hpp"

namespace pairforge::backend {

enum class MessageRole { system, user, assistant };

struct ChatMessage {
    MessageRole role = MessageRole::user;
    std::string content;
};

const char* message_role_name(MessageRole r);

struct RetryPolicy {
    int max_retries = 3;      // total attempts = max_retries + 1
    int base_ms = 1000;
    double factor = 2.0;
    double jitter_frac = 0.2; // +/- around the nominal delay
};

// Backoff before the attempt after `failed_attempt` (1-based):
// base * factor^(failed_attempt-1), jittered. unit must be in [0, 1).
std::int64_t backoff_delay_ms(const RetryPolicy& policy, int failed_attempt, double unit);

struct EndpointConfig {
    std::string name;                       // endpoint id in reports/metadata
    std::string kind = "http";              // "http" | "mock"
    std::string base_url;                   // http://host[:port][/prefix]
    std::string model;
    std::string api_key_env;                // env var NAME; the key itself never lands in configs
    std::string api_schema = "completions"; // "completions" | "chat"
    double rps = 0.0;                       // requests per second; 0 = unlimited
    int max_concurrency = 4;
    int timeout_ms = 120000;
    RetryPolicy retry;
    std::string rules_path;                 // mock only
};

enum class FinishReason { stop, length, error };

const char* finish_reason_name(FinishReason f);

struct GenRequest {
    chat::RenderedPrompt prompt;            // canonical text; completion body and mock match key
    std::vector<ChatMessage> messages;      // chat-schema body
    bool seeded = false;                    // prompt ends in an assistant prefill
    int max_new_tokens = 1024;
    std::size_t max_input_chars = 4096;
    std::vector<std::string> stop_sequences;
    double temperature = 1.0;
    std::optional<std::uint64_t> seed;
};

struct GenResult {
    std::string text;                       // continuation only; never contains a stop sequence
    FinishReason finish_reason = FinishReason::stop;
    std::int64_t latency_ms = 0;
    int attempt = 1;                        // attempt that produced this result
    std::string error;                      // reason code when finish_reason == error
};

// Worth retrying (connection failures, 429, 5xx).
struct TransientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Not worth retrying; surfaces as finish_reason=error with this code.
struct PermanentError : std::runtime_error {
    PermanentError(std::string code, const std::string& message)
        : std::runtime_error(message), code(std::move(code)) {}
    std::string code;
};

// One raw exchange with the upstream, no policy applied.
class Transport {
public:
    virtual ~Transport() = default;
    virtual GenResult run_once(const GenRequest& req) = 0;
};

// Scripted transport: first matching rule wins, else the default response.
// Fully deterministic and I/O-free; counts calls and peak concurrency so
// tests can assert scheduling contracts.
struct MockRule {
    std::string match_kind = "substring";  // "substring" | "digest"
    std::string value;
    std::string response;
    FinishReason finish = FinishReason::stop;
    int fail_first = 0;  // fault injection: raise TransientError this many times
};

struct MockRules {
    std::vector<MockRule> rules;
    std::string default_response = "OK.";
    FinishReason default_finish = FinishReason::stop;
};

MockRules mock_rules_from_json(const std::string& json_text);
MockRules load_mock_rules(const std::string& path);

class MockTransport : public Transport {
public:
    explicit MockTransport(MockRules rules)
        : rules_(std::move(rules)), fail_budget_spent_(rules_.rules.size(), 0) {}

    GenResult run_once(const GenRequest& req) override;

    std::int64_t total_calls() const { return total_calls_.load(); }
    int peak_in_flight() const { return peak_in_flight_.load(); }
    std::vector<std::string> prompt_digests() const;
    void reset_counters();

private:
    MockRules rules_;
    std::atomic<std::int64_t> total_calls_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> peak_in_flight_{0};
    mutable std::mutex log_mu_;
    std::vector<std::string> prompt_digests_;
    std::vector<std::int64_t> fail_budget_spent_;  // per rule, guarded by log_mu_
};

// HTTP transport for the de-facto completions/chat-completions schema.
// POST {base_url}/completions with {model, prompt, max_tokens, temperature,
// stop}; first choice's text is the continuation. The chat variant posts
// {model, messages, ...} and refuses seeded requests: prefill is a raw-
// prompt mechanism and has no chat-schema equivalent.
class HttpTransport : public Transport {
public:
    explicit HttpTransport(EndpointConfig cfg) : cfg_(std::move(cfg)) {}
    GenResult run_once(const GenRequest& req) override;

private:
    EndpointConfig cfg_;
};

// An endpoint handle: transport + retry/backoff + rate limit + concurrency
// cap. Shareable across workers; each call is independent.
class Endpoint {
public:
    Endpoint(EndpointConfig cfg, std::unique_ptr<Transport> transport);

    // Never throws for upstream trouble: transport exhaustion and permanent
    // upstream errors come back as finish_reason=error so a batch run can
    // keep going. Pre-flight errors (prompt over budget, closed prompt) are
    // reported the same way without touching the network.
    GenResult generate(const GenRequest& req);

    const EndpointConfig& config() const { return cfg_; }

    // Non-null when the transport is a mock; used by tests and dry runs.
    MockTransport* mock() { return mock_; }

    std::int64_t total_retries() const { return total_retries_.load(); }

private:
    void acquire_slot();
    void release_slot();
    void rate_gate();

    EndpointConfig cfg_;
    std::unique_ptr<Transport> transport_;
    MockTransport* mock_ = nullptr;

    std::mutex slot_mu_;
    std::condition_variable slot_cv_;
    int slots_in_use_ = 0;

    std::mutex rate_mu_;
    std::chrono::steady_clock::time_point next_send_{};

    std::atomic<std::int64_t> total_retries_{0};
    std::atomic<std::uint64_t> jitter_state_;
};

using EndpointPtr = std::shared_ptr<Endpoint>;

// Builds the transport named by cfg.kind ("mock" reads cfg.rules_path).
EndpointPtr make_endpoint(const EndpointConfig& cfg);

// Request builders. Both fill the canonical prompt text used for budget
// checks and mock matching.
GenRequest make_completion_request(const chat::ChatTemplate& tmpl,
                                   const std::vector<chat::ChatTurn>& turns,
                                   const std::optional<std::string>& assistant_seed,
                                   int max_new_tokens, std::size_t max_input_chars);

GenRequest make_chat_request(const std::vector<ChatMessage>& messages, int max_new_tokens,
                             std::size_t max_input_chars);

// Canonical flattening of chat messages ("<|role|>\ncontent" blocks).
std::string flatten_messages(const std::vector<ChatMessage>& messages);

}  // namespace pairforge::backend
