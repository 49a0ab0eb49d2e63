#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mpgen/elo.hpp"
#include "mpgen/rng.hpp"
#include "mpgen/tasks.hpp"

namespace mpgen {

struct ChatMessage {
    std::string role;  // "system", "user", or "assistant"
    std::string text;
    std::string image_ref;  // opaque reference, empty when text-only
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 512;
};

// Throws InvalidConfig unless the request has ≥1 user message, max_tokens ≥ 1
// and only known roles.
void validate_request(const ChatRequest& req);

// Canonical single-string rendering of a request; the mock hashes this, the
// audit log records it.
std::string render_request_text(const ChatRequest& req);

// A battle ruling. `winner` refers to the caller's original (a, b) order,
// not to the presentation order of any single judging call.
struct Verdict {
    char winner = 'A';  // 'A' or 'B'
    std::string rationale;
    bool tie_broken = false;  // orderings disagreed; coin flip decided
};

struct DimScore {
    int score = 0;  // 1..10
    std::string reason;
};
using DimScores = std::map<std::string, DimScore>;

// Uniform client for a hosted chat model. One blocking call per request;
// implementations are safe to call from several threads.
class ChatGateway {
public:
    virtual ~ChatGateway() = default;
    virtual std::string complete_chat(const ChatRequest& req) = 0;
};

// Offline stand-in. Replies are pure functions of the rendered request text
// and the configured seed, so every pipeline run is reproducible without a
// network. The reply shape is chosen by markers the prompt builders embed:
//   - a request asking for a "winner" JSON object gets a verdict reply,
//   - a request asking for a "scores" JSON object gets a complete score set,
//   - anything else gets the text after the last "---" payload delimiter
//     (or the last user message) echoed back with a short reference tag.
struct MockGatewayConfig {
    std::uint64_t seed = 42;

    enum class JudgeMode { hash, always_a, always_b, biased };
    JudgeMode judge_mode = JudgeMode::hash;
    // biased mode: the response containing `preferred_marker` wins with
    // probability `bias_probability`, independent of presentation order.
    // The draw is derived from the request hash, so it is reproducible.
    double bias_probability = 0.5;
    std::string preferred_marker;

    // When set, a scores request without a re-ask marker omits the first
    // dimension; exercises the caller's single re-ask path.
    bool sabotage_first_scores = false;
};

class MockGateway : public ChatGateway {
public:
    explicit MockGateway(MockGatewayConfig config = {}) : config_(config) {}

    std::string complete_chat(const ChatRequest& req) override;

private:
    MockGatewayConfig config_;
};

// Gateway that always fails with GatewayUnavailable; for exercising retry
// and skip paths.
class UnavailableGateway : public ChatGateway {
public:
    std::string complete_chat(const ChatRequest& req) override;
};

struct HttpGatewayConfig {
    std::string base_url;  // e.g. "http://127.0.0.1:8089"
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key_env = "MPGEN_API_KEY";  // name of the env var holding the key
    int timeout_seconds = 30;
    int retry_limit = 3;  // total attempts ≤ retry_limit + 1
    int backoff_initial_ms = 100;  // doubles per retry
    int max_in_flight = 4;
    std::string audit_log_path;  // empty disables the audit log
};

// HTTP client for any endpoint speaking the standard hosted-chat-completion
// shape (role-tagged message list in, single text reply out). Retries
// transport failures and 5xx with exponential backoff; at most
// `max_in_flight` requests are on the wire at once. Every request/response
// pair is appended to the audit log as one line-delimited record each,
// matched by correlation id.
class HttpGateway : public ChatGateway {
public:
    explicit HttpGateway(HttpGatewayConfig config);
    ~HttpGateway() override;

    std::string complete_chat(const ChatRequest& req) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Rules on a pair of responses with position bias mitigated: the judge sees
// both presentation orders, and only an agreeing outcome stands on its own.
// Disagreement is resolved by a recorded coin flip from `rng`. Ties are
// never returned — a ruling always names a winner.
Verdict judge_battle(ChatGateway& gateway, const std::string& task_prompt,
                     const std::string& resp_a, const std::string& resp_b,
                     Rng& rng);

// Requests an integer score in 1..10 plus a reason for every dimension code.
// An incomplete or out-of-range reply triggers exactly one corrective
// re-ask; a second bad reply raises IncompleteScores. Dimension codes must
// be valid for the task.
DimScores score_dimensions(ChatGateway& gateway, TaskKind task,
                           const std::string& response,
                           const std::vector<std::string>& dims);

// Adapts judge_battle to the arena's callback shape (x ↔ A, y ↔ B).
BattleJudge make_battle_judge(ChatGateway& gateway);

}  // namespace mpgen
