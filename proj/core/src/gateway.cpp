#include "mpgen/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <semaphore>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "mpgen/error.hpp"

namespace mpgen {

namespace {

constexpr const char* kResponseA = "[response A]";
constexpr const char* kResponseB = "[response B]";
constexpr const char* kVerdictMarker = "{\"winner\"";
constexpr const char* kScoresMarker = "{\"scores\"";
constexpr const char* kPayloadDelimiter = "\n---\n";
constexpr const char* kReaskPhrase = "Reply again";

std::string hex16(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Extracts the JSON object embedded in a model reply; tolerates prose
// around it.
nlohmann::json embedded_object(const std::string& reply) {
    const auto open = reply.find('{');
    const auto close = reply.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        return nlohmann::json(nlohmann::json::value_t::discarded);
    }
    return nlohmann::json::parse(reply.substr(open, close - open + 1), nullptr,
                                 false);
}

ChatRequest make_verdict_request(const std::string& task_prompt,
                                 const std::string& first,
                                 const std::string& second) {
    ChatRequest req;
    req.temperature = 0.0;
    req.max_tokens = 256;
    req.messages.push_back(
        {"system",
         "You are a strict referee for mathematical problem generation. Decide "
         "which response fulfils the task better, considering accuracy, fluency "
         "and values.",
         ""});
    std::ostringstream user;
    user << task_prompt << "\n\n"
         << kResponseA << "\n"
         << first << "\n\n"
         << kResponseB << "\n"
         << second << "\n\n"
         << "Reply with one JSON object {\"winner\": \"A\" or \"B\", "
            "\"rationale\": \"...\"}. Do not declare a tie.";
    req.messages.push_back({"user", user.str(), ""});
    return req;
}

// Returns 'A' or 'B'; anything else in the reply is malformed.
char parse_verdict(const std::string& reply, std::string* rationale) {
    const nlohmann::json j = embedded_object(reply);
    if (j.is_discarded() || !j.is_object() || !j.contains("winner") ||
        !j["winner"].is_string()) {
        fail(ErrorCode::malformed_response, "verdict reply not parseable: " + reply);
    }
    const std::string w = j["winner"].get<std::string>();
    if (w != "A" && w != "B") {
        fail(ErrorCode::malformed_response, "verdict winner must be A or B, got " + w);
    }
    if (rationale != nullptr && j.contains("rationale") && j["rationale"].is_string()) {
        *rationale = j["rationale"].get<std::string>();
    }
    return w[0];
}

ChatRequest make_scores_request(TaskKind task, const std::string& response,
                                const std::vector<std::string>& dims) {
    ChatRequest req;
    req.temperature = 0.0;
    req.max_tokens = 1024;
    req.messages.push_back(
        {"system",
         "You grade responses for mathematical problem generation tasks, one "
         "integer score from 1 to 10 per dimension, with a reason.",
         ""});
    std::ostringstream user;
    user << "task: " << task_kind_name(task) << "\n";
    user << "dimensions: ";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i > 0) user << ", ";
        user << dims[i];
    }
    user << "\n\nresponse to grade:\n" << response << "\n\n"
         << "Reply with one JSON object {\"scores\": {\"<code>\": {\"score\": "
            "1-10, \"reason\": \"...\"}, ...}} covering every listed dimension.";
    req.messages.push_back({"user", user.str(), ""});
    return req;
}

// Parses a scores reply against the requested dimensions; nullopt when any
// dimension is missing or out of range.
std::optional<DimScores> parse_scores(const std::string& reply,
                                      const std::vector<std::string>& dims) {
    const nlohmann::json j = embedded_object(reply);
    if (j.is_discarded() || !j.is_object() || !j.contains("scores") ||
        !j["scores"].is_object()) {
        return std::nullopt;
    }
    DimScores out;
    for (const auto& dim : dims) {
        if (!j["scores"].contains(dim)) return std::nullopt;
        const auto& entry = j["scores"][dim];
        if (!entry.is_object() || !entry.contains("score") ||
            !entry["score"].is_number_integer()) {
            return std::nullopt;
        }
        const int score = entry["score"].get<int>();
        if (score < 1 || score > 10) return std::nullopt;
        DimScore s;
        s.score = score;
        if (entry.contains("reason") && entry["reason"].is_string()) {
            s.reason = entry["reason"].get<std::string>();
        }
        out[dim] = s;
    }
    return out;
}

}  // namespace

void validate_request(const ChatRequest& req) {
    if (req.max_tokens < 1) {
        fail(ErrorCode::invalid_config, "max_tokens must be ≥ 1");
    }
    bool has_user = false;
    for (const auto& m : req.messages) {
        if (m.role != "system" && m.role != "user" && m.role != "assistant") {
            fail(ErrorCode::invalid_config, "unknown message role " + m.role);
        }
        if (m.role == "user") has_user = true;
    }
    if (!has_user) {
        fail(ErrorCode::invalid_config, "request needs at least one user message");
    }
}

std::string render_request_text(const ChatRequest& req) {
    std::ostringstream out;
    out << "temperature=" << req.temperature << " max_tokens=" << req.max_tokens
        << "\n";
    for (const auto& m : req.messages) {
        out << m.role;
        if (!m.image_ref.empty()) out << " image=" << m.image_ref;
        out << ": " << m.text << "\n";
    }
    return out.str();
}

std::string MockGateway::complete_chat(const ChatRequest& req) {
    validate_request(req);
    const std::string text = render_request_text(req);
    const std::uint64_t h = stable_hash64(text, config_.seed);

    const auto verdict_pos = text.rfind(kVerdictMarker);
    const auto scores_pos = text.rfind(kScoresMarker);

    if (verdict_pos != std::string::npos &&
        (scores_pos == std::string::npos || verdict_pos > scores_pos)) {
        char winner = (h >> 17) & 1 ? 'A' : 'B';
        switch (config_.judge_mode) {
            case MockGatewayConfig::JudgeMode::hash:
                break;
            case MockGatewayConfig::JudgeMode::always_a:
                winner = 'A';
                break;
            case MockGatewayConfig::JudgeMode::always_b:
                winner = 'B';
                break;
            case MockGatewayConfig::JudgeMode::biased: {
                const auto a_pos = text.find(kResponseA);
                const auto b_pos = text.find(kResponseB);
                char preferred = 0;
                if (a_pos != std::string::npos && b_pos != std::string::npos &&
                    b_pos > a_pos && !config_.preferred_marker.empty()) {
                    const bool in_a =
                        text.substr(a_pos, b_pos - a_pos)
                            .find(config_.preferred_marker) != std::string::npos;
                    const bool in_b = text.find(config_.preferred_marker, b_pos) !=
                                      std::string::npos;
                    if (in_a != in_b) preferred = in_a ? 'A' : 'B';
                }
                if (preferred != 0) {
                    const double u = double(h >> 11) * 0x1.0p-53;
                    winner = u < config_.bias_probability
                                 ? preferred
                                 : (preferred == 'A' ? 'B' : 'A');
                }
                break;
            }
        }
        return std::string("{\"winner\": \"") + winner +
               "\", \"rationale\": \"ruling ref " + hex16(h) + "\"}";
    }

    if (scores_pos != std::string::npos) {
        // Dimensions come from the request's own "dimensions:" line.
        std::vector<std::string> dims;
        const auto dims_pos = text.find("dimensions: ");
        if (dims_pos != std::string::npos) {
            const auto eol = text.find('\n', dims_pos);
            std::istringstream list(
                text.substr(dims_pos + 12, eol - (dims_pos + 12)));
            std::string code;
            while (std::getline(list, code, ',')) {
                while (!code.empty() && code.front() == ' ') code.erase(0, 1);
                while (!code.empty() && code.back() == ' ') code.pop_back();
                if (!code.empty()) dims.push_back(code);
            }
        }
        const bool reask = text.find(kReaskPhrase) != std::string::npos;
        const std::size_t skip =
            config_.sabotage_first_scores && !reask && !dims.empty() ? 1 : 0;
        nlohmann::json scores = nlohmann::json::object();
        for (std::size_t i = skip; i < dims.size(); ++i) {
            const std::uint64_t dh = stable_hash64(dims[i], h);
            scores[dims[i]] = {{"score", int(1 + dh % 10)},
                               {"reason", "score ref " + hex16(dh)}};
        }
        nlohmann::json reply;
        reply["scores"] = scores;
        return reply.dump();
    }

    // Prose request: echo the payload after the last delimiter (or the last
    // user message) plus a reference tag, so distinct requests get distinct
    // replies.
    std::string payload;
    const auto delim = text.rfind(kPayloadDelimiter);
    if (delim != std::string::npos) {
        payload = text.substr(delim + 5);
        if (!payload.empty() && payload.back() == '\n') payload.pop_back();
    } else {
        for (const auto& m : req.messages) {
            if (m.role == "user") payload = m.text;
        }
    }
    return payload + "\n[ref " + hex16(h) + "]";
}

std::string UnavailableGateway::complete_chat(const ChatRequest& req) {
    validate_request(req);
    fail(ErrorCode::gateway_unavailable, "gateway configured unavailable");
}

Verdict judge_battle(ChatGateway& gateway, const std::string& task_prompt,
                     const std::string& resp_a, const std::string& resp_b,
                     Rng& rng) {
    if (resp_a.empty() || resp_b.empty()) {
        fail(ErrorCode::empty_response, "both battle responses must be non-empty");
    }

    std::string rationale_fwd;
    const char fwd =
        parse_verdict(gateway.complete_chat(
                          make_verdict_request(task_prompt, resp_a, resp_b)),
                      &rationale_fwd);
    const char rev =
        parse_verdict(gateway.complete_chat(
                          make_verdict_request(task_prompt, resp_b, resp_a)),
                      nullptr);

    // Map both rulings back to the original order: the reversed call's "A"
    // showed resp_b.
    const char fwd_winner = fwd;
    const char rev_winner = rev == 'A' ? 'B' : 'A';

    Verdict verdict;
    if (fwd_winner == rev_winner) {
        verdict.winner = fwd_winner;
        verdict.rationale = rationale_fwd;
    } else {
        verdict.winner = (rng.next_u64() & 1) ? 'A' : 'B';
        verdict.rationale = "orderings disagreed; resolved by recorded coin flip";
        verdict.tie_broken = true;
    }
    return verdict;
}

DimScores score_dimensions(ChatGateway& gateway, TaskKind task,
                           const std::string& response,
                           const std::vector<std::string>& dims) {
    if (dims.empty()) {
        fail(ErrorCode::invalid_config, "dimension list must be non-empty");
    }
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (!is_valid_dimension(task, dims[i])) {
            fail(ErrorCode::invalid_config,
                 "unknown dimension code " + dims[i] + " for task " +
                     task_kind_name(task));
        }
        for (std::size_t j = i + 1; j < dims.size(); ++j) {
            if (dims[i] == dims[j]) {
                fail(ErrorCode::invalid_config, "duplicate dimension " + dims[i]);
            }
        }
    }

    ChatRequest req = make_scores_request(task, response, dims);
    auto scores = parse_scores(gateway.complete_chat(req), dims);
    if (!scores) {
        // One corrective re-ask, then give up.
        req.messages.push_back(
            {"user",
             "The previous reply was incomplete or out of range. Reply again "
             "with one JSON object covering every listed dimension, scores "
             "between 1 and 10.",
             ""});
        scores = parse_scores(gateway.complete_chat(req), dims);
    }
    if (!scores) {
        fail(ErrorCode::incomplete_scores,
             "scorer failed to cover all dimensions after one re-ask");
    }
    return *scores;
}

BattleJudge make_battle_judge(ChatGateway& gateway) {
    return [&gateway](const std::string& prompt, const std::string& resp_x,
                      const std::string& resp_y, Rng& rng) {
        const Verdict v = judge_battle(gateway, prompt, resp_x, resp_y, rng);
        return v.winner == 'A' ? BattleWinner::x : BattleWinner::y;
    };
}

// ---------------------------------------------------------------------------
// HTTP client

struct HttpGateway::Impl {
    HttpGatewayConfig config;
    std::counting_semaphore<4096> in_flight;
    std::atomic<std::uint64_t> next_id{1};
    std::mutex audit_mutex;
    std::ofstream audit;

    explicit Impl(HttpGatewayConfig cfg)
        : config(std::move(cfg)),
          in_flight(std::max(1, config.max_in_flight)) {
        if (!config.audit_log_path.empty()) {
            audit.open(config.audit_log_path, std::ios::app | std::ios::binary);
            if (!audit) {
                fail(ErrorCode::io_error,
                     "cannot open audit log " + config.audit_log_path);
            }
        }
    }

    void log(std::uint64_t id, const char* event, int attempt,
             const std::string& text) {
        if (!audit.is_open()) return;
        nlohmann::json j;
        j["id"] = id;
        j["event"] = event;
        j["attempt"] = attempt;
        j["text"] = text;
        std::lock_guard<std::mutex> lock(audit_mutex);
        audit << j.dump() << '\n';
        audit.flush();
    }
};

HttpGateway::HttpGateway(HttpGatewayConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {
    if (impl_->config.base_url.empty()) {
        fail(ErrorCode::invalid_config, "http gateway needs a base_url");
    }
}

HttpGateway::~HttpGateway() = default;

std::string HttpGateway::complete_chat(const ChatRequest& req) {
    validate_request(req);
    const auto& cfg = impl_->config;
    const std::uint64_t id = impl_->next_id.fetch_add(1);

    nlohmann::json body;
    body["model"] = cfg.model;
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : req.messages) {
        std::string content = m.text;
        if (!m.image_ref.empty()) content += "\n[image: " + m.image_ref + "]";
        body["messages"].push_back({{"role", m.role}, {"content", content}});
    }
    const std::string payload = body.dump();

    impl_->in_flight.acquire();
    struct Release {
        Impl* impl;
        ~Release() { impl->in_flight.release(); }
    } release{impl_.get()};

    impl_->log(id, "request", 0, render_request_text(req));

    const char* key = nullptr;
    if (!cfg.api_key_env.empty()) key = std::getenv(cfg.api_key_env.c_str());

    std::string last_error;
    for (int attempt = 0; attempt <= cfg.retry_limit; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(
                cfg.backoff_initial_ms << (attempt - 1)));
        }
        httplib::Client client(cfg.base_url);
        client.set_connection_timeout(cfg.timeout_seconds, 0);
        client.set_read_timeout(cfg.timeout_seconds, 0);
        httplib::Headers headers;
        if (key != nullptr) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
        auto res = client.Post(cfg.path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport failure " + httplib::to_string(res.error());
            impl_->log(id, "error", attempt, last_error);
            continue;
        }
        if (res->status >= 500) {
            last_error = "server status " + std::to_string(res->status);
            impl_->log(id, "error", attempt, last_error);
            continue;
        }
        if (res->status != 200) {
            impl_->log(id, "error", attempt,
                       "client status " + std::to_string(res->status));
            fail(ErrorCode::malformed_response,
                 "endpoint returned status " + std::to_string(res->status));
        }
        const nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() ||
            j["choices"].empty() || !j["choices"][0].contains("message") ||
            !j["choices"][0]["message"].contains("content") ||
            !j["choices"][0]["message"]["content"].is_string()) {
            impl_->log(id, "error", attempt, "unparseable body");
            fail(ErrorCode::malformed_response, "endpoint body not parseable");
        }
        const std::string content =
            j["choices"][0]["message"]["content"].get<std::string>();
        if (content.empty()) {
            impl_->log(id, "error", attempt, "empty content");
            fail(ErrorCode::malformed_response, "endpoint returned empty content");
        }
        impl_->log(id, "response", attempt, content);
        return content;
    }
    fail(ErrorCode::gateway_unavailable,
         "gave up after " + std::to_string(cfg.retry_limit + 1) + " attempts: " +
             last_error);
}

}  // namespace mpgen
