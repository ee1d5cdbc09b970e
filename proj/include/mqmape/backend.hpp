#pragma once
// LLM provider abstraction: an OpenAI-compatible HTTP client, a deterministic
// replay provider for offline runs, the invalid-response retry policy, and
// per-role token accounting.

#include <array>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mqmape/prompting.hpp"

namespace mqmape {

struct CompletionRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 512;
    RoleTag role_tag = RoleTag::Evaluator;
};

struct CompletionResult {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

// Invalid responses are regenerated with a slightly higher temperature each
// attempt: base + step * (attempt - 1), capped at 1.0.
struct RetryPolicy {
    int max_attempts = 3;
    double temperature_step = 0.1;
    double base_temperature = 0.0;

    double temperature_for(int attempt) const {
        double t = base_temperature + temperature_step * (attempt - 1);
        return t > 1.0 ? 1.0 : t;
    }
};

class ProviderError : public std::runtime_error {
public:
    ProviderError(const std::string& what, bool retryable)
        : std::runtime_error(what), retryable_(retryable) {}
    bool retryable() const { return retryable_; }

private:
    bool retryable_;
};

class InvalidResponseError : public std::runtime_error {
public:
    InvalidResponseError(int attempts, std::string last_text)
        : std::runtime_error("invalid response after " + std::to_string(attempts) + " attempts"),
          attempts_(attempts),
          last_text_(std::move(last_text)) {}
    int attempts() const { return attempts_; }
    const std::string& last_text() const { return last_text_; }

private:
    int attempts_;
    std::string last_text_;
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual CompletionResult complete(const CompletionRequest& request) = 0;
};

struct RoleUsage {
    std::int64_t requests = 0;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

// Thread-safe accumulator of token usage per pipeline role.
class UsageLedger {
public:
    void record(RoleTag role, const CompletionResult& result);
    RoleUsage usage(RoleTag role) const;
    RoleUsage total() const;

private:
    mutable std::mutex mutex_;
    std::array<RoleUsage, 3> by_role_{};
};

// Hex SHA-256 over the role tag plus a length-prefixed serialization of the
// messages; stable across runs and platforms, used as the replay key.
std::string message_digest(RoleTag role_tag, std::span<const ChatMessage> messages);

std::string sha256_hex(std::string_view data);

struct ReplayEntry {
    RoleTag role_tag = RoleTag::Evaluator;
    std::string digest;
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

std::vector<ReplayEntry> load_replay_file(const std::string& path);
std::string replay_entry_line(const ReplayEntry& entry);  // one JSONL record

// Serves recorded responses keyed by (role_tag, digest). Entries with the
// same key form a FIFO queue consumed one per request, which is how retry
// sequences are replayed; an exhausted key is a replay miss.
class ReplayProvider : public Provider {
public:
    explicit ReplayProvider(const std::string& path);
    explicit ReplayProvider(std::vector<ReplayEntry> entries);

    CompletionResult complete(const CompletionRequest& request) override;

    std::size_t remaining() const;

    struct LoggedRequest {
        RoleTag role_tag;
        std::string digest;
        double temperature;
    };
    std::vector<LoggedRequest> request_log() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::deque<ReplayEntry>> queues_;
    std::vector<LoggedRequest> log_;
};

// Pass-through provider that appends every completed request to a replay
// file ("record mode").
class RecordingProvider : public Provider {
public:
    RecordingProvider(Provider& inner, const std::string& path);
    CompletionResult complete(const CompletionRequest& request) override;

private:
    Provider& inner_;
    std::ofstream out_;
    std::mutex mutex_;
};

struct HttpProviderConfig {
    std::string base_url;  // e.g. "http://localhost:8000"
    std::string model;
    std::string api_key;  // empty: no Authorization header
    std::string path = "/v1/chat/completions";
    int timeout_seconds = 300;
};

// OpenAI-compatible chat-completions client.
class HttpProvider : public Provider {
public:
    explicit HttpProvider(HttpProviderConfig config);
    CompletionResult complete(const CompletionRequest& request) override;

private:
    HttpProviderConfig config_;
};

// MQMAPE_API_KEY, falling back to OPENAI_API_KEY; empty when neither is set.
std::string api_key_from_env();

template <typename T>
struct Validated {
    T value{};
    std::string raw_text;
    int attempts = 0;     // attempt index that succeeded
    int completions = 0;  // completions actually obtained (and ledger-recorded)
    std::int64_t prompt_tokens = 0;  // summed over all attempts
    std::int64_t completion_tokens = 0;
};

// Runs complete + validator up to max_attempts times, bumping the temperature
// per RetryPolicy after each invalid response. Every obtained completion is
// recorded in the ledger, including discarded ones. Retryable provider errors
// consume attempts; non-retryable ones propagate. Throws InvalidResponseError
// when the budget is exhausted.
template <typename T>
Validated<T> complete_validated(Provider& provider, CompletionRequest request,
                                const std::function<std::optional<T>(std::string_view)>& validator,
                                const RetryPolicy& policy, UsageLedger& ledger) {
    Validated<T> out;
    std::string last_text;
    for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
        request.temperature = policy.temperature_for(attempt);
        CompletionResult result;
        try {
            result = provider.complete(request);
        } catch (const ProviderError& e) {
            if (!e.retryable() || attempt == policy.max_attempts) throw;
            continue;
        }
        ledger.record(request.role_tag, result);
        out.attempts = attempt;
        out.completions += 1;
        out.prompt_tokens += result.prompt_tokens;
        out.completion_tokens += result.completion_tokens;
        last_text = result.text;
        if (auto value = validator(result.text)) {
            out.value = std::move(*value);
            out.raw_text = std::move(last_text);
            return out;
        }
    }
    throw InvalidResponseError(policy.max_attempts, last_text);
}

struct UsageReportRow {
    RoleTag role = RoleTag::Evaluator;
    bool extra = false;  // editor/verifier: the modules added on top of the evaluator
    std::int64_t requests = 0;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    double avg_prompt_tokens = 0.0;  // per evaluated segment
    double avg_completion_tokens = 0.0;
};

// Per-role token averages over the evaluated segments. Throws
// std::invalid_argument when segment_count is not positive.
std::vector<UsageReportRow> usage_report(const UsageLedger& ledger, std::int64_t segment_count);

}  // namespace mqmape
