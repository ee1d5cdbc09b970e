#include "mqmape/backend.hpp"

#include <cstdlib>

#include <openssl/evp.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

namespace mqmape {

using nlohmann::json;

void UsageLedger::record(RoleTag role, const CompletionResult& result) {
    std::lock_guard lock(mutex_);
    auto& row = by_role_[static_cast<std::size_t>(role)];
    row.requests += 1;
    row.prompt_tokens += result.prompt_tokens;
    row.completion_tokens += result.completion_tokens;
}

RoleUsage UsageLedger::usage(RoleTag role) const {
    std::lock_guard lock(mutex_);
    return by_role_[static_cast<std::size_t>(role)];
}

RoleUsage UsageLedger::total() const {
    std::lock_guard lock(mutex_);
    RoleUsage total;
    for (const auto& row : by_role_) {
        total.requests += row.requests;
        total.prompt_tokens += row.prompt_tokens;
        total.completion_tokens += row.completion_tokens;
    }
    return total;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    EVP_Digest(data.data(), data.size(), digest, &digest_len, EVP_sha256(), nullptr);
    static const char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(digest_len * 2);
    for (unsigned int i = 0; i < digest_len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string message_digest(RoleTag role_tag, std::span<const ChatMessage> messages) {
    // Length-prefixed so that no message content can collide with framing.
    std::string buffer(role_tag_name(role_tag));
    buffer.push_back('\n');
    for (const auto& msg : messages) {
        buffer += role_name(msg.role);
        buffer.push_back('\x1f');
        buffer += std::to_string(msg.content.size());
        buffer.push_back('\x1f');
        buffer += msg.content;
        buffer.push_back('\x1e');
    }
    return sha256_hex(buffer);
}

namespace {

std::string replay_key(RoleTag role, std::string_view digest) {
    std::string key(role_tag_name(role));
    key.push_back('\t');
    key += digest;
    return key;
}

}  // namespace

std::vector<ReplayEntry> load_replay_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open replay file: " + path);
    std::vector<ReplayEntry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        auto role = parse_role_tag(j.value("role", ""));
        if (!role)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": unknown role tag \"" + j.value("role", "") + "\"");
        entries.push_back(ReplayEntry{*role, j.at("digest").get<std::string>(),
                                      j.at("text").get<std::string>(),
                                      j.value("prompt_tokens", std::int64_t{0}),
                                      j.value("completion_tokens", std::int64_t{0})});
    }
    return entries;
}

std::string replay_entry_line(const ReplayEntry& entry) {
    json j;
    j["role"] = std::string(role_tag_name(entry.role_tag));
    j["digest"] = entry.digest;
    j["text"] = entry.text;
    j["prompt_tokens"] = entry.prompt_tokens;
    j["completion_tokens"] = entry.completion_tokens;
    return j.dump();
}

ReplayProvider::ReplayProvider(const std::string& path)
    : ReplayProvider(load_replay_file(path)) {}

ReplayProvider::ReplayProvider(std::vector<ReplayEntry> entries) {
    for (auto& entry : entries) {
        auto key = replay_key(entry.role_tag, entry.digest);
        queues_[key].push_back(std::move(entry));
    }
}

CompletionResult ReplayProvider::complete(const CompletionRequest& request) {
    auto digest = message_digest(request.role_tag, request.messages);
    std::lock_guard lock(mutex_);
    log_.push_back(LoggedRequest{request.role_tag, digest, request.temperature});
    auto it = queues_.find(replay_key(request.role_tag, digest));
    if (it == queues_.end() || it->second.empty())
        throw ProviderError("no replay entry for " + std::string(role_tag_name(request.role_tag)) +
                                " request " + digest.substr(0, 12),
                            /*retryable=*/false);
    auto entry = std::move(it->second.front());
    it->second.pop_front();
    return CompletionResult{std::move(entry.text), entry.prompt_tokens, entry.completion_tokens};
}

std::size_t ReplayProvider::remaining() const {
    std::lock_guard lock(mutex_);
    std::size_t count = 0;
    for (const auto& [key, queue] : queues_) count += queue.size();
    return count;
}

std::vector<ReplayProvider::LoggedRequest> ReplayProvider::request_log() const {
    std::lock_guard lock(mutex_);
    return log_;
}

RecordingProvider::RecordingProvider(Provider& inner, const std::string& path)
    : inner_(inner), out_(path, std::ios::app) {
    if (!out_) throw std::runtime_error("cannot open replay file for recording: " + path);
}

CompletionResult RecordingProvider::complete(const CompletionRequest& request) {
    auto result = inner_.complete(request);
    ReplayEntry entry{request.role_tag, message_digest(request.role_tag, request.messages),
                      result.text, result.prompt_tokens, result.completion_tokens};
    std::lock_guard lock(mutex_);
    out_ << replay_entry_line(entry) << '\n';
    out_.flush();
    return result;
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
    while (!config_.base_url.empty() && config_.base_url.back() == '/')
        config_.base_url.pop_back();
    if (config_.base_url.empty())
        throw std::invalid_argument("HTTP provider requires a base URL");
}

CompletionResult HttpProvider::complete(const CompletionRequest& request) {
    json body;
    body["model"] = config_.model;
    auto& messages = body["messages"] = json::array();
    for (const auto& msg : request.messages)
        messages.push_back({{"role", std::string(role_name(msg.role))}, {"content", msg.content}});
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;

    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto res = client.Post(config_.path, headers, body.dump(), "application/json");
    if (!res)
        throw ProviderError("transport error talking to " + config_.base_url + ": " +
                                httplib::to_string(res.error()),
                            /*retryable=*/true);
    if (res->status < 200 || res->status >= 300) {
        bool retryable = res->status == 429 || res->status >= 500;
        auto detail = res->body.substr(0, 256);
        throw ProviderError("HTTP " + std::to_string(res->status) + " from " + config_.base_url +
                                (detail.empty() ? "" : ": " + detail),
                            retryable);
    }

    try {
        auto j = json::parse(res->body);
        CompletionResult result;
        result.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (j.contains("usage")) {
            const auto& usage = j["usage"];
            result.prompt_tokens = usage.value("prompt_tokens", std::int64_t{0});
            result.completion_tokens = usage.value("completion_tokens", std::int64_t{0});
        }
        return result;
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed chat-completions response: ") + e.what(),
                            /*retryable=*/false);
    }
}

std::string api_key_from_env() {
    if (const char* key = std::getenv("MQMAPE_API_KEY")) return key;
    if (const char* key = std::getenv("OPENAI_API_KEY")) return key;
    return {};
}

std::vector<UsageReportRow> usage_report(const UsageLedger& ledger, std::int64_t segment_count) {
    if (segment_count <= 0)
        throw std::invalid_argument("usage averages require a positive segment count");
    std::vector<UsageReportRow> rows;
    for (auto role : {RoleTag::Evaluator, RoleTag::Editor, RoleTag::Verifier}) {
        auto usage = ledger.usage(role);
        UsageReportRow row;
        row.role = role;
        row.extra = role != RoleTag::Evaluator;
        row.requests = usage.requests;
        row.prompt_tokens = usage.prompt_tokens;
        row.completion_tokens = usage.completion_tokens;
        row.avg_prompt_tokens =
            static_cast<double>(usage.prompt_tokens) / static_cast<double>(segment_count);
        row.avg_completion_tokens =
            static_cast<double>(usage.completion_tokens) / static_cast<double>(segment_count);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mqmape
