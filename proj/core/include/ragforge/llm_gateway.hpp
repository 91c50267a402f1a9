#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ragforge/csc_synth.hpp"
#include "ragforge/jsonl.hpp"
#include "ragforge/lang.hpp"
#include "ragforge/prompts.hpp"
#include "ragforge/tokenizer.hpp"

namespace ragforge::gateway {

struct ChatRequest {
    std::string system;
    std::string user;
    double temperature = 0.1;
    int max_output = 1024;
    std::string model_id;

    Json to_json() const;
    std::uint64_t hash() const; // stable across processes, keys the transcript
};

struct TranslationResult {
    std::string judgment;
    int relevance_score = 0; // 1..5
    std::string translation;
};

enum class JudgeMode { grb, grf };
const char* judge_mode_name(JudgeMode m);

struct JudgeResult {
    int score = 0; // 0..100
    JudgeMode mode = JudgeMode::grb;
    std::string raw;
};

/// One network (or simulated) exchange. Retryable faults are signalled by
/// throwing Error(TransportFailure); AuthError and ContextOverflow abort
/// the retry loop immediately.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual std::string send(const ChatRequest& request) = 0;
    virtual std::string id() const = 0;
};

/// Injectable time source. Deterministic modes use LogicalClock so
/// transcript timestamps (and thus artifacts) never depend on wall time.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() = 0;
    virtual void sleep_ms(std::int64_t ms) = 0;
};

class SystemClock : public Clock {
public:
    std::int64_t now_ms() override;
    void sleep_ms(std::int64_t ms) override;
};

class LogicalClock : public Clock {
public:
    std::int64_t now_ms() override;
    void sleep_ms(std::int64_t ms) override;

private:
    std::mutex mu_;
    std::int64_t tick_ = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::int64_t base_delay_ms = 200;
    double multiplier = 2.0;
    std::int64_t max_delay_ms = 10000;
};

/// Token bucket: `rate_per_minute` refills, burst capacity `burst`.
/// rate_per_minute <= 0 disables limiting.
class TokenBucket {
public:
    TokenBucket(double rate_per_minute, double burst, Clock& clock);
    void acquire();

private:
    double rate_per_ms_;
    double burst_;
    double tokens_;
    std::int64_t last_ms_;
    Clock& clock_;
    std::mutex mu_;
};

struct TranscriptEntry {
    std::uint64_t request_hash = 0;
    Json request;
    std::optional<std::string> response;
    std::string error; // empty on success
    int attempts = 0;
    std::int64_t timestamp = 0;
};

/// Append-only JSONL log of every exchange; appends are serialized.
class TranscriptLog {
public:
    explicit TranscriptLog(const std::filesystem::path& path);
    void append(const TranscriptEntry& entry);
    const std::filesystem::path& path() const { return path_; }
    std::size_t size() const;

    static std::vector<TranscriptEntry> read_all(const std::filesystem::path& path);

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t count_ = 0;
    mutable std::mutex mu_;
};

// Deterministic transports.

/// Scripted transport: replies are consumed in order; entries may instead
/// inject a retryable failure.
class MockTransport : public ChatTransport {
public:
    struct Step {
        std::string reply;
        bool fail = false;
    };
    explicit MockTransport(std::vector<Step> steps);
    std::string send(const ChatRequest& request) override;
    std::string id() const override { return "mock"; }
    int calls() const;

private:
    std::vector<Step> steps_;
    std::size_t at_ = 0;
    mutable std::mutex mu_;
};

/// Shape-aware echo: translation prompts echo the input sentence back as the
/// translation (relevance 3), judge prompts score 85, knowledge prompts echo
/// the sentence into a one-line fact. Drives network-free end-to-end runs.
class EchoTransport : public ChatTransport {
public:
    std::string send(const ChatRequest& request) override;
    std::string id() const override { return "echo"; }
};

/// Replays a recorded transcript: each request hash pops the next recorded
/// exchange for that hash; a recorded failure re-throws; an unknown request
/// throws Error(ReplayMiss).
class ReplayTransport : public ChatTransport {
public:
    explicit ReplayTransport(const std::filesystem::path& transcript_path);
    std::string send(const ChatRequest& request) override;
    std::string id() const override { return "replay"; }

private:
    std::map<std::uint64_t, std::deque<TranscriptEntry>> by_hash_;
    std::mutex mu_;
};

std::unique_ptr<ChatTransport> make_http_chat_transport(const std::string& endpoint_url,
                                                        const std::string& api_key);

struct GatewayOptions {
    std::string model_id = "default";
    double temperature = 0.1;
    int max_output = 1024;
    int input_budget_tokens = 2048;
    RetryPolicy retry;
    double rate_per_minute = 0; // 0 = unlimited
    double rate_burst = 8;
    LanguageSet languages;
    prompts::PromptSet prompt_set = prompts::default_prompts();
};

/// All model interactions: retry loop with exponential backoff, shared rate
/// limit, transcript capture, prompt construction, and response parsing.
class ChatGateway : public csc::KnowledgeGenerator {
public:
    ChatGateway(std::shared_ptr<ChatTransport> transport, GatewayOptions options,
                std::shared_ptr<Clock> clock = nullptr,
                std::shared_ptr<TranscriptLog> transcript = nullptr);

    std::string chat(const ChatRequest& request);

    /// Builds the judgment + rating + translation prompt. The document is
    /// tail-truncated so the whole prompt fits the input budget; the source
    /// sentence is never truncated. One re-ask on a malformed reply.
    TranslationResult translate_with_doc(const std::string& source, const std::string& doc,
                                         const std::string& doc_lang);

    std::string gen_self_knowledge(const std::string& sentence, const std::string& lang) override;

    /// mode grb scores against the reference; grf scores source+hypothesis
    /// only. One re-ask when no integer can be extracted.
    JudgeResult judge(const std::string& source, const std::string& hypothesis,
                      const std::optional<std::string>& reference, JudgeMode mode);

    /// The exact prompt translate_with_doc would send, for --dry-run.
    ChatRequest build_translation_request(const std::string& source, const std::string& doc) const;

    const GatewayOptions& options() const { return options_; }

private:
    std::shared_ptr<ChatTransport> transport_;
    GatewayOptions options_;
    std::shared_ptr<Clock> clock_;
    std::shared_ptr<TranscriptLog> transcript_;
    std::unique_ptr<TokenBucket> limiter_;
};

/// Pulls the labeled sections out of a model reply: judgment text, the
/// rating after "Relevance", and everything after the last "Translation"
/// label. Total over arbitrary UTF-8.
TranslationResult parse_translation_response(const std::string& text);

/// First standalone integer in the reply (digit run that is not part of a
/// word or decimal fraction), or nullopt.
std::optional<int> extract_first_integer(const std::string& text);

} // namespace ragforge::gateway
