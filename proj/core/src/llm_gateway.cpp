#include "ragforge/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <thread>

#include "ragforge/errors.hpp"
#include "ragforge/hashing.hpp"
#include "ragforge/text.hpp"

namespace ragforge::gateway {

Json ChatRequest::to_json() const {
    return Json{{"max_output", max_output},
                {"model_id", model_id},
                {"system", system},
                {"temperature", temperature},
                {"user", user}};
}

std::uint64_t ChatRequest::hash() const { return fnv1a64(to_json().dump()); }

const char* judge_mode_name(JudgeMode m) { return m == JudgeMode::grb ? "grb" : "grf"; }

std::int64_t SystemClock::now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

void SystemClock::sleep_ms(std::int64_t ms) {
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

std::int64_t LogicalClock::now_ms() {
    std::lock_guard<std::mutex> lock(mu_);
    return ++tick_;
}

void LogicalClock::sleep_ms(std::int64_t ms) {
    std::lock_guard<std::mutex> lock(mu_);
    tick_ += ms;
}

TokenBucket::TokenBucket(double rate_per_minute, double burst, Clock& clock)
    : rate_per_ms_(rate_per_minute / 60000.0),
      burst_(std::max(burst, 1.0)),
      tokens_(std::max(burst, 1.0)),
      last_ms_(clock.now_ms()),
      clock_(clock) {}

void TokenBucket::acquire() {
    std::lock_guard<std::mutex> lock(mu_);
    for (;;) {
        auto now = clock_.now_ms();
        tokens_ = std::min(burst_, tokens_ + static_cast<double>(now - last_ms_) * rate_per_ms_);
        last_ms_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        auto wait = static_cast<std::int64_t>(std::ceil((1.0 - tokens_) / rate_per_ms_));
        clock_.sleep_ms(std::max<std::int64_t>(wait, 1));
    }
}

namespace {

Json entry_to_json(const TranscriptEntry& e) {
    Json obj{{"request_hash", to_hex64(e.request_hash)},
             {"request", e.request},
             {"attempts", e.attempts},
             {"timestamp", e.timestamp}};
    obj["response"] = e.response ? Json(*e.response) : Json(nullptr);
    if (!e.error.empty()) obj["error"] = e.error;
    return obj;
}

TranscriptEntry entry_from_json(const Json& obj) {
    TranscriptEntry e;
    e.request_hash = std::stoull(obj.at("request_hash").get<std::string>(), nullptr, 16);
    e.request = obj.value("request", Json::object());
    if (obj.contains("response") && obj["response"].is_string())
        e.response = obj["response"].get<std::string>();
    e.error = obj.value("error", std::string());
    e.attempts = obj.value("attempts", 0);
    e.timestamp = obj.value("timestamp", 0LL);
    return e;
}

} // namespace

TranscriptLog::TranscriptLog(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(ErrorCode::IoError, "cannot open transcript log " + path.string());
}

void TranscriptLog::append(const TranscriptEntry& entry) {
    std::lock_guard<std::mutex> lock(mu_);
    out_ << entry_to_json(entry).dump() << '\n';
    out_.flush();
    ++count_;
}

std::size_t TranscriptLog::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return count_;
}

std::vector<TranscriptEntry> TranscriptLog::read_all(const std::filesystem::path& path) {
    std::vector<TranscriptEntry> out;
    for_each_jsonl(path,
                   [&](std::size_t, const Json& obj) { out.push_back(entry_from_json(obj)); });
    return out;
}

MockTransport::MockTransport(std::vector<Step> steps) : steps_(std::move(steps)) {}

std::string MockTransport::send(const ChatRequest&) {
    std::lock_guard<std::mutex> lock(mu_);
    if (at_ >= steps_.size())
        throw Error(ErrorCode::TransportFailure, "mock script exhausted");
    const Step& step = steps_[at_++];
    if (step.fail) throw Error(ErrorCode::TransportFailure, "injected failure");
    return step.reply;
}

int MockTransport::calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return static_cast<int>(at_);
}

std::string EchoTransport::send(const ChatRequest& request) {
    const std::string& u = request.user;
    auto start = u.find("<input sentence>");
    if (start != std::string::npos) {
        start += std::string("<input sentence>").size();
        auto end = u.find("</input sentence>", start);
        std::string sent = end == std::string::npos ? u.substr(start) : u.substr(start, end - start);
        return "Judgment: the input sentence was echoed without using the document.\n"
               "Relevance: 3\n"
               "Translation: " +
               sent;
    }
    if (u.rfind("Score the following", 0) == 0) return "85";
    auto sent_at = u.find("Sentence: ");
    if (sent_at != std::string::npos)
        return "Echo fact: " + u.substr(sent_at + std::string("Sentence: ").size());
    return "ok";
}

ReplayTransport::ReplayTransport(const std::filesystem::path& transcript_path) {
    for (auto& e : TranscriptLog::read_all(transcript_path))
        by_hash_[e.request_hash].push_back(std::move(e));
}

std::string ReplayTransport::send(const ChatRequest& request) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = by_hash_.find(request.hash());
    if (it == by_hash_.end() || it->second.empty())
        throw Error(ErrorCode::ReplayMiss,
                    "no recorded exchange for request hash " + to_hex64(request.hash()));
    TranscriptEntry e = std::move(it->second.front());
    it->second.pop_front();
    if (!e.response) {
        // Recorded failures replay as an immediately-fatal fault so the
        // retry loop doesn't multiply them.
        throw Error(ErrorCode::TransportExhausted,
                    e.error.empty() ? "recorded failure" : e.error);
    }
    return *e.response;
}

ChatGateway::ChatGateway(std::shared_ptr<ChatTransport> transport, GatewayOptions options,
                         std::shared_ptr<Clock> clock, std::shared_ptr<TranscriptLog> transcript)
    : transport_(std::move(transport)),
      options_(std::move(options)),
      clock_(clock ? std::move(clock) : std::make_shared<SystemClock>()),
      transcript_(std::move(transcript)) {
    if (options_.rate_per_minute > 0)
        limiter_ = std::make_unique<TokenBucket>(options_.rate_per_minute, options_.rate_burst,
                                                 *clock_);
}

std::string ChatGateway::chat(const ChatRequest& request) {
    if (request.user.empty()) throw Error(ErrorCode::ConfigError, "chat request has empty user");
    std::int64_t delay = options_.retry.base_delay_ms;
    int attempt = 0;
    for (;;) {
        ++attempt;
        if (limiter_) limiter_->acquire();
        try {
            std::string text = transport_->send(request);
            if (transcript_)
                transcript_->append({request.hash(), request.to_json(), text, std::string(),
                                     attempt, clock_->now_ms()});
            return text;
        } catch (const Error& e) {
            bool retryable = e.code() == ErrorCode::TransportFailure;
            if (retryable && attempt < options_.retry.max_attempts) {
                clock_->sleep_ms(delay);
                delay = std::min<std::int64_t>(
                    static_cast<std::int64_t>(static_cast<double>(delay) *
                                              options_.retry.multiplier),
                    options_.retry.max_delay_ms);
                continue;
            }
            if (transcript_)
                transcript_->append({request.hash(), request.to_json(), std::nullopt, e.what(),
                                     attempt, clock_->now_ms()});
            if (retryable)
                throw Error(ErrorCode::TransportExhausted,
                            std::string(e.what()) + " (after " + std::to_string(attempt) +
                                " attempts)");
            throw;
        }
    }
}

namespace {

/// Case-insensitive ASCII find.
std::size_t ci_find(const std::string& text, const std::string& needle, std::size_t from = 0) {
    if (needle.empty() || text.size() < needle.size()) return std::string::npos;
    auto lower = [](char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); };
    for (std::size_t i = from; i + needle.size() <= text.size(); ++i) {
        bool hit = true;
        for (std::size_t j = 0; j < needle.size(); ++j)
            if (lower(text[i + j]) != lower(needle[j])) {
                hit = false;
                break;
            }
        if (hit) return i;
    }
    return std::string::npos;
}

/// Position just past a label's colon, or npos when the word at `word_at`
/// is not followed by one (allowing spaces, '*', and "score").
std::size_t past_label_colon(const std::string& text, std::size_t word_at,
                             std::size_t word_len) {
    std::size_t i = word_at + word_len;
    while (i < text.size() && (text[i] == ' ' || text[i] == '*')) ++i;
    if (ci_find(text, "score", i) == i) {
        i += 5;
        while (i < text.size() && (text[i] == ' ' || text[i] == '*')) ++i;
    }
    if (i < text.size() && text[i] == ':') return i + 1;
    return std::string::npos;
}

} // namespace

TranslationResult parse_translation_response(const std::string& text) {
    TranslationResult out;

    // Rating: the first digit on the line of the first "relevance" label.
    std::size_t rel_at = std::string::npos;
    std::size_t digits_at = std::string::npos;
    {
        std::size_t at = 0;
        while ((at = ci_find(text, "relevance", at)) != std::string::npos) {
            std::size_t line_end = text.find('\n', at);
            if (line_end == std::string::npos) line_end = text.size();
            for (std::size_t i = at + 9; i < line_end; ++i)
                if (std::isdigit(static_cast<unsigned char>(text[i]))) {
                    digits_at = i;
                    break;
                }
            if (digits_at != std::string::npos) {
                rel_at = at;
                break;
            }
            ++at;
        }
    }
    if (rel_at == std::string::npos)
        throw Error(ErrorCode::MalformedResponse, "no relevance rating found");
    long long rating = 0;
    std::size_t d = digits_at;
    while (d < text.size() && std::isdigit(static_cast<unsigned char>(text[d])) && rating < 1000)
        rating = rating * 10 + (text[d++] - '0');
    if (rating < 1 || rating > 5)
        throw Error(ErrorCode::OutOfRange,
                    "relevance rating " + std::to_string(rating) + " outside 1..5");
    out.relevance_score = static_cast<int>(rating);

    // Translation: everything after the last labeled "translation:".
    std::size_t tr_label = std::string::npos, tr_text = std::string::npos;
    {
        std::size_t at = 0;
        while ((at = ci_find(text, "translation", at)) != std::string::npos) {
            auto past = past_label_colon(text, at, 11);
            if (past != std::string::npos) {
                tr_label = at;
                tr_text = past;
            }
            ++at;
        }
    }
    if (tr_label == std::string::npos)
        throw Error(ErrorCode::MalformedResponse, "no translation section found");
    out.translation = trim(text.substr(tr_text));
    if (out.translation.empty())
        throw Error(ErrorCode::MalformedResponse, "translation section is empty");

    // Judgment: optional prose between its label and the rating line.
    std::size_t j_at = ci_find(text, "judgment", 0);
    if (j_at == std::string::npos) j_at = ci_find(text, "judgement", 0);
    if (j_at != std::string::npos) {
        char fifth = static_cast<char>(std::tolower(static_cast<unsigned char>(text[j_at + 4])));
        auto past = past_label_colon(text, j_at, fifth == 'm' ? 8 : 9);
        if (past != std::string::npos) {
            std::size_t end = std::min(rel_at, tr_label);
            // Back off over the next label's leading decoration ("**").
            while (end > past && (std::isspace(static_cast<unsigned char>(text[end - 1])) ||
                                  text[end - 1] == '*'))
                --end;
            if (past < end) out.judgment = trim(text.substr(past, end - past));
        }
    }
    return out;
}

std::optional<int> extract_first_integer(const std::string& text) {
    std::size_t i = 0;
    while (i < text.size()) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        // Part of a word ("v2") or the fraction of a decimal ("3.14")?
        bool attached = false;
        if (i > 0) {
            unsigned char prev = static_cast<unsigned char>(text[i - 1]);
            if (std::isalnum(prev) || prev == '_') attached = true;
            if (prev == '.' && i >= 2 &&
                std::isdigit(static_cast<unsigned char>(text[i - 2])))
                attached = true;
        }
        std::size_t end = i;
        long long value = 0;
        while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) {
            if (value < 1000000000LL) value = value * 10 + (text[end] - '0');
            ++end;
        }
        bool wordy = end < text.size() &&
                     (std::isalpha(static_cast<unsigned char>(text[end])) || text[end] == '_');
        // "87.5" reads as 87: the integer part of a decimal still counts.
        if (!attached && !wordy)
            return static_cast<int>(std::min<long long>(value, 1000000000LL));
        // Skip the rest of this token.
        while (end < text.size() && (std::isalnum(static_cast<unsigned char>(text[end])) ||
                                     text[end] == '_' || text[end] == '.'))
            ++end;
        i = end;
    }
    return std::nullopt;
}

ChatRequest ChatGateway::build_translation_request(const std::string& source,
                                                   const std::string& doc) const {
    const auto& tok = default_tokenizer();
    const auto& tmpl = options_.prompt_set.translate_user;
    ChatRequest req;
    req.system = options_.prompt_set.translate_system;
    req.temperature = options_.temperature;
    req.max_output = options_.max_output;
    req.model_id = options_.model_id;

    std::string doc_slot = doc.empty() ? prompts::kEmptyDocMarker : doc;
    auto render = [&](const std::string& d) {
        return prompts::fill(tmpl, {{"[doc]", d}, {"[sent]", source}});
    };
    long long budget = options_.input_budget_tokens;
    long long sys_tokens = static_cast<long long>(tok.count_tokens(req.system));
    req.user = render(doc_slot);
    long long total = sys_tokens + static_cast<long long>(tok.count_tokens(req.user));
    if (total <= budget) return req;

    long long frame = sys_tokens + static_cast<long long>(tok.count_tokens(render("")));
    long long doc_budget = budget - frame;
    // The document is cut from the tail until the whole prompt fits; the
    // source sentence is never touched.
    while (doc_budget > 0) {
        std::string cut = word_prefix(doc_slot, static_cast<std::size_t>(doc_budget));
        req.user = render(cut);
        total = sys_tokens + static_cast<long long>(tok.count_tokens(req.user));
        if (total <= budget) return req;
        --doc_budget;
    }
    throw Error(ErrorCode::ContextOverflow,
                "prompt exceeds the input budget even with the document removed");
}

TranslationResult ChatGateway::translate_with_doc(const std::string& source,
                                                  const std::string& doc, const std::string&) {
    ChatRequest req = build_translation_request(source, doc);
    std::string reply = chat(req);
    try {
        return parse_translation_response(reply);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedResponse) throw;
    }
    ChatRequest re_ask = req;
    re_ask.user += "\n\nYour previous reply did not follow the required format. "
                   "Respond in exactly this format:\n"
                   "Judgment: <one or two sentences>\n"
                   "Relevance: <integer 1-5>\n"
                   "Translation: <the Chinese translation>";
    return parse_translation_response(chat(re_ask));
}

std::string ChatGateway::gen_self_knowledge(const std::string& sentence, const std::string& lang) {
    if (!options_.languages.contains(lang))
        throw Error(ErrorCode::UnknownLanguage, "knowledge language not configured: " + lang);
    ChatRequest req;
    req.system = options_.prompt_set.translate_system;
    req.user = prompts::fill(options_.prompt_set.sket_knowledge,
                             {{"[sent]", sentence}, {"[lang]", lang}});
    req.temperature = options_.temperature;
    req.max_output = options_.max_output;
    req.model_id = options_.model_id;
    std::string knowledge = trim(chat(req));
    if (knowledge.empty()) throw Error(ErrorCode::EmptyKnowledge, "generator returned blank text");
    return knowledge;
}

JudgeResult ChatGateway::judge(const std::string& source, const std::string& hypothesis,
                               const std::optional<std::string>& reference, JudgeMode mode) {
    if (mode == JudgeMode::grb && !reference)
        throw Error(ErrorCode::ConfigError, "grb judging requires a reference");
    std::map<std::string, std::string> slots{{"[src]", source}, {"[hyp]", hypothesis}};
    if (reference) slots["[ref]"] = *reference;
    ChatRequest req;
    req.system = "You are an expert translation quality evaluator.";
    req.user = prompts::fill(
        mode == JudgeMode::grb ? options_.prompt_set.grb : options_.prompt_set.grf, slots);
    req.temperature = options_.temperature;
    req.max_output = 64;
    req.model_id = options_.model_id;

    std::string reply = chat(req);
    auto score = extract_first_integer(reply);
    if (!score) {
        ChatRequest re_ask = req;
        re_ask.user += "\n\nReply with a single integer between 0 and 100.";
        reply = chat(re_ask);
        score = extract_first_integer(reply);
        if (!score)
            throw Error(ErrorCode::MalformedResponse, "judge reply contains no integer score");
    }
    if (*score < 0 || *score > 100)
        throw Error(ErrorCode::OutOfRange,
                    "judge score " + std::to_string(*score) + " outside 0..100");
    JudgeResult out;
    out.score = *score;
    out.mode = mode;
    out.raw = reply;
    return out;
}

} // namespace ragforge::gateway
