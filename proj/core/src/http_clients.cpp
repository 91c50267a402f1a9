// The HTTP-facing adapters live in one translation unit so the header-only
// client library is compiled exactly once.

#include <memory>
#include <string>

#include <httplib.h>

#include "ragforge/errors.hpp"
#include "ragforge/jsonl.hpp"
#include "ragforge/llm_gateway.hpp"
#include "ragforge/metrics_eval.hpp"
#include "ragforge/retrieval.hpp"

namespace ragforge {

namespace {

struct SplitUrl {
    std::string base; // scheme://host[:port]
    std::string path; // /path or /
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorCode::ConfigError, "endpoint URL needs a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

/// POST a JSON body, mapping connection failures and 5xx/429 to retryable
/// faults and auth failures to hard errors.
Json post_json(httplib::Client& client, const std::string& path, const Json& body,
               const httplib::Headers& headers) {
    auto result = client.Post(path, headers, body.dump(), "application/json");
    if (!result)
        throw Error(ErrorCode::TransportFailure,
                    "connection failed: " + httplib::to_string(result.error()));
    int status = result->status;
    if (status == 401 || status == 403)
        throw Error(ErrorCode::AuthError, "endpoint rejected credentials (" +
                                              std::to_string(status) + ")");
    if (status == 413)
        throw Error(ErrorCode::ContextOverflow, "endpoint rejected the payload as too large");
    if (status == 429 || status == 408 || status >= 500)
        throw Error(ErrorCode::TransportFailure,
                    "status " + std::to_string(status) + ": " + result->body);
    if (status >= 300) {
        if (result->body.find("context_length") != std::string::npos ||
            result->body.find("maximum context") != std::string::npos)
            throw Error(ErrorCode::ContextOverflow, result->body);
        throw Error(ErrorCode::IoError, "status " + std::to_string(status) + ": " + result->body);
    }
    Json parsed = Json::parse(result->body, nullptr, false);
    if (parsed.is_discarded())
        throw Error(ErrorCode::TransportFailure, "endpoint returned non-JSON body");
    return parsed;
}

httplib::Headers auth_headers(const std::string& api_key) {
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    return headers;
}

class HttpChatTransport : public gateway::ChatTransport {
public:
    HttpChatTransport(const std::string& url, std::string api_key)
        : url_(split_url(url)), api_key_(std::move(api_key)), client_(url_.base) {
        client_.set_connection_timeout(10);
        client_.set_read_timeout(120);
    }

    std::string send(const gateway::ChatRequest& request) override {
        Json body{{"model", request.model_id},
                  {"messages", Json::array({Json{{"role", "system"}, {"content", request.system}},
                                            Json{{"role", "user"}, {"content", request.user}}})},
                  {"temperature", request.temperature},
                  {"max_tokens", request.max_output}};
        Json reply = post_json(client_, url_.path, body, auth_headers(api_key_));
        // OpenAI-shaped first, then generic fallbacks.
        if (reply.contains("choices") && reply["choices"].is_array() &&
            !reply["choices"].empty()) {
            const auto& first = reply["choices"][0];
            if (first.contains("message") && first["message"].contains("content"))
                return first["message"]["content"].get<std::string>();
            if (first.contains("text")) return first["text"].get<std::string>();
        }
        if (reply.contains("content") && reply["content"].is_string())
            return reply["content"].get<std::string>();
        if (reply.contains("text") && reply["text"].is_string())
            return reply["text"].get<std::string>();
        throw Error(ErrorCode::TransportFailure, "reply carries no assistant text");
    }

    std::string id() const override { return "http"; }

private:
    SplitUrl url_;
    std::string api_key_;
    httplib::Client client_;
};

class HttpEmbedder : public retrieval::Embedder {
public:
    HttpEmbedder(const std::string& url, std::string embedder_id, std::size_t dimension)
        : url_(split_url(url)),
          embedder_id_(std::move(embedder_id)),
          dimension_(dimension),
          client_(url_.base) {
        client_.set_connection_timeout(10);
        client_.set_read_timeout(120);
        const char* key = std::getenv("RAGFORGE_API_KEY");
        if (key != nullptr) api_key_ = key;
    }

    std::string id() const override { return embedder_id_; }
    std::size_t dimension() const override { return dimension_; }

    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override {
        Json body{{"texts", texts}};
        Json reply;
        try {
            reply = post_json(client_, url_.path, body, auth_headers(api_key_));
        } catch (const Error& e) {
            throw Error(ErrorCode::EmbedderFailure, e.what());
        }
        if (!reply.contains("vectors") || !reply["vectors"].is_array())
            throw Error(ErrorCode::EmbedderFailure, "reply carries no vectors array");
        std::vector<std::vector<float>> out;
        for (const auto& row : reply["vectors"]) {
            std::vector<float> v;
            for (const auto& x : row) v.push_back(x.get<float>());
            if (v.size() != dimension_)
                throw Error(ErrorCode::DimensionMismatch,
                            "endpoint returned dimension " + std::to_string(v.size()) +
                                ", expected " + std::to_string(dimension_));
            out.push_back(std::move(v));
        }
        if (out.size() != texts.size())
            throw Error(ErrorCode::EmbedderFailure, "endpoint returned " +
                                                        std::to_string(out.size()) +
                                                        " vectors for " +
                                                        std::to_string(texts.size()) + " texts");
        return out;
    }

private:
    SplitUrl url_;
    std::string embedder_id_;
    std::size_t dimension_;
    httplib::Client client_;
    std::string api_key_;
};

class HttpScorer : public eval::ExternalScorer {
public:
    explicit HttpScorer(const std::string& url) : url_(split_url(url)), client_(url_.base) {
        client_.set_connection_timeout(10);
        client_.set_read_timeout(120);
    }

    double score(const std::string& src, const std::string& mt,
                 const std::optional<std::string>& ref) override {
        Json body{{"src", src}, {"mt", mt}};
        if (ref) body["ref"] = *ref;
        Json reply = post_json(client_, url_.path, body, {});
        if (!reply.contains("score") || !reply["score"].is_number())
            throw Error(ErrorCode::IoError, "scorer reply carries no numeric score");
        return reply["score"].get<double>();
    }

private:
    SplitUrl url_;
    httplib::Client client_;
};

} // namespace

namespace gateway {

std::unique_ptr<ChatTransport> make_http_chat_transport(const std::string& endpoint_url,
                                                        const std::string& api_key) {
    return std::make_unique<HttpChatTransport>(endpoint_url, api_key);
}

} // namespace gateway

namespace retrieval {

std::unique_ptr<Embedder> make_http_embedder(const std::string& endpoint_url,
                                             const std::string& embedder_id,
                                             std::size_t dimension) {
    return std::make_unique<HttpEmbedder>(endpoint_url, embedder_id, dimension);
}

} // namespace retrieval

namespace eval {

std::unique_ptr<ExternalScorer> make_http_scorer(const std::string& endpoint_url) {
    return std::make_unique<HttpScorer>(endpoint_url);
}

} // namespace eval

} // namespace ragforge
