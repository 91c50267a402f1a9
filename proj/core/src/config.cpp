#include "ragforge/config.hpp"

#include <cstdlib>

#include "ragforge/errors.hpp"
#include "ragforge/hashing.hpp"

namespace ragforge::config {

namespace {

[[noreturn]] void missing(const std::string& field) {
    throw Error(ErrorCode::ConfigError, "missing or mistyped config field: " + field);
}

const Json& need(const Json& obj, const char* key, const std::string& prefix) {
    auto it = obj.find(key);
    if (it == obj.end()) missing(prefix + key);
    return *it;
}

std::map<std::string, int> quota_group(const Json& quota, const char* key,
                                       const std::map<std::string, int>& fallback) {
    if (!quota.contains(key)) return fallback;
    std::map<std::string, int> out;
    for (const auto& [lang, n] : quota.at(key).items()) {
        if (!n.is_number_integer() || n.get<long long>() < 0)
            missing("quota." + std::string(key) + "." + lang);
        out[lang] = n.get<int>();
    }
    return out;
}

} // namespace

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw Error(ErrorCode::ConfigError, "config file not found: " + path.string());
    PipelineConfig cfg;
    cfg.config_path = path;
    cfg.config_hash = hash_file(path);
    cfg.raw = load_json_file(path);
    const Json& raw = cfg.raw;
    if (!raw.is_object()) missing("(root object)");

    if (raw.contains("languages")) {
        if (!raw["languages"].is_array() || raw["languages"].empty()) missing("languages");
        std::vector<std::string> codes;
        for (const auto& l : raw["languages"]) codes.push_back(l.get<std::string>());
        cfg.languages = LanguageSet(codes);
    }

    for (const auto& [key, value] : need(raw, "paths", "").items()) {
        if (!value.is_string()) missing("paths." + key);
        cfg.paths[key] = value.get<std::string>();
    }

    for (const auto& [key, value] : need(raw, "seeds", "").items()) {
        if (!value.is_number_integer()) missing("seeds." + key);
        cfg.seeds[key] = value.get<std::uint64_t>();
    }

    // Quota: the published table by default, any group overridable, the
    // whole table scaled by `divisor`.
    corpus::QuotaConfig base = corpus::QuotaConfig::published();
    cfg.quota_divisor = 1;
    if (raw.contains("quota")) {
        const Json& q = raw["quota"];
        base.train_relevant = quota_group(q, "train_relevant", base.train_relevant);
        base.train_noisy = quota_group(q, "train_noisy", base.train_noisy);
        base.valid_relevant = quota_group(q, "valid_relevant", base.valid_relevant);
        base.valid_noisy = quota_group(q, "valid_noisy", base.valid_noisy);
        if (q.contains("test_count")) base.test_count = q.at("test_count").get<int>();
        if (q.contains("divisor")) {
            cfg.quota_divisor = q.at("divisor").get<int>();
            if (cfg.quota_divisor <= 0) missing("quota.divisor");
        }
        if (q.contains("rounding")) {
            auto name = q.at("rounding").get<std::string>();
            if (name == "floor") base.rounding = corpus::QuotaConfig::Rounding::floor;
            else if (name == "nearest") base.rounding = corpus::QuotaConfig::Rounding::nearest;
            else if (name == "largest_remainder")
                base.rounding = corpus::QuotaConfig::Rounding::largest_remainder;
            else missing("quota.rounding");
        }
    }
    cfg.quota = cfg.quota_divisor == 1 ? base : base.scaled_down(cfg.quota_divisor, cfg.languages);
    // Commands that build datasets fetch seeds.quota themselves; configs for
    // other stages may omit it.
    if (auto it = cfg.seeds.find("quota"); it != cfg.seeds.end()) cfg.quota.seed = it->second;

    if (raw.contains("csc_counts")) {
        const Json& c = raw["csc_counts"];
        cfg.csc_counts.clic = c.value("clic", 0);
        cfg.csc_counts.sket = c.value("sket", 0);
        cfg.csc_counts.clrd = c.value("clrd", 0);
    }

    if (raw.contains("retrieval")) {
        const Json& r = raw["retrieval"];
        cfg.bm25.k1 = r.value("k1", cfg.bm25.k1);
        cfg.bm25.b = r.value("b", cfg.bm25.b);
        cfg.mmr.lambda = r.value("lambda", cfg.mmr.lambda);
        cfg.retrieve_k = r.value("k", cfg.retrieve_k);
        cfg.block_size = r.value("block_size", cfg.block_size);
        if (r.contains("embedder")) {
            const Json& e = r["embedder"];
            cfg.embedder_url = e.value("url", std::string());
            cfg.embedder_id = e.value("id", std::string("embedder"));
            cfg.embedder_dimension = e.value("dimension", 0);
        }
    }

    if (raw.contains("gateway")) {
        const Json& g = raw["gateway"];
        cfg.transport_kind = g.value("transport", cfg.transport_kind);
        cfg.gateway_endpoint = g.value("endpoint", std::string());
        cfg.replay_transcript = g.value("replay_transcript", std::string());
        cfg.gateway_options.model_id = g.value("model_id", cfg.gateway_options.model_id);
        cfg.gateway_options.temperature = g.value("temperature", cfg.gateway_options.temperature);
        cfg.gateway_options.max_output = g.value("max_output", cfg.gateway_options.max_output);
        cfg.gateway_options.input_budget_tokens =
            g.value("input_budget_tokens", cfg.gateway_options.input_budget_tokens);
        cfg.gateway_options.rate_per_minute =
            g.value("rate_per_minute", cfg.gateway_options.rate_per_minute);
        cfg.gateway_options.retry.max_attempts =
            g.value("retry_attempts", cfg.gateway_options.retry.max_attempts);
        cfg.gateway_options.retry.base_delay_ms = g.value(
            "retry_base_delay_ms", cfg.gateway_options.retry.base_delay_ms);
    }
    cfg.gateway_options.languages = cfg.languages;
    if (cfg.has_path("prompts"))
        cfg.gateway_options.prompt_set = prompts::load_prompts(cfg.path_for("prompts"));

    cfg.scorer_url = raw.value("scorer_url", std::string());
    if (const char* env = std::getenv("RAGFORGE_SCORER_URL"); env != nullptr && *env != '\0')
        cfg.scorer_url = env;

    static const char* kKnown[] = {"languages", "paths",   "seeds",   "quota",
                                   "csc_counts", "retrieval", "gateway", "scorer_url"};
    for (const auto& [key, value] : raw.items()) {
        bool known = false;
        for (const char* k : kKnown)
            if (key == k) known = true;
        if (!known) throw Error(ErrorCode::ConfigError, "unknown config field: " + key);
    }
    return cfg;
}

bool PipelineConfig::has_path(const std::string& key) const { return paths.count(key) > 0; }

std::filesystem::path PipelineConfig::path_for(const std::string& key) const {
    auto it = paths.find(key);
    if (it == paths.end())
        throw Error(ErrorCode::ConfigError, "missing or mistyped config field: paths." + key);
    std::filesystem::path p(it->second);
    if (p.is_relative() && config_path.has_parent_path()) p = config_path.parent_path() / p;
    return p;
}

std::uint64_t PipelineConfig::seed_for(const std::string& key) const {
    auto it = seeds.find(key);
    if (it == seeds.end())
        throw Error(ErrorCode::ConfigError, "missing or mistyped config field: seeds." + key);
    return it->second;
}

} // namespace ragforge::config
