#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "ragforge/corpus_builder.hpp"
#include "ragforge/csc_synth.hpp"
#include "ragforge/jsonl.hpp"
#include "ragforge/lang.hpp"
#include "ragforge/llm_gateway.hpp"
#include "ragforge/retrieval.hpp"

namespace ragforge::config {

/// Everything a pipeline run needs, from one JSON file. Secrets never live
/// here: the API key comes from RAGFORGE_API_KEY and the external scorer URL
/// may be overridden by RAGFORGE_SCORER_URL.
struct PipelineConfig {
    LanguageSet languages;
    std::map<std::string, std::string> paths;

    int quota_divisor = 1;
    corpus::QuotaConfig quota; // already scaled by quota_divisor

    csc::SynthCounts csc_counts;
    csc::MmrParams mmr;

    retrieval::Bm25Params bm25;
    int retrieve_k = 3;
    int block_size = 100;
    std::string embedder_url, embedder_id;
    std::size_t embedder_dimension = 0;

    std::string transport_kind = "echo"; // echo | mock | http | replay
    std::string gateway_endpoint;
    std::string replay_transcript;
    gateway::GatewayOptions gateway_options;

    std::string scorer_url;

    std::map<std::string, std::uint64_t> seeds;

    std::filesystem::path config_path;
    std::string config_hash; // content hash of the file as loaded
    Json raw;

    static PipelineConfig load(const std::filesystem::path& path);

    /// Path entry or Error(ConfigError) naming "paths.<key>".
    std::filesystem::path path_for(const std::string& key) const;
    bool has_path(const std::string& key) const;

    /// Seed entry or Error(ConfigError) naming "seeds.<key>"; no implicit
    /// entropy anywhere.
    std::uint64_t seed_for(const std::string& key) const;
};

} // namespace ragforge::config
