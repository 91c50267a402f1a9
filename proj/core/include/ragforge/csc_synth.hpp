#pragma once

#include <map>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "ragforge/jsonl.hpp"
#include "ragforge/lang.hpp"
#include "ragforge/retrieval.hpp"
#include "ragforge/wiki_ingest.hpp"

namespace ragforge::csc {

enum class Objective { clic, sket, clrd };

const char* objective_name(Objective o);
Objective objective_from_name(const std::string& name);

struct TaggedParagraph {
    std::string lang;
    std::string text;
    std::string cluster_page_id;
    std::string page_id;
    int para_index = 0;
};

/// Expand a truncated summary from a mixed-language document.
struct ClicPayload {
    std::vector<TaggedParagraph> d_mix; // selection order preserved
    std::string y_hat;                  // strict word-prefix of y
    std::string y;                      // full lead paragraph
    std::string summary_lang;
};

/// Generate relevant knowledge for a sentence, then translate it.
struct SketPayload {
    std::string source;
    std::string knowledge_lang;
    std::string knowledge;
    std::string target;
    std::string target_lang;
};

/// Boolean cross-language relevance between two paragraphs.
struct ClrdPayload {
    TaggedParagraph doc_a, doc_b;
    bool label = false;
};

struct CscSample {
    std::string id;
    Objective objective = Objective::clic;
    std::variant<ClicPayload, SketPayload, ClrdPayload> payload;
};

/// Aligned sentences across languages; the pivot (en) is always present.
struct ParallelSentence {
    std::string corpus_id;
    std::map<std::string, std::string> by_lang;
};

/// Produces one knowledge paragraph about a sentence, in the given language.
class KnowledgeGenerator {
public:
    virtual ~KnowledgeGenerator() = default;
    virtual std::string gen_self_knowledge(const std::string& sentence,
                                           const std::string& lang) = 0;
};

struct MmrParams {
    double lambda = 0.7;
    int m_min = 2;
    int m_max = 6;
};

CscSample make_clic_sample(const ingest::ParallelCluster& cluster, std::mt19937_64& rng,
                           const MmrParams& params = {});

CscSample make_sket_sample(const ParallelSentence& ps, const std::string& knowledge_lang,
                           KnowledgeGenerator& gen, const LanguageSet& langs = LanguageSet(),
                           const std::string& target_lang = "zh");

CscSample make_clrd_sample(const ingest::ParallelCluster& a, const ingest::ParallelCluster& b,
                           const std::string& l1, const std::string& l2, std::mt19937_64& rng);

struct SynthCounts {
    int clic = 0;
    int sket = 0;
    int clrd = 0;
};

struct SynthResult {
    std::vector<CscSample> samples;
    Json manifest;
};

/// Fills each objective to its exact count. CLIC uses each cluster at most
/// once; CLRD alternates positive/negative to stay balanced; SKET skips
/// sentences whose generated knowledge comes back blank and counts them.
SynthResult synthesize_batch(const std::vector<ingest::ParallelCluster>& clusters,
                             const std::vector<ParallelSentence>& sentences,
                             KnowledgeGenerator* gen, const SynthCounts& counts,
                             std::uint64_t seed, const MmrParams& params = {},
                             const LanguageSet& langs = LanguageSet());

// Parallel-sentence corpus input. TSV: header line "en\tzh\t..." then one
// aligned row per line; JSONL: {"en": "...", "zh": "...", ...} per line.
std::vector<ParallelSentence> read_parallel_tsv(const std::filesystem::path& path);
std::vector<ParallelSentence> read_parallel_jsonl(const std::filesystem::path& path);
std::vector<ParallelSentence> read_parallel_auto(const std::filesystem::path& path);

Json csc_sample_to_json(const CscSample& s);
CscSample csc_sample_from_json(const Json& obj);

void write_csc_batch(const SynthResult& result, const std::filesystem::path& dir);

/// Chat-formatted training rows: {"messages": [{role, content}...]}.
/// SKET emits a two-turn exchange; CLIC and CLRD a single turn.
Json to_sft_messages(const CscSample& s);
void write_sft_jsonl(const std::vector<CscSample>& samples, const std::filesystem::path& path);

} // namespace ragforge::csc
