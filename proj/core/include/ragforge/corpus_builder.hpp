#pragma once

#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ragforge/jsonl.hpp"
#include "ragforge/tokenizer.hpp"
#include "ragforge/wiki_ingest.hpp"

namespace ragforge::corpus {

enum class Split { train, valid, test };
enum class DocType { relevant, noisy };

const char* split_name(Split s);
const char* doc_type_name(DocType t);
Split split_from_name(const std::string& name);
DocType doc_type_from_name(const std::string& name);

/// Where a document's text came from: the article and the contiguous
/// paragraph run (absolute indices; the lead paragraph is index 0 and is
/// never part of a run).
struct DocProvenance {
    std::string cluster_page_id; // pivot page_id of the cluster the doc came from
    std::string lang;
    std::string page_id; // article within that cluster
    int para_start = 0;
    int para_len = 0;
};

struct RagSample {
    std::string id;
    std::string source; // pivot lead paragraph
    std::string doc;
    std::string doc_lang;
    DocType doc_type = DocType::relevant;
    std::optional<std::string> translation;
    std::optional<int> relevance_score; // 1..5
    Split split = Split::train;
    std::string cluster_page_id; // the sample's own cluster
    DocProvenance doc_prov;
};

/// Test rows carry golden documents in all three test languages.
struct TestSample {
    std::string id;
    std::string source;
    std::string doc_en, doc_zh, doc_de;
    std::string translation;
    std::string cluster_page_id;
    std::map<std::string, DocProvenance> doc_prov; // one entry per test language
};

inline const std::vector<std::string> kTestDocLangs = {"en", "zh", "de"};

struct QuotaConfig {
    enum class Rounding { floor, nearest, largest_remainder };

    // lang -> target count
    std::map<std::string, int> train_relevant, train_noisy, valid_relevant, valid_noisy;
    int test_count = 0;
    std::uint64_t seed = 1;
    Rounding rounding = Rounding::largest_remainder;

    /// The published per-language quota table.
    static QuotaConfig published();

    /// All cells divided by `divisor`. `floor` and `nearest` round each cell
    /// independently; `largest_remainder` apportions so each (split, type)
    /// group keeps its rounded group total, extra units going to the cells
    /// with the largest fractional remainders (ties by language order).
    QuotaConfig scaled_down(int divisor, const LanguageSet& langs) const;

    int train_total() const;
    int valid_total() const;
    int total() const;
};

struct Dataset {
    std::vector<RagSample> samples; // train + valid
    std::vector<TestSample> test;
};

/// One sample from one cluster. The source is the pivot lead paragraph; a
/// relevant document is a random contiguous paragraph run of the doc_lang
/// article excluding its lead; a noisy document is drawn from another
/// cluster in `corpus` via sample_noisy_doc.
RagSample build_sample(const ingest::ParallelCluster& cluster, const std::string& doc_lang,
                       DocType doc_type, std::mt19937_64& rng,
                       std::span<const ingest::ParallelCluster> corpus = {});

/// Uniform draw of a document in `lang` from any cluster except `exclude`.
std::pair<std::string, DocProvenance> sample_noisy_doc(
    std::span<const ingest::ParallelCluster> corpus, const std::string& exclude_cluster_page_id,
    const std::string& lang, std::mt19937_64& rng);

/// Fills every quota cell exactly, never reusing a cluster, deterministic
/// under the quota seed. Throws Error(QuotaUnsatisfiable) naming the first
/// deficient cell and its shortfall.
Dataset assign_quotas(const std::vector<ingest::ParallelCluster>& clusters,
                      const QuotaConfig& quota);

struct FieldStats {
    long long min = 0;
    long long max = 0;
    double mean = 0.0;
    long long p95 = 0; // nearest-rank on the sorted lengths
    std::size_t count = 0;
};

/// Token-length stats per field: "source", "target", "doc:<lang>".
using LengthStats = std::map<std::string, FieldStats>;

LengthStats compute_stats(const Dataset& dataset, const Tokenizer& tokenizer);

FieldStats summarize_lengths(std::vector<long long> lengths);

// Dataset persistence: train.jsonl / valid.jsonl / test.jsonl + manifest.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                   const Json& manifest_extra = Json::object());
Dataset read_dataset(const std::filesystem::path& dir);

struct ValidationCheck {
    std::string name;
    bool passed = true;
    bool fatal = true;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool ok = true; // all fatal checks passed
    Json to_json() const;
};

/// Re-derives what the dataset claims: unique ids, manifest cell counts,
/// noisy fractions, provenance consistency (noisy docs never from the
/// sample's own cluster, runs never starting at the lead), test docs
/// present, and cluster disjointness across splits. A missing translation is
/// flagged but not fatal. When `expected` is given, cell counts must equal
/// its quota exactly.
ValidationReport validate_dataset(const std::filesystem::path& dir,
                                  const QuotaConfig* expected = nullptr);

Json rag_sample_to_json(const RagSample& s);
RagSample rag_sample_from_json(const Json& obj);
Json test_sample_to_json(const TestSample& s);
TestSample test_sample_from_json(const Json& obj);

} // namespace ragforge::corpus
