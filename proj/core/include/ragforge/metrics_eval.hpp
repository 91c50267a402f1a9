#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ragforge/corpus_builder.hpp"
#include "ragforge/llm_gateway.hpp"
#include "ragforge/retrieval.hpp"

namespace ragforge::eval {

struct BleuConfig {
    enum class Smoothing { none, add_k, exp };
    enum class Tokenization { intl, char_zh };

    int max_ngram = 4;
    Smoothing smoothing = Smoothing::none; // corpus-level default
    double add_k = 1.0;
    Tokenization tokenization = Tokenization::char_zh;
};

std::vector<std::string> bleu_tokenize(const std::string& text, BleuConfig::Tokenization mode);

/// Corpus BLEU: geometric mean of clipped n-gram precisions times the
/// brevity penalty exp(min(0, 1 - ref_len/hyp_len)). Returns 0..100.
double corpus_bleu(const std::vector<std::string>& hypotheses,
                   const std::vector<std::string>& references, const BleuConfig& config = {});

/// Single-pair convenience with exp smoothing (debugging aid).
double sentence_bleu(const std::string& hypothesis, const std::string& reference,
                     BleuConfig config = {.smoothing = BleuConfig::Smoothing::exp});

/// Anything that can answer the translation prompt protocol.
class Translator {
public:
    virtual ~Translator() = default;
    virtual gateway::TranslationResult translate_with_doc(const std::string& source,
                                                          const std::string& doc,
                                                          const std::string& doc_lang) = 0;
};

class GatewayTranslator : public Translator {
public:
    explicit GatewayTranslator(gateway::ChatGateway& gw) : gw_(gw) {}
    gateway::TranslationResult translate_with_doc(const std::string& source,
                                                  const std::string& doc,
                                                  const std::string& doc_lang) override {
        return gw_.translate_with_doc(source, doc, doc_lang);
    }

private:
    gateway::ChatGateway& gw_;
};

/// External scorer hook (COMET-style): {src, mt, ref?} -> score.
class ExternalScorer {
public:
    virtual ~ExternalScorer() = default;
    virtual double score(const std::string& src, const std::string& mt,
                         const std::optional<std::string>& ref) = 0;
};

std::unique_ptr<ExternalScorer> make_http_scorer(const std::string& endpoint_url);

struct SampleRow {
    std::string id;
    std::string doc_lang;
    std::string hypothesis;
    int relevance_score = 0;
    bool failed = false;
    bool flagged = false; // e.g. empty retrieval fallback
    std::string error;
    std::optional<int> grb, grf;
    std::optional<double> external;
    std::string noise_cluster; // robustness runs: provenance of the noise
};

struct EvalReport {
    std::string setting;
    double bleu = 0.0;
    std::optional<double> judge_grb_mean, judge_grf_mean;
    int judged_count = 0;
    std::optional<double> external_mean;
    int failure_count = 0;
    int flagged_count = 0;
    std::string testset_hash;
    std::vector<SampleRow> rows; // one per test sample, testset order
    Json manifest;
};

struct RunOptions {
    std::uint64_t seed = 1;
    bool judge = false;
    int judge_subset = 200;
    gateway::ChatGateway* judge_gateway = nullptr;
    ExternalScorer* scorer = nullptr;
    LanguageSet languages;
    Json manifest_extra = Json::object();
};

/// Content hash over the test rows; all reports built from the same testset
/// carry the same value, which aggregate() requires.
std::string testset_hash(const std::vector<corpus::TestSample>& testset);

/// The judged subset: min(size, n) distinct row indices, ascending, fixed by
/// (testset hash, seed) alone so different models stay comparable.
std::vector<std::size_t> judge_subset_indices(const std::string& testset_hash_hex,
                                              std::size_t testset_size, std::size_t size,
                                              std::uint64_t seed);

EvalReport run_empty(Translator& model, const std::vector<corpus::TestSample>& testset,
                     const RunOptions& options = {});

EvalReport run_golden(Translator& model, const std::vector<corpus::TestSample>& testset,
                      const std::string& doc_lang, const RunOptions& options = {});

/// Noise comes only from clusters absent from the testset (checked via
/// provenance); the per-row draw is fixed by options.seed.
EvalReport run_robustness(Translator& model, const std::vector<corpus::TestSample>& testset,
                          const std::vector<ingest::ParallelCluster>& noise_corpus,
                          const RunOptions& options = {});

struct RetrieverHandle {
    std::string id; // "bm25" or "dense"
    std::function<std::vector<retrieval::ScoredPassage>(const std::string& query, int k)> query;
    std::function<std::string(const std::string& passage_id)> text_of;
};

RetrieverHandle make_bm25_handle(const retrieval::Bm25Index& index,
                                 const std::vector<ingest::Passage>& passages);
RetrieverHandle make_dense_handle(const retrieval::DenseIndex& index,
                                  retrieval::Embedder& embedder,
                                  const std::vector<ingest::Passage>& passages);

/// Top-k passages (score-descending) joined with blank lines form the
/// document; zero hits fall back to the empty-document prompt and flag the
/// row.
EvalReport run_fullwiki(Translator& model, const std::vector<corpus::TestSample>& testset,
                        const RetrieverHandle& retriever, int k = 3,
                        const RunOptions& options = {});

struct ComparisonTable {
    Json json;
    std::string text; // aligned columns
};

ComparisonTable aggregate(const std::vector<EvalReport>& reports);

void write_report(const EvalReport& report, const std::filesystem::path& json_path,
                  const std::filesystem::path& csv_path);
EvalReport read_report(const std::filesystem::path& json_path);

} // namespace ragforge::eval
