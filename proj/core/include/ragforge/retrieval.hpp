#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ragforge/wiki_ingest.hpp"

namespace ragforge::retrieval {

struct ScoredPassage {
    std::string id; // "{lang}/{page_id}#{ordinal}"
    double score = 0.0;
    int rank = 0; // 1-based
};

/// Query/passage analyzer: ASCII lowercased, tokens split on whitespace and
/// ASCII punctuation, every CJK codepoint emitted as its own term.
std::vector<std::string> analyze(std::string_view text);
inline constexpr const char* kAnalyzerId = "lc-punct-cjk1";

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

class Bm25Index {
public:
    /// Indexes the passages (sorted by passage id). Throws EmptyCorpus on an
    /// empty input and DuplicatePassageId when two passages share an id.
    static Bm25Index build(const std::vector<ingest::Passage>& passages,
                           Bm25Params params = {});

    /// Okapi BM25 with Lucene-style IDF ln(1 + (N-df+0.5)/(df+0.5)). Top-k by
    /// (score desc, passage id asc); unknown terms contribute nothing.
    std::vector<ScoredPassage> query(std::string_view query_text, int k) const;

    void save(const std::filesystem::path& path) const;
    static Bm25Index load(const std::filesystem::path& path);

    std::size_t size() const { return ids_.size(); }
    double avg_doc_length() const { return avg_len_; }
    const Bm25Params& params() const { return params_; }
    const std::vector<std::string>& passage_ids() const { return ids_; }
    // (slot, term frequency) postings for one analyzed term; empty if absent.
    std::span<const std::pair<std::int32_t, std::int32_t>> postings(
        const std::string& term) const;
    std::int32_t doc_length(std::size_t slot) const { return lengths_[slot]; }

private:
    std::vector<std::string> ids_;     // ascending; slot = position
    std::vector<std::int32_t> lengths_;
    double avg_len_ = 0.0;
    Bm25Params params_;
    std::unordered_map<std::string, std::vector<std::pair<std::int32_t, std::int32_t>>> postings_;
};

/// Client for a text-embedding service. Implementations must return one
/// fixed-dimension vector per input text.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::string id() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) = 0;
};

/// HTTP embedder: POST {"texts":[...]} -> {"vectors":[[...]]}.
std::unique_ptr<Embedder> make_http_embedder(const std::string& endpoint_url,
                                             const std::string& embedder_id,
                                             std::size_t dimension);

struct DenseBuildOptions {
    std::size_t batch_size = 32;
    int max_retries = 3;
    // When set, progress survives EmbedderFailure and a re-run resumes
    // after the last completed batch instead of re-embedding.
    std::optional<std::filesystem::path> checkpoint_path;
};

class DenseIndex {
public:
    static DenseIndex build(const std::vector<ingest::Passage>& passages, Embedder& embedder,
                            const DenseBuildOptions& options = {});

    std::vector<ScoredPassage> query(const std::vector<float>& query_vector, int k) const;
    std::vector<ScoredPassage> query(const std::string& query_text, Embedder& embedder,
                                     int k) const;

    void save(const std::filesystem::path& path) const;
    static DenseIndex load(const std::filesystem::path& path);

    std::size_t size() const { return ids_.size(); }
    std::size_t dimension() const { return dim_; }
    const std::string& embedder_id() const { return embedder_id_; }
    std::span<const float> vector_at(std::size_t slot) const;

private:
    std::size_t dim_ = 0;
    std::string embedder_id_;
    std::vector<std::string> ids_;  // ascending passage id; vectors in this order
    std::vector<float> vectors_;    // row-major, L2-normalized
};

using SimFn = std::function<double(const std::string&, const std::string&)>;

/// Maximal marginal relevance: greedily picks argmax over the unselected of
/// lambda*sim(c, query) - (1-lambda)*max_selected sim(c, s), redundancy term
/// zero while nothing is selected, ties broken by input order. Returns the
/// selected candidate indices in selection order (at most m).
std::vector<std::size_t> mmr_select(std::span<const std::string> candidates,
                                    const std::string& query, double lambda, int m,
                                    const SimFn& sim);

/// Default monolingual similarity for MMR (character 3-gram Jaccard).
double lexical_sim(const std::string& a, const std::string& b);

/// Embedding-cosine similarity for mixed-language pools, with per-text
/// memoisation so MMR's repeated lookups don't re-embed.
SimFn make_embedding_sim(Embedder& embedder);

} // namespace ragforge::retrieval
