#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ragforge/corpus_builder.hpp"
#include "ragforge/lang.hpp"
#include "ragforge/wiki_ingest.hpp"

namespace testsupport {

using namespace ragforge;

/// Deterministic word salad; zh paragraphs come out as Han runs so the
/// CJK-aware tokenizers get exercised.
std::string synth_paragraph(std::mt19937_64& rng, const std::string& lang, int words);

ingest::Article synth_article(std::mt19937_64& rng, const std::string& lang,
                              const std::string& page_id, const std::string& title,
                              int min_paras = 3, int max_paras = 6, int min_words = 12,
                              int max_words = 30);

/// Fully-parallel clusters: one article per configured language, en pivot.
std::vector<ingest::ParallelCluster> synth_clusters(std::size_t n, std::uint64_t seed,
                                                    const LanguageSet& langs = LanguageSet(),
                                                    int min_paras = 3, int max_paras = 6);

/// The raw article stream the `ingest` command expects; pivot rows carry the
/// langlinks.
void write_articles_jsonl(const std::vector<ingest::ParallelCluster>& clusters,
                          const std::filesystem::path& path);

/// Testset where translation == source, so an echoing model scores BLEU 100.
std::vector<corpus::TestSample> echo_testset(std::size_t n);

/// Scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace testsupport
