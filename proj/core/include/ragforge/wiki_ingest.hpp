#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "ragforge/lang.hpp"

namespace ragforge::ingest {

struct Article {
    std::string page_id;
    std::string lang;
    std::string title;
    std::vector<std::string> paragraphs;           // non-empty, source order
    std::map<std::string, std::string> langlinks;  // lang -> foreign title
};

/// A pivot-language article plus its interlanguage-linked counterparts.
struct ParallelCluster {
    Article pivot;
    std::map<std::string, Article> parallels; // lang -> article, pivot lang excluded

    const Article* article_for(const std::string& lang) const {
        if (lang == pivot.lang)
            return &pivot;
        auto it = parallels.find(lang);
        return it == parallels.end() ? nullptr : &it->second;
    }
};

struct Passage {
    std::string lang;
    std::string page_id;
    int ordinal = 0;
    std::string text;
    int word_count = 0;

    std::string id() const { return lang + "/" + page_id + "#" + std::to_string(ordinal); }
};

struct ParseReport {
    std::size_t parsed = 0;
    std::size_t empty_dropped = 0;
    std::size_t unknown_language = 0;
    std::vector<std::pair<std::size_t, std::string>> malformed; // (line, reason)
};

struct AlignReport {
    // (pivot page_id, lang, missing target title)
    std::vector<std::tuple<std::string, std::string, std::string>> dangling_links;
    // (article lang, page_id, winning pivot, losing pivot)
    std::vector<std::tuple<std::string, std::string, std::string, std::string>> conflicts;
};

/// Splits on runs of blank lines; single newlines are soft wraps. Trims
/// each paragraph and drops empty results. Total: never fails.
std::vector<std::string> segment_paragraphs(std::string_view raw_text);

/// Reads the JSONL article stream. Schema violations are collected in the
/// report (non-fatal); records in unknown languages or with empty bodies are
/// skipped and counted. Emission order is input order.
std::vector<Article> parse_collection(std::istream& input, const LanguageSet& langs,
                                      ParseReport& report);
std::vector<Article> parse_collection_file(const std::filesystem::path& path,
                                           const LanguageSet& langs, ParseReport& report);

/// One cluster per pivot-language article, parallels resolved through the
/// pivot's langlinks. Dangling links are dropped and reported; an article
/// claimed by two pivots goes to the first by pivot page_id order. Throws
/// Error(DuplicatePivotTitle) when two pivot articles share a title.
std::vector<ParallelCluster> align_clusters(const std::vector<Article>& articles,
                                            const std::string& pivot_lang, AlignReport& report);

/// Greedy chunking of the article's word stream into blocks of `block_size`
/// words; the final partial block is kept. Passage text is a substring of
/// the blank-line-joined article, so scripts without spaces survive intact.
std::vector<Passage> split_passages(const Article& article, int block_size = 100);

/// Passage-store JSONL plus a sidecar manifest (block size, language set,
/// counts, content hash). Returns the number of passages written.
std::size_t write_passage_store(const std::vector<Passage>& passages,
                                const std::filesystem::path& jsonl_path, int block_size,
                                const LanguageSet& langs);

std::vector<Passage> read_passage_store(const std::filesystem::path& jsonl_path);

// Cluster persistence: self-contained JSONL, one cluster per line.
void write_clusters(const std::vector<ParallelCluster>& clusters,
                    const std::filesystem::path& path);
std::vector<ParallelCluster> read_clusters(const std::filesystem::path& path);

} // namespace ragforge::ingest
