// Microbenchmarks for the hot paths: indexing, retrieval, splitting, BLEU.
// Synthetic inputs only; sizes chosen so a full run stays under a minute.

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "ragforge/metrics_eval.hpp"
#include "ragforge/retrieval.hpp"
#include "ragforge/text.hpp"
#include "ragforge/wiki_ingest.hpp"

using namespace ragforge;

namespace {

const char* kLatinVocab[] = {"treaty",  "river",   "council", "observed", "province",
                             "signal",  "harvest", "museum",  "border",   "summit",
                             "railway", "census",  "decree",  "glacier",  "archive"};

std::string latin_words(std::mt19937_64& rng, int n) {
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += kLatinVocab[rng_below(rng, std::size(kLatinVocab))];
        out += static_cast<char>('a' + rng_below(rng, 26));
    }
    return out;
}

std::string han_words(std::mt19937_64& rng, int n) {
    std::string out;
    for (int i = 0; i < n; ++i) {
        char32_t cp = 0x4E00 + static_cast<char32_t>(rng_below(rng, 0x100));
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
    return out;
}

std::vector<ingest::Passage> make_passages(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<ingest::Passage> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ingest::Passage p;
        p.lang = "en";
        p.page_id = "p" + std::to_string(i / 4);
        p.ordinal = static_cast<int>(i % 4);
        p.text = latin_words(rng, 60 + static_cast<int>(rng_below(rng, 40)));
        p.word_count = static_cast<int>(count_words(p.text));
        out.push_back(std::move(p));
    }
    return out;
}

void BM_Bm25Build(benchmark::State& state) {
    auto passages = make_passages(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) {
        auto index = retrieval::Bm25Index::build(passages);
        benchmark::DoNotOptimize(index);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Bm25Build)->Arg(1000)->Arg(5000);

void BM_Bm25Query(benchmark::State& state) {
    auto passages = make_passages(static_cast<std::size_t>(state.range(0)), 2);
    auto index = retrieval::Bm25Index::build(passages);
    std::mt19937_64 rng(3);
    std::vector<std::string> queries;
    for (int i = 0; i < 64; ++i) queries.push_back(latin_words(rng, 4));
    std::size_t qi = 0;
    for (auto _ : state) {
        auto hits = index.query(queries[qi++ % queries.size()], 10);
        benchmark::DoNotOptimize(hits);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Bm25Query)->Arg(10000)->Arg(50000);

void BM_SplitPassages(benchmark::State& state) {
    std::mt19937_64 rng(4);
    ingest::Article a;
    a.page_id = "bench";
    a.lang = "en";
    a.title = "bench";
    for (int i = 0; i < 40; ++i) a.paragraphs.push_back(latin_words(rng, 125));
    for (auto _ : state) {
        auto blocks = ingest::split_passages(a, 100);
        benchmark::DoNotOptimize(blocks);
    }
    state.SetItemsProcessed(state.iterations() * 5000); // words per article
}
BENCHMARK(BM_SplitPassages);

void BM_MmrSelect(benchmark::State& state) {
    std::mt19937_64 rng(5);
    std::vector<std::string> pool;
    for (int i = 0; i < 50; ++i) pool.push_back(latin_words(rng, 20));
    std::string query = latin_words(rng, 12);
    for (auto _ : state) {
        auto picked = retrieval::mmr_select(pool, query, 0.7, 10, retrieval::lexical_sim);
        benchmark::DoNotOptimize(picked);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_MmrSelect);

void BM_BleuTokenizeHan(benchmark::State& state) {
    std::mt19937_64 rng(6);
    std::string text = han_words(rng, 400);
    for (auto _ : state) {
        auto toks = eval::bleu_tokenize(text, eval::BleuConfig::Tokenization::char_zh);
        benchmark::DoNotOptimize(toks);
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_BleuTokenizeHan);

void BM_CorpusBleu(benchmark::State& state) {
    std::mt19937_64 rng(7);
    std::vector<std::string> hyps, refs;
    for (int i = 0; i < 1000; ++i) {
        refs.push_back(han_words(rng, 30));
        hyps.push_back(i % 3 ? refs.back() : han_words(rng, 30));
    }
    for (auto _ : state) {
        double score = eval::corpus_bleu(hyps, refs);
        benchmark::DoNotOptimize(score);
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_CorpusBleu);

} // namespace

BENCHMARK_MAIN();
