#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "ragforge/errors.hpp"
#include "ragforge/metrics_eval.hpp"

using namespace ragforge;
using namespace ragforge::eval;

namespace {

using Tok = BleuConfig::Tokenization;
using Smooth = BleuConfig::Smoothing;

BleuConfig with_smoothing(Smooth s) {
    BleuConfig c;
    c.smoothing = s;
    return c;
}

/// Answers from a lookup table; throws for sources listed in `fail_on`.
class StubTranslator : public Translator {
public:
    gateway::TranslationResult translate_with_doc(const std::string& source,
                                                  const std::string& doc,
                                                  const std::string& doc_lang) override {
        calls.push_back({source, doc, doc_lang});
        if (fail_on.count(source))
            throw Error(ErrorCode::TransportExhausted, "injected failure for " + source);
        gateway::TranslationResult r;
        r.relevance_score = 3;
        auto it = answers.find(source);
        r.translation = it == answers.end() ? source : it->second;
        return r;
    }

    struct Call {
        std::string source, doc, doc_lang;
    };
    std::vector<Call> calls;
    std::map<std::string, std::string> answers;
    std::set<std::string> fail_on;
};

/// Echoing translator: hypothesis == reference for every test row.
StubTranslator perfect_translator(const std::vector<corpus::TestSample>& testset) {
    StubTranslator t;
    for (const auto& s : testset) t.answers[s.source] = s.translation;
    return t;
}

class ConstScorer : public ExternalScorer {
public:
    explicit ConstScorer(double v) : v_(v) {}
    double score(const std::string&, const std::string&,
                 const std::optional<std::string>&) override {
        ++calls;
        return v_;
    }
    int calls = 0;

private:
    double v_;
};

gateway::ChatGateway echo_gateway() {
    return gateway::ChatGateway(std::make_shared<gateway::EchoTransport>(), {},
                                std::make_shared<gateway::LogicalClock>());
}

} // namespace

TEST_CASE("bleu_tokenize splits CJK per character and groups latin runs") {
    auto t = bleu_tokenize("BLEU分数是100。", Tok::char_zh);
    CHECK(t == std::vector<std::string>{"BLEU", "分", "数", "是", "100", "。"});
}

TEST_CASE("bleu_tokenize separates punctuation from words") {
    auto t = bleu_tokenize("Hello, world!", Tok::char_zh);
    CHECK(t == std::vector<std::string>{"Hello", ",", "world", "!"});
    CHECK(bleu_tokenize("don't", Tok::char_zh) ==
          std::vector<std::string>{"don", "'", "t"});
}

TEST_CASE("bleu_tokenize treats fullwidth space as whitespace") {
    auto t = bleu_tokenize("你好\xe3\x80\x80世界", Tok::char_zh); // U+3000 between words
    CHECK(t == std::vector<std::string>{"你", "好", "世", "界"});
}

TEST_CASE("bleu_tokenize keeps CJK runs whole in intl mode") {
    auto t = bleu_tokenize("你好 world", Tok::intl);
    CHECK(t == std::vector<std::string>{"你好", "world"});
}

TEST_CASE("bleu_tokenize of empty and blank input is empty") {
    CHECK(bleu_tokenize("", Tok::char_zh).empty());
    CHECK(bleu_tokenize("   \n\t ", Tok::char_zh).empty());
}

TEST_CASE("corpus_bleu is exactly 100 for identical corpora") {
    std::vector<std::string> text{"机器翻译的质量逐年提高。", "第二句用来凑语料长度。",
                                  "Hello 世界, mixed content!"};
    CHECK(corpus_bleu(text, text) == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("corpus_bleu matches the hand-worked cat-sat example") {
    // hyp: the cat sat on the mat    ref: the cat is on the mat
    // clipped precisions: 5/6, 3/5, 1/4, 0/3; equal lengths so BP = 1.
    std::vector<std::string> hyp{"the cat sat on the mat"};
    std::vector<std::string> ref{"the cat is on the mat"};

    SUBCASE("no smoothing: a zero 4-gram precision zeroes the score") {
        CHECK(corpus_bleu(hyp, ref, with_smoothing(Smooth::none)) == 0.0);
    }
    SUBCASE("exp smoothing replaces the zero with 1/(2*total)") {
        double expected =
            100.0 * std::pow((5.0 / 6.0) * (3.0 / 5.0) * (1.0 / 4.0) * (1.0 / 6.0), 0.25);
        CHECK(corpus_bleu(hyp, ref, with_smoothing(Smooth::exp)) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("add-k smooths every order above 1") {
        double expected =
            100.0 * std::pow((5.0 / 6.0) * (4.0 / 6.0) * (2.0 / 5.0) * (1.0 / 4.0), 0.25);
        CHECK(corpus_bleu(hyp, ref, with_smoothing(Smooth::add_k)) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("corpus_bleu applies the brevity penalty to short hypotheses") {
    BleuConfig cfg;
    cfg.max_ngram = 2;
    // hyp 2 tokens, ref 3; both precisions are 1 so only BP remains.
    double got = corpus_bleu({"the cat"}, {"the cat sat"}, cfg);
    CHECK(got == doctest::Approx(100.0 * std::exp(1.0 - 3.0 / 2.0)).epsilon(1e-12));
    // A hypothesis longer than the reference pays no penalty.
    cfg.max_ngram = 1;
    CHECK(corpus_bleu({"the cat sat"}, {"the cat"}, cfg) ==
          doctest::Approx(100.0 * 2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("corpus_bleu pools counts over the corpus rather than averaging") {
    BleuConfig cfg;
    cfg.max_ngram = 1;
    // Pair 1: 1/2 unigrams match; pair 2: 3/4. Pooled: 4/6, not (0.5+0.75)/2.
    double got = corpus_bleu({"a x", "b c d y"}, {"a b", "b c d e"}, cfg);
    CHECK(got == doctest::Approx(100.0 * 4.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("corpus_bleu clips repeated n-grams against the reference count") {
    BleuConfig cfg;
    cfg.max_ngram = 1;
    double got = corpus_bleu({"the the the the"}, {"the cat"}, cfg);
    // "the" appears once in the reference: 1/4 clipped; the long hypothesis
    // pays no brevity penalty.
    CHECK(got == doctest::Approx(100.0 * (1.0 / 4.0)).epsilon(1e-12));
}

TEST_CASE("corpus_bleu is 0 for disjoint text and 0 for empty hypotheses") {
    CHECK(corpus_bleu({"完全不同的句子"}, {"another sentence entirely"}) == 0.0);
    CHECK(corpus_bleu({""}, {"非空参考"}) == 0.0);
}

TEST_CASE("corpus_bleu rejects mismatched or empty inputs") {
    try {
        corpus_bleu({"a", "b"}, {"a"});
        FAIL("expected a length error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LengthMismatch);
    }
    CHECK_THROWS_AS(corpus_bleu({}, {}), Error);
}

TEST_CASE("sentence_bleu is the exp-smoothed single-pair score") {
    CHECK(sentence_bleu("一模一样的句子", "一模一样的句子") ==
          doctest::Approx(100.0).epsilon(1e-12));
    std::string hyp = "the cat sat on the mat", ref = "the cat is on the mat";
    CHECK(sentence_bleu(hyp, ref) ==
          doctest::Approx(corpus_bleu({hyp}, {ref}, with_smoothing(Smooth::exp)))
              .epsilon(1e-12));
}

TEST_CASE("testset_hash keys on content and order") {
    auto a = testsupport::echo_testset(12);
    auto b = testsupport::echo_testset(12);
    CHECK(testset_hash(a) == testset_hash(b));
    CHECK(testset_hash(a).size() == 16);

    b[3].translation += "!";
    CHECK(testset_hash(a) != testset_hash(b));

    b = a;
    std::swap(b[0], b[1]);
    CHECK(testset_hash(a) != testset_hash(b));
}

TEST_CASE("judge_subset_indices is a fixed ascending sample") {
    auto h = testset_hash(testsupport::echo_testset(40));
    auto idx = judge_subset_indices(h, 40, 10, 7);
    REQUIRE(idx.size() == 10);
    std::set<std::size_t> seen(idx.begin(), idx.end());
    CHECK(seen.size() == 10);
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    for (auto i : idx) CHECK(i < 40);

    CHECK(judge_subset_indices(h, 40, 10, 7) == idx);   // same key, same subset
    CHECK(judge_subset_indices(h, 40, 10, 8) != idx);   // the seed matters
    CHECK(judge_subset_indices(h + "0", 40, 10, 7) != idx); // the testset matters

    auto all = judge_subset_indices(h, 5, 200, 7);
    std::vector<std::size_t> expect{0, 1, 2, 3, 4};
    CHECK(all == expect); // subsets never exceed the testset
}

TEST_CASE("empty-document runs pass no document at all") {
    auto testset = testsupport::echo_testset(8);
    auto model = perfect_translator(testset);
    auto rep = run_empty(model, testset);
    CHECK(rep.setting == "empty");
    REQUIRE(rep.rows.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(rep.rows[i].id == testset[i].id);
        CHECK(model.calls[i].doc.empty());
        CHECK(model.calls[i].source == testset[i].source);
    }
    CHECK(rep.bleu == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(rep.failure_count == 0);
    CHECK(rep.testset_hash == testset_hash(testset));
    CHECK(rep.manifest.at("counts").at("succeeded") == 8);
}

TEST_CASE("golden runs hand the model the matching parallel document") {
    auto testset = testsupport::echo_testset(6);
    for (const char* lang : {"en", "zh", "de"}) {
        auto model = perfect_translator(testset);
        auto rep = run_golden(model, testset, lang);
        CHECK(rep.setting == std::string("golden-") + lang);
        for (std::size_t i = 0; i < 6; ++i) {
            const auto& t = testset[i];
            const std::string& want = std::string(lang) == "en"   ? t.doc_en
                                      : std::string(lang) == "zh" ? t.doc_zh
                                                                  : t.doc_de;
            CHECK(model.calls[i].doc == want);
            CHECK(rep.rows[i].doc_lang == lang);
        }
    }
}

TEST_CASE("golden runs reject unsupported or missing documents") {
    auto testset = testsupport::echo_testset(4);
    auto model = perfect_translator(testset);
    CHECK_THROWS_AS(run_golden(model, testset, "fr"), Error);
    testset[2].doc_de.clear();
    CHECK_THROWS_AS(run_golden(model, testset, "de"), Error);
}

TEST_CASE("failed rows are excluded from BLEU and counted") {
    auto testset = testsupport::echo_testset(10);
    auto model = perfect_translator(testset);
    model.fail_on = {testset[2].source, testset[7].source};
    auto rep = run_empty(model, testset);
    CHECK(rep.failure_count == 2);
    CHECK(rep.rows[2].failed);
    CHECK(rep.rows[7].failed);
    CHECK(rep.rows[2].error.find("injected failure") != std::string::npos);
    CHECK(rep.rows[3].failed == false);
    // The surviving 8 rows echo their references exactly.
    CHECK(rep.bleu == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(rep.manifest.at("counts").at("failed") == 2);
    CHECK(rep.manifest.at("counts").at("succeeded") == 8);
}

TEST_CASE("every row failing yields a zero BLEU rather than an error") {
    auto testset = testsupport::echo_testset(3);
    auto model = perfect_translator(testset);
    for (const auto& t : testset) model.fail_on.insert(t.source);
    auto rep = run_empty(model, testset);
    CHECK(rep.failure_count == 3);
    CHECK(rep.bleu == 0.0);
}

TEST_CASE("robustness noise never comes from a test cluster") {
    auto testset = testsupport::echo_testset(10);
    std::mt19937_64 rng(5);
    auto noise = testsupport::synth_clusters(30, 91, LanguageSet(), 3, 5);
    std::set<std::string> test_clusters;
    for (const auto& t : testset) test_clusters.insert(t.cluster_page_id);

    auto model = perfect_translator(testset);
    RunOptions opts;
    opts.seed = 11;
    auto rep = run_robustness(model, testset, noise, opts);
    CHECK(rep.setting == "noisy");
    REQUIRE(rep.rows.size() == 10);
    std::set<std::string> noise_ids;
    for (const auto& c : noise) noise_ids.insert(c.pivot.page_id);
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& row = rep.rows[i];
        CHECK_FALSE(row.noise_cluster.empty());
        CHECK(test_clusters.count(row.noise_cluster) == 0);
        CHECK(noise_ids.count(row.noise_cluster) == 1);
        CHECK_FALSE(model.calls[i].doc.empty());
        CHECK(row.doc_lang != "");
    }
    CHECK(rep.manifest.at("noise_pool_size") == 30);
}

TEST_CASE("robustness draws are fixed by the seed") {
    auto testset = testsupport::echo_testset(8);
    auto noise = testsupport::synth_clusters(25, 17, LanguageSet(), 3, 5);
    RunOptions opts;
    opts.seed = 21;

    auto m1 = perfect_translator(testset);
    auto m2 = perfect_translator(testset);
    auto r1 = run_robustness(m1, testset, noise, opts);
    auto r2 = run_robustness(m2, testset, noise, opts);
    for (std::size_t i = 0; i < r1.rows.size(); ++i) {
        CHECK(r1.rows[i].noise_cluster == r2.rows[i].noise_cluster);
        CHECK(m1.calls[i].doc == m2.calls[i].doc);
    }

    opts.seed = 22;
    auto m3 = perfect_translator(testset);
    auto r3 = run_robustness(m3, testset, noise, opts);
    bool any_differs = false;
    for (std::size_t i = 0; i < r1.rows.size(); ++i)
        if (r3.rows[i].noise_cluster != r1.rows[i].noise_cluster ||
            m3.calls[i].doc != m1.calls[i].doc)
            any_differs = true;
    CHECK(any_differs);
}

TEST_CASE("fullwiki joins the top hits into one document") {
    auto testset = testsupport::echo_testset(4);
    std::map<std::string, std::string> texts{
        {"p1", "first passage"}, {"p2", "second passage"}, {"p3", "third passage"}};
    RetrieverHandle handle;
    handle.id = "stub";
    std::vector<std::string> queries_seen;
    handle.query = [&](const std::string& q, int k) {
        queries_seen.push_back(q);
        CHECK(k == 3);
        std::vector<retrieval::ScoredPassage> hits;
        hits.push_back({"p2", 9.0, 1});
        hits.push_back({"p3", 5.0, 2});
        return hits;
    };
    handle.text_of = [&](const std::string& id) { return texts.at(id); };

    auto model = perfect_translator(testset);
    auto rep = run_fullwiki(model, testset, handle, 3);
    CHECK(rep.setting == "fullwiki-stub");
    REQUIRE(queries_seen.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(queries_seen[i] == testset[i].source);
        CHECK(model.calls[i].doc == "second passage\n\nthird passage");
    }
    CHECK(rep.flagged_count == 0);
    CHECK(rep.manifest.at("retriever") == "stub");
    CHECK(rep.manifest.at("k") == 3);
}

TEST_CASE("fullwiki flags rows with no retrieval hits") {
    auto testset = testsupport::echo_testset(3);
    RetrieverHandle handle;
    handle.id = "stub";
    handle.query = [](const std::string&, int) {
        return std::vector<retrieval::ScoredPassage>{};
    };
    handle.text_of = [](const std::string&) { return std::string(); };
    auto model = perfect_translator(testset);
    auto rep = run_fullwiki(model, testset, handle, 3);
    CHECK(rep.flagged_count == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(rep.rows[i].flagged);
        CHECK(model.calls[i].doc.empty()); // falls back to the empty-document prompt
    }
}

TEST_CASE("fullwiki retriever handles answer through the real index types") {
    std::mt19937_64 rng(71);
    std::vector<ingest::Passage> passages;
    for (int i = 0; i < 12; ++i) {
        ingest::Passage p;
        p.lang = "en";
        p.page_id = "page" + std::to_string(i);
        p.ordinal = 0;
        p.text = testsupport::synth_paragraph(rng, "en", 40);
        p.word_count = static_cast<int>(count_words(p.text));
        passages.push_back(std::move(p));
    }
    passages[4].text = "aurora borealis dances over wintry tundra skies";
    passages[4].word_count = 7;

    auto index = retrieval::Bm25Index::build(passages);
    auto handle = make_bm25_handle(index, passages);
    CHECK(handle.id == "bm25");
    auto hits = handle.query("aurora borealis tundra", 3);
    REQUIRE_FALSE(hits.empty());
    CHECK(hits[0].id == passages[4].id());
    CHECK(handle.text_of(hits[0].id) == passages[4].text);
    CHECK(handle.text_of("missing-id").empty());
}

TEST_CASE("judging covers the fixed subset and averages the scores") {
    auto testset = testsupport::echo_testset(12);
    auto model = perfect_translator(testset);
    auto gw = echo_gateway();
    RunOptions opts;
    opts.judge = true;
    opts.judge_subset = 5;
    opts.judge_gateway = &gw;
    auto rep = run_empty(model, testset, opts);

    CHECK(rep.judged_count == 5);
    CHECK(rep.judge_grb_mean == doctest::Approx(85.0));
    CHECK(rep.judge_grf_mean == doctest::Approx(85.0));

    auto subset = judge_subset_indices(rep.testset_hash, 12, 5, 0);
    std::set<std::size_t> expect(subset.begin(), subset.end());
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        if (expect.count(i)) {
            CHECK(rep.rows[i].grb == 85);
            CHECK(rep.rows[i].grf == 85);
        } else {
            CHECK_FALSE(rep.rows[i].grb.has_value());
            CHECK_FALSE(rep.rows[i].grf.has_value());
        }
    }
    CHECK(rep.manifest.at("judge").at("judged") == 5);
}

TEST_CASE("judging skips failed rows") {
    auto testset = testsupport::echo_testset(6);
    auto model = perfect_translator(testset);
    auto subset = judge_subset_indices(testset_hash(testset), 6, 3, 0);
    model.fail_on.insert(testset[subset[0]].source);
    auto gw = echo_gateway();
    RunOptions opts;
    opts.judge = true;
    opts.judge_subset = 3;
    opts.judge_gateway = &gw;
    auto rep = run_empty(model, testset, opts);
    CHECK(rep.judged_count == 2);
    CHECK_FALSE(rep.rows[subset[0]].grb.has_value());
}

TEST_CASE("an external scorer annotates every surviving row") {
    auto testset = testsupport::echo_testset(5);
    auto model = perfect_translator(testset);
    model.fail_on.insert(testset[1].source);
    ConstScorer scorer(0.75);
    RunOptions opts;
    opts.scorer = &scorer;
    auto rep = run_empty(model, testset, opts);
    CHECK(scorer.calls == 4);
    CHECK(rep.external_mean == doctest::Approx(0.75));
    CHECK(rep.rows[0].external == doctest::Approx(0.75));
    CHECK_FALSE(rep.rows[1].external.has_value());
}

TEST_CASE("aggregate lines up reports built from one testset") {
    auto testset = testsupport::echo_testset(6);
    auto model = perfect_translator(testset);
    auto empty_rep = run_empty(model, testset);
    auto golden_rep = run_golden(model, testset, "zh");
    auto table = aggregate({empty_rep, golden_rep});
    CHECK(table.json.at("testset_hash") == empty_rep.testset_hash);
    REQUIRE(table.json.at("rows").size() == 2);
    CHECK(table.json["rows"][0].at("setting") == "empty");
    CHECK(table.json["rows"][1].at("setting") == "golden-zh");
    CHECK(table.json["rows"][0].at("bleu").get<double>() == doctest::Approx(100.0));
    CHECK(table.json["rows"][0].at("grb").is_null());
    CHECK(table.text.find("empty") != std::string::npos);
    CHECK(table.text.find("golden-zh") != std::string::npos);
    CHECK(table.text.find("setting") != std::string::npos);
}

TEST_CASE("aggregate refuses reports from different testsets") {
    auto t1 = testsupport::echo_testset(6);
    auto t2 = testsupport::echo_testset(7);
    auto m1 = perfect_translator(t1);
    auto m2 = perfect_translator(t2);
    auto r1 = run_empty(m1, t1);
    auto r2 = run_empty(m2, t2);
    try {
        aggregate({r1, r2});
        FAIL("expected a testset mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TestsetMismatch);
    }
    CHECK_THROWS_AS(aggregate({}), Error);
}

TEST_CASE("reports round-trip through their JSON form") {
    testsupport::TempDir dir("metrics");
    auto testset = testsupport::echo_testset(7);
    auto model = perfect_translator(testset);
    model.fail_on.insert(testset[4].source);
    auto gw = echo_gateway();
    RunOptions opts;
    opts.judge = true;
    opts.judge_subset = 3;
    opts.judge_gateway = &gw;
    auto rep = run_golden(model, testset, "zh", opts);

    auto json_path = dir.path() / "golden-zh.report.json";
    auto csv_path = dir.path() / "golden-zh.report.csv";
    write_report(rep, json_path, csv_path);
    auto back = read_report(json_path);

    CHECK(back.setting == rep.setting);
    CHECK(back.bleu == doctest::Approx(rep.bleu).epsilon(1e-12));
    CHECK(back.judged_count == rep.judged_count);
    CHECK(back.failure_count == rep.failure_count);
    CHECK(back.flagged_count == rep.flagged_count);
    CHECK(back.testset_hash == rep.testset_hash);
    CHECK(back.judge_grb_mean == rep.judge_grb_mean);
    CHECK(back.judge_grf_mean == rep.judge_grf_mean);
    CHECK_FALSE(back.external_mean.has_value());
    REQUIRE(back.rows.size() == rep.rows.size());
    for (std::size_t i = 0; i < back.rows.size(); ++i) {
        CHECK(back.rows[i].id == rep.rows[i].id);
        CHECK(back.rows[i].hypothesis == rep.rows[i].hypothesis);
        CHECK(back.rows[i].failed == rep.rows[i].failed);
        CHECK(back.rows[i].grb == rep.rows[i].grb);
    }
    CHECK(back.manifest.at("setting") == "golden-zh");
}

TEST_CASE("report CSV quotes fields containing separators") {
    testsupport::TempDir dir("metrics-csv");
    EvalReport rep;
    rep.setting = "empty";
    rep.testset_hash = "feedfeedfeedfeed";
    SampleRow row;
    row.id = "test-000001";
    row.doc_lang = "zh";
    row.hypothesis = "你好, \"世界\"";
    row.relevance_score = 4;
    rep.rows.push_back(row);
    rep.manifest = Json::object();

    auto json_path = dir.path() / "r.json";
    auto csv_path = dir.path() / "r.csv";
    write_report(rep, json_path, csv_path);

    std::ifstream in(csv_path);
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    CHECK(header ==
          "id,doc_lang,status,relevance_score,grb,grf,external,noise_cluster,error,hypothesis");
    CHECK(line.find("\"你好, \"\"世界\"\"\"") != std::string::npos);
    CHECK(line.find("test-000001,zh,ok,4") == 0);
}
