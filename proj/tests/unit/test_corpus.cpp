#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "ragforge/corpus_builder.hpp"
#include "ragforge/text.hpp"

using namespace ragforge;
using namespace ragforge::corpus;

TEST_CASE("published quota table sums to the published split sizes") {
    auto q = QuotaConfig::published();
    CHECK(q.train_relevant.at("en") == 19500);
    CHECK(q.train_relevant.at("zh") == 19500);
    CHECK(q.train_relevant.at("de") == 9700);
    CHECK(q.train_noisy.at("en") == 1850);
    CHECK(q.train_noisy.at("cs") == 900);
    CHECK(q.valid_relevant.at("en") == 500);
    CHECK(q.valid_noisy.at("zh") == 150);
    CHECK(q.train_total() == 74500);
    CHECK(q.valid_total() == 2500);
    CHECK(q.test_count == 2000);
    CHECK(q.total() == 79000);
}

TEST_CASE("scaled_down by 100 apportions with largest remainders") {
    auto q = QuotaConfig::published().scaled_down(100, LanguageSet());
    CHECK(q.train_relevant.at("en") == 195);
    CHECK(q.train_relevant.at("zh") == 195);
    CHECK(q.train_relevant.at("de") == 97);
    CHECK(q.train_relevant.at("fr") == 97);
    CHECK(q.train_relevant.at("cs") == 97);
    // 18.5/18.5/9/9/9 with a group target of 64: the extra unit goes to en
    // (language order breaks the .5 tie)
    CHECK(q.train_noisy.at("en") == 19);
    CHECK(q.train_noisy.at("zh") == 18);
    CHECK(q.train_noisy.at("de") == 9);
    CHECK(q.valid_relevant.at("en") == 5);
    CHECK(q.valid_relevant.at("de") == 3);
    CHECK(q.valid_noisy.at("en") == 2);
    CHECK(q.valid_noisy.at("zh") == 1);
    CHECK(q.valid_noisy.at("cs") == 1);
    CHECK(q.test_count == 20);
    CHECK(q.train_total() == 745);
    CHECK(q.valid_total() == 25);

    // group totals survive the apportionment
    int train_noisy_total = 0;
    for (const auto& [lang, n] : q.train_noisy) train_noisy_total += n;
    CHECK(train_noisy_total == 64);
    int valid_noisy_total = 0;
    for (const auto& [lang, n] : q.valid_noisy) valid_noisy_total += n;
    CHECK(valid_noisy_total == 6);
}

TEST_CASE("floor and nearest rounding modes round per cell") {
    auto base = QuotaConfig::published();
    base.rounding = QuotaConfig::Rounding::floor;
    auto fl = base.scaled_down(100, LanguageSet());
    CHECK(fl.train_noisy.at("en") == 18);
    CHECK(fl.train_noisy.at("zh") == 18);

    base.rounding = QuotaConfig::Rounding::nearest;
    auto ne = base.scaled_down(100, LanguageSet());
    CHECK(ne.train_noisy.at("en") == 19); // 18.5 rounds half-up
    CHECK(ne.train_noisy.at("zh") == 19);
}

TEST_CASE("build_sample relevant doc is a contiguous non-lead run of the right article") {
    auto clusters = testsupport::synth_clusters(3, 51);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 50; ++i) {
        auto s = build_sample(clusters[0], "de", DocType::relevant, rng);
        CHECK(s.source == clusters[0].pivot.paragraphs[0]);
        CHECK(s.doc_lang == "de");
        CHECK(s.doc_type == DocType::relevant);
        CHECK(s.cluster_page_id == clusters[0].pivot.page_id);
        CHECK(s.doc_prov.cluster_page_id == clusters[0].pivot.page_id);
        CHECK(s.doc_prov.para_start >= 1); // lead is never part of a run
        const auto& article = clusters[0].parallels.at("de");
        CHECK(s.doc_prov.para_start + s.doc_prov.para_len <=
              static_cast<int>(article.paragraphs.size()));
        // doc text is exactly the joined run
        std::string expect;
        for (int p = 0; p < s.doc_prov.para_len; ++p) {
            if (p) expect += "\n\n";
            expect += article.paragraphs[static_cast<std::size_t>(s.doc_prov.para_start + p)];
        }
        CHECK(s.doc == expect);
    }
}

TEST_CASE("build_sample noisy doc comes from a different cluster") {
    auto clusters = testsupport::synth_clusters(5, 52);
    std::mt19937_64 rng(8);
    for (int i = 0; i < 50; ++i) {
        auto s = build_sample(clusters[1], "zh", DocType::noisy, rng, clusters);
        CHECK(s.cluster_page_id == clusters[1].pivot.page_id);
        CHECK(s.doc_prov.cluster_page_id != s.cluster_page_id);
        CHECK(s.doc_prov.lang == "zh");
        CHECK(s.doc_type == DocType::noisy);
    }
}

TEST_CASE("build_sample rejects missing parallels and too-short articles") {
    auto clusters = testsupport::synth_clusters(1, 53);
    std::mt19937_64 rng(9);
    auto cluster = clusters[0];
    cluster.parallels.erase("fr");
    CHECK_THROWS_AS(build_sample(cluster, "fr", DocType::relevant, rng), Error);

    auto stub = clusters[0];
    stub.parallels["de"].paragraphs.resize(1); // lead only: no run possible
    CHECK_THROWS_AS(build_sample(stub, "de", DocType::relevant, rng), Error);
}

TEST_CASE("sample_noisy_doc draws only from eligible clusters") {
    auto clusters = testsupport::synth_clusters(4, 54);
    std::mt19937_64 rng(10);
    std::set<std::string> seen;
    for (int i = 0; i < 200; ++i) {
        auto [doc, prov] = sample_noisy_doc(clusters, clusters[0].pivot.page_id, "en", rng);
        CHECK(prov.cluster_page_id != clusters[0].pivot.page_id);
        CHECK(!doc.empty());
        seen.insert(prov.cluster_page_id);
    }
    CHECK(seen.size() == 3); // uniform draw eventually visits every eligible cluster

    std::vector<ingest::ParallelCluster> only_one(clusters.begin(), clusters.begin() + 1);
    CHECK_THROWS_AS(sample_noisy_doc(only_one, only_one[0].pivot.page_id, "en", rng), Error);
}

namespace {

QuotaConfig small_quota() {
    QuotaConfig q;
    q.train_relevant = {{"en", 8}, {"zh", 8}, {"de", 4}, {"fr", 4}, {"cs", 4}};
    q.train_noisy = {{"en", 2}, {"zh", 2}, {"de", 1}, {"fr", 1}, {"cs", 1}};
    q.valid_relevant = {{"en", 2}, {"zh", 2}, {"de", 1}, {"fr", 1}, {"cs", 1}};
    q.valid_noisy = {{"en", 1}, {"zh", 1}, {"de", 0}, {"fr", 0}, {"cs", 0}};
    q.test_count = 6;
    q.seed = 77;
    return q;
}

} // namespace

TEST_CASE("assign_quotas fills every cell exactly and never reuses a cluster") {
    auto clusters = testsupport::synth_clusters(60, 55);
    auto quota = small_quota();
    auto ds = assign_quotas(clusters, quota);

    std::map<std::string, int> cells;
    std::set<std::string> used;
    for (const auto& s : ds.samples) {
        cells[std::string(split_name(s.split)) + "/" + doc_type_name(s.doc_type) + "/" +
              s.doc_lang]++;
        CHECK(used.insert(s.cluster_page_id).second); // one sample per cluster
    }
    for (const auto& t : ds.test) CHECK(used.insert(t.cluster_page_id).second);

    CHECK(cells["train/relevant/en"] == 8);
    CHECK(cells["train/relevant/cs"] == 4);
    CHECK(cells["train/noisy/zh"] == 2);
    CHECK(cells["valid/relevant/en"] == 2);
    CHECK(cells["valid/noisy/en"] == 1);
    CHECK(ds.test.size() == 6);
    CHECK(ds.samples.size() == static_cast<std::size_t>(quota.train_total() + quota.valid_total()));

    for (const auto& t : ds.test) {
        CHECK(!t.doc_en.empty());
        CHECK(!t.doc_zh.empty());
        CHECK(!t.doc_de.empty());
        CHECK(!t.translation.empty());
        CHECK(t.doc_prov.size() == 3);
    }
}

TEST_CASE("assign_quotas is deterministic under its seed") {
    auto clusters = testsupport::synth_clusters(60, 56);
    auto quota = small_quota();
    auto a = assign_quotas(clusters, quota);
    auto b = assign_quotas(clusters, quota);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].id == b.samples[i].id);
        CHECK(a.samples[i].doc == b.samples[i].doc);
        CHECK(a.samples[i].cluster_page_id == b.samples[i].cluster_page_id);
    }
    quota.seed = 78;
    auto c = assign_quotas(clusters, quota);
    bool same = true;
    for (std::size_t i = 0; i < a.samples.size() && same; ++i)
        same = a.samples[i].cluster_page_id == c.samples[i].cluster_page_id;
    CHECK(!same); // a different seed reshuffles the assignment
}

TEST_CASE("assign_quotas names the deficient cell when clusters run out") {
    auto clusters = testsupport::synth_clusters(10, 57);
    auto quota = small_quota();
    try {
        assign_quotas(clusters, quota);
        FAIL("expected QuotaUnsatisfiable");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::QuotaUnsatisfiable);
        CHECK(std::string(e.what()).find("short by") != std::string::npos);
    }
}

TEST_CASE("summarize_lengths matches a direct recount") {
    std::mt19937_64 rng(58);
    std::vector<long long> lengths;
    for (int i = 0; i < 997; ++i)
        lengths.push_back(static_cast<long long>(rng_below(rng, 500)));
    auto st = summarize_lengths(lengths);

    auto sorted = lengths;
    std::sort(sorted.begin(), sorted.end());
    long long total = 0;
    for (auto v : sorted) total += v;
    CHECK(st.min == sorted.front());
    CHECK(st.max == sorted.back());
    CHECK(st.mean == doctest::Approx(static_cast<double>(total) / sorted.size()));
    std::size_t rank = static_cast<std::size_t>(std::ceil(0.95 * sorted.size()));
    CHECK(st.p95 == sorted[rank - 1]);
    CHECK(st.count == sorted.size());

    CHECK(summarize_lengths({42}).p95 == 42);
    CHECK(summarize_lengths({}).count == 0);
}

TEST_CASE("compute_stats keys stats by field and doc language") {
    auto clusters = testsupport::synth_clusters(60, 59);
    auto ds = assign_quotas(clusters, small_quota());
    auto stats = compute_stats(ds, default_tokenizer());
    CHECK(stats.count("source") == 1);
    CHECK(stats.count("doc:en") == 1);
    CHECK(stats.count("doc:zh") == 1);
    CHECK(stats.at("source").count == ds.samples.size() + ds.test.size());
    CHECK(stats.at("source").min > 0);
}

TEST_CASE("dataset persistence round-trips and validates") {
    testsupport::TempDir dir("dataset");
    auto clusters = testsupport::synth_clusters(60, 60);
    auto quota = small_quota();
    auto ds = assign_quotas(clusters, quota);
    ds.samples[0].translation = "x";
    ds.samples[0].relevance_score = 4;
    write_dataset(ds, dir.path());

    auto loaded = read_dataset(dir.path());
    REQUIRE(loaded.samples.size() == ds.samples.size());
    REQUIRE(loaded.test.size() == ds.test.size());
    CHECK(loaded.samples[0].translation == ds.samples[0].translation);
    CHECK(loaded.samples[0].relevance_score == ds.samples[0].relevance_score);
    CHECK(loaded.samples[1].translation == std::nullopt);
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(loaded.samples[i].id == ds.samples[i].id);
        CHECK(loaded.samples[i].doc == ds.samples[i].doc);
        CHECK(loaded.samples[i].doc_prov.para_start == ds.samples[i].doc_prov.para_start);
    }

    auto report = validate_dataset(dir.path(), &quota);
    CHECK(report.ok);
    for (const auto& c : report.checks)
        if (c.name != "translations-present") CHECK(c.passed);
}

TEST_CASE("validate_dataset catches a noisy row drawn from its own cluster") {
    testsupport::TempDir dir("tamper");
    auto clusters = testsupport::synth_clusters(60, 61);
    auto ds = assign_quotas(clusters, small_quota());
    for (auto& s : ds.samples)
        if (s.doc_type == DocType::noisy) {
            s.doc_prov.cluster_page_id = s.cluster_page_id; // forge provenance
            break;
        }
    write_dataset(ds, dir.path());
    auto report = validate_dataset(dir.path());
    CHECK(!report.ok);
    bool found = false;
    for (const auto& c : report.checks)
        if (c.name == "doc-provenance" && !c.passed) found = true;
    CHECK(found);
}

TEST_CASE("validate_dataset treats missing translations as non-fatal") {
    testsupport::TempDir dir("untranslated");
    auto clusters = testsupport::synth_clusters(60, 62);
    auto ds = assign_quotas(clusters, small_quota());
    write_dataset(ds, dir.path());
    auto report = validate_dataset(dir.path());
    CHECK(report.ok); // fatal checks all pass
    bool flagged = false;
    for (const auto& c : report.checks)
        if (c.name == "translations-present" && !c.passed && !c.fatal) flagged = true;
    CHECK(flagged);
}

TEST_CASE("validate_dataset rejects duplicated sample ids") {
    testsupport::TempDir dir("dupes");
    auto clusters = testsupport::synth_clusters(60, 63);
    auto ds = assign_quotas(clusters, small_quota());
    ds.samples[1].id = ds.samples[0].id;
    write_dataset(ds, dir.path());
    auto report = validate_dataset(dir.path());
    CHECK(!report.ok);
}
