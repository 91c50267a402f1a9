#include "ragforge/corpus_builder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "ragforge/errors.hpp"
#include "ragforge/hashing.hpp"
#include "ragforge/jsonl.hpp"
#include "ragforge/text.hpp"

namespace ragforge::corpus {

const char* split_name(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
    }
    return "?";
}

const char* doc_type_name(DocType t) {
    return t == DocType::relevant ? "relevant" : "noisy";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "valid") return Split::valid;
    if (name == "test") return Split::test;
    throw Error(ErrorCode::SchemaError, "unknown split: " + name);
}

DocType doc_type_from_name(const std::string& name) {
    if (name == "relevant") return DocType::relevant;
    if (name == "noisy") return DocType::noisy;
    throw Error(ErrorCode::SchemaError, "unknown doc type: " + name);
}

QuotaConfig QuotaConfig::published() {
    QuotaConfig q;
    q.train_relevant = {{"en", 19500}, {"zh", 19500}, {"de", 9700}, {"fr", 9700}, {"cs", 9700}};
    q.train_noisy = {{"en", 1850}, {"zh", 1850}, {"de", 900}, {"fr", 900}, {"cs", 900}};
    q.valid_relevant = {{"en", 500}, {"zh", 500}, {"de", 300}, {"fr", 300}, {"cs", 300}};
    q.valid_noisy = {{"en", 150}, {"zh", 150}, {"de", 100}, {"fr", 100}, {"cs", 100}};
    q.test_count = 2000;
    return q;
}

namespace {

int sum_counts(const std::map<std::string, int>& m) {
    int total = 0;
    for (const auto& [lang, n] : m) total += n;
    return total;
}

std::map<std::string, int> scale_group(const std::map<std::string, int>& group, int divisor,
                                       QuotaConfig::Rounding rounding,
                                       const std::vector<std::string>& lang_order) {
    std::map<std::string, int> out;
    if (rounding == QuotaConfig::Rounding::floor) {
        for (const auto& [lang, n] : group) out[lang] = n / divisor;
        return out;
    }
    if (rounding == QuotaConfig::Rounding::nearest) {
        for (const auto& [lang, n] : group)
            out[lang] = static_cast<int>((static_cast<long long>(n) * 2 + divisor) / (2LL * divisor));
        return out;
    }
    // Largest remainder: the group total is rounded once, floors are taken per
    // cell, and the leftover units go to the largest fractional remainders.
    long long group_sum = sum_counts(group);
    int target = static_cast<int>((group_sum * 2 + divisor) / (2LL * divisor));
    int floor_sum = 0;
    struct Rem {
        std::string lang;
        long long rem_num; // remainder numerator, denominator is divisor
        std::size_t order;
    };
    std::vector<Rem> rems;
    std::size_t order = 0;
    for (const auto& lang : lang_order) {
        auto it = group.find(lang);
        if (it == group.end()) continue;
        int fl = it->second / divisor;
        out[lang] = fl;
        floor_sum += fl;
        rems.push_back({lang, it->second % divisor, order++});
    }
    // Cells outside the declared language order still get their floor.
    for (const auto& [lang, n] : group)
        if (!out.count(lang)) {
            out[lang] = n / divisor;
            floor_sum += n / divisor;
            rems.push_back({lang, n % divisor, order++});
        }
    std::stable_sort(rems.begin(), rems.end(), [](const Rem& a, const Rem& b) {
        if (a.rem_num != b.rem_num) return a.rem_num > b.rem_num;
        return a.order < b.order;
    });
    int extra = target - floor_sum;
    for (int i = 0; i < extra && i < static_cast<int>(rems.size()); ++i) out[rems[i].lang] += 1;
    return out;
}

} // namespace

QuotaConfig QuotaConfig::scaled_down(int divisor, const LanguageSet& langs) const {
    if (divisor <= 0) throw Error(ErrorCode::ConfigError, "quota divisor must be positive");
    QuotaConfig q = *this;
    const auto order = langs.codes();
    q.train_relevant = scale_group(train_relevant, divisor, rounding, order);
    q.train_noisy = scale_group(train_noisy, divisor, rounding, order);
    q.valid_relevant = scale_group(valid_relevant, divisor, rounding, order);
    q.valid_noisy = scale_group(valid_noisy, divisor, rounding, order);
    q.test_count = static_cast<int>((static_cast<long long>(test_count) * 2 + divisor) / (2LL * divisor));
    return q;
}

int QuotaConfig::train_total() const { return sum_counts(train_relevant) + sum_counts(train_noisy); }
int QuotaConfig::valid_total() const { return sum_counts(valid_relevant) + sum_counts(valid_noisy); }
int QuotaConfig::total() const { return train_total() + valid_total() + test_count; }

namespace {

bool has_body(const ingest::Article* a) { return a != nullptr && a->paragraphs.size() >= 2; }

std::string join_run(const std::vector<std::string>& paragraphs, int start, int len) {
    std::string out;
    for (int i = start; i < start + len; ++i) {
        if (i > start) out += "\n\n";
        out += paragraphs[static_cast<std::size_t>(i)];
    }
    return out;
}

/// Uniform contiguous run over paragraphs[1..]; the lead stays out.
std::pair<int, int> draw_run(std::size_t paragraph_count, std::mt19937_64& rng) {
    auto body = static_cast<std::uint64_t>(paragraph_count - 1);
    int start = 1 + static_cast<int>(rng_below(rng, body));
    auto max_len = static_cast<std::uint64_t>(paragraph_count) - static_cast<std::uint64_t>(start);
    int len = 1 + static_cast<int>(rng_below(rng, max_len));
    return {start, len};
}

} // namespace

std::pair<std::string, DocProvenance> sample_noisy_doc(
    std::span<const ingest::ParallelCluster> corpus, const std::string& exclude_cluster_page_id,
    const std::string& lang, std::mt19937_64& rng) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus[i].pivot.page_id == exclude_cluster_page_id) continue;
        if (has_body(corpus[i].article_for(lang))) eligible.push_back(i);
    }
    if (eligible.empty())
        throw Error(ErrorCode::NoEligibleSource,
                    "no other cluster has a usable " + lang + " article");
    const auto& cluster = corpus[eligible[rng_below(rng, eligible.size())]];
    const auto* article = cluster.article_for(lang);
    auto [start, len] = draw_run(article->paragraphs.size(), rng);
    DocProvenance prov;
    prov.cluster_page_id = cluster.pivot.page_id;
    prov.lang = lang;
    prov.page_id = article->page_id;
    prov.para_start = start;
    prov.para_len = len;
    return {join_run(article->paragraphs, start, len), prov};
}

RagSample build_sample(const ingest::ParallelCluster& cluster, const std::string& doc_lang,
                       DocType doc_type, std::mt19937_64& rng,
                       std::span<const ingest::ParallelCluster> corpus) {
    if (cluster.pivot.paragraphs.size() < 2)
        throw Error(ErrorCode::TooShort,
                    "pivot article " + cluster.pivot.page_id + " has fewer than 2 paragraphs");
    RagSample s;
    s.source = cluster.pivot.paragraphs[0];
    s.doc_lang = doc_lang;
    s.doc_type = doc_type;
    s.cluster_page_id = cluster.pivot.page_id;
    if (doc_type == DocType::relevant) {
        const auto* article = cluster.article_for(doc_lang);
        if (article == nullptr)
            throw Error(ErrorCode::MissingParallel,
                        "cluster " + cluster.pivot.page_id + " has no " + doc_lang + " article");
        if (article->paragraphs.size() < 2)
            throw Error(ErrorCode::TooShort, "article " + article->page_id +
                                                 " has fewer than 2 paragraphs");
        auto [start, len] = draw_run(article->paragraphs.size(), rng);
        s.doc = join_run(article->paragraphs, start, len);
        s.doc_prov = {cluster.pivot.page_id, doc_lang, article->page_id, start, len};
    } else {
        auto [doc, prov] = sample_noisy_doc(corpus, cluster.pivot.page_id, doc_lang, rng);
        s.doc = std::move(doc);
        s.doc_prov = std::move(prov);
    }
    return s;
}

namespace {

struct Cell {
    Split split;
    DocType type;
    std::string lang;
    int want = 0;
    std::size_t order = 0; // canonical tie-break
    std::string name() const {
        return std::string(split_name(split)) + "/" + doc_type_name(type) + "/" + lang;
    }
};

bool eligible_relevant(const ingest::ParallelCluster& c, const std::string& lang) {
    return c.pivot.paragraphs.size() >= 2 && has_body(c.article_for(lang));
}

} // namespace

Dataset assign_quotas(const std::vector<ingest::ParallelCluster>& clusters,
                      const QuotaConfig& quota) {
    // Stable working order: by pivot page_id, then one seeded shuffle.
    std::vector<std::size_t> idx(clusters.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return clusters[a].pivot.page_id < clusters[b].pivot.page_id;
    });
    std::vector<const ingest::ParallelCluster*> sorted;
    sorted.reserve(idx.size());
    for (auto i : idx) sorted.push_back(&clusters[i]);
    std::span<const ingest::ParallelCluster> corpus_span(clusters);
    // sample_noisy_doc scans in a fixed order; hand it the sorted view.
    std::vector<ingest::ParallelCluster> sorted_copy;
    sorted_copy.reserve(sorted.size());
    for (const auto* c : sorted) sorted_copy.push_back(*c);

    std::mt19937_64 rng(quota.seed);
    std::vector<std::size_t> order(sorted.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle_deterministic(order, rng);

    std::vector<char> used(sorted.size(), 0);

    // Per-language count of clusters usable as a noisy-doc source.
    std::map<std::string, int> noisy_sources;
    auto langs_in_quota = [&] {
        std::vector<std::string> langs;
        for (const auto* group :
             {&quota.train_relevant, &quota.train_noisy, &quota.valid_relevant, &quota.valid_noisy})
            for (const auto& [lang, n] : *group)
                if (std::find(langs.begin(), langs.end(), lang) == langs.end()) langs.push_back(lang);
        return langs;
    }();
    for (const auto& lang : langs_in_quota) {
        int n = 0;
        for (const auto* c : sorted)
            if (has_body(c->article_for(lang))) ++n;
        noisy_sources[lang] = n;
    }

    auto eligible_noisy = [&](const ingest::ParallelCluster& c, const std::string& lang) {
        if (c.pivot.paragraphs.size() < 2) return false;
        int others = noisy_sources[lang] - (has_body(c.article_for(lang)) ? 1 : 0);
        return others >= 1;
    };
    auto eligible_test = [&](const ingest::ParallelCluster& c) {
        if (c.pivot.paragraphs.size() < 2) return false;
        for (const auto& lang : kTestDocLangs)
            if (!has_body(c.article_for(lang))) return false;
        return true;
    };

    Dataset out;
    std::map<std::string, int> split_counters;
    auto next_id = [&](Split split) {
        int n = split_counters[split_name(split)]++;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%s-%06d", split_name(split), n);
        return std::string(buf);
    };

    // Test rows first: they are the most constrained (three languages at once).
    {
        int taken = 0;
        for (auto oi : order) {
            if (taken >= quota.test_count) break;
            if (used[oi]) continue;
            const auto& c = *sorted[oi];
            if (!eligible_test(c)) continue;
            used[oi] = 1;
            ++taken;
            TestSample t;
            t.id = next_id(Split::test);
            t.source = c.pivot.paragraphs[0];
            // The reference translation is the target-language parallel lead.
            t.translation = c.article_for("zh")->paragraphs[0];
            t.cluster_page_id = c.pivot.page_id;
            for (const auto& lang : kTestDocLangs) {
                const auto* article = c.article_for(lang);
                auto [start, len] = draw_run(article->paragraphs.size(), rng);
                std::string doc = join_run(article->paragraphs, start, len);
                DocProvenance prov{c.pivot.page_id, lang, article->page_id, start, len};
                if (lang == "en") t.doc_en = doc;
                else if (lang == "zh") t.doc_zh = doc;
                else t.doc_de = doc;
                t.doc_prov[lang] = prov;
            }
            out.test.push_back(std::move(t));
        }
        if (taken < quota.test_count)
            throw Error(ErrorCode::QuotaUnsatisfiable,
                        "cell test: short by " + std::to_string(quota.test_count - taken));
    }

    // Remaining cells, most constrained first (fewest eligible unused
    // clusters); the count is recomputed after every fill.
    std::vector<Cell> cells;
    std::size_t cell_order = 0;
    auto add_cells = [&](Split split, DocType type, const std::map<std::string, int>& group) {
        for (const auto& [lang, n] : group)
            if (n > 0) cells.push_back({split, type, lang, n, cell_order++});
    };
    add_cells(Split::train, DocType::relevant, quota.train_relevant);
    add_cells(Split::train, DocType::noisy, quota.train_noisy);
    add_cells(Split::valid, DocType::relevant, quota.valid_relevant);
    add_cells(Split::valid, DocType::noisy, quota.valid_noisy);

    auto cell_eligible = [&](const Cell& cell, const ingest::ParallelCluster& c) {
        return cell.type == DocType::relevant ? eligible_relevant(c, cell.lang)
                                              : eligible_noisy(c, cell.lang);
    };

    std::vector<char> done(cells.size(), 0);
    for (std::size_t round = 0; round < cells.size(); ++round) {
        // Pick the unfilled cell with the fewest eligible unused clusters.
        std::size_t best = cells.size();
        long long best_count = -1;
        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            if (done[ci]) continue;
            long long n = 0;
            for (std::size_t oi = 0; oi < sorted.size(); ++oi)
                if (!used[oi] && cell_eligible(cells[ci], *sorted[oi])) ++n;
            if (best == cells.size() || n < best_count ||
                (n == best_count && cells[ci].order < cells[best].order)) {
                best = ci;
                best_count = n;
            }
        }
        if (best == cells.size()) break;
        Cell& cell = cells[best];
        done[best] = 1;
        int taken = 0;
        for (auto oi : order) {
            if (taken >= cell.want) break;
            if (used[oi]) continue;
            const auto& c = *sorted[oi];
            if (!cell_eligible(cell, c)) continue;
            used[oi] = 1;
            ++taken;
            RagSample s = build_sample(c, cell.lang, cell.type, rng,
                                       std::span<const ingest::ParallelCluster>(sorted_copy));
            s.split = cell.split;
            s.id = next_id(cell.split);
            out.samples.push_back(std::move(s));
        }
        if (taken < cell.want)
            throw Error(ErrorCode::QuotaUnsatisfiable,
                        "cell " + cell.name() + ": short by " + std::to_string(cell.want - taken));
    }
    return out;
}

FieldStats summarize_lengths(std::vector<long long> lengths) {
    FieldStats st;
    st.count = lengths.size();
    if (lengths.empty()) return st;
    std::sort(lengths.begin(), lengths.end());
    st.min = lengths.front();
    st.max = lengths.back();
    long double sum = 0;
    for (auto v : lengths) sum += static_cast<long double>(v);
    st.mean = static_cast<double>(sum / static_cast<long double>(lengths.size()));
    // Nearest-rank percentile: the ceil(0.95 n)-th smallest value.
    auto rank = static_cast<std::size_t>(
        std::ceil(0.95L * static_cast<long double>(lengths.size())));
    if (rank == 0) rank = 1;
    st.p95 = lengths[rank - 1];
    return st;
}

LengthStats compute_stats(const Dataset& dataset, const Tokenizer& tokenizer) {
    std::map<std::string, std::vector<long long>> lengths;
    auto push = [&](const std::string& key, const std::string& text) {
        lengths[key].push_back(static_cast<long long>(tokenizer.count_tokens(text)));
    };
    for (const auto& s : dataset.samples) {
        push("source", s.source);
        push("doc:" + s.doc_lang, s.doc);
        if (s.translation && !s.translation->empty()) push("target", *s.translation);
    }
    for (const auto& t : dataset.test) {
        push("source", t.source);
        push("doc:en", t.doc_en);
        push("doc:zh", t.doc_zh);
        push("doc:de", t.doc_de);
        if (!t.translation.empty()) push("target", t.translation);
    }
    LengthStats out;
    for (auto& [key, vals] : lengths) out[key] = summarize_lengths(std::move(vals));
    return out;
}

namespace {

Json prov_to_json(const DocProvenance& p) {
    return Json{{"cluster_page_id", p.cluster_page_id},
                {"lang", p.lang},
                {"page_id", p.page_id},
                {"para_start", p.para_start},
                {"para_len", p.para_len}};
}

DocProvenance prov_from_json(const Json& obj) {
    DocProvenance p;
    p.cluster_page_id = obj.at("cluster_page_id").get<std::string>();
    p.lang = obj.at("lang").get<std::string>();
    p.page_id = obj.at("page_id").get<std::string>();
    p.para_start = obj.at("para_start").get<int>();
    p.para_len = obj.at("para_len").get<int>();
    return p;
}

} // namespace

Json rag_sample_to_json(const RagSample& s) {
    Json obj{{"id", s.id},
             {"source", s.source},
             {"doc", s.doc},
             {"doc_lang", s.doc_lang},
             {"doc_type", doc_type_name(s.doc_type)},
             {"split", split_name(s.split)},
             {"cluster_page_id", s.cluster_page_id},
             {"provenance", prov_to_json(s.doc_prov)}};
    obj["translation"] = s.translation ? Json(*s.translation) : Json(nullptr);
    obj["relevance_score"] = s.relevance_score ? Json(*s.relevance_score) : Json(nullptr);
    return obj;
}

RagSample rag_sample_from_json(const Json& obj) {
    RagSample s;
    s.id = obj.at("id").get<std::string>();
    s.source = obj.at("source").get<std::string>();
    s.doc = obj.at("doc").get<std::string>();
    s.doc_lang = obj.at("doc_lang").get<std::string>();
    s.doc_type = doc_type_from_name(obj.at("doc_type").get<std::string>());
    s.split = split_from_name(obj.at("split").get<std::string>());
    s.cluster_page_id = obj.value("cluster_page_id", std::string());
    if (obj.contains("provenance") && obj["provenance"].is_object())
        s.doc_prov = prov_from_json(obj["provenance"]);
    if (obj.contains("translation") && obj["translation"].is_string())
        s.translation = obj["translation"].get<std::string>();
    if (obj.contains("relevance_score") && obj["relevance_score"].is_number())
        s.relevance_score = obj["relevance_score"].get<int>();
    return s;
}

Json test_sample_to_json(const TestSample& s) {
    Json prov = Json::object();
    for (const auto& [lang, p] : s.doc_prov) prov[lang] = prov_to_json(p);
    return Json{{"id", s.id},
                {"source", s.source},
                {"doc_en", s.doc_en},
                {"doc_zh", s.doc_zh},
                {"doc_de", s.doc_de},
                {"translation", s.translation},
                {"split", "test"},
                {"cluster_page_id", s.cluster_page_id},
                {"provenance", prov}};
}

TestSample test_sample_from_json(const Json& obj) {
    TestSample s;
    s.id = obj.at("id").get<std::string>();
    s.source = obj.at("source").get<std::string>();
    s.doc_en = obj.value("doc_en", std::string());
    s.doc_zh = obj.value("doc_zh", std::string());
    s.doc_de = obj.value("doc_de", std::string());
    s.translation = obj.value("translation", std::string());
    s.cluster_page_id = obj.value("cluster_page_id", std::string());
    if (obj.contains("provenance") && obj["provenance"].is_object())
        for (const auto& [lang, p] : obj["provenance"].items())
            s.doc_prov[lang] = prov_from_json(p);
    return s;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                   const Json& manifest_extra) {
    std::filesystem::create_directories(dir);
    std::map<std::string, int> cell_counts;
    {
        JsonlWriter train(dir / "train.jsonl");
        JsonlWriter valid(dir / "valid.jsonl");
        for (const auto& s : dataset.samples) {
            std::string cell = std::string(split_name(s.split)) + "/" +
                               doc_type_name(s.doc_type) + "/" + s.doc_lang;
            ++cell_counts[cell];
            (s.split == Split::train ? train : valid).write(rag_sample_to_json(s));
        }
        train.close();
        valid.close();
    }
    {
        JsonlWriter test(dir / "test.jsonl");
        for (const auto& t : dataset.test) test.write(test_sample_to_json(t));
        test.close();
    }
    Json manifest{{"artifact", "ragforge.dataset"},
                  {"train_count", 0},
                  {"valid_count", 0},
                  {"test_count", dataset.test.size()},
                  {"cells", cell_counts},
                  {"files",
                   Json{{"train.jsonl", hash_file(dir / "train.jsonl")},
                        {"valid.jsonl", hash_file(dir / "valid.jsonl")},
                        {"test.jsonl", hash_file(dir / "test.jsonl")}}}};
    std::size_t train_n = 0, valid_n = 0;
    for (const auto& s : dataset.samples) (s.split == Split::train ? train_n : valid_n) += 1;
    manifest["train_count"] = train_n;
    manifest["valid_count"] = valid_n;
    for (const auto& [k, v] : manifest_extra.items()) manifest[k] = v;
    save_json_file(dir / "manifest.json", manifest);
}

Json ValidationReport::to_json() const {
    Json arr = Json::array();
    for (const auto& c : checks)
        arr.push_back(Json{{"name", c.name},
                           {"passed", c.passed},
                           {"fatal", c.fatal},
                           {"detail", c.detail}});
    return Json{{"ok", ok}, {"checks", arr}};
}

ValidationReport validate_dataset(const std::filesystem::path& dir, const QuotaConfig* expected) {
    ValidationReport rep;
    auto check = [&](const std::string& name, bool passed, const std::string& detail,
                     bool fatal = true) {
        rep.checks.push_back({name, passed, fatal, detail});
        if (fatal && !passed) rep.ok = false;
    };

    Dataset ds = read_dataset(dir);

    std::set<std::string> ids;
    std::vector<std::string> dup_ids;
    for (const auto& s : ds.samples)
        if (!ids.insert(s.id).second) dup_ids.push_back(s.id);
    for (const auto& t : ds.test)
        if (!ids.insert(t.id).second) dup_ids.push_back(t.id);
    check("unique-ids", dup_ids.empty(),
          dup_ids.empty() ? std::to_string(ids.size()) + " ids"
                          : "duplicate id " + dup_ids.front());

    // Cell recount vs the manifest (and the quota, when given).
    std::map<std::string, int> cells;
    for (const auto& s : ds.samples)
        ++cells[std::string(split_name(s.split)) + "/" + doc_type_name(s.doc_type) + "/" +
                s.doc_lang];
    auto manifest_path = dir / "manifest.json";
    if (std::filesystem::exists(manifest_path)) {
        Json manifest = load_json_file(manifest_path);
        Json recorded = manifest.value("cells", Json::object());
        bool match = true;
        std::string detail;
        for (const auto& [cell, n] : recorded.items())
            if (!cells.count(cell) || cells[cell] != n.get<int>()) {
                match = false;
                detail = "cell " + cell + " recounts to " +
                         std::to_string(cells.count(cell) ? cells[cell] : 0) + ", manifest says " +
                         n.dump();
                break;
            }
        if (match && recorded.size() != cells.size()) {
            match = false;
            detail = "manifest lists " + std::to_string(recorded.size()) + " cells, dataset has " +
                     std::to_string(cells.size());
        }
        check("manifest-cells", match, detail);
        auto test_n = manifest.value("test_count", static_cast<std::size_t>(0));
        check("manifest-test-count", test_n == ds.test.size(),
              std::to_string(ds.test.size()) + " test rows vs manifest " + std::to_string(test_n));
    }
    if (expected != nullptr) {
        auto expect_cell = [&](Split split, DocType type, const std::map<std::string, int>& group) {
            for (const auto& [lang, n] : group) {
                std::string cell =
                    std::string(split_name(split)) + "/" + doc_type_name(type) + "/" + lang;
                int got = cells.count(cell) ? cells[cell] : 0;
                check("quota:" + cell, got == n,
                      std::to_string(got) + " vs expected " + std::to_string(n));
            }
        };
        expect_cell(Split::train, DocType::relevant, expected->train_relevant);
        expect_cell(Split::train, DocType::noisy, expected->train_noisy);
        expect_cell(Split::valid, DocType::relevant, expected->valid_relevant);
        expect_cell(Split::valid, DocType::noisy, expected->valid_noisy);
        check("quota:test", static_cast<int>(ds.test.size()) == expected->test_count,
              std::to_string(ds.test.size()) + " vs expected " +
                  std::to_string(expected->test_count));
    }

    // Noisy fractions, informational.
    auto fraction = [&](Split split) {
        long long noisy = 0, total = 0;
        for (const auto& s : ds.samples)
            if (s.split == split) {
                ++total;
                if (s.doc_type == DocType::noisy) ++noisy;
            }
        return total == 0 ? 0.0 : 100.0 * static_cast<double>(noisy) / static_cast<double>(total);
    };
    char frac[64];
    std::snprintf(frac, sizeof(frac), "train %.2f%%, valid %.2f%%", fraction(Split::train),
                  fraction(Split::valid));
    check("noisy-fractions", true, frac, false);

    // Provenance soundness.
    std::string bad;
    for (const auto& s : ds.samples) {
        bool own = s.doc_prov.cluster_page_id == s.cluster_page_id;
        if (s.doc_type == DocType::noisy && own) {
            bad = s.id + ": noisy doc drawn from its own cluster";
            break;
        }
        if (s.doc_type == DocType::relevant && !own) {
            bad = s.id + ": relevant doc drawn from a different cluster";
            break;
        }
        if (s.doc_prov.para_start < 1 || s.doc_prov.para_len < 1) {
            bad = s.id + ": paragraph run touches the lead";
            break;
        }
    }
    check("doc-provenance", bad.empty(), bad);

    std::string bad_test;
    for (const auto& t : ds.test) {
        if (t.doc_en.empty() || t.doc_zh.empty() || t.doc_de.empty()) {
            bad_test = t.id + ": missing a golden document";
            break;
        }
        for (const auto& [lang, p] : t.doc_prov)
            if (p.para_start < 1 || p.para_len < 1) {
                bad_test = t.id + ": " + lang + " run touches the lead";
                break;
            }
        if (!bad_test.empty()) break;
    }
    check("test-docs", bad_test.empty(), bad_test);

    // One cluster, one sample: cluster ids must never repeat across rows.
    std::set<std::string> clusters;
    std::string reused;
    for (const auto& s : ds.samples)
        if (!s.cluster_page_id.empty() && !clusters.insert(s.cluster_page_id).second) {
            reused = s.id;
            break;
        }
    if (reused.empty())
        for (const auto& t : ds.test)
            if (!t.cluster_page_id.empty() && !clusters.insert(t.cluster_page_id).second) {
                reused = t.id;
                break;
            }
    check("cluster-disjoint", reused.empty(),
          reused.empty() ? "" : reused + ": cluster used by more than one sample");

    int missing_translation = 0;
    for (const auto& s : ds.samples)
        if (!s.translation || s.translation->empty()) ++missing_translation;
    check("translations-present", missing_translation == 0,
          missing_translation == 0
              ? "all filled"
              : std::to_string(missing_translation) + " rows not yet annotated",
          false);

    return rep;
}

Dataset read_dataset(const std::filesystem::path& dir) {
    Dataset out;
    auto read_split = [&](const char* file) {
        auto path = dir / file;
        if (!std::filesystem::exists(path)) return;
        for_each_jsonl(path, [&](std::size_t, const Json& obj) {
            out.samples.push_back(rag_sample_from_json(obj));
        });
    };
    read_split("train.jsonl");
    read_split("valid.jsonl");
    auto test_path = dir / "test.jsonl";
    if (std::filesystem::exists(test_path))
        for_each_jsonl(test_path, [&](std::size_t, const Json& obj) {
            out.test.push_back(test_sample_from_json(obj));
        });
    return out;
}

} // namespace ragforge::corpus
