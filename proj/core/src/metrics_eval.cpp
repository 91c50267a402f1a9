#include "ragforge/metrics_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "ragforge/errors.hpp"
#include "ragforge/hashing.hpp"
#include "ragforge/text.hpp"

namespace ragforge::eval {

namespace {

bool is_split_punct(char32_t cp) {
    if (cp < 0x80)
        return !(cp >= '0' && cp <= '9') && !(cp >= 'a' && cp <= 'z') &&
               !(cp >= 'A' && cp <= 'Z') && cp > ' ';
    return (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x3000 && cp <= 0x303F) ||
           (cp >= 0xFF00 && cp <= 0xFF65) || cp == 0x00B7 || cp == 0x2026 || cp == 0x00AB ||
           cp == 0x00BB;
}

} // namespace

std::vector<std::string> bleu_tokenize(const std::string& text, BleuConfig::Tokenization mode) {
    std::vector<std::string> tokens;
    std::string pending;
    auto flush = [&] {
        if (!pending.empty()) {
            tokens.push_back(pending);
            pending.clear();
        }
    };
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t start = i;
        char32_t cp = decode_utf8(text, i);
        std::string_view raw(text.data() + start, i - start);
        if (cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == 0x3000) {
            flush();
            continue;
        }
        if (mode == BleuConfig::Tokenization::char_zh && is_cjk(cp)) {
            flush();
            tokens.emplace_back(raw);
            continue;
        }
        if (is_split_punct(cp)) {
            flush();
            tokens.emplace_back(raw);
            continue;
        }
        pending.append(raw);
    }
    flush();
    return tokens;
}

namespace {

// N-grams keyed by tokens joined with an unprintable separator.
std::map<std::string, long long> ngram_counts(const std::vector<std::string>& tokens, int n) {
    std::map<std::string, long long> out;
    if (static_cast<int>(tokens.size()) < n) return out;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (int j = 0; j < n; ++j) {
            if (j) key += '\x1f';
            key += tokens[i + j];
        }
        ++out[key];
    }
    return out;
}

} // namespace

double corpus_bleu(const std::vector<std::string>& hypotheses,
                   const std::vector<std::string>& references, const BleuConfig& config) {
    if (hypotheses.size() != references.size())
        throw Error(ErrorCode::LengthMismatch,
                    std::to_string(hypotheses.size()) + " hypotheses vs " +
                        std::to_string(references.size()) + " references");
    if (hypotheses.empty())
        throw Error(ErrorCode::LengthMismatch, "empty hypothesis and reference lists");
    const int max_n = std::max(config.max_ngram, 1);
    std::vector<long long> correct(max_n, 0), total(max_n, 0);
    long long hyp_len = 0, ref_len = 0;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        auto ht = bleu_tokenize(hypotheses[i], config.tokenization);
        auto rt = bleu_tokenize(references[i], config.tokenization);
        hyp_len += static_cast<long long>(ht.size());
        ref_len += static_cast<long long>(rt.size());
        for (int n = 1; n <= max_n; ++n) {
            auto hm = ngram_counts(ht, n);
            if (hm.empty()) continue;
            auto rm = ngram_counts(rt, n);
            for (const auto& [gram, count] : hm) {
                total[n - 1] += count;
                auto it = rm.find(gram);
                if (it != rm.end()) correct[n - 1] += std::min(count, it->second);
            }
        }
    }
    if (hyp_len == 0) return 0.0;

    double log_sum = 0.0;
    double smooth = 1.0;
    for (int n = 1; n <= max_n; ++n) {
        long long t = total[n - 1], c = correct[n - 1];
        double p = 0.0;
        if (config.smoothing == BleuConfig::Smoothing::add_k && n > 1) {
            p = (static_cast<double>(c) + config.add_k) / (static_cast<double>(t) + config.add_k);
        } else if (t == 0) {
            p = 0.0;
        } else if (c == 0) {
            if (config.smoothing == BleuConfig::Smoothing::exp) {
                smooth *= 2.0;
                p = 1.0 / (smooth * static_cast<double>(t));
            } else {
                p = 0.0;
            }
        } else {
            p = static_cast<double>(c) / static_cast<double>(t);
        }
        if (p <= 0.0) return 0.0;
        log_sum += std::log(p);
    }
    double bp = 1.0;
    if (hyp_len < ref_len)
        bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    return 100.0 * bp * std::exp(log_sum / static_cast<double>(max_n));
}

double sentence_bleu(const std::string& hypothesis, const std::string& reference,
                     BleuConfig config) {
    return corpus_bleu({hypothesis}, {reference}, config);
}

std::string testset_hash(const std::vector<corpus::TestSample>& testset) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : testset) h = fnv1a64(corpus::test_sample_to_json(t).dump(), h);
    return to_hex64(h);
}

std::vector<std::size_t> judge_subset_indices(const std::string& testset_hash_hex,
                                              std::size_t testset_size, std::size_t size,
                                              std::uint64_t seed) {
    std::vector<std::size_t> idx(testset_size);
    std::iota(idx.begin(), idx.end(), 0);
    std::uint64_t h = fnv1a64(testset_hash_hex) ^ seed;
    std::mt19937_64 rng(h);
    shuffle_deterministic(idx, rng);
    idx.resize(std::min(size, testset_size));
    std::sort(idx.begin(), idx.end());
    return idx;
}

namespace {

Json bleu_config_json(const BleuConfig& cfg) {
    const char* smoothing = cfg.smoothing == BleuConfig::Smoothing::none  ? "none"
                            : cfg.smoothing == BleuConfig::Smoothing::exp ? "exp"
                                                                          : "add-k";
    const char* tok =
        cfg.tokenization == BleuConfig::Tokenization::char_zh ? "char-zh" : "intl";
    return Json{{"max_ngram", cfg.max_ngram}, {"smoothing", smoothing}, {"tokenization", tok}};
}

struct DocChoice {
    std::string doc;
    bool flagged = false;
    std::string doc_lang;      // overrides the setting-level label when set
    std::string noise_cluster; // robustness provenance
};

using DocProvider = std::function<DocChoice(std::size_t, const corpus::TestSample&)>;

EvalReport run_core(Translator& model, const std::vector<corpus::TestSample>& testset,
                    const std::string& setting, const std::string& doc_lang_label,
                    const DocProvider& doc_of, const RunOptions& options,
                    const Json& setting_manifest) {
    EvalReport rep;
    rep.setting = setting;
    rep.testset_hash = testset_hash(testset);

    for (std::size_t i = 0; i < testset.size(); ++i) {
        const auto& t = testset[i];
        SampleRow row;
        row.id = t.id;
        DocChoice choice = doc_of(i, t);
        row.doc_lang = choice.doc_lang.empty() ? doc_lang_label : choice.doc_lang;
        row.noise_cluster = choice.noise_cluster;
        row.flagged = choice.flagged;
        if (choice.flagged) ++rep.flagged_count;
        try {
            auto res = model.translate_with_doc(t.source, choice.doc, row.doc_lang);
            row.hypothesis = res.translation;
            row.relevance_score = res.relevance_score;
        } catch (const Error& e) {
            row.failed = true;
            row.error = e.what();
            ++rep.failure_count;
        }
        rep.rows.push_back(std::move(row));
    }

    std::vector<std::string> hyps, refs;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        if (rep.rows[i].failed) continue;
        hyps.push_back(rep.rows[i].hypothesis);
        refs.push_back(testset[i].translation);
    }
    BleuConfig bleu_cfg;
    rep.bleu = hyps.empty() ? 0.0 : corpus_bleu(hyps, refs, bleu_cfg);

    if (options.judge && options.judge_gateway != nullptr && !testset.empty()) {
        auto subset = judge_subset_indices(rep.testset_hash, testset.size(),
                                           static_cast<std::size_t>(options.judge_subset), 0);
        double grb_sum = 0, grf_sum = 0;
        int judged = 0;
        for (auto idx : subset) {
            auto& row = rep.rows[idx];
            if (row.failed) continue;
            const auto& t = testset[idx];
            auto grb = options.judge_gateway->judge(t.source, row.hypothesis, t.translation,
                                                    gateway::JudgeMode::grb);
            auto grf = options.judge_gateway->judge(t.source, row.hypothesis, std::nullopt,
                                                    gateway::JudgeMode::grf);
            row.grb = grb.score;
            row.grf = grf.score;
            grb_sum += grb.score;
            grf_sum += grf.score;
            ++judged;
        }
        rep.judged_count = judged;
        if (judged > 0) {
            rep.judge_grb_mean = grb_sum / judged;
            rep.judge_grf_mean = grf_sum / judged;
        }
    }

    if (options.scorer != nullptr) {
        double sum = 0;
        int n = 0;
        for (std::size_t i = 0; i < rep.rows.size(); ++i) {
            auto& row = rep.rows[i];
            if (row.failed) continue;
            row.external =
                options.scorer->score(testset[i].source, row.hypothesis, testset[i].translation);
            sum += *row.external;
            ++n;
        }
        if (n > 0) rep.external_mean = sum / n;
    }

    rep.manifest = Json{{"setting", setting},
                        {"testset_hash", rep.testset_hash},
                        {"testset_size", testset.size()},
                        {"seed", options.seed},
                        {"counts", Json{{"total", rep.rows.size()},
                                        {"succeeded", rep.rows.size() - rep.failure_count},
                                        {"failed", rep.failure_count},
                                        {"flagged", rep.flagged_count}}},
                        {"judge", Json{{"enabled", options.judge},
                                       {"subset", options.judge_subset},
                                       {"judged", rep.judged_count}}},
                        {"bleu_config", bleu_config_json(bleu_cfg)}};
    for (const auto& [k, v] : setting_manifest.items()) rep.manifest[k] = v;
    for (const auto& [k, v] : options.manifest_extra.items()) rep.manifest[k] = v;
    return rep;
}

} // namespace

EvalReport run_empty(Translator& model, const std::vector<corpus::TestSample>& testset,
                     const RunOptions& options) {
    return run_core(
        model, testset, "empty", "",
        [](std::size_t, const corpus::TestSample&) { return DocChoice{}; }, options,
        Json::object());
}

EvalReport run_golden(Translator& model, const std::vector<corpus::TestSample>& testset,
                      const std::string& doc_lang, const RunOptions& options) {
    auto doc_for = [&doc_lang](const corpus::TestSample& t) -> const std::string& {
        if (doc_lang == "en") return t.doc_en;
        if (doc_lang == "zh") return t.doc_zh;
        if (doc_lang == "de") return t.doc_de;
        throw Error(ErrorCode::ConfigError, "golden setting supports en, zh, de; got " + doc_lang);
    };
    for (const auto& t : testset)
        if (doc_for(t).empty())
            throw Error(ErrorCode::ConfigError,
                        "test row " + t.id + " has no golden " + doc_lang + " document");
    return run_core(
        model, testset, "golden-" + doc_lang, doc_lang,
        [&](std::size_t, const corpus::TestSample& t) {
            return DocChoice{doc_for(t), false, doc_lang, ""};
        },
        options, Json{{"doc_lang", doc_lang}});
}

EvalReport run_robustness(Translator& model, const std::vector<corpus::TestSample>& testset,
                          const std::vector<ingest::ParallelCluster>& noise_corpus,
                          const RunOptions& options) {
    std::set<std::string> test_clusters;
    for (const auto& t : testset) test_clusters.insert(t.cluster_page_id);
    std::vector<ingest::ParallelCluster> pool;
    for (const auto& c : noise_corpus)
        if (!test_clusters.count(c.pivot.page_id)) pool.push_back(c);
    std::sort(pool.begin(), pool.end(),
              [](const auto& a, const auto& b) { return a.pivot.page_id < b.pivot.page_id; });

    auto rng = std::make_shared<std::mt19937_64>(options.seed);
    auto langs = options.languages.codes();
    auto noise_of = [&, rng](std::size_t, const corpus::TestSample& t) {
        const auto& lang = langs[rng_below(*rng, langs.size())];
        std::pair<std::string, corpus::DocProvenance> drawn;
        try {
            drawn = corpus::sample_noisy_doc(pool, t.cluster_page_id, lang, *rng);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoEligibleSource) throw;
            bool ok = false;
            for (const auto& alt : langs) {
                if (alt == lang) continue;
                try {
                    drawn = corpus::sample_noisy_doc(pool, t.cluster_page_id, alt, *rng);
                    ok = true;
                    break;
                } catch (const Error& e2) {
                    if (e2.code() != ErrorCode::NoEligibleSource) throw;
                }
            }
            if (!ok) throw;
        }
        // Provenance check: noise never comes from any test cluster.
        if (test_clusters.count(drawn.second.cluster_page_id))
            throw Error(ErrorCode::NoEligibleSource, "noise drawn from a test cluster");
        return DocChoice{drawn.first, false, drawn.second.lang, drawn.second.cluster_page_id};
    };
    return run_core(model, testset, "noisy", "", noise_of, options,
                    Json{{"noise_pool_size", pool.size()}});
}

RetrieverHandle make_bm25_handle(const retrieval::Bm25Index& index,
                                 const std::vector<ingest::Passage>& passages) {
    auto texts = std::make_shared<std::map<std::string, std::string>>();
    for (const auto& p : passages) (*texts)[p.id()] = p.text;
    RetrieverHandle h;
    h.id = "bm25";
    h.query = [&index](const std::string& q, int k) { return index.query(q, k); };
    h.text_of = [texts](const std::string& id) {
        auto it = texts->find(id);
        return it == texts->end() ? std::string() : it->second;
    };
    return h;
}

RetrieverHandle make_dense_handle(const retrieval::DenseIndex& index,
                                  retrieval::Embedder& embedder,
                                  const std::vector<ingest::Passage>& passages) {
    auto texts = std::make_shared<std::map<std::string, std::string>>();
    for (const auto& p : passages) (*texts)[p.id()] = p.text;
    RetrieverHandle h;
    h.id = "dense";
    h.query = [&index, &embedder](const std::string& q, int k) {
        return index.query(q, embedder, k);
    };
    h.text_of = [texts](const std::string& id) {
        auto it = texts->find(id);
        return it == texts->end() ? std::string() : it->second;
    };
    return h;
}

EvalReport run_fullwiki(Translator& model, const std::vector<corpus::TestSample>& testset,
                        const RetrieverHandle& retriever, int k, const RunOptions& options) {
    auto doc_of = [&](std::size_t, const corpus::TestSample& t) {
        auto hits = retriever.query(t.source, k);
        if (hits.empty()) return DocChoice{"", true, "", ""};
        std::string doc;
        for (std::size_t i = 0; i < hits.size(); ++i) {
            if (i) doc += "\n\n";
            doc += retriever.text_of(hits[i].id);
        }
        return DocChoice{doc, false, "", ""};
    };
    return run_core(model, testset, "fullwiki-" + retriever.id, "", doc_of, options,
                    Json{{"retriever", retriever.id}, {"k", k}});
}

ComparisonTable aggregate(const std::vector<EvalReport>& reports) {
    if (reports.empty()) throw Error(ErrorCode::TestsetMismatch, "no reports to aggregate");
    for (const auto& r : reports)
        if (r.testset_hash != reports.front().testset_hash)
            throw Error(ErrorCode::TestsetMismatch,
                        "report '" + r.setting + "' was built from a different testset (" +
                            r.testset_hash + " vs " + reports.front().testset_hash + ")");
    ComparisonTable table;
    Json rows = Json::array();
    std::ostringstream text;
    char line[256];
    std::snprintf(line, sizeof(line), "%-18s %8s %8s %8s %7s %7s\n", "setting", "BLEU", "GRB",
                  "GRF", "judged", "failed");
    text << line;
    for (const auto& r : reports) {
        Json row{{"setting", r.setting},
                 {"bleu", r.bleu},
                 {"judged", r.judged_count},
                 {"failed", r.failure_count},
                 {"flagged", r.flagged_count}};
        row["grb"] = r.judge_grb_mean ? Json(*r.judge_grb_mean) : Json(nullptr);
        row["grf"] = r.judge_grf_mean ? Json(*r.judge_grf_mean) : Json(nullptr);
        row["external"] = r.external_mean ? Json(*r.external_mean) : Json(nullptr);
        rows.push_back(std::move(row));
        char grb[16] = "-", grf[16] = "-";
        if (r.judge_grb_mean) std::snprintf(grb, sizeof(grb), "%.1f", *r.judge_grb_mean);
        if (r.judge_grf_mean) std::snprintf(grf, sizeof(grf), "%.1f", *r.judge_grf_mean);
        std::snprintf(line, sizeof(line), "%-18s %8.2f %8s %8s %7d %7d\n", r.setting.c_str(),
                      r.bleu, grb, grf, r.judged_count, r.failure_count);
        text << line;
    }
    table.json = Json{{"testset_hash", reports.front().testset_hash}, {"rows", rows}};
    table.text = text.str();
    return table;
}

namespace {

Json row_to_json(const SampleRow& r) {
    Json obj{{"id", r.id},
             {"doc_lang", r.doc_lang},
             {"hypothesis", r.hypothesis},
             {"relevance_score", r.relevance_score},
             {"failed", r.failed},
             {"flagged", r.flagged},
             {"error", r.error},
             {"noise_cluster", r.noise_cluster}};
    obj["grb"] = r.grb ? Json(*r.grb) : Json(nullptr);
    obj["grf"] = r.grf ? Json(*r.grf) : Json(nullptr);
    obj["external"] = r.external ? Json(*r.external) : Json(nullptr);
    return obj;
}

SampleRow row_from_json(const Json& obj) {
    SampleRow r;
    r.id = obj.at("id").get<std::string>();
    r.doc_lang = obj.value("doc_lang", std::string());
    r.hypothesis = obj.value("hypothesis", std::string());
    r.relevance_score = obj.value("relevance_score", 0);
    r.failed = obj.value("failed", false);
    r.flagged = obj.value("flagged", false);
    r.error = obj.value("error", std::string());
    r.noise_cluster = obj.value("noise_cluster", std::string());
    if (obj.contains("grb") && obj["grb"].is_number()) r.grb = obj["grb"].get<int>();
    if (obj.contains("grf") && obj["grf"].is_number()) r.grf = obj["grf"].get<int>();
    if (obj.contains("external") && obj["external"].is_number())
        r.external = obj["external"].get<double>();
    return r;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

} // namespace

void write_report(const EvalReport& report, const std::filesystem::path& json_path,
                  const std::filesystem::path& csv_path) {
    Json rows = Json::array();
    for (const auto& r : report.rows) rows.push_back(row_to_json(r));
    Json obj{{"setting", report.setting},
             {"bleu", report.bleu},
             {"judged_count", report.judged_count},
             {"failure_count", report.failure_count},
             {"flagged_count", report.flagged_count},
             {"testset_hash", report.testset_hash},
             {"manifest", report.manifest},
             {"rows", rows}};
    obj["judge_grb_mean"] = report.judge_grb_mean ? Json(*report.judge_grb_mean) : Json(nullptr);
    obj["judge_grf_mean"] = report.judge_grf_mean ? Json(*report.judge_grf_mean) : Json(nullptr);
    obj["external_mean"] = report.external_mean ? Json(*report.external_mean) : Json(nullptr);
    save_json_file(json_path, obj);

    if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw Error(ErrorCode::IoError, "cannot write " + csv_path.string());
    csv << "id,doc_lang,status,relevance_score,grb,grf,external,noise_cluster,error,hypothesis\n";
    for (const auto& r : report.rows) {
        const char* status = r.failed ? "failed" : r.flagged ? "flagged" : "ok";
        csv << csv_escape(r.id) << ',' << csv_escape(r.doc_lang) << ',' << status << ','
            << r.relevance_score << ',';
        if (r.grb) csv << *r.grb;
        csv << ',';
        if (r.grf) csv << *r.grf;
        csv << ',';
        if (r.external) csv << *r.external;
        csv << ',' << csv_escape(r.noise_cluster) << ',' << csv_escape(r.error) << ','
            << csv_escape(r.hypothesis) << '\n';
    }
    if (!csv) throw Error(ErrorCode::IoError, "failed writing " + csv_path.string());
}

EvalReport read_report(const std::filesystem::path& json_path) {
    Json obj = load_json_file(json_path);
    EvalReport rep;
    rep.setting = obj.at("setting").get<std::string>();
    rep.bleu = obj.at("bleu").get<double>();
    rep.judged_count = obj.value("judged_count", 0);
    rep.failure_count = obj.value("failure_count", 0);
    rep.flagged_count = obj.value("flagged_count", 0);
    rep.testset_hash = obj.value("testset_hash", std::string());
    rep.manifest = obj.value("manifest", Json::object());
    if (obj.contains("judge_grb_mean") && obj["judge_grb_mean"].is_number())
        rep.judge_grb_mean = obj["judge_grb_mean"].get<double>();
    if (obj.contains("judge_grf_mean") && obj["judge_grf_mean"].is_number())
        rep.judge_grf_mean = obj["judge_grf_mean"].get<double>();
    if (obj.contains("external_mean") && obj["external_mean"].is_number())
        rep.external_mean = obj["external_mean"].get<double>();
    if (obj.contains("rows"))
        for (const auto& r : obj["rows"]) rep.rows.push_back(row_from_json(r));
    return rep;
}

} // namespace ragforge::eval
