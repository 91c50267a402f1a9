// ragforge: one subcommand per pipeline stage, one JSON config for the run.
// Every artifact gets a manifest recording the config hash and input hashes,
// so a finished run can be traced back to exactly what produced it.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ragforge/config.hpp"
#include "ragforge/corpus_builder.hpp"
#include "ragforge/csc_synth.hpp"
#include "ragforge/errors.hpp"
#include "ragforge/hashing.hpp"
#include "ragforge/jsonl.hpp"
#include "ragforge/llm_gateway.hpp"
#include "ragforge/metrics_eval.hpp"
#include "ragforge/retrieval.hpp"
#include "ragforge/tokenizer.hpp"
#include "ragforge/wiki_ingest.hpp"

namespace {

using namespace ragforge;

struct Args {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool dry_run = false;
    // evaluate
    std::string setting;
    std::string doc_lang;
    std::string retriever = "bm25";
    std::optional<int> k;
    bool judge = false;
    // index
    std::string index_kind;
};

config::PipelineConfig load_config(const Args& args) {
    return config::PipelineConfig::load(args.config_path);
}

std::filesystem::path near_config(const config::PipelineConfig& cfg, const std::string& rel) {
    std::filesystem::path p(rel);
    if (p.is_relative())
        p = cfg.config_path.parent_path() / p;
    return p;
}

Json run_stamp(const config::PipelineConfig& cfg, const std::string& command, Json inputs) {
    return Json{{"command", command}, {"config_hash", cfg.config_hash},
                {"inputs", std::move(inputs)}};
}

// Adds the run record to an artifact's existing sidecar/manifest (or starts
// one). No wall-clock fields anywhere: re-runs must be byte-identical.
void stamp_manifest(const std::filesystem::path& manifest_path, Json run) {
    Json m = std::filesystem::exists(manifest_path) ? load_json_file(manifest_path)
                                                    : Json::object();
    m["run"] = std::move(run);
    save_json_file(manifest_path, m);
}

struct GatewayBundle {
    std::shared_ptr<gateway::ChatTransport> transport;
    std::shared_ptr<gateway::Clock> clock;
    std::shared_ptr<gateway::TranscriptLog> transcript;
    std::unique_ptr<gateway::ChatGateway> gw;
};

// dry_run forces the echo transport so prompt construction never needs the
// network regardless of what the config says.
GatewayBundle make_gateway(const config::PipelineConfig& cfg,
                           const std::filesystem::path& transcript_path, bool dry_run = false) {
    GatewayBundle b;
    std::string kind = dry_run ? "echo" : cfg.transport_kind;
    if (kind == "echo") {
        b.transport = std::make_shared<gateway::EchoTransport>();
    } else if (kind == "replay") {
        if (cfg.replay_transcript.empty())
            throw Error(ErrorCode::ConfigError,
                        "gateway.replay_transcript is required for the replay transport");
        b.transport =
            std::make_shared<gateway::ReplayTransport>(near_config(cfg, cfg.replay_transcript));
    } else if (kind == "http") {
        if (cfg.gateway_endpoint.empty())
            throw Error(ErrorCode::ConfigError,
                        "gateway.endpoint is required for the http transport");
        const char* key = std::getenv("RAGFORGE_API_KEY");
        b.transport = std::shared_ptr<gateway::ChatTransport>(
            gateway::make_http_chat_transport(cfg.gateway_endpoint, key ? key : ""));
    } else {
        throw Error(ErrorCode::ConfigError, "gateway.transport '" + kind +
                                                "' is not runnable from the command line; "
                                                "use echo, replay, or http");
    }
    if (kind == "http")
        b.clock = std::make_shared<gateway::SystemClock>();
    else
        b.clock = std::make_shared<gateway::LogicalClock>();
    if (!transcript_path.empty())
        b.transcript = std::make_shared<gateway::TranscriptLog>(transcript_path);
    b.gw = std::make_unique<gateway::ChatGateway>(b.transport, cfg.gateway_options, b.clock,
                                                  b.transcript);
    return b;
}

int cmd_ingest(const config::PipelineConfig& cfg) {
    auto articles_path = cfg.path_for("articles");
    ingest::ParseReport report;
    auto articles = ingest::parse_collection_file(articles_path, cfg.languages, report);
    std::vector<ingest::Passage> passages;
    for (const auto& a : articles) {
        auto split = ingest::split_passages(a, cfg.block_size);
        passages.insert(passages.end(), split.begin(), split.end());
    }
    auto out = cfg.path_for("passages");
    std::size_t written = ingest::write_passage_store(passages, out, cfg.block_size,
                                                      cfg.languages);
    stamp_manifest(out.string() + ".manifest.json",
                   run_stamp(cfg, "ingest", Json{{"articles", hash_file(articles_path)}}));
    std::printf("parsed %zu articles (%zu empty, %zu unknown language, %zu malformed); "
                "wrote %zu passages -> %s\n",
                report.parsed, report.empty_dropped, report.unknown_language,
                report.malformed.size(), written, out.string().c_str());
    for (std::size_t i = 0; i < report.malformed.size() && i < 5; ++i)
        std::fprintf(stderr, "  line %zu: %s\n", report.malformed[i].first,
                     report.malformed[i].second.c_str());
    return 0;
}

int cmd_align(const config::PipelineConfig& cfg) {
    auto articles_path = cfg.path_for("articles");
    ingest::ParseReport parse_report;
    auto articles = ingest::parse_collection_file(articles_path, cfg.languages, parse_report);
    const std::string& pivot = cfg.languages.codes().front();
    ingest::AlignReport report;
    auto clusters = ingest::align_clusters(articles, pivot, report);
    auto out = cfg.path_for("clusters");
    ingest::write_clusters(clusters, out);
    Json manifest{{"artifact", "ragforge.clusters"},
                  {"cluster_count", clusters.size()},
                  {"pivot", pivot},
                  {"languages", cfg.languages.codes()},
                  {"content_hash", hash_file(out)},
                  {"run", run_stamp(cfg, "align", Json{{"articles", hash_file(articles_path)}})}};
    save_json_file(out.string() + ".manifest.json", manifest);
    std::printf("aligned %zu clusters (%zu dangling links, %zu conflicts) -> %s\n",
                clusters.size(), report.dangling_links.size(), report.conflicts.size(),
                out.string().c_str());
    return 0;
}

Json stats_to_json(const corpus::LengthStats& stats) {
    Json out = Json::object();
    for (const auto& [field, s] : stats)
        out[field] = Json{{"min", s.min}, {"max", s.max}, {"mean", s.mean},
                          {"p95", s.p95}, {"count", s.count}};
    return out;
}

int cmd_build_corpus(const config::PipelineConfig& cfg, const Args& args) {
    auto clusters_path = cfg.path_for("clusters");
    auto clusters = ingest::read_clusters(clusters_path);
    corpus::QuotaConfig quota = cfg.quota;
    quota.seed = args.seed ? *args.seed : cfg.seed_for("quota");
    auto dataset = corpus::assign_quotas(clusters, quota);
    auto stats = corpus::compute_stats(dataset, default_tokenizer());
    auto dir = cfg.path_for("dataset");
    Json run = run_stamp(cfg, "build-corpus", Json{{"clusters", hash_file(clusters_path)}});
    run["seed"] = quota.seed;
    run["quota_divisor"] = cfg.quota_divisor;
    corpus::write_dataset(dataset, dir,
                          Json{{"run", run}, {"length_stats", stats_to_json(stats)}});
    std::printf("built dataset: train %d, valid %d, test %zu -> %s\n", quota.train_total(),
                quota.valid_total(), dataset.test.size(), dir.string().c_str());
    for (const auto& [field, s] : stats)
        std::printf("  %-10s n=%-6zu min=%-5lld mean=%-8.1f p95=%-5lld max=%lld\n",
                    field.c_str(), s.count, s.min, s.mean, s.p95, s.max);
    return 0;
}

int cmd_synth_csc(const config::PipelineConfig& cfg, const Args& args) {
    auto clusters_path = cfg.path_for("clusters");
    auto clusters = ingest::read_clusters(clusters_path);
    auto dir = cfg.path_for("csc");
    Json inputs{{"clusters", hash_file(clusters_path)}};

    std::vector<csc::ParallelSentence> sentences;
    if (cfg.csc_counts.sket > 0 || cfg.has_path("parallel_sentences")) {
        auto sent_path = cfg.path_for("parallel_sentences");
        sentences = csc::read_parallel_auto(sent_path);
        inputs["parallel_sentences"] = hash_file(sent_path);
    }

    GatewayBundle bundle;
    csc::KnowledgeGenerator* gen = nullptr;
    if (cfg.csc_counts.sket > 0) {
        bundle = make_gateway(cfg, dir / "transcript.jsonl");
        gen = bundle.gw.get();
    }

    std::uint64_t seed = args.seed ? *args.seed : cfg.seed_for("csc");
    auto result = csc::synthesize_batch(clusters, sentences, gen, cfg.csc_counts, seed, cfg.mmr,
                                        cfg.languages);
    csc::write_csc_batch(result, dir);
    csc::write_sft_jsonl(result.samples, dir / "sft.jsonl");
    Json run = run_stamp(cfg, "synth-csc", std::move(inputs));
    run["seed"] = seed;
    if (gen)
        run["transcript"] = "transcript.jsonl";
    stamp_manifest(dir / "manifest.json", std::move(run));
    const auto& produced = result.manifest.at("produced");
    std::printf("synthesized clic=%d sket=%d clrd=%d -> %s\n",
                produced.value("clic", 0), produced.value("sket", 0), produced.value("clrd", 0),
                dir.string().c_str());
    return 0;
}

int cmd_index(const config::PipelineConfig& cfg, const Args& args) {
    auto passages_path = cfg.path_for("passages");
    auto passages = ingest::read_passage_store(passages_path);
    std::filesystem::path out;
    Json params;
    if (args.index_kind == "bm25") {
        auto index = retrieval::Bm25Index::build(passages, cfg.bm25);
        out = cfg.path_for("bm25_index");
        index.save(out);
        params = Json{{"k1", cfg.bm25.k1}, {"b", cfg.bm25.b}};
    } else {
        if (cfg.embedder_url.empty())
            throw Error(ErrorCode::ConfigError,
                        "retrieval.embedder.url is required for the dense index");
        auto embedder = retrieval::make_http_embedder(cfg.embedder_url, cfg.embedder_id,
                                                      cfg.embedder_dimension);
        out = cfg.path_for("dense_index");
        retrieval::DenseBuildOptions opts;
        opts.checkpoint_path = out.string() + ".checkpoint";
        auto index = retrieval::DenseIndex::build(passages, *embedder, opts);
        index.save(out);
        std::error_code ec;
        std::filesystem::remove(*opts.checkpoint_path, ec);
        params = Json{{"embedder", cfg.embedder_id}, {"dimension", cfg.embedder_dimension}};
    }
    Json manifest{{"artifact", "ragforge." + args.index_kind + "_index"},
                  {"passage_count", passages.size()},
                  {"params", params},
                  {"content_hash", hash_file(out)},
                  {"run", run_stamp(cfg, "index", Json{{"passages", hash_file(passages_path)}})}};
    save_json_file(out.string() + ".manifest.json", manifest);
    std::printf("indexed %zu passages (%s) -> %s\n", passages.size(), args.index_kind.c_str(),
                out.string().c_str());
    return 0;
}

int cmd_translate_annotate(const config::PipelineConfig& cfg, const Args& args) {
    auto dir = cfg.path_for("dataset");
    auto dataset = corpus::read_dataset(dir);
    std::string dataset_hash = hash_file(dir / "manifest.json");

    if (args.dry_run) {
        GatewayBundle bundle = make_gateway(cfg, {}, /*dry_run=*/true);
        JsonlWriter preview(dir / "prompt_preview.jsonl");
        for (const auto& s : dataset.samples) {
            auto req = bundle.gw->build_translation_request(s.source, s.doc);
            preview.write(Json{{"id", s.id},
                               {"system", req.system},
                               {"user", req.user},
                               {"input_tokens", default_tokenizer().count_tokens(req.system) +
                                                    default_tokenizer().count_tokens(req.user)}});
        }
        preview.close();
        std::printf("dry run: wrote %zu prompts -> %s\n", dataset.samples.size(),
                    (dir / "prompt_preview.jsonl").string().c_str());
        return 0;
    }

    GatewayBundle bundle = make_gateway(cfg, dir / "annotate_transcript.jsonl");
    std::size_t annotated = 0, skipped = 0, failed = 0;
    std::vector<std::string> failed_ids;
    for (auto& s : dataset.samples) {
        if (s.translation) {
            ++skipped;
            continue;
        }
        try {
            auto r = bundle.gw->translate_with_doc(s.source, s.doc, s.doc_lang);
            s.translation = r.translation;
            s.relevance_score = r.relevance_score;
            ++annotated;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::AuthError)
                throw; // no point retrying the rest with bad credentials
            ++failed;
            if (failed_ids.size() < 20)
                failed_ids.push_back(s.id);
            std::fprintf(stderr, "  %s: %s\n", s.id.c_str(), e.what());
        }
    }
    Json run = run_stamp(cfg, "translate-annotate", Json{{"dataset", dataset_hash}});
    run["transcript"] = "annotate_transcript.jsonl";
    run["transport"] = bundle.transport->id();
    run["model_id"] = cfg.gateway_options.model_id;
    corpus::write_dataset(dataset, dir,
                          Json{{"run", run},
                               {"annotation", Json{{"annotated", annotated},
                                                   {"skipped", skipped},
                                                   {"failed", failed},
                                                   {"failed_ids", failed_ids}}}});
    std::printf("annotated %zu rows (%zu already done, %zu failed) -> %s\n", annotated, skipped,
                failed, dir.string().c_str());
    return failed > 0 && annotated == 0 ? 1 : 0;
}

int cmd_evaluate(const config::PipelineConfig& cfg, const Args& args) {
    auto dataset_dir = cfg.path_for("dataset");
    auto dataset = corpus::read_dataset(dataset_dir);
    if (dataset.test.empty())
        throw Error(ErrorCode::ConfigError, "dataset has no test split: " +
                                                dataset_dir.string());
    auto reports_dir = cfg.path_for("reports");
    std::filesystem::create_directories(reports_dir);

    std::string label = args.setting;
    if (args.setting == "golden") {
        if (args.doc_lang.empty())
            throw Error(ErrorCode::ConfigError,
                        "flag --doc-lang is required for the golden setting");
        label += "-" + args.doc_lang;
    } else if (args.setting == "fullwiki") {
        label += "-" + args.retriever;
    }

    GatewayBundle bundle = make_gateway(cfg, reports_dir / (label + ".transcript.jsonl"));
    eval::GatewayTranslator translator(*bundle.gw);

    Json inputs{{"dataset", hash_file(dataset_dir / "manifest.json")}};
    eval::RunOptions ro;
    ro.seed = args.seed ? *args.seed : cfg.seed_for("eval");
    ro.judge = args.judge;
    ro.judge_gateway = args.judge ? bundle.gw.get() : nullptr;
    ro.languages = cfg.languages;
    std::unique_ptr<eval::ExternalScorer> scorer;
    if (!cfg.scorer_url.empty()) {
        scorer = eval::make_http_scorer(cfg.scorer_url);
        ro.scorer = scorer.get();
    }

    eval::EvalReport report;
    if (args.setting == "empty") {
        ro.manifest_extra = run_stamp(cfg, "evaluate", inputs);
        report = eval::run_empty(translator, dataset.test, ro);
    } else if (args.setting == "golden") {
        ro.manifest_extra = run_stamp(cfg, "evaluate", inputs);
        report = eval::run_golden(translator, dataset.test, args.doc_lang, ro);
    } else if (args.setting == "noisy") {
        auto clusters_path = cfg.path_for("clusters");
        auto noise = ingest::read_clusters(clusters_path);
        inputs["clusters"] = hash_file(clusters_path);
        ro.manifest_extra = run_stamp(cfg, "evaluate", inputs);
        report = eval::run_robustness(translator, dataset.test, noise, ro);
    } else if (args.setting == "fullwiki") {
        auto passages = ingest::read_passage_store(cfg.path_for("passages"));
        int k = args.k ? *args.k : cfg.retrieve_k;
        if (args.retriever == "bm25") {
            auto index_path = cfg.path_for("bm25_index");
            auto index = retrieval::Bm25Index::load(index_path);
            inputs["bm25_index"] = hash_file(index_path);
            ro.manifest_extra = run_stamp(cfg, "evaluate", inputs);
            auto handle = eval::make_bm25_handle(index, passages);
            report = eval::run_fullwiki(translator, dataset.test, handle, k, ro);
        } else if (args.retriever == "dense") {
            if (cfg.embedder_url.empty())
                throw Error(ErrorCode::ConfigError,
                            "retrieval.embedder.url is required for the dense retriever");
            auto index_path = cfg.path_for("dense_index");
            auto index = retrieval::DenseIndex::load(index_path);
            auto embedder = retrieval::make_http_embedder(cfg.embedder_url, cfg.embedder_id,
                                                          cfg.embedder_dimension);
            inputs["dense_index"] = hash_file(index_path);
            ro.manifest_extra = run_stamp(cfg, "evaluate", inputs);
            auto handle = eval::make_dense_handle(index, *embedder, passages);
            report = eval::run_fullwiki(translator, dataset.test, handle, k, ro);
        } else {
            throw Error(ErrorCode::ConfigError,
                        "unknown retriever '" + args.retriever + "' (bm25 or dense)");
        }
    } else {
        throw Error(ErrorCode::ConfigError, "unknown setting '" + args.setting +
                                                "' (empty, noisy, golden, fullwiki)");
    }

    auto json_path = reports_dir / (label + ".report.json");
    auto csv_path = reports_dir / (label + ".report.csv");
    eval::write_report(report, json_path, csv_path);
    std::printf("%s: BLEU %.2f over %zu rows (%d failed, %d flagged)", report.setting.c_str(),
                report.bleu, report.rows.size(), report.failure_count, report.flagged_count);
    if (report.judge_grb_mean)
        std::printf(", GRB %.1f", *report.judge_grb_mean);
    if (report.judge_grf_mean)
        std::printf(", GRF %.1f", *report.judge_grf_mean);
    if (report.external_mean)
        std::printf(", external %.3f", *report.external_mean);
    std::printf(" -> %s\n", json_path.string().c_str());
    return 0;
}

int cmd_validate(const config::PipelineConfig& cfg) {
    auto dir = cfg.path_for("dataset");
    auto report = corpus::validate_dataset(dir, &cfg.quota);
    for (const auto& c : report.checks) {
        const char* mark = c.passed ? "[ok]  " : (c.fatal ? "[FAIL]" : "[warn]");
        std::printf("%s %-22s %s\n", mark, c.name.c_str(), c.detail.c_str());
    }
    Json out = report.to_json();
    out["run"] = run_stamp(cfg, "validate", Json{{"dataset", hash_file(dir / "manifest.json")}});
    save_json_file(dir / "validation.json", out);
    std::printf("%s\n", report.ok ? "dataset valid" : "dataset INVALID");
    return report.ok ? 0 : 1;
}

int cmd_report(const config::PipelineConfig& cfg) {
    auto reports_dir = cfg.path_for("reports");
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(reports_dir))
        for (const auto& entry : std::filesystem::directory_iterator(reports_dir))
            if (entry.path().string().ends_with(".report.json"))
                files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw Error(ErrorCode::IoError, "no *.report.json files in " + reports_dir.string());
    std::vector<eval::EvalReport> reports;
    Json inputs = Json::object();
    for (const auto& f : files) {
        reports.push_back(eval::read_report(f));
        inputs[f.filename().string()] = hash_file(f);
    }
    auto table = eval::aggregate(reports);
    Json out = table.json;
    out["run"] = run_stamp(cfg, "report", inputs);
    save_json_file(reports_dir / "comparison.json", out);
    std::fputs(table.text.c_str(), stdout);
    std::printf("-> %s\n", (reports_dir / "comparison.json").string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"retrieval-augmented translation corpus pipeline"};
    app.require_subcommand(1);
    Args args;

    auto add_common = [&](CLI::App* sub, bool with_seed = false) {
        sub->add_option("-c,--config", args.config_path, "pipeline config JSON")
            ->required()
            ->check(CLI::ExistingFile);
        if (with_seed)
            sub->add_option("--seed", args.seed, "override the stage seed");
        return sub;
    };

    add_common(app.add_subcommand("ingest", "parse articles and write the passage store"));
    add_common(app.add_subcommand("align", "build interlanguage-linked article clusters"));
    add_common(app.add_subcommand("build-corpus", "fill the quota table into a dataset"), true);
    add_common(app.add_subcommand("synth-csc", "synthesize cross-lingual objective samples"),
               true);
    auto* index = add_common(app.add_subcommand("index", "build a retrieval index"));
    index->add_option("kind", args.index_kind, "bm25 or dense")
        ->required()
        ->check(CLI::IsMember({"bm25", "dense"}));
    auto* annotate = add_common(
        app.add_subcommand("translate-annotate", "fill train/valid translations via the model"));
    annotate->add_flag("--dry-run", args.dry_run, "build prompts without any network calls");
    auto* evaluate = add_common(app.add_subcommand("evaluate", "run a benchmark setting"), true);
    evaluate->add_option("--setting", args.setting, "empty, noisy, golden, or fullwiki")
        ->required()
        ->check(CLI::IsMember({"empty", "noisy", "golden", "fullwiki"}));
    evaluate->add_option("--doc-lang", args.doc_lang, "golden document language (en, zh, de)");
    evaluate->add_option("--retriever", args.retriever, "fullwiki retriever (bm25 or dense)")
        ->check(CLI::IsMember({"bm25", "dense"}));
    evaluate->add_option("--k", args.k, "fullwiki passages per query");
    evaluate->add_flag("--judge", args.judge, "score a fixed subset with the judge prompts");
    add_common(app.add_subcommand("validate", "re-derive and check dataset invariants"));
    add_common(app.add_subcommand("report", "aggregate all eval reports into one table"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        auto cfg = load_config(args);
        if (app.got_subcommand("ingest"))
            return cmd_ingest(cfg);
        if (app.got_subcommand("align"))
            return cmd_align(cfg);
        if (app.got_subcommand("build-corpus"))
            return cmd_build_corpus(cfg, args);
        if (app.got_subcommand("synth-csc"))
            return cmd_synth_csc(cfg, args);
        if (app.got_subcommand("index"))
            return cmd_index(cfg, args);
        if (app.got_subcommand("translate-annotate"))
            return cmd_translate_annotate(cfg, args);
        if (app.got_subcommand("evaluate"))
            return cmd_evaluate(cfg, args);
        if (app.got_subcommand("validate"))
            return cmd_validate(cfg);
        if (app.got_subcommand("report"))
            return cmd_report(cfg);
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::ConfigError ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
