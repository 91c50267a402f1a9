#include "ragforge/csc_synth.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ragforge/errors.hpp"
#include "ragforge/prompts.hpp"
#include "ragforge/text.hpp"

namespace ragforge::csc {

const char* objective_name(Objective o) {
    switch (o) {
    case Objective::clic: return "clic";
    case Objective::sket: return "sket";
    case Objective::clrd: return "clrd";
    }
    return "?";
}

Objective objective_from_name(const std::string& name) {
    if (name == "clic") return Objective::clic;
    if (name == "sket") return Objective::sket;
    if (name == "clrd") return Objective::clrd;
    throw Error(ErrorCode::SchemaError, "unknown objective: " + name);
}

namespace {

/// Every non-lead paragraph in the cluster, pivot article first.
std::vector<TaggedParagraph> clic_pool(const ingest::ParallelCluster& cluster) {
    std::vector<TaggedParagraph> pool;
    auto add = [&](const ingest::Article& a) {
        for (std::size_t i = 1; i < a.paragraphs.size(); ++i)
            pool.push_back({a.lang, a.paragraphs[i], cluster.pivot.page_id, a.page_id,
                            static_cast<int>(i)});
    };
    add(cluster.pivot);
    for (const auto& [lang, a] : cluster.parallels) add(a);
    return pool;
}

} // namespace

CscSample make_clic_sample(const ingest::ParallelCluster& cluster, std::mt19937_64& rng,
                           const MmrParams& params) {
    if (cluster.pivot.paragraphs.empty())
        throw Error(ErrorCode::TooShort, "cluster " + cluster.pivot.page_id + " has no lead");
    const std::string& y = cluster.pivot.paragraphs[0];
    std::size_t y_words = count_words(y);
    if (y_words < 2)
        throw Error(ErrorCode::TooShort,
                    "lead of " + cluster.pivot.page_id + " has fewer than 2 words");
    auto pool = clic_pool(cluster);
    if (pool.empty())
        throw Error(ErrorCode::TooShort,
                    "cluster " + cluster.pivot.page_id + " has no non-lead paragraphs");

    ClicPayload p;
    p.y = y;
    p.summary_lang = cluster.pivot.lang;
    std::size_t prefix_words = 1 + rng_below(rng, y_words - 1);
    p.y_hat = word_prefix(y, prefix_words);

    int m = params.m_min + static_cast<int>(rng_below(
                               rng, static_cast<std::uint64_t>(params.m_max - params.m_min + 1)));
    std::vector<std::string> texts;
    texts.reserve(pool.size());
    for (const auto& tp : pool) texts.push_back(tp.text);
    auto picked = retrieval::mmr_select(texts, y, params.lambda, m, retrieval::lexical_sim);
    for (auto i : picked) p.d_mix.push_back(pool[i]);

    CscSample s;
    s.objective = Objective::clic;
    s.payload = std::move(p);
    return s;
}

CscSample make_sket_sample(const ParallelSentence& ps, const std::string& knowledge_lang,
                           KnowledgeGenerator& gen, const LanguageSet& langs,
                           const std::string& target_lang) {
    if (!langs.contains(knowledge_lang))
        throw Error(ErrorCode::UnknownLanguage,
                    "knowledge language not configured: " + knowledge_lang);
    auto pivot = ps.by_lang.find("en");
    if (pivot == ps.by_lang.end())
        throw Error(ErrorCode::MissingPivot, "parallel sentence lacks the en pivot");
    auto target = ps.by_lang.find(target_lang);
    if (target == ps.by_lang.end())
        throw Error(ErrorCode::MissingTarget,
                    "parallel sentence lacks the " + target_lang + " side");

    // The knowledge request uses the sentence in the knowledge language when
    // the corpus has it; the pivot otherwise.
    auto same_lang = ps.by_lang.find(knowledge_lang);
    const std::string& ask = same_lang != ps.by_lang.end() ? same_lang->second : pivot->second;
    std::string knowledge = trim(gen.gen_self_knowledge(ask, knowledge_lang));
    if (knowledge.empty())
        throw Error(ErrorCode::EmptyKnowledge, "generator returned blank knowledge");

    SketPayload p;
    p.source = pivot->second;
    p.knowledge_lang = knowledge_lang;
    p.knowledge = std::move(knowledge);
    p.target = target->second;
    p.target_lang = target_lang;

    CscSample s;
    s.objective = Objective::sket;
    s.payload = std::move(p);
    return s;
}

namespace {

TaggedParagraph draw_paragraph(const ingest::ParallelCluster& cluster, const std::string& lang,
                               std::mt19937_64& rng) {
    const auto* article = cluster.article_for(lang);
    if (article == nullptr || article->paragraphs.empty())
        throw Error(ErrorCode::MissingLanguage,
                    "cluster " + cluster.pivot.page_id + " has no usable " + lang + " article");
    auto i = rng_below(rng, article->paragraphs.size());
    return {lang, article->paragraphs[i], cluster.pivot.page_id, article->page_id,
            static_cast<int>(i)};
}

} // namespace

CscSample make_clrd_sample(const ingest::ParallelCluster& a, const ingest::ParallelCluster& b,
                           const std::string& l1, const std::string& l2, std::mt19937_64& rng) {
    if (l1 == l2)
        throw Error(ErrorCode::SameLanguage, "relevance pair needs two distinct languages");
    ClrdPayload p;
    p.doc_a = draw_paragraph(a, l1, rng);
    p.doc_b = draw_paragraph(b, l2, rng);
    p.label = a.pivot.page_id == b.pivot.page_id;
    CscSample s;
    s.objective = Objective::clrd;
    s.payload = std::move(p);
    return s;
}

namespace {

std::string padded_id(Objective o, int n) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s-%06d", objective_name(o), n);
    return buf;
}

std::vector<std::string> langs_with_paragraphs(const ingest::ParallelCluster& c,
                                               const LanguageSet& langs) {
    std::vector<std::string> out;
    for (const auto& lang : langs.codes()) {
        const auto* a = c.article_for(lang);
        if (a != nullptr && !a->paragraphs.empty()) out.push_back(lang);
    }
    return out;
}

} // namespace

SynthResult synthesize_batch(const std::vector<ingest::ParallelCluster>& clusters,
                             const std::vector<ParallelSentence>& sentences,
                             KnowledgeGenerator* gen, const SynthCounts& counts,
                             std::uint64_t seed, const MmrParams& params,
                             const LanguageSet& langs) {
    if (counts.clic < 0 || counts.sket < 0 || counts.clrd < 0)
        throw Error(ErrorCode::ConfigError, "objective counts must be non-negative");
    std::mt19937_64 rng(seed);

    std::vector<std::size_t> cluster_order(clusters.size());
    std::iota(cluster_order.begin(), cluster_order.end(), 0);
    std::sort(cluster_order.begin(), cluster_order.end(), [&](std::size_t x, std::size_t y) {
        return clusters[x].pivot.page_id < clusters[y].pivot.page_id;
    });
    shuffle_deterministic(cluster_order, rng);

    SynthResult out;
    std::map<std::string, int> lang_mix_clic, lang_mix_sket;
    std::map<std::string, int> pair_mix_clrd;
    int sket_rejected = 0;

    // CLIC: one sample per cluster, clusters visited in shuffled order.
    if (counts.clic > 0) {
        int made = 0;
        for (auto ci : cluster_order) {
            if (made >= counts.clic) break;
            const auto& c = clusters[ci];
            if (c.pivot.paragraphs.empty() || count_words(c.pivot.paragraphs[0]) < 2) continue;
            if (clic_pool(c).empty()) continue;
            CscSample s = make_clic_sample(c, rng, params);
            s.id = padded_id(Objective::clic, made);
            for (const auto& tp : std::get<ClicPayload>(s.payload).d_mix) ++lang_mix_clic[tp.lang];
            out.samples.push_back(std::move(s));
            ++made;
        }
        if (made < counts.clic)
            throw Error(ErrorCode::InsufficientMaterial,
                        "clic: requested " + std::to_string(counts.clic) + ", achievable " +
                            std::to_string(made));
    }

    // SKET: one sample per parallel sentence, knowledge language drawn
    // uniformly; blank knowledge rejects the sentence and moves on.
    if (counts.sket > 0) {
        if (gen == nullptr)
            throw Error(ErrorCode::ConfigError, "sket synthesis needs a knowledge generator");
        std::vector<std::size_t> sent_order(sentences.size());
        std::iota(sent_order.begin(), sent_order.end(), 0);
        shuffle_deterministic(sent_order, rng);
        const auto lang_codes = langs.codes();
        int made = 0;
        for (auto si : sent_order) {
            if (made >= counts.sket) break;
            const auto& ps = sentences[si];
            if (!ps.by_lang.count("en") || !ps.by_lang.count("zh")) continue;
            const std::string& lang = lang_codes[rng_below(rng, lang_codes.size())];
            try {
                CscSample s = make_sket_sample(ps, lang, *gen, langs);
                s.id = padded_id(Objective::sket, made);
                ++lang_mix_sket[lang];
                out.samples.push_back(std::move(s));
                ++made;
            } catch (const Error& e) {
                if (e.code() == ErrorCode::EmptyKnowledge) {
                    ++sket_rejected;
                    continue;
                }
                throw;
            }
        }
        if (made < counts.sket)
            throw Error(ErrorCode::InsufficientMaterial,
                        "sket: requested " + std::to_string(counts.sket) + ", achievable " +
                            std::to_string(made));
    }

    // CLRD: positives and negatives interleaved, |pos - neg| <= 1 always,
    // exactly 1:1 for even counts.
    if (counts.clrd > 0) {
        std::vector<std::size_t> multi; // clusters usable for positives
        std::vector<std::size_t> any;   // clusters usable as one side of a negative
        for (auto ci : cluster_order) {
            auto present = langs_with_paragraphs(clusters[ci], langs);
            if (present.size() >= 2) multi.push_back(ci);
            if (!present.empty()) any.push_back(ci);
        }
        int want_pos = counts.clrd - counts.clrd / 2;
        int want_neg = counts.clrd / 2;
        long long max_pos = static_cast<long long>(multi.size());
        long long max_neg = static_cast<long long>(any.size()) / 2;
        if (max_pos < want_pos || max_neg < want_neg) {
            long long achievable =
                std::min(max_pos, max_neg) * 2 + (max_pos > max_neg ? 1 : 0);
            throw Error(ErrorCode::InsufficientMaterial,
                        "clrd: requested " + std::to_string(counts.clrd) + ", achievable " +
                            std::to_string(std::min<long long>(achievable, max_pos + max_neg)));
        }
        int made = 0;
        std::size_t pos_at = 0, neg_at = 0;
        while (made < counts.clrd) {
            bool positive = (made % 2) == 0 ? want_pos > 0 : want_neg == 0 ? true : false;
            CscSample s;
            if (positive) {
                const auto& c = clusters[multi[pos_at++]];
                auto present = langs_with_paragraphs(c, langs);
                auto i = rng_below(rng, present.size());
                auto j = rng_below(rng, present.size() - 1);
                if (j >= i) ++j;
                s = make_clrd_sample(c, c, present[i], present[j], rng);
                --want_pos;
            } else {
                // A pair is unworkable only when both clusters are
                // monolingual in the same language; skip those.
                while (neg_at + 1 < any.size()) {
                    auto pa = langs_with_paragraphs(clusters[any[neg_at]], langs);
                    auto pb = langs_with_paragraphs(clusters[any[neg_at + 1]], langs);
                    if (pa.size() > 1 || pb.size() > 1 || pa[0] != pb[0]) break;
                    ++neg_at;
                }
                if (neg_at + 1 >= any.size())
                    throw Error(ErrorCode::InsufficientMaterial,
                                "clrd: ran out of cluster pairs for negatives");
                const auto& ca = clusters[any[neg_at]];
                const auto& cb = clusters[any[neg_at + 1]];
                neg_at += 2;
                auto pa = langs_with_paragraphs(ca, langs);
                auto pb = langs_with_paragraphs(cb, langs);
                std::string l1 = pa[rng_below(rng, pa.size())];
                std::vector<std::string> pb2;
                for (const auto& l : pb)
                    if (l != l1) pb2.push_back(l);
                if (pb2.empty()) {
                    // cb is monolingual in l1; draw l1 from the other side.
                    std::string l2 = pb[0];
                    std::vector<std::string> pa2;
                    for (const auto& l : pa)
                        if (l != l2) pa2.push_back(l);
                    l1 = pa2[rng_below(rng, pa2.size())];
                    s = make_clrd_sample(ca, cb, l1, l2, rng);
                } else {
                    s = make_clrd_sample(ca, cb, l1, pb2[rng_below(rng, pb2.size())], rng);
                }
                --want_neg;
            }
            s.id = padded_id(Objective::clrd, made);
            {
                const auto& p = std::get<ClrdPayload>(s.payload);
                ++pair_mix_clrd[p.doc_a.lang + "+" + p.doc_b.lang];
            }
            out.samples.push_back(std::move(s));
            ++made;
        }
    }

    int n_clic = 0, n_sket = 0, n_clrd = 0, n_pos = 0;
    for (const auto& s : out.samples) {
        switch (s.objective) {
        case Objective::clic: ++n_clic; break;
        case Objective::sket: ++n_sket; break;
        case Objective::clrd:
            ++n_clrd;
            if (std::get<ClrdPayload>(s.payload).label) ++n_pos;
            break;
        }
    }
    out.manifest = Json{{"artifact", "ragforge.csc"},
                        {"seed", seed},
                        {"requested", Json{{"clic", counts.clic},
                                           {"sket", counts.sket},
                                           {"clrd", counts.clrd}}},
                        {"produced", Json{{"clic", n_clic}, {"sket", n_sket}, {"clrd", n_clrd}}},
                        {"clrd_positive", n_pos},
                        {"clrd_negative", n_clrd - n_pos},
                        {"rejects", Json{{"sket_empty_knowledge", sket_rejected}}},
                        {"language_mix", Json{{"clic_d_mix", lang_mix_clic},
                                              {"sket_knowledge", lang_mix_sket},
                                              {"clrd_pairs", pair_mix_clrd}}},
                        {"mmr", Json{{"lambda", params.lambda},
                                     {"m_min", params.m_min},
                                     {"m_max", params.m_max},
                                     {"query", "full_summary"}}}};
    return out;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return out;
}

} // namespace

std::vector<ParallelSentence> read_parallel_tsv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorCode::SchemaError, path.string() + ": missing header line");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_tabs(line);
    std::vector<ParallelSentence> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank(line)) continue;
        auto cols = split_tabs(line);
        if (cols.size() != header.size())
            throw Error(ErrorCode::SchemaError, path.string() + ":" + std::to_string(line_no) +
                                                    ": expected " + std::to_string(header.size()) +
                                                    " columns, got " + std::to_string(cols.size()));
        ParallelSentence ps;
        ps.corpus_id = path.stem().string() + ":" + std::to_string(line_no);
        for (std::size_t i = 0; i < header.size(); ++i) {
            std::string cell = trim(cols[i]);
            if (!cell.empty()) ps.by_lang[trim(header[i])] = cell;
        }
        if (ps.by_lang.size() >= 2 && ps.by_lang.count("en")) out.push_back(std::move(ps));
    }
    return out;
}

std::vector<ParallelSentence> read_parallel_jsonl(const std::filesystem::path& path) {
    std::vector<ParallelSentence> out;
    for_each_jsonl(path, [&](std::size_t line_no, const Json& obj) {
        ParallelSentence ps;
        ps.corpus_id = path.stem().string() + ":" + std::to_string(line_no);
        for (const auto& [key, value] : obj.items()) {
            if (key == "corpus_id") {
                ps.corpus_id = value.get<std::string>();
                continue;
            }
            if (value.is_string()) {
                std::string cell = trim(value.get<std::string>());
                if (!cell.empty()) ps.by_lang[key] = cell;
            }
        }
        if (ps.by_lang.size() >= 2 && ps.by_lang.count("en")) out.push_back(std::move(ps));
    });
    return out;
}

std::vector<ParallelSentence> read_parallel_auto(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    if (ext == ".tsv" || ext == ".txt") return read_parallel_tsv(path);
    return read_parallel_jsonl(path);
}

Json csc_sample_to_json(const CscSample& s) {
    Json obj{{"id", s.id}, {"objective", objective_name(s.objective)}};
    auto tag = [](const TaggedParagraph& tp) {
        return Json{{"lang", tp.lang},
                    {"text", tp.text},
                    {"cluster_page_id", tp.cluster_page_id},
                    {"page_id", tp.page_id},
                    {"para_index", tp.para_index}};
    };
    switch (s.objective) {
    case Objective::clic: {
        const auto& p = std::get<ClicPayload>(s.payload);
        Json mix = Json::array();
        for (const auto& tp : p.d_mix) mix.push_back(tag(tp));
        obj["d_mix"] = std::move(mix);
        obj["y_hat"] = p.y_hat;
        obj["y"] = p.y;
        obj["summary_lang"] = p.summary_lang;
        break;
    }
    case Objective::sket: {
        const auto& p = std::get<SketPayload>(s.payload);
        obj["source"] = p.source;
        obj["knowledge_lang"] = p.knowledge_lang;
        obj["knowledge"] = p.knowledge;
        obj["target"] = p.target;
        obj["target_lang"] = p.target_lang;
        break;
    }
    case Objective::clrd: {
        const auto& p = std::get<ClrdPayload>(s.payload);
        obj["doc_a"] = tag(p.doc_a);
        obj["doc_b"] = tag(p.doc_b);
        obj["label"] = p.label;
        break;
    }
    }
    return obj;
}

CscSample csc_sample_from_json(const Json& obj) {
    CscSample s;
    s.id = obj.at("id").get<std::string>();
    s.objective = objective_from_name(obj.at("objective").get<std::string>());
    auto untag = [](const Json& j) {
        TaggedParagraph tp;
        tp.lang = j.at("lang").get<std::string>();
        tp.text = j.at("text").get<std::string>();
        tp.cluster_page_id = j.value("cluster_page_id", std::string());
        tp.page_id = j.value("page_id", std::string());
        tp.para_index = j.value("para_index", 0);
        return tp;
    };
    switch (s.objective) {
    case Objective::clic: {
        ClicPayload p;
        for (const auto& j : obj.at("d_mix")) p.d_mix.push_back(untag(j));
        p.y_hat = obj.at("y_hat").get<std::string>();
        p.y = obj.at("y").get<std::string>();
        p.summary_lang = obj.value("summary_lang", std::string("en"));
        s.payload = std::move(p);
        break;
    }
    case Objective::sket: {
        SketPayload p;
        p.source = obj.at("source").get<std::string>();
        p.knowledge_lang = obj.at("knowledge_lang").get<std::string>();
        p.knowledge = obj.at("knowledge").get<std::string>();
        p.target = obj.at("target").get<std::string>();
        p.target_lang = obj.value("target_lang", std::string("zh"));
        s.payload = std::move(p);
        break;
    }
    case Objective::clrd: {
        ClrdPayload p;
        p.doc_a = untag(obj.at("doc_a"));
        p.doc_b = untag(obj.at("doc_b"));
        p.label = obj.at("label").get<bool>();
        s.payload = std::move(p);
        break;
    }
    }
    return s;
}

void write_csc_batch(const SynthResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    JsonlWriter clic(dir / "clic.jsonl"), sket(dir / "sket.jsonl"), clrd(dir / "clrd.jsonl");
    for (const auto& s : result.samples) {
        auto obj = csc_sample_to_json(s);
        switch (s.objective) {
        case Objective::clic: clic.write(obj); break;
        case Objective::sket: sket.write(obj); break;
        case Objective::clrd: clrd.write(obj); break;
        }
    }
    clic.close();
    sket.close();
    clrd.close();
    save_json_file(dir / "manifest.json", result.manifest);
}

Json to_sft_messages(const CscSample& s) {
    const auto& p = prompts::default_prompts();
    Json messages = Json::array();
    auto msg = [](const char* role, const std::string& content) {
        return Json{{"role", role}, {"content", content}};
    };
    switch (s.objective) {
    case Objective::clic: {
        const auto& c = std::get<ClicPayload>(s.payload);
        std::string doc;
        for (std::size_t i = 0; i < c.d_mix.size(); ++i) {
            if (i) doc += "\n\n";
            doc += c.d_mix[i].text;
        }
        messages.push_back(msg("system", p.clic_system));
        messages.push_back(msg("user", prompts::sft_user(doc, c.y_hat)));
        messages.push_back(msg("assistant", c.y));
        break;
    }
    case Objective::sket: {
        const auto& c = std::get<SketPayload>(s.payload);
        messages.push_back(msg("system", p.translate_system));
        messages.push_back(msg("user", prompts::fill(p.sket_knowledge, {{"[sent]", c.source},
                                                                        {"[lang]", c.knowledge_lang}})));
        messages.push_back(msg("assistant", c.knowledge));
        messages.push_back(msg("user", prompts::sft_user(c.knowledge, c.source)));
        messages.push_back(msg("assistant", c.target));
        break;
    }
    case Objective::clrd: {
        const auto& c = std::get<ClrdPayload>(s.payload);
        std::string doc = c.doc_a.text + "\n\n" + c.doc_b.text;
        messages.push_back(msg("system", p.clrd_system));
        messages.push_back(msg("user", prompts::sft_user(doc, std::string())));
        messages.push_back(msg("assistant", c.label ? "yes" : "no"));
        break;
    }
    }
    return Json{{"id", s.id}, {"objective", objective_name(s.objective)}, {"messages", messages}};
}

void write_sft_jsonl(const std::vector<CscSample>& samples, const std::filesystem::path& path) {
    JsonlWriter out(path);
    for (const auto& s : samples) out.write(to_sft_messages(s));
    out.close();
}

} // namespace ragforge::csc
