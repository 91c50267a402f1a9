#include "fixtures.hpp"

#include <atomic>

#include "ragforge/jsonl.hpp"
#include "ragforge/text.hpp"

namespace testsupport {

namespace {

const std::vector<std::string>& vocab_for(const std::string& lang) {
    static const std::vector<std::string> en = {
        "river",   "valley", "bridge",  "stone",   "market", "northern", "village",
        "county",  "museum", "founded", "century", "region", "capital",  "island",
        "railway", "harbor", "ancient", "temple",  "festival", "mountain"};
    static const std::vector<std::string> de = {
        "fluss", "tal",   "bruecke", "stein",  "markt", "dorf", "kreis", "museum",
        "insel", "bahn",  "hafen",   "tempel", "fest",  "berg", "wald",  "burg"};
    static const std::vector<std::string> fr = {
        "riviere", "vallee", "pont", "pierre",   "marche", "village", "musee", "ile",
        "chemin",  "port",   "fete", "montagne", "foret",  "chateau", "nord",  "sud"};
    static const std::vector<std::string> cs = {
        "reka",  "udoli",   "most",  "kamen", "trh",  "vesnice", "muzeum", "kraj",
        "ostrov", "pristav", "chram", "hora",  "les",  "hrad",    "obchod", "sever"};
    if (lang == "de") return de;
    if (lang == "fr") return fr;
    if (lang == "cs") return cs;
    return en;
}

// Han pool for zh fixtures; real characters so is_cjk sees them.
const std::u32string kHan = U"山水城河谷橋石市北村縣博物館世紀區都島鐵路港古寺節慶森林堡貿易道平原湖雪風花樹鳥雲月日光春秋冬夏";

std::string encode_utf8(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

} // namespace

std::string synth_paragraph(std::mt19937_64& rng, const std::string& lang, int words) {
    std::string out;
    if (lang == "zh") {
        for (int i = 0; i < words; ++i)
            out += encode_utf8(kHan[rng_below(rng, kHan.size())]);
        out += encode_utf8(U'。');
        return out;
    }
    const auto& vocab = vocab_for(lang);
    for (int i = 0; i < words; ++i) {
        if (i) out += ' ';
        out += vocab[rng_below(rng, vocab.size())];
    }
    out += '.';
    return out;
}

ingest::Article synth_article(std::mt19937_64& rng, const std::string& lang,
                              const std::string& page_id, const std::string& title,
                              int min_paras, int max_paras, int min_words, int max_words) {
    ingest::Article a;
    a.page_id = page_id;
    a.lang = lang;
    a.title = title;
    int paras = min_paras + static_cast<int>(rng_below(rng, max_paras - min_paras + 1));
    for (int i = 0; i < paras; ++i) {
        int words = min_words + static_cast<int>(rng_below(rng, max_words - min_words + 1));
        a.paragraphs.push_back(synth_paragraph(rng, lang, words));
    }
    return a;
}

std::vector<ingest::ParallelCluster> synth_clusters(std::size_t n, std::uint64_t seed,
                                                    const LanguageSet& langs, int min_paras,
                                                    int max_paras) {
    std::mt19937_64 rng(seed);
    std::vector<ingest::ParallelCluster> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        char num[24];
        std::snprintf(num, sizeof num, "%05zu", i);
        ingest::ParallelCluster c;
        for (const auto& lang : langs.codes()) {
            auto article = synth_article(rng, lang, lang + num, lang + "-topic-" + num,
                                         min_paras, max_paras);
            if (lang == langs.codes().front())
                c.pivot = std::move(article);
            else
                c.parallels[lang] = std::move(article);
        }
        for (const auto& [lang, a] : c.parallels)
            c.pivot.langlinks[lang] = a.title;
        out.push_back(std::move(c));
    }
    return out;
}

void write_articles_jsonl(const std::vector<ingest::ParallelCluster>& clusters,
                          const std::filesystem::path& path) {
    JsonlWriter writer(path);
    auto row = [](const ingest::Article& a) {
        std::string text;
        for (std::size_t i = 0; i < a.paragraphs.size(); ++i) {
            if (i) text += "\n\n";
            text += a.paragraphs[i];
        }
        Json obj{{"page_id", a.page_id}, {"lang", a.lang}, {"title", a.title}, {"text", text}};
        if (!a.langlinks.empty()) obj["langlinks"] = a.langlinks;
        return obj;
    };
    for (const auto& c : clusters) {
        writer.write(row(c.pivot));
        for (const auto& [lang, a] : c.parallels) writer.write(row(a));
    }
    writer.close();
}

std::vector<corpus::TestSample> echo_testset(std::size_t n) {
    std::mt19937_64 rng(417);
    std::vector<corpus::TestSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        corpus::TestSample t;
        char num[24];
        std::snprintf(num, sizeof num, "%06zu", i);
        t.id = std::string("test-") + num;
        t.source = synth_paragraph(rng, "en", 8 + static_cast<int>(rng_below(rng, 8)));
        t.translation = t.source;
        t.doc_en = synth_paragraph(rng, "en", 20);
        t.doc_zh = synth_paragraph(rng, "zh", 20);
        t.doc_de = synth_paragraph(rng, "de", 20);
        t.cluster_page_id = "en" + std::string(num);
        for (const auto& lang : corpus::kTestDocLangs) {
            corpus::DocProvenance prov;
            prov.cluster_page_id = t.cluster_page_id;
            prov.lang = lang;
            prov.page_id = lang + std::string(num);
            prov.para_start = 1;
            prov.para_len = 1;
            t.doc_prov[lang] = prov;
        }
        out.push_back(std::move(t));
    }
    return out;
}

TempDir::TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    auto base = std::filesystem::temp_directory_path();
    path_ = base / ("ragforge_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

} // namespace testsupport
