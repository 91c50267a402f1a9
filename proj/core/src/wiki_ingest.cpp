#include "ragforge/wiki_ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "ragforge/hashing.hpp"
#include "ragforge/jsonl.hpp"
#include "ragforge/text.hpp"

namespace ragforge::ingest {

std::vector<std::string> segment_paragraphs(std::string_view raw_text) {
    std::vector<std::string> out;
    std::string current;
    std::size_t pos = 0;
    auto flush = [&] {
        std::string p = trim(current);
        if (!p.empty())
            out.push_back(std::move(p));
        current.clear();
    };
    while (pos < raw_text.size()) {
        std::size_t nl = raw_text.find('\n', pos);
        std::string_view line =
            nl == std::string_view::npos ? raw_text.substr(pos) : raw_text.substr(pos, nl - pos);
        if (is_blank(line)) {
            flush();
        } else {
            if (!current.empty())
                current += '\n';
            current += std::string(line);
        }
        if (nl == std::string_view::npos)
            break;
        pos = nl + 1;
    }
    flush();
    return out;
}

static bool parse_article_record(const Json& obj, Article& article, std::string& reason) {
    if (!obj.is_object()) {
        reason = "record is not an object";
        return false;
    }
    for (const char* key : {"page_id", "lang", "title", "text"}) {
        if (!obj.contains(key) || !obj[key].is_string()) {
            reason = std::string("missing or non-string field '") + key + "'";
            return false;
        }
    }
    article.page_id = obj["page_id"].get<std::string>();
    article.lang = obj["lang"].get<std::string>();
    article.title = obj["title"].get<std::string>();
    article.paragraphs = segment_paragraphs(obj["text"].get<std::string>());
    article.langlinks.clear();
    if (obj.contains("langlinks")) {
        if (!obj["langlinks"].is_object()) {
            reason = "field 'langlinks' must be an object";
            return false;
        }
        for (auto it = obj["langlinks"].begin(); it != obj["langlinks"].end(); ++it) {
            if (!it.value().is_string()) {
                reason = "langlink target for '" + it.key() + "' must be a string";
                return false;
            }
            article.langlinks[it.key()] = it.value().get<std::string>();
        }
    }
    if (article.page_id.empty()) {
        reason = "empty page_id";
        return false;
    }
    return true;
}

std::vector<Article> parse_collection(std::istream& input, const LanguageSet& langs,
                                      ParseReport& report) {
    std::vector<Article> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(input, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        Json obj = Json::parse(line, nullptr, false);
        if (obj.is_discarded()) {
            report.malformed.emplace_back(line_no, "invalid JSON");
            continue;
        }
        Article article;
        std::string reason;
        if (!parse_article_record(obj, article, reason)) {
            report.malformed.emplace_back(line_no, reason);
            continue;
        }
        if (!langs.contains(article.lang)) {
            ++report.unknown_language;
            continue;
        }
        if (article.paragraphs.empty()) {
            ++report.empty_dropped;
            continue;
        }
        ++report.parsed;
        out.push_back(std::move(article));
    }
    return out;
}

std::vector<Article> parse_collection_file(const std::filesystem::path& path,
                                           const LanguageSet& langs, ParseReport& report) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return parse_collection(in, langs, report);
}

std::vector<ParallelCluster> align_clusters(const std::vector<Article>& articles,
                                            const std::string& pivot_lang, AlignReport& report) {
    // (lang, title) -> article
    std::map<std::pair<std::string, std::string>, const Article*> by_title;
    std::vector<const Article*> pivots;
    for (const auto& a : articles) {
        by_title[{a.lang, a.title}] = &a;
        if (a.lang == pivot_lang)
            pivots.push_back(&a);
    }
    {
        std::map<std::string, const Article*> seen_titles;
        for (const Article* p : pivots) {
            auto [it, inserted] = seen_titles.emplace(p->title, p);
            if (!inserted)
                throw Error(ErrorCode::DuplicatePivotTitle,
                            "title '" + p->title + "' used by page_ids " + it->second->page_id +
                                " and " + p->page_id);
        }
    }
    std::sort(pivots.begin(), pivots.end(),
              [](const Article* a, const Article* b) { return a->page_id < b->page_id; });

    // first-wins claim of non-pivot articles, in pivot page_id order
    std::map<std::pair<std::string, std::string>, std::string> claimed; // (lang,page_id) -> pivot
    std::vector<ParallelCluster> clusters;
    clusters.reserve(pivots.size());
    for (const Article* p : pivots) {
        ParallelCluster cluster;
        cluster.pivot = *p;
        for (const auto& [lang, title] : p->langlinks) {
            if (lang == pivot_lang)
                continue;
            auto it = by_title.find({lang, title});
            if (it == by_title.end()) {
                report.dangling_links.emplace_back(p->page_id, lang, title);
                continue;
            }
            const Article* target = it->second;
            auto [cit, inserted] = claimed.emplace(std::make_pair(lang, target->page_id),
                                                   p->page_id);
            if (!inserted) {
                report.conflicts.emplace_back(lang, target->page_id, cit->second, p->page_id);
                continue;
            }
            cluster.parallels.emplace(lang, *target);
        }
        clusters.push_back(std::move(cluster));
    }
    return clusters;
}

std::vector<Passage> split_passages(const Article& article, int block_size) {
    std::vector<Passage> out;
    if (block_size < 1 || article.paragraphs.empty())
        return out;
    std::string full_text;
    for (std::size_t i = 0; i < article.paragraphs.size(); ++i) {
        if (i > 0)
            full_text += "\n\n";
        full_text += article.paragraphs[i];
    }
    auto spans = word_spans(full_text);
    const std::size_t block = static_cast<std::size_t>(block_size);
    int ordinal = 0;
    for (std::size_t start = 0; start < spans.size(); start += block, ++ordinal) {
        std::size_t stop = std::min(start + block, spans.size());
        Passage p;
        p.lang = article.lang;
        p.page_id = article.page_id;
        p.ordinal = ordinal;
        p.text = full_text.substr(spans[start].begin, spans[stop - 1].end - spans[start].begin);
        p.word_count = static_cast<int>(stop - start);
        out.push_back(std::move(p));
    }
    return out;
}

std::size_t write_passage_store(const std::vector<Passage>& passages,
                                const std::filesystem::path& jsonl_path, int block_size,
                                const LanguageSet& langs) {
    JsonlWriter writer(jsonl_path);
    std::map<std::string, std::size_t> per_lang;
    for (const auto& p : passages) {
        writer.write(Json{{"lang", p.lang},
                          {"page_id", p.page_id},
                          {"ordinal", p.ordinal},
                          {"text", p.text},
                          {"word_count", p.word_count}});
        ++per_lang[p.lang];
    }
    writer.close();
    Json manifest{{"artifact", "passage_store"},
                  {"block_size", block_size},
                  {"languages", langs.codes()},
                  {"passage_count", passages.size()},
                  {"per_language", per_lang},
                  {"content_hash", hash_file(jsonl_path)}};
    save_json_file(jsonl_path.string() + ".manifest.json", manifest);
    return passages.size();
}

std::vector<Passage> read_passage_store(const std::filesystem::path& jsonl_path) {
    std::vector<Passage> out;
    for_each_jsonl(jsonl_path, [&](std::size_t line, const Json& obj) {
        Passage p;
        try {
            p.lang = obj.at("lang").get<std::string>();
            p.page_id = obj.at("page_id").get<std::string>();
            p.ordinal = obj.at("ordinal").get<int>();
            p.text = obj.at("text").get<std::string>();
            p.word_count = obj.value("word_count", static_cast<int>(count_words(p.text)));
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::SchemaError,
                        jsonl_path.string() + ":" + std::to_string(line) + ": " + e.what());
        }
        out.push_back(std::move(p));
    });
    return out;
}

static Json article_to_json(const Article& a) {
    return Json{{"page_id", a.page_id},
                {"lang", a.lang},
                {"title", a.title},
                {"paragraphs", a.paragraphs},
                {"langlinks", a.langlinks}};
}

static Article article_from_json(const Json& obj) {
    Article a;
    a.page_id = obj.at("page_id").get<std::string>();
    a.lang = obj.at("lang").get<std::string>();
    a.title = obj.at("title").get<std::string>();
    a.paragraphs = obj.at("paragraphs").get<std::vector<std::string>>();
    if (obj.contains("langlinks"))
        a.langlinks = obj.at("langlinks").get<std::map<std::string, std::string>>();
    return a;
}

void write_clusters(const std::vector<ParallelCluster>& clusters,
                    const std::filesystem::path& path) {
    JsonlWriter writer(path);
    for (const auto& c : clusters) {
        Json parallels = Json::object();
        for (const auto& [lang, article] : c.parallels)
            parallels[lang] = article_to_json(article);
        writer.write(Json{{"pivot", article_to_json(c.pivot)}, {"parallels", parallels}});
    }
    writer.close();
}

std::vector<ParallelCluster> read_clusters(const std::filesystem::path& path) {
    std::vector<ParallelCluster> out;
    for_each_jsonl(path, [&](std::size_t line, const Json& obj) {
        try {
            ParallelCluster c;
            c.pivot = article_from_json(obj.at("pivot"));
            for (auto it = obj.at("parallels").begin(); it != obj.at("parallels").end(); ++it)
                c.parallels.emplace(it.key(), article_from_json(it.value()));
            out.push_back(std::move(c));
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::SchemaError,
                        path.string() + ":" + std::to_string(line) + ": " + e.what());
        }
    });
    return out;
}

} // namespace ragforge::ingest
