#include "ragforge/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>

#include "ragforge/errors.hpp"
#include "ragforge/jsonl.hpp"
#include "ragforge/text.hpp"

namespace ragforge::retrieval {

std::vector<std::string> analyze(std::string_view text) {
    std::vector<std::string> terms;
    std::string current;
    std::size_t pos = 0;
    auto flush = [&] {
        if (!current.empty()) {
            terms.push_back(current);
            current.clear();
        }
    };
    while (pos < text.size()) {
        std::size_t start = pos;
        char32_t cp = decode_utf8(text, pos);
        if (is_cjk(cp)) {
            flush();
            terms.emplace_back(text.substr(start, pos - start));
        } else if (cp < 0x80) {
            char c = static_cast<char>(cp);
            if (std::isalnum(static_cast<unsigned char>(c))) {
                current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            } else {
                flush();
            }
        } else if (cp == 0x00A0 || cp == 0x3000 || (cp >= 0x2000 && cp <= 0x200A) ||
                   (cp >= 0x2010 && cp <= 0x205E) || (cp >= 0x3001 && cp <= 0x303F) ||
                   (cp >= 0xFF01 && cp <= 0xFF0F)) {
            // spaces and common non-ASCII punctuation
            flush();
        } else {
            current.append(text.substr(start, pos - start));
        }
    }
    flush();
    return terms;
}

Bm25Index Bm25Index::build(const std::vector<ingest::Passage>& passages, Bm25Params params) {
    if (passages.empty())
        throw Error(ErrorCode::EmptyCorpus, "no passages to index");
    std::vector<const ingest::Passage*> sorted;
    sorted.reserve(passages.size());
    for (const auto& p : passages)
        sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(), [](const ingest::Passage* a,
                                               const ingest::Passage* b) {
        return a->id() < b->id();
    });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i]->id() == sorted[i - 1]->id())
            throw Error(ErrorCode::DuplicatePassageId, sorted[i]->id());

    Bm25Index index;
    index.params_ = params;
    index.ids_.reserve(sorted.size());
    index.lengths_.reserve(sorted.size());
    std::uint64_t total_len = 0;
    for (std::size_t slot = 0; slot < sorted.size(); ++slot) {
        index.ids_.push_back(sorted[slot]->id());
        auto terms = analyze(sorted[slot]->text);
        index.lengths_.push_back(static_cast<std::int32_t>(terms.size()));
        total_len += terms.size();
        std::map<std::string, std::int32_t> tf;
        for (auto& t : terms)
            ++tf[t];
        for (auto& [term, freq] : tf)
            index.postings_[term].emplace_back(static_cast<std::int32_t>(slot), freq);
    }
    index.avg_len_ = static_cast<double>(total_len) / static_cast<double>(sorted.size());
    return index;
}

std::span<const std::pair<std::int32_t, std::int32_t>> Bm25Index::postings(
    const std::string& term) const {
    auto it = postings_.find(term);
    if (it == postings_.end())
        return {};
    return it->second;
}

std::vector<ScoredPassage> Bm25Index::query(std::string_view query_text, int k) const {
    std::vector<ScoredPassage> results;
    if (k < 1)
        return results;
    const double n = static_cast<double>(ids_.size());
    std::unordered_map<std::int32_t, double> scores;
    for (const auto& term : analyze(query_text)) {
        auto it = postings_.find(term);
        if (it == postings_.end())
            continue;
        const double df = static_cast<double>(it->second.size());
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (const auto& [slot, tf] : it->second) {
            const double len = static_cast<double>(lengths_[static_cast<std::size_t>(slot)]);
            const double norm = params_.k1 * (1.0 - params_.b + params_.b * len / avg_len_);
            scores[slot] += idf * (tf * (params_.k1 + 1.0)) / (tf + norm);
        }
    }
    std::vector<std::pair<std::int32_t, double>> hits(scores.begin(), scores.end());
    // slot order is id order, so the slot is the tie-break
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second)
            return a.second > b.second;
        return a.first < b.first;
    });
    if (hits.size() > static_cast<std::size_t>(k))
        hits.resize(static_cast<std::size_t>(k));
    results.reserve(hits.size());
    for (std::size_t i = 0; i < hits.size(); ++i)
        results.push_back({ids_[static_cast<std::size_t>(hits[i].first)], hits[i].second,
                           static_cast<int>(i + 1)});
    return results;
}

void Bm25Index::save(const std::filesystem::path& path) const {
    Json postings = Json::object();
    std::vector<std::string> terms;
    terms.reserve(postings_.size());
    for (const auto& [term, _] : postings_)
        terms.push_back(term);
    std::sort(terms.begin(), terms.end());
    for (const auto& term : terms) {
        Json list = Json::array();
        for (const auto& [slot, tf] : postings_.at(term))
            list.push_back(Json::array({slot, tf}));
        postings[term] = std::move(list);
    }
    Json doc{{"version", 1},
             {"analyzer", kAnalyzerId},
             {"k1", params_.k1},
             {"b", params_.b},
             {"N", ids_.size()},
             {"avg_doc_length", avg_len_},
             {"ids", ids_},
             {"doc_lengths", lengths_},
             {"postings", postings}};
    save_json_file(path, doc, -1);
}

Bm25Index Bm25Index::load(const std::filesystem::path& path) {
    Json doc = load_json_file(path);
    if (doc.value("version", 0) != 1)
        throw Error(ErrorCode::SchemaError, "unsupported index version in " + path.string());
    if (doc.value("analyzer", "") != kAnalyzerId)
        throw Error(ErrorCode::SchemaError, "analyzer mismatch in " + path.string());
    Bm25Index index;
    index.params_.k1 = doc.at("k1").get<double>();
    index.params_.b = doc.at("b").get<double>();
    index.ids_ = doc.at("ids").get<std::vector<std::string>>();
    index.lengths_ = doc.at("doc_lengths").get<std::vector<std::int32_t>>();
    index.avg_len_ = doc.at("avg_doc_length").get<double>();
    for (auto it = doc.at("postings").begin(); it != doc.at("postings").end(); ++it) {
        auto& list = index.postings_[it.key()];
        for (const auto& entry : it.value())
            list.emplace_back(entry[0].get<std::int32_t>(), entry[1].get<std::int32_t>());
    }
    if (index.ids_.size() != doc.at("N").get<std::size_t>())
        throw Error(ErrorCode::SchemaError, "passage count mismatch in " + path.string());
    return index;
}

// ---------------------------------------------------------------------------
// dense index

static void l2_normalize(std::vector<float>& v, const std::string& what) {
    double norm_sq = 0.0;
    for (float x : v)
        norm_sq += static_cast<double>(x) * x;
    if (norm_sq <= 0.0)
        throw Error(ErrorCode::EmbedderFailure, "zero vector for " + what);
    const float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
    for (float& x : v)
        x *= inv;
}

namespace {
struct Checkpoint {
    std::size_t completed = 0; // passages embedded so far
    std::vector<float> vectors;
};
} // namespace

static void write_checkpoint(const std::filesystem::path& path, const std::string& embedder_id,
                             std::size_t dim, std::size_t completed,
                             const std::vector<float>& vectors) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write checkpoint " + path.string());
    Json header{{"embedder_id", embedder_id}, {"dimension", dim}, {"completed", completed}};
    out << header.dump() << '\n';
    out.write(reinterpret_cast<const char*>(vectors.data()),
              static_cast<std::streamsize>(completed * dim * sizeof(float)));
}

static std::optional<Checkpoint> read_checkpoint(const std::filesystem::path& path,
                                                 const std::string& embedder_id,
                                                 std::size_t dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return std::nullopt;
    std::string header_line;
    if (!std::getline(in, header_line))
        return std::nullopt;
    Json header = Json::parse(header_line, nullptr, false);
    if (header.is_discarded() || header.value("embedder_id", "") != embedder_id ||
        header.value("dimension", std::size_t{0}) != dim)
        return std::nullopt;
    Checkpoint cp;
    cp.completed = header.value("completed", std::size_t{0});
    cp.vectors.resize(cp.completed * dim);
    in.read(reinterpret_cast<char*>(cp.vectors.data()),
            static_cast<std::streamsize>(cp.vectors.size() * sizeof(float)));
    if (!in)
        return std::nullopt;
    return cp;
}

DenseIndex DenseIndex::build(const std::vector<ingest::Passage>& passages, Embedder& embedder,
                             const DenseBuildOptions& options) {
    if (passages.empty())
        throw Error(ErrorCode::EmptyCorpus, "no passages to index");
    std::vector<const ingest::Passage*> sorted;
    sorted.reserve(passages.size());
    for (const auto& p : passages)
        sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(), [](const ingest::Passage* a,
                                               const ingest::Passage* b) {
        return a->id() < b->id();
    });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i]->id() == sorted[i - 1]->id())
            throw Error(ErrorCode::DuplicatePassageId, sorted[i]->id());

    DenseIndex index;
    index.dim_ = embedder.dimension();
    index.embedder_id_ = embedder.id();
    index.ids_.reserve(sorted.size());
    for (const auto* p : sorted)
        index.ids_.push_back(p->id());

    std::size_t start = 0;
    index.vectors_.reserve(sorted.size() * index.dim_);
    if (options.checkpoint_path) {
        if (auto cp = read_checkpoint(*options.checkpoint_path, index.embedder_id_, index.dim_);
            cp && cp->completed <= sorted.size()) {
            index.vectors_ = std::move(cp->vectors);
            start = cp->completed;
        }
    }

    const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
    for (std::size_t pos = start; pos < sorted.size(); pos += batch) {
        const std::size_t stop = std::min(pos + batch, sorted.size());
        std::vector<std::string> texts;
        texts.reserve(stop - pos);
        for (std::size_t i = pos; i < stop; ++i)
            texts.push_back(sorted[i]->text);

        std::vector<std::vector<float>> vectors;
        int attempt = 0;
        for (;;) {
            try {
                vectors = embedder.embed(texts);
                break;
            } catch (const std::exception& e) {
                if (++attempt >= std::max(1, options.max_retries)) {
                    if (options.checkpoint_path)
                        write_checkpoint(*options.checkpoint_path, index.embedder_id_,
                                         index.dim_, pos, index.vectors_);
                    throw Error(ErrorCode::EmbedderFailure,
                                std::string("batch at passage ") + std::to_string(pos) + ": " +
                                    e.what());
                }
            }
        }
        if (vectors.size() != texts.size())
            throw Error(ErrorCode::EmbedderFailure, "embedder returned wrong batch size");
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            if (vectors[i].size() != index.dim_)
                throw Error(ErrorCode::DimensionMismatch,
                            "embedder returned dimension " + std::to_string(vectors[i].size()) +
                                ", expected " + std::to_string(index.dim_));
            l2_normalize(vectors[i], sorted[pos + i]->id());
            index.vectors_.insert(index.vectors_.end(), vectors[i].begin(), vectors[i].end());
        }
        if (options.checkpoint_path)
            write_checkpoint(*options.checkpoint_path, index.embedder_id_, index.dim_, stop,
                             index.vectors_);
    }
    if (options.checkpoint_path) {
        std::error_code ec;
        std::filesystem::remove(*options.checkpoint_path, ec);
    }
    return index;
}

std::span<const float> DenseIndex::vector_at(std::size_t slot) const {
    return {vectors_.data() + slot * dim_, dim_};
}

std::vector<ScoredPassage> DenseIndex::query(const std::vector<float>& query_vector,
                                             int k) const {
    if (query_vector.size() != dim_)
        throw Error(ErrorCode::DimensionMismatch,
                    "query dimension " + std::to_string(query_vector.size()) + ", index " +
                        std::to_string(dim_));
    std::vector<std::pair<std::size_t, double>> hits;
    hits.reserve(ids_.size());
    for (std::size_t slot = 0; slot < ids_.size(); ++slot) {
        double dot = 0.0;
        const float* row = vectors_.data() + slot * dim_;
        for (std::size_t d = 0; d < dim_; ++d)
            dot += static_cast<double>(row[d]) * query_vector[d];
        hits.emplace_back(slot, dot);
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second)
            return a.second > b.second;
        return a.first < b.first;
    });
    if (k >= 0 && hits.size() > static_cast<std::size_t>(k))
        hits.resize(static_cast<std::size_t>(k));
    std::vector<ScoredPassage> results;
    results.reserve(hits.size());
    for (std::size_t i = 0; i < hits.size(); ++i)
        results.push_back({ids_[hits[i].first], hits[i].second, static_cast<int>(i + 1)});
    return results;
}

std::vector<ScoredPassage> DenseIndex::query(const std::string& query_text, Embedder& embedder,
                                             int k) const {
    auto vectors = embedder.embed({query_text});
    if (vectors.size() != 1 || vectors[0].size() != dim_)
        throw Error(ErrorCode::DimensionMismatch, "query embedding has wrong shape");
    l2_normalize(vectors[0], "query");
    return query(vectors[0], k);
}

void DenseIndex::save(const std::filesystem::path& path) const {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    Json header{{"dimension", dim_},
                {"embedder_id", embedder_id_},
                {"count", ids_.size()},
                {"ids", ids_}};
    out << header.dump() << '\n';
    // packed little-endian f32 rows in passage-id order
    out.write(reinterpret_cast<const char*>(vectors_.data()),
              static_cast<std::streamsize>(vectors_.size() * sizeof(float)));
    if (!out)
        throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

DenseIndex DenseIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::string header_line;
    if (!std::getline(in, header_line))
        throw Error(ErrorCode::SchemaError, "missing header in " + path.string());
    Json header = Json::parse(header_line, nullptr, false);
    if (header.is_discarded())
        throw Error(ErrorCode::SchemaError, "invalid header in " + path.string());
    DenseIndex index;
    index.dim_ = header.at("dimension").get<std::size_t>();
    index.embedder_id_ = header.at("embedder_id").get<std::string>();
    index.ids_ = header.at("ids").get<std::vector<std::string>>();
    if (index.ids_.size() != header.at("count").get<std::size_t>())
        throw Error(ErrorCode::SchemaError, "count mismatch in " + path.string());
    index.vectors_.resize(index.ids_.size() * index.dim_);
    in.read(reinterpret_cast<char*>(index.vectors_.data()),
            static_cast<std::streamsize>(index.vectors_.size() * sizeof(float)));
    if (!in)
        throw Error(ErrorCode::SchemaError, "truncated vector data in " + path.string());
    return index;
}

// ---------------------------------------------------------------------------
// MMR

std::vector<std::size_t> mmr_select(std::span<const std::string> candidates,
                                    const std::string& query, double lambda, int m,
                                    const SimFn& sim) {
    std::vector<std::size_t> selected;
    if (m < 1 || candidates.empty())
        return selected;
    const std::size_t n = candidates.size();
    std::vector<double> relevance(n);
    for (std::size_t i = 0; i < n; ++i)
        relevance[i] = sim(candidates[i], query);
    std::vector<double> max_sim_selected(n, 0.0);
    std::vector<bool> taken(n, false);
    const std::size_t budget = std::min<std::size_t>(static_cast<std::size_t>(m), n);
    while (selected.size() < budget) {
        double best_score = -std::numeric_limits<double>::infinity();
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i])
                continue;
            double redundancy = selected.empty() ? 0.0 : max_sim_selected[i];
            double score = lambda * relevance[i] - (1.0 - lambda) * redundancy;
            if (score > best_score) {
                best_score = score;
                best = i;
            }
        }
        taken[best] = true;
        selected.push_back(best);
        for (std::size_t i = 0; i < n; ++i) {
            if (!taken[i])
                max_sim_selected[i] =
                    std::max(max_sim_selected[i], sim(candidates[i], candidates[best]));
        }
    }
    return selected;
}

double lexical_sim(const std::string& a, const std::string& b) {
    return trigram_jaccard(a, b);
}

SimFn make_embedding_sim(Embedder& embedder) {
    auto cache = std::make_shared<std::unordered_map<std::string, std::vector<float>>>();
    return [&embedder, cache](const std::string& a, const std::string& b) {
        auto vec_of = [&](const std::string& text) -> const std::vector<float>& {
            auto it = cache->find(text);
            if (it == cache->end()) {
                auto vectors = embedder.embed({text});
                if (vectors.size() != 1)
                    throw Error(ErrorCode::EmbedderFailure, "embedder returned wrong batch size");
                l2_normalize(vectors[0], "mmr text");
                it = cache->emplace(text, std::move(vectors[0])).first;
            }
            return it->second;
        };
        const auto& va = vec_of(a);
        const auto& vb = vec_of(b);
        double dot = 0.0;
        for (std::size_t i = 0; i < va.size() && i < vb.size(); ++i)
            dot += static_cast<double>(va[i]) * vb[i];
        // clamp cosine into [0,1] as MMR's sim contract requires
        return std::max(0.0, std::min(1.0, dot));
    };
}

} // namespace ragforge::retrieval
