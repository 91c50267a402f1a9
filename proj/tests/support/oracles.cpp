#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace testsupport {

std::vector<retrieval::ScoredPassage> bm25_full_scan(
    const std::vector<ingest::Passage>& passages, const std::string& query,
    retrieval::Bm25Params params, int k) {
    const std::size_t n = passages.size();
    std::vector<std::map<std::string, int>> tf(n);
    std::vector<double> len(n);
    double total_len = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto terms = retrieval::analyze(passages[i].text);
        len[i] = static_cast<double>(terms.size());
        total_len += len[i];
        for (const auto& t : terms) ++tf[i][t];
    }
    double avg_len = n ? total_len / static_cast<double>(n) : 0.0;

    std::map<std::string, int> df;
    for (const auto& doc : tf)
        for (const auto& [term, count] : doc) ++df[term];

    auto query_terms = retrieval::analyze(query);
    std::vector<retrieval::ScoredPassage> scored;
    for (std::size_t i = 0; i < n; ++i) {
        double score = 0;
        for (const auto& term : query_terms) {
            auto it = tf[i].find(term);
            if (it == tf[i].end()) continue;
            double d = static_cast<double>(df[term]);
            double idf = std::log(1.0 + (static_cast<double>(n) - d + 0.5) / (d + 0.5));
            double f = static_cast<double>(it->second);
            score += idf * f * (params.k1 + 1.0) /
                     (f + params.k1 * (1.0 - params.b + params.b * len[i] / avg_len));
        }
        if (score > 0) scored.push_back({passages[i].id(), score, 0});
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (static_cast<int>(scored.size()) > k) scored.resize(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < scored.size(); ++i)
        scored[i].rank = static_cast<int>(i) + 1;
    return scored;
}

std::vector<std::size_t> mmr_reference(std::span<const std::string> candidates,
                                       const std::string& query, double lambda, int m,
                                       const retrieval::SimFn& sim) {
    std::vector<std::size_t> selected;
    std::vector<bool> used(candidates.size(), false);
    while (static_cast<int>(selected.size()) < m && selected.size() < candidates.size()) {
        double best = 0;
        std::size_t best_at = candidates.size();
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (used[i]) continue;
            double redundancy = 0;
            for (std::size_t s : selected)
                redundancy = std::max(redundancy, sim(candidates[i], candidates[s]));
            double value = lambda * sim(candidates[i], query) - (1.0 - lambda) * redundancy;
            if (best_at == candidates.size() || value > best) {
                best = value;
                best_at = i;
            }
        }
        used[best_at] = true;
        selected.push_back(best_at);
    }
    return selected;
}

} // namespace testsupport
