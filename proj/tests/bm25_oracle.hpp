#pragma once

// Brute-force BM25 used as an independent oracle: no inverted index, every
// statistic recomputed from the raw token lists on each query.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

inline std::vector<std::string> tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::ispunct(c)) continue;
        if (std::isspace(c)) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

struct Hit {
    std::string id;
    double score;
};

inline std::vector<Hit> rank(const std::vector<std::pair<std::string, std::string>>& docs, const std::string& query,
                             std::size_t k, double k1 = 1.2, double b = 0.75) {
    std::vector<std::vector<std::string>> toks;
    double total = 0;
    for (const auto& d : docs) {
        toks.push_back(tokens(d.second));
        total += static_cast<double>(toks.back().size());
    }
    const double n = static_cast<double>(docs.size());
    const double avg = total / n;
    std::vector<Hit> hits;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        double s = 0;
        for (const auto& q : tokens(query)) {
            double tf = static_cast<double>(std::count(toks[i].begin(), toks[i].end(), q));
            if (tf == 0) continue;
            double df = 0;
            for (const auto& t : toks) df += std::find(t.begin(), t.end(), q) != t.end() ? 1 : 0;
            double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
            double len = static_cast<double>(toks[i].size());
            s += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avg));
        }
        if (s > 0) hits.push_back({docs[i].first, s});
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& x, const Hit& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.id < y.id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

} // namespace oracle
