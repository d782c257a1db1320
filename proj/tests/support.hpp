#pragma once

// Shared generators and brute-force reference implementations for the tests.
// The reference code is deliberately naive and does not call into the
// library's uncertainty or editing code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "simple/editing.hpp"
#include "simple/records.hpp"
#include "simple/rng.hpp"

namespace testkit {

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("simple_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

struct SetShape {
    std::size_t m = 0;
    std::uint32_t n = 0;
    std::uint32_t e_dim = 0;
    std::uint32_t k = 0;
};

inline SetShape random_shape(simple::Rng& rng, std::size_t max_m, std::uint32_t max_n, std::uint32_t max_e,
                             std::uint32_t min_k = 2, std::uint32_t max_k = 4) {
    SetShape s;
    s.n = 1 + static_cast<std::uint32_t>(rng.below(max_n));
    s.e_dim = 1 + static_cast<std::uint32_t>(rng.below(max_e));
    s.k = min_k + static_cast<std::uint32_t>(rng.below(max_k - min_k + 1));
    s.m = 1 + rng.below(max_m);
    return s;
}

/// Random valid record set. Sample ids are sparse and shuffled; embeddings
/// are quantized to a coarse grid when `quantized` so that distance ties occur.
inline simple::EnsembleRecordSet random_set(simple::Rng& rng, const SetShape& shape, bool quantized = false) {
    std::vector<simple::EnsembleRecord> recs;
    std::uint64_t id = rng.below(5);
    std::vector<std::uint64_t> ids;
    for (std::size_t i = 0; i < shape.m; ++i) {
        ids.push_back(id);
        id += 1 + rng.below(4);
    }
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
    for (auto sid : ids) {
        for (std::uint32_t p = 0; p < shape.n; ++p) {
            simple::EnsembleRecord r;
            r.sample_id = sid;
            r.pass = p;
            r.label = static_cast<int>(rng.below(shape.k));
            std::vector<double> raw(shape.k);
            double total = 0.0;
            for (auto& v : raw) total += (v = rng.uniform() + 1e-3);
            for (auto v : raw) r.scores.push_back(static_cast<float>(v / total));
            for (std::uint32_t e = 0; e < shape.e_dim; ++e) {
                const double v = quantized ? static_cast<double>(rng.below(3)) : 4.0 * rng.uniform() - 2.0;
                r.embedding.push_back(static_cast<float>(v));
            }
            recs.push_back(std::move(r));
        }
    }
    return simple::EnsembleRecordSet(shape.n, shape.e_dim, shape.k, std::move(recs));
}

struct OracleRow {
    std::vector<std::size_t> neighbors;  // record indices
    double j = 0.0, e = 0.0, sigma = 0.0, s = 0.0;
};

/// Direct evaluation of the cut-edge statistic and its null moments:
/// all-pairs distances, full sort, then the textbook formulas.
inline std::vector<OracleRow> oracle_scores(const simple::EnsembleRecordSet& set, std::size_t k, bool loo) {
    const std::size_t n = set.size();
    std::map<int, double> counts;
    for (std::size_t i = 0; i < n; ++i) counts[set[i].label] += 1.0;

    std::vector<OracleRow> out(n);
    for (std::size_t u = 0; u < n; ++u) {
        std::vector<std::tuple<double, std::uint64_t, std::uint32_t, std::size_t>> cand;
        for (std::size_t v = 0; v < n; ++v) {
            if (v == u) continue;
            double d2 = 0.0;
            for (std::size_t e = 0; e < set.e_dim(); ++e) {
                const double diff = double(set[u].embedding[e]) - double(set[v].embedding[e]);
                d2 += diff * diff;
            }
            cand.emplace_back(std::sqrt(d2), set[v].sample_id, set[v].pass, v);
        }
        std::sort(cand.begin(), cand.end());
        const int yu = set[u].label;
        const double p = loo ? (counts[yu] - 1.0) / double(n - 1) : counts[yu] / double(n);
        double sw = 0.0, sw2 = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const auto& [d, sid, pass, v] = cand[i];
            const double w = 1.0 / (1.0 + d);
            out[u].neighbors.push_back(v);
            if (set[v].label != yu) out[u].j += w;
            sw += w;
            sw2 += w * w;
        }
        out[u].e = (1.0 - p) * sw;
        out[u].sigma = std::sqrt(p * (1.0 - p) * sw2);
        out[u].s = out[u].sigma > 0.0 ? (out[u].j - out[u].e) / out[u].sigma : 0.0;
    }
    return out;
}

/// Brute-force editing: removal by full sort on (-s, key) with the
/// lowest-ranked records kept, then strict majority per sample.
inline std::map<std::uint64_t, std::pair<int, bool>> oracle_edit(const simple::EnsembleRecordSet& set,
                                                                const std::vector<double>& s, double f,
                                                                const std::map<std::uint64_t, int>& fallback) {
    const std::size_t n = set.size();
    std::size_t remove = static_cast<std::size_t>(std::ceil(f * double(n) - 1e-9));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (s[a] != s[b]) return s[a] > s[b];
        return std::make_pair(set[a].sample_id, set[a].pass) > std::make_pair(set[b].sample_id, set[b].pass);
    });
    std::vector<bool> gone(n, false);
    for (std::size_t i = 0; i < remove; ++i) gone[idx[i]] = true;

    std::map<std::uint64_t, std::map<int, int>> votes;
    for (std::size_t i = 0; i < n; ++i) {
        votes[set[i].sample_id];
        if (!gone[i]) votes[set[i].sample_id][set[i].label]++;
    }
    std::map<std::uint64_t, std::pair<int, bool>> out;  // label, from vote
    for (const auto& [sid, tally] : votes) {
        int best = -1, best_count = 0, leaders = 0;
        for (const auto& [label, c] : tally) {
            if (c > best_count) {
                best = label;
                best_count = c;
                leaders = 1;
            } else if (c == best_count) {
                ++leaders;
            }
        }
        if (best_count > 0 && leaders == 1)
            out[sid] = {best, true};
        else
            out[sid] = {fallback.at(sid), false};
    }
    return out;
}

/// Random orthogonal matrix by Gram-Schmidt on Gaussian columns.
inline std::vector<std::vector<double>> random_orthogonal(simple::Rng& rng, std::size_t d) {
    std::vector<std::vector<double>> q;
    while (q.size() < d) {
        std::vector<double> v(d);
        for (auto& x : v) x = rng.normal();
        for (const auto& b : q) {
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) dot += v[i] * b[i];
            for (std::size_t i = 0; i < d; ++i) v[i] -= dot * b[i];
        }
        double norm = 0.0;
        for (auto x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-6) continue;
        for (auto& x : v) x /= norm;
        q.push_back(std::move(v));
    }
    return q;
}

/// Applies x -> Q x + t to every embedding. The result is rounded to float
/// like any stored embedding.
inline simple::EnsembleRecordSet transform_set(const simple::EnsembleRecordSet& set,
                                               const std::vector<std::vector<double>>& q,
                                               const std::vector<double>& t) {
    std::vector<simple::EnsembleRecord> recs = set.records();
    for (auto& r : recs) {
        std::vector<float> out(r.embedding.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            double acc = t[i];
            for (std::size_t j = 0; j < out.size(); ++j) acc += q[i][j] * double(r.embedding[j]);
            out[i] = static_cast<float>(acc);
        }
        r.embedding = std::move(out);
    }
    return simple::EnsembleRecordSet(set.n_passes(), set.e_dim(), set.n_classes(), std::move(recs));
}

}  // namespace testkit
