#include "simple/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "simple/errors.hpp"
#include "simple/parallel.hpp"

namespace simple {

namespace {

double euclidean(const std::vector<float>& a, const std::vector<float>& b) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        total += diff * diff;
    }
    return std::sqrt(total);
}

bool neighbor_before(const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.key < b.key;
}

}  // namespace

std::vector<NeighborList> knn(const EnsembleRecordSet& set, std::size_t k, std::size_t workers) {
    const std::size_t total = set.size();
    if (total == 0 || k > total - 1)
        throw ConfigError("k=" + std::to_string(k) + " neighbors requested but only " +
                          std::to_string(total == 0 ? 0 : total - 1) + " other records exist");

    std::vector<NeighborList> out(total);
    parallel_for(total, workers, [&](std::size_t u) {
        const auto& ru = set[u];
        std::vector<Neighbor> candidates;
        candidates.reserve(total - 1);
        for (std::size_t v = 0; v < total; ++v) {
            if (v == u) continue;
            const auto& rv = set[v];
            candidates.push_back({rv.key(), v, euclidean(ru.embedding, rv.embedding), rv.label});
        }
        if (k < candidates.size()) {
            std::nth_element(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                             candidates.end(), neighbor_before);
            candidates.resize(k);
        }
        std::sort(candidates.begin(), candidates.end(), neighbor_before);
        out[u] = NeighborList{ru.key(), std::move(candidates)};
    });
    return out;
}

double cut_edge_statistic(int y_u, std::span<const Neighbor> neighbors) {
    double j = 0.0;
    for (const auto& v : neighbors)
        if (v.label != y_u) j += 1.0 / (1.0 + v.distance);
    return j;
}

LabelPriors::LabelPriors(std::vector<double> frequencies) : freq_(std::move(frequencies)) {
    double total = 0.0;
    for (double f : freq_) {
        if (!(f >= 0.0 && f <= 1.0)) throw ArgumentError("label prior outside [0,1]");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("label priors do not sum to 1");
}

LabelPriors LabelPriors::from_labels(std::span<const int> labels, int n_classes) {
    if (labels.empty()) throw ArgumentError("cannot estimate priors from no labels");
    std::vector<double> counts(static_cast<std::size_t>(n_classes), 0.0);
    for (int y : labels) {
        if (y < 0 || y >= n_classes) throw ArgumentError("label out of range");
        counts[static_cast<std::size_t>(y)] += 1.0;
    }
    for (auto& c : counts) c /= static_cast<double>(labels.size());
    return LabelPriors(std::move(counts));
}

NullMoments null_moments(double prior, std::span<const Neighbor> neighbors) {
    double sum_w = 0.0, sum_w2 = 0.0;
    for (const auto& v : neighbors) {
        const double w = 1.0 / (1.0 + v.distance);
        sum_w += w;
        sum_w2 += w * w;
    }
    const double variance = prior * (1.0 - prior) * sum_w2;
    return {(1.0 - prior) * sum_w, std::sqrt(std::max(0.0, variance))};
}

NullMoments null_moments(int y_u, std::span<const Neighbor> neighbors, const LabelPriors& priors) {
    return null_moments(priors[y_u], neighbors);
}

UncertaintyReport uncertainty_scores(const EnsembleRecordSet& set, const UncertaintyOptions& options) {
    auto lists = knn(set, options.k, options.workers);

    const int n_classes = static_cast<int>(set.n_classes());
    std::vector<double> counts(static_cast<std::size_t>(n_classes), 0.0);
    for (const auto& r : set.records()) counts[static_cast<std::size_t>(r.label)] += 1.0;
    const double total = static_cast<double>(set.size());

    UncertaintyReport report(set.size());
    parallel_for(set.size(), options.workers, [&](std::size_t u) {
        const auto& r = set[u];
        double prior = counts[static_cast<std::size_t>(r.label)] / total;
        if (options.loo_priors)
            prior = total > 1.0 ? (counts[static_cast<std::size_t>(r.label)] - 1.0) / (total - 1.0) : 0.0;
        auto& out = report[u];
        out.key = r.key();
        out.label = r.label;
        out.neighbors = std::move(lists[u].neighbors);
        out.cut_edge = cut_edge_statistic(r.label, out.neighbors);
        const NullMoments m = null_moments(prior, out.neighbors);
        out.null_expectation = m.expectation;
        out.null_sigma = m.sigma;
        out.score = m.sigma > 0.0 ? (out.cut_edge - m.expectation) / m.sigma : 0.0;
    });
    return report;
}

void write_uncertainty_csv(const UncertaintyReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IntegrityError("cannot open " + path.string() + " for writing");
    out << "sample_id,pass,label,J,E,sigma,s\n";
    char buf[256];
    for (const auto& r : report) {
        std::snprintf(buf, sizeof buf, "%llu,%u,%d,%.17g,%.17g,%.17g,%.17g\n",
                      static_cast<unsigned long long>(r.key.sample_id), r.key.pass, r.label, r.cut_edge,
                      r.null_expectation, r.null_sigma, r.score);
        out << buf;
    }
}

}  // namespace simple
