#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "simple/records.hpp"

namespace simple {

struct Neighbor {
    RecordKey key;
    std::size_t index = 0;  // position in the record set
    double distance = 0.0;
    int label = 0;
};

/// The k nearest other records of one record, ascending by (distance, key).
struct NeighborList {
    RecordKey key;
    std::vector<Neighbor> neighbors;
};

/// Exact k-NN by full pairwise Euclidean distance. Every other record is a
/// candidate, including other passes of the same sample. Distance ties go
/// to the lower (sample_id, pass). Throws ConfigError if k > M*N - 1.
std::vector<NeighborList> knn(const EnsembleRecordSet& set, std::size_t k, std::size_t workers = 1);

/// J_u = sum over neighbors v of [y_u != y_v] / (1 + d(u, v)).
double cut_edge_statistic(int y_u, std::span<const Neighbor> neighbors);

/// Relative label frequencies P-hat over a label multiset.
class LabelPriors {
public:
    LabelPriors() = default;
    explicit LabelPriors(std::vector<double> frequencies);

    static LabelPriors from_labels(std::span<const int> labels, int n_classes);

    double operator[](int label) const { return freq_.at(static_cast<std::size_t>(label)); }
    const std::vector<double>& frequencies() const { return freq_; }

private:
    std::vector<double> freq_;
};

struct NullMoments {
    double expectation = 0.0;  // E[J_u] under label shuffling
    double sigma = 0.0;        // its standard deviation
};

/// E = (1 - P) * sum w_v,  sigma^2 = P (1 - P) * sum w_v^2,  w_v = 1 / (1 + d_v),
/// with P the prior of y_u.
NullMoments null_moments(double prior_of_label, std::span<const Neighbor> neighbors);
NullMoments null_moments(int y_u, std::span<const Neighbor> neighbors, const LabelPriors& priors);

struct RecordUncertainty {
    RecordKey key;
    int label = 0;
    double cut_edge = 0.0;  // J_u
    double null_expectation = 0.0;
    double null_sigma = 0.0;
    double score = 0.0;  // s(u); larger = more uncertain
    std::vector<Neighbor> neighbors;
};

using UncertaintyReport = std::vector<RecordUncertainty>;

struct UncertaintyOptions {
    std::size_t k = 9;
    /// Prior of y_u among the other M*N - 1 labels, which is the exact
    /// expectation under shuffling everything but y_u. false counts u too.
    bool loo_priors = true;
    std::size_t workers = 1;
};

/// One entry per record, in record-set order. s = (J - E) / sigma, and
/// s = 0 whenever sigma = 0. Label counts are taken once over all M*N labels.
UncertaintyReport uncertainty_scores(const EnsembleRecordSet& set, const UncertaintyOptions& options);

/// CSV with header `sample_id,pass,label,J,E,sigma,s`.
void write_uncertainty_csv(const UncertaintyReport& report, const std::filesystem::path& path);

}  // namespace simple
