#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "../support.hpp"
#include "simple/errors.hpp"
#include "simple/uncertainty.hpp"

using namespace simple;

namespace {

/// One pass per sample, ids 0.., one-dimensional or given embeddings.
EnsembleRecordSet single_pass(const std::vector<std::vector<float>>& emb, const std::vector<int>& labels, int k = 2) {
    std::vector<EnsembleRecord> recs;
    for (std::size_t i = 0; i < emb.size(); ++i) {
        std::vector<float> scores(k, 0.0f);
        scores[labels[i]] = 1.0f;
        recs.push_back({i, 0, labels[i], scores, emb[i]});
    }
    return EnsembleRecordSet(1, static_cast<std::uint32_t>(emb.front().size()), k, recs);
}

Neighbor nb(double d, int label) { return Neighbor{{}, 0, d, label}; }

}  // namespace

TEST(Knn, LineExample) {
    const auto set = single_pass({{0}, {1}, {3}}, {0, 0, 0});
    const auto nn = knn(set, 1);
    ASSERT_EQ(nn.size(), 3u);
    EXPECT_EQ(nn[0].neighbors[0].index, 1u);
    EXPECT_EQ(nn[1].neighbors[0].index, 0u);
    EXPECT_EQ(nn[2].neighbors[0].index, 1u);
    EXPECT_DOUBLE_EQ(nn[2].neighbors[0].distance, 2.0);
}

TEST(Knn, IdenticalPointsAreMutualNeighbors) {
    const auto set = single_pass({{1, 1}, {1, 1}, {5, 5}}, {0, 1, 0});
    const auto nn = knn(set, 1);
    EXPECT_EQ(nn[0].neighbors[0].index, 1u);
    EXPECT_EQ(nn[1].neighbors[0].index, 0u);
    EXPECT_EQ(nn[0].neighbors[0].distance, 0.0);
}

TEST(Knn, DistanceTiesGoToLowerKey) {
    // 0 sits between 1 and 2 at distance 1 from both
    const auto set = single_pass({{0}, {1}, {-1}}, {0, 0, 0});
    EXPECT_EQ(knn(set, 1)[0].neighbors[0].index, 1u);
    const auto nn = knn(set, 2)[0].neighbors;
    EXPECT_EQ(nn[0].index, 1u);
    EXPECT_EQ(nn[1].index, 2u);
}

TEST(Knn, IncludesOtherPassesAndRejectsLargeK) {
    std::vector<EnsembleRecord> r{{0, 0, 0, {1, 0}, {0}}, {0, 1, 0, {1, 0}, {0.1f}}, {1, 0, 1, {0, 1}, {5}},
                                  {1, 1, 1, {0, 1}, {5.1f}}};
    EnsembleRecordSet set(2, 1, 2, r);
    EXPECT_EQ(knn(set, 1)[0].neighbors[0].key, (RecordKey{0, 1}));
    EXPECT_NO_THROW(knn(set, 3));
    EXPECT_THROW(knn(set, 4), ConfigError);
}

TEST(Knn, MatchesBruteForceWithTies) {
    Rng rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        auto shape = testkit::random_shape(rng, 20, 3, 3);
        shape.m += 4;
        const auto set = testkit::random_set(rng, shape, true);
        const std::size_t k = 1 + rng.below(std::min<std::size_t>(9, set.size() - 1));
        const auto oracle = testkit::oracle_scores(set, k, false);
        const auto nn = knn(set, k, 1 + trial % 3);
        for (std::size_t u = 0; u < set.size(); ++u)
            for (std::size_t i = 0; i < k; ++i) ASSERT_EQ(nn[u].neighbors[i].index, oracle[u].neighbors[i]);
    }
}

TEST(CutEdge, Examples) {
    const std::vector<Neighbor> agree{nb(1, 0), nb(2, 0)};
    EXPECT_EQ(cut_edge_statistic(0, agree), 0.0);
    const std::vector<Neighbor> one{nb(1, 1), nb(0.5, 0)};
    EXPECT_DOUBLE_EQ(cut_edge_statistic(0, one), 0.5);
    const std::vector<Neighbor> two{nb(1, 1), nb(3, 2)};
    EXPECT_DOUBLE_EQ(cut_edge_statistic(0, two), 0.75);
}

TEST(NullMoments, Examples) {
    const std::vector<Neighbor> two{nb(1, 1), nb(1, 1)};
    auto m = null_moments(0.5, two);
    EXPECT_DOUBLE_EQ(m.expectation, 0.5);
    EXPECT_DOUBLE_EQ(m.sigma * m.sigma, 0.125);
    m = null_moments(1.0, two);
    EXPECT_EQ(m.expectation, 0.0);
    EXPECT_EQ(m.sigma, 0.0);
}

TEST(Score, TwoNeighborInstance) {
    // record 0 has label 0 and two label-1 neighbors at distance 1; priors 0.5 / 0.5
    const auto set = single_pass({{0}, {1}, {-1}, {50}}, {0, 1, 1, 0});
    const auto r = uncertainty_scores(set, {2, false, 1});
    EXPECT_DOUBLE_EQ(r[0].cut_edge, 1.0);
    EXPECT_DOUBLE_EQ(r[0].null_expectation, 0.5);
    EXPECT_NEAR(r[0].null_sigma, 0.353553, 1e-6);
    EXPECT_NEAR(r[0].score, 1.41421, 1e-5);
    EXPECT_NEAR(r[0].score, std::sqrt(2.0), 1e-12);
}

TEST(Score, UniformLabelsScoreZero) {
    Rng rng(3);
    auto shape = testkit::random_shape(rng, 10, 3, 3);
    shape.m += 3;
    auto set = testkit::random_set(rng, shape);
    std::vector<EnsembleRecord> recs = set.records();
    for (auto& r : recs) r.label = 1;
    const EnsembleRecordSet same(set.n_passes(), set.e_dim(), set.n_classes(), recs);
    for (const auto& u : uncertainty_scores(same, {3, false, 1})) {
        EXPECT_EQ(u.null_sigma, 0.0);
        EXPECT_EQ(u.score, 0.0);
    }
}

TEST(Score, CenteredCaseIsZero) {
    // J equals E exactly: prior 0.5 and one of two equidistant neighbors disagrees
    const auto set = single_pass({{0}, {1}, {-1}, {40}}, {0, 1, 0, 1});
    const auto r = uncertainty_scores(set, {2, false, 1});
    EXPECT_DOUBLE_EQ(r[0].cut_edge, r[0].null_expectation);
    EXPECT_EQ(r[0].score, 0.0);
}

TEST(Score, MatchesOracleBothPriorModes) {
    Rng rng(77);
    for (int trial = 0; trial < 60; ++trial) {
        auto shape = testkit::random_shape(rng, 30, 4, 6);
        shape.m += 2;
        const auto set = testkit::random_set(rng, shape, trial % 4 == 0);
        const std::size_t k = 1 + rng.below(std::min<std::size_t>(9, set.size() - 1));
        for (bool loo : {false, true}) {
            const auto oracle = testkit::oracle_scores(set, k, loo);
            const auto got = uncertainty_scores(set, {k, loo, 2});
            for (std::size_t u = 0; u < set.size(); ++u) {
                ASSERT_NEAR(got[u].cut_edge, oracle[u].j, 1e-9);
                ASSERT_NEAR(got[u].null_expectation, oracle[u].e, 1e-9);
                ASSERT_NEAR(got[u].null_sigma, oracle[u].sigma, 1e-9);
                ASSERT_NEAR(got[u].score, oracle[u].s, 1e-9);
            }
        }
    }
}

TEST(Score, WorkerCountDoesNotMatter) {
    Rng rng(5);
    const auto set = testkit::random_set(rng, {40, 3, 4, 3});
    const auto a = uncertainty_scores(set, {9, false, 1});
    const auto b = uncertainty_scores(set, {9, false, 3});
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].score, b[i].score);
}

TEST(Priors, Validation) {
    EXPECT_THROW(LabelPriors({0.5, 0.6}), ArgumentError);
    EXPECT_THROW(LabelPriors({-0.1, 1.1}), ArgumentError);
    const std::vector<int> labels{0, 0, 1, 2};
    const auto p = LabelPriors::from_labels(labels, 3);
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[2], 0.25);
}

TEST(Score, CsvExport) {
    const auto set = single_pass({{0}, {1}, {-1}, {50}}, {0, 1, 1, 0});
    auto dir = testkit::temp_dir("uncertainty_csv");
    write_uncertainty_csv(uncertainty_scores(set, {2, false, 1}), dir / "s.csv");
    std::ifstream in(dir / "s.csv");
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header, "sample_id,pass,label,J,E,sigma,s");
    EXPECT_EQ(first.rfind("0,0,0,1,0.5,", 0), 0u) << first;
}
