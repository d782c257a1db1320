#include <gtest/gtest.h>

#include <cmath>

#include "../support.hpp"
#include "simple/errors.hpp"
#include "simple/scorer.hpp"

using namespace simple;

TEST(Templates, BuiltinPatterns) {
    EXPECT_EQ(build_supposition(builtin_template("SST2"), {{"x", "the plot is thrilling"}}),
              "The movie is good is entailed by the plot is thrilling");
    EXPECT_EQ(build_supposition(builtin_template("RTE"), {{"p", "A man sleeps"}, {"h", "A person rests"}}),
              "A person rests is entailed by A man sleeps");
    EXPECT_EQ(build_supposition(builtin_template("QNLI"), {{"t", "Paris is in France"}, {"q", "where is Paris"}}),
              "The answer to where is Paris is entailed by Paris is in France");
    EXPECT_EQ(build_supposition(builtin_template("QQP"), {{"q1", "A"}, {"q2", "B"}}),
              "A's answer is entailed by B's answer");
    const auto& emo = builtin_template("EMOTION");
    ASSERT_EQ(emo.label_texts.size(), 3u);
    EXPECT_EQ(build_supposition(emo, {{"x", "S"}, {"label_text", emo.label_texts[1]}}), "I am sad is entailed by S");
    EXPECT_THROW(builtin_template("NOPE"), TemplateError);
}

TEST(Templates, SubstitutionIsVerbatim) {
    SuppositionTemplate id{"ID", "{x}", {}};
    EXPECT_EQ(build_supposition(id, {{"x", ""}}), "");
    EXPECT_EQ(build_supposition(id, {{"x", "{p}"}}), "{p}");
    SuppositionTemplate lit{"LIT", "{x} and {foo}", {}};
    EXPECT_EQ(build_supposition(lit, {{"x", "a"}}), "a and {foo}");
    EXPECT_EQ((SuppositionTemplate{"T", "{h} by {p} {h}", {}}.placeholders()), (std::vector<std::string>{"h", "p"}));
}

TEST(Templates, Errors) {
    try {
        build_supposition(builtin_template("RTE"), {{"p", "x"}});
        FAIL();
    } catch (const TemplateError& e) {
        EXPECT_EQ(e.placeholder(), "h");
        EXPECT_EQ(e.exit_code(), 2);
    }
    EXPECT_THROW(build_supposition({"N", "no slots", {}}, {}), TemplateError);
}

TEST(Templates, RegistryRoundTrip) {
    auto dir = testkit::temp_dir("templates");
    write_template_registry(builtin_templates(), dir / "t.jsonl");
    EXPECT_EQ(load_template_registry(dir / "t.jsonl"), builtin_templates());
}

TEST(Scores, BinaryTruthProb) {
    EXPECT_NEAR(binary_truth_prob({0.6, 0.3, 0.1}).p_true, 6.0 / 7.0, 1e-12);
    EXPECT_NEAR(binary_truth_prob({0.6, 0.3, 0.1}).p_false, 1.0 / 7.0, 1e-12);
    EXPECT_DOUBLE_EQ(binary_truth_prob({0.5, 0.0, 0.5}).p_true, 0.5);
    EXPECT_THROW(binary_truth_prob({0.0, 1.0, 0.0}), DegenerateScoreError);
    EXPECT_DOUBLE_EQ(binary_truth_prob({0.0, 1.0, 0.0}, true).p_true, 0.5);
    try {
        binary_truth_prob({0.0, 1.0, 0.0});
    } catch (const Error& e) {
        EXPECT_EQ(e.exit_code(), 4);
    }
}

TEST(Scores, NeutralMassIsIgnored) {
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const double e = rng.uniform() + 1e-3, c = rng.uniform() + 1e-3;
        const auto a = binary_truth_prob({e, 0.0, c}), b = binary_truth_prob({e, 5.0 * rng.uniform(), c});
        EXPECT_DOUBLE_EQ(a.p_true, b.p_true);
        EXPECT_NEAR(a.p_true + a.p_false, 1.0, 1e-12);
    }
}

TEST(Scores, RankMulticlass) {
    std::vector<EntailmentScores> s{{0.2, 0.5, 0.3}, {0.7, 0.2, 0.1}, {0.1, 0.1, 0.8}};
    EXPECT_EQ(rank_multiclass(s).winner, 1);
    EXPECT_DOUBLE_EQ(rank_multiclass(s).confidence, 0.7);
    std::vector<EntailmentScores> tie{{0.4, 0.3, 0.3}, {0.4, 0.1, 0.5}};
    EXPECT_EQ(rank_multiclass(tie).winner, 0);
    EXPECT_THROW(rank_multiclass({}), ArgumentError);
    // the renormalized key can reorder candidates
    std::vector<EntailmentScores> r{{0.5, 0.0, 0.5}, {0.3, 0.69, 0.01}};
    EXPECT_EQ(rank_multiclass(r).winner, 0);
    EXPECT_EQ(rank_multiclass(r, true).winner, 1);
}

TEST(Scores, RankInvariantUnderMonotoneTransform) {
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<EntailmentScores> s(2 + rng.below(5));
        for (auto& x : s) x.entail = std::floor(rng.uniform() * 6) / 6;  // repeated values exercise ties
        auto t = s;
        for (auto& x : t) x.entail = std::exp(3.0 * x.entail) + 1.0;
        EXPECT_EQ(rank_multiclass(s).winner, rank_multiclass(t).winner);
    }
}

TEST(Scores, MaxConfidenceTarget) {
    std::vector<EntailmentScores> a{{0.1, 0.1, 0.8}, {0.8, 0.15, 0.05}};
    auto t = max_confidence_target(a, 1);
    EXPECT_EQ(t.supposition, 1);
    EXPECT_EQ(t.label, Truth::Entail);
    std::vector<EntailmentScores> b{{0.3, 0.5, 0.2}, {0.1, 0.1, 0.8}};
    EXPECT_EQ(max_confidence_target(b, 0).label, Truth::Neutral);
    EXPECT_EQ(max_confidence_target(b, 0, McTargetPolicy::Entail).label, Truth::Entail);
    EXPECT_THROW(max_confidence_target(b, 2), ArgumentError);
    EXPECT_EQ(parse_mc_target("entail"), McTargetPolicy::Entail);
    EXPECT_THROW(parse_mc_target("both"), ConfigError);
}

TEST(Scores, ArgmaxTruthTiesFavorEntail) {
    EXPECT_EQ(argmax_truth({0.4, 0.4, 0.2}), Truth::Entail);
    EXPECT_EQ(argmax_truth({0.2, 0.4, 0.4}), Truth::Neutral);
    EXPECT_EQ(argmax_truth({0.1, 0.2, 0.7}), Truth::Contradict);
}
