#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "../support.hpp"
#include "simple/dataset.hpp"
#include "simple/errors.hpp"

using namespace simple;

TEST(Synthetic, ZeroNoiseSitsOnMeans) {
    const auto c = generate_synthetic_corpus({2, 2, 1, 1.0, 0.0, 0});
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c.samples()[0].features(), (Features{1.0f, 0.0f}));
    EXPECT_EQ(c.samples()[1].features(), (Features{0.0f, 1.0f}));
    EXPECT_EQ(c.samples()[0].gold_label, 0);
    EXPECT_EQ(c.samples()[1].gold_label, 1);
}

TEST(Synthetic, Deterministic) {
    SyntheticSpec spec;
    spec.seed = 7;
    EXPECT_EQ(generate_synthetic_corpus(spec), generate_synthetic_corpus(spec));
    auto dir = testkit::temp_dir("synth_det");
    write_corpus(generate_synthetic_corpus(spec), dir / "a.jsonl");
    write_corpus(generate_synthetic_corpus(spec), dir / "b.jsonl");
    std::ifstream a(dir / "a.jsonl"), b(dir / "b.jsonl");
    EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
}

TEST(Synthetic, SeparatedCorpusIsNearestMeanLearnable) {
    const auto c = generate_synthetic_corpus({2, 8, 500, 2.0, 1.0, 1});
    // class means estimated from the data, then nearest-mean prediction
    std::vector<std::vector<double>> mean(2, std::vector<double>(8, 0.0));
    std::vector<double> count(2, 0.0);
    for (const auto& s : c.samples()) {
        count[*s.gold_label] += 1;
        for (int i = 0; i < 8; ++i) mean[*s.gold_label][i] += s.features()[i];
    }
    for (int k = 0; k < 2; ++k)
        for (auto& v : mean[k]) v /= count[k];
    int correct = 0;
    for (const auto& s : c.samples()) {
        double d[2] = {0, 0};
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 8; ++i) d[k] += std::pow(s.features()[i] - mean[k][i], 2);
        correct += (d[1] < d[0] ? 1 : 0) == *s.gold_label;
    }
    EXPECT_GE(correct / 1000.0, 0.9);
}

TEST(Synthetic, RejectsBadSpecs) {
    EXPECT_THROW(generate_synthetic_corpus({3, 2, 10, 1.0, 1.0, 0}), ConfigError);
    EXPECT_THROW(generate_synthetic_corpus({2, 2, 0, 1.0, 1.0, 0}), ConfigError);
    EXPECT_THROW(generate_synthetic_corpus({2, 2, 10, 1.0, -1.0, 0}), ConfigError);
    EXPECT_THROW(generate_synthetic_corpus({2, 2, 10, NAN, 1.0, 0}), ConfigError);
}

TEST(Pool, Boundaries) {
    const auto c = generate_synthetic_corpus({2, 4, 50, 1.0, 1.0, 0});
    auto all = select_unlabeled(c, c.size(), 1);
    EXPECT_EQ(all.pool.size(), 100u);
    EXPECT_TRUE(all.eval.empty());
    auto none = select_unlabeled(c, 0, 1);
    EXPECT_TRUE(none.pool.empty());
    EXPECT_EQ(none.eval.size(), 100u);
    EXPECT_THROW(select_unlabeled(c, 101, 1), SizeError);
}

TEST(Pool, RepeatableAndDisjoint) {
    const auto c = generate_synthetic_corpus({2, 4, 50, 1.0, 1.0, 0});
    const auto a = select_unlabeled(c, 30, 9), b = select_unlabeled(c, 30, 9);
    EXPECT_EQ(a.pool, b.pool);
    std::set<SampleId> ids;
    for (const auto& s : a.pool) ids.insert(s.sample_id);
    for (const auto& s : a.eval) EXPECT_FALSE(ids.count(s.sample_id));
    EXPECT_EQ(ids.size() + a.eval.size(), 100u);
    EXPECT_NE(select_unlabeled(c, 30, 10).pool, a.pool);
}

TEST(Corpus, ValidatesRows) {
    std::vector<Sample> dup{{1, Features{0, 0}, 0}, {1, Features{1, 1}, 1}};
    EXPECT_THROW(LabeledCorpus(2, 2, TaskKind::Binary, dup), IntegrityError);
    std::vector<Sample> wrong_dim{{1, Features{0, 0, 0}, 0}};
    EXPECT_THROW(LabeledCorpus(2, 2, TaskKind::Binary, wrong_dim), IntegrityError);
    std::vector<Sample> bad_label{{1, Features{0, 0}, 2}};
    EXPECT_THROW(LabeledCorpus(2, 2, TaskKind::Binary, bad_label), IntegrityError);
    EXPECT_THROW(LabeledCorpus(2, 3, TaskKind::Binary, {}), ConfigError);
}

TEST(Corpus, RoundTripFeaturesAndText) {
    auto dir = testkit::temp_dir("corpus_rt");
    const auto c = generate_synthetic_corpus({3, 5, 7, 1.5, 0.7, 4});
    write_corpus(c, dir / "c.jsonl");
    EXPECT_EQ(load_corpus(dir / "c.jsonl"), c);

    std::vector<Sample> rows{{10, TextFields{{"p", "a cat sat"}, {"h", "an animal sat"}}, 1},
                             {11, TextFields{{"p", "x"}, {"h", "y"}}, std::nullopt}};
    const LabeledCorpus t(0, 2, TaskKind::SentencePair, rows);
    write_corpus(t, dir / "t.jsonl");
    EXPECT_EQ(load_corpus(dir / "t.jsonl"), t);
}

TEST(Corpus, MalformedFilesReportOffsets) {
    auto dir = testkit::temp_dir("corpus_bad");
    {
        std::ofstream(dir / "magic.jsonl") << "{\"magic\":\"NOPE\",\"version\":1}\n";
    }
    EXPECT_THROW(load_corpus(dir / "magic.jsonl"), FormatError);
    const auto c = generate_synthetic_corpus({2, 2, 2, 1.0, 1.0, 0});
    write_corpus(c, dir / "c.jsonl");
    std::string text;
    {
        std::ifstream in(dir / "c.jsonl");
        text.assign(std::istreambuf_iterator<char>(in), {});
    }
    const auto second_line = text.find('\n') + 1;
    text.insert(second_line, "not json\n");
    {
        std::ofstream(dir / "broken.jsonl") << text;
    }
    try {
        load_corpus(dir / "broken.jsonl");
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), second_line);
        EXPECT_EQ(e.exit_code(), 3);
    }
    EXPECT_THROW(load_corpus(dir / "missing.jsonl"), Error);
}

TEST(Corpus, StripLabelKeepsInput) {
    const Sample s{4, Features{1, 2}, 1};
    const auto u = strip_label(s);
    EXPECT_EQ(u.sample_id, 4u);
    EXPECT_EQ(u.input, s.input);
    EXPECT_EQ(gold_labels({s}).at(4), 1);
}
