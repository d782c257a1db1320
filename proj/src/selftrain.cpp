#include "simple/selftrain.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "simple/ensemble.hpp"
#include "simple/errors.hpp"
#include "simple/parallel.hpp"
#include "simple/rng.hpp"
#include "simple/uncertainty.hpp"

namespace simple {

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::BaselineSt:
            return "baseline_st";
        case Strategy::DropoutVote:
            return "dropout_vote";
        case Strategy::Setred:
            return "setred";
        case Strategy::Simple:
            return "simple";
    }
    return "simple";
}

Strategy parse_strategy(const std::string& text) {
    for (Strategy s : kAllStrategies)
        if (text == to_string(s)) return s;
    throw ConfigError("unknown strategy '" + text + "' (expected baseline_st, dropout_vote, setred or simple)");
}

void StrategyConfig::validate() const {
    if (n_passes < 1) throw ConfigError("passes must be at least 1");
    if (k_neighbors < 1) throw ConfigError("neighbors must be at least 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout must be in [0,1)");
    if (!(remove_fraction >= 0.0 && remove_fraction <= 1.0)) throw ConfigError("remove fraction must be in [0,1]");
    if (epochs < 0) throw ConfigError("epochs must be non-negative");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
}

LabelHistogram label_distribution(std::span<const int> labels, int n_classes) {
    LabelHistogram h;
    h.counts.assign(static_cast<std::size_t>(std::max(n_classes, 0)), 0);
    for (int y : labels) {
        if (y < 0 || y >= n_classes) throw ArgumentError("label out of range in label_distribution");
        ++h.counts[static_cast<std::size_t>(y)];
    }
    if (!labels.empty())
        h.majority_share = static_cast<double>(*std::max_element(h.counts.begin(), h.counts.end())) /
                           static_cast<double>(labels.size());
    return h;
}

double pseudo_label_accuracy(const EditedLabelSet& edited, const std::map<SampleId, int>& gold) {
    if (edited.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& e : edited) {
        const auto it = gold.find(e.sample_id);
        if (it == gold.end()) throw IntegrityError("no gold label for sample " + std::to_string(e.sample_id));
        if (it->second == e.final_label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(edited.size());
}

double evaluate_accuracy(const Scorer& scorer, std::span<const Sample> samples, TaskKind task_kind,
                         std::size_t workers) {
    if (samples.empty()) return 0.0;
    std::vector<char> hit(samples.size(), 0);
    parallel_for(samples.size(), workers, [&](std::size_t i) {
        const auto& s = samples[i];
        if (!s.gold_label) throw IntegrityError("evaluation sample " + std::to_string(s.sample_id) + " has no gold label");
        hit[i] = deterministic_label(scorer, strip_label(s), task_kind).label == *s.gold_label ? 1 : 0;
    });
    return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / static_cast<double>(samples.size());
}

namespace {

// Stream ids for derive_seed, one per stage of a run.
constexpr std::uint64_t kEnsembleStream = 1;
constexpr std::uint64_t kTrainStream = 2;

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        rethrow_with_context(e, std::string("stage ") + name);
    }
}

double record_accuracy(const EnsembleRecordSet& set, const std::map<SampleId, int>& gold) {
    std::size_t correct = 0;
    for (const auto& r : set.records()) {
        const auto it = gold.find(r.sample_id);
        if (it == gold.end()) throw IntegrityError("no gold label for sample " + std::to_string(r.sample_id));
        if (it->second == r.label) ++correct;
    }
    return set.size() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(set.size());
}

TrainingPair make_pair(const Scorer& scorer, const UnlabeledSample& sample, const LabeledPass& deterministic,
                       int label, const StrategyConfig& cfg) {
    if (scorer.kind() == ScorerKind::Direct) return {sample.input, 0, label};
    if (cfg.task_kind != TaskKind::Multiclass) {
        const Truth truth = label == 1 ? Truth::Entail : Truth::Contradict;
        return {sample.input, 0, static_cast<int>(truth)};
    }
    const MaxConfidenceTarget t = max_confidence_target(deterministic.suppositions, label, cfg.mc_target);
    return {sample.input, t.supposition, static_cast<int>(t.label)};
}

}  // namespace

RunReport run_strategy(const StrategyConfig& cfg, const SelfTrainData& data, const Scorer& scorer) {
    cfg.validate();
    if (data.pool.empty()) throw ConfigError("unlabeled pool is empty");
    const auto started = std::chrono::steady_clock::now();
    const std::size_t m = data.pool.size();
    const int k = scorer.n_classes();

    RunReport report;
    report.strategy = cfg.strategy;
    report.seed = cfg.seed;

    // Deterministic labels serve the baseline, the "before" histogram and every fallback.
    std::vector<LabeledPass> det(m);
    stage("deterministic-label", [&] {
        parallel_for(m, cfg.workers, [&](std::size_t i) {
            det[i] = deterministic_label(scorer, data.pool[i], cfg.task_kind, cfg.rank_renormalized);
        });
    });
    std::map<SampleId, std::size_t> index_of;
    for (std::size_t i = 0; i < m; ++i) index_of.emplace(data.pool[i].sample_id, i);
    if (index_of.size() != m) throw IntegrityError("duplicate sample_id in the unlabeled pool");
    const FallbackLabeler fallback = [&](SampleId id) { return det.at(index_of.at(id)).label; };

    std::vector<int> det_labels(m);
    for (std::size_t i = 0; i < m; ++i) det_labels[i] = det[i].label;
    report.before = label_distribution(det_labels, k);

    // (pool index, label) pairs to train on
    std::vector<std::pair<std::size_t, int>> chosen;

    auto ensemble_set = [&](std::uint32_t passes) {
        return stage("ensemble", [&] {
            EnsembleConfig ec;
            ec.n_passes = passes;
            ec.dropout_rate = cfg.dropout_rate;
            ec.base_seed = derive_seed(cfg.seed, kEnsembleStream);
            ec.workers = cfg.workers;
            ec.rank_renormalized = cfg.rank_renormalized;
            return augmented_label(scorer, data.pool, ec, cfg.task_kind);
        });
    };
    auto take_edited = [&](const EditedLabelSet& edited) {
        for (const auto& e : edited) {
            chosen.emplace_back(index_of.at(e.sample_id), e.final_label);
            if (e.provenance == Provenance::Fallback) ++report.fallback_count;
        }
    };

    switch (cfg.strategy) {
        case Strategy::BaselineSt: {
            for (std::size_t i = 0; i < m; ++i) chosen.emplace_back(i, det_labels[i]);
            break;
        }
        case Strategy::DropoutVote: {
            const auto set = ensemble_set(cfg.n_passes);
            report.pl_acc_raw = record_accuracy(set, data.pool_gold);
            take_edited(stage("vote", [&] { return edit_labels(set, {}, 0.0, fallback); }));
            break;
        }
        case Strategy::Setred: {
            std::vector<EnsembleRecord> records;
            records.reserve(m);
            for (std::size_t i = 0; i < m; ++i)
                records.push_back({data.pool[i].sample_id, 0, det[i].label, det[i].scores, det[i].embedding});
            const auto e_dim = static_cast<std::uint32_t>(records.front().embedding.size());
            const EnsembleRecordSet set(1, e_dim, static_cast<std::uint32_t>(k), std::move(records));
            const auto unc = stage("uncertainty", [&] {
                return uncertainty_scores(set, {cfg.k_neighbors, cfg.loo_priors, cfg.workers});
            });
            const auto keep = stage("filter", [&] { return retained_mask(unc, cfg.remove_fraction); });
            for (std::size_t r = 0; r < set.size(); ++r) {
                if (keep[r])
                    chosen.emplace_back(index_of.at(set[r].sample_id), set[r].label);
                else
                    ++report.removed_count;
            }
            break;
        }
        case Strategy::Simple: {
            const auto set = ensemble_set(cfg.n_passes);
            report.pl_acc_raw = record_accuracy(set, data.pool_gold);
            UncertaintyReport unc;
            if (cfg.remove_fraction > 0.0)
                unc = stage("uncertainty", [&] {
                    return uncertainty_scores(set, {cfg.k_neighbors, cfg.loo_priors, cfg.workers});
                });
            report.removed_count = removal_count(cfg.remove_fraction, set.size());
            take_edited(stage("edit", [&] { return edit_labels(set, unc, cfg.remove_fraction, fallback); }));
            break;
        }
    }

    std::sort(chosen.begin(), chosen.end(),
              [&](const auto& a, const auto& b) { return data.pool[a.first].sample_id < data.pool[b.first].sample_id; });

    if (cfg.strategy == Strategy::BaselineSt || cfg.strategy == Strategy::Setred) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const auto it = data.pool_gold.find(data.pool[i].sample_id);
            if (it == data.pool_gold.end())
                throw IntegrityError("no gold label for sample " + std::to_string(data.pool[i].sample_id));
            if (it->second == det_labels[i]) ++correct;
        }
        report.pl_acc_raw = static_cast<double>(correct) / static_cast<double>(m);
    }

    EditedLabelSet used;
    std::vector<int> used_labels;
    std::vector<TrainingPair> pairs;
    for (const auto& [i, label] : chosen) {
        used.push_back({data.pool[i].sample_id, label, Provenance::Vote, 0});
        used_labels.push_back(label);
        report.training_labels.emplace_back(data.pool[i].sample_id, label);
        pairs.push_back(stage("targets", [&] { return make_pair(scorer, data.pool[i], det[i], label, cfg); }));
    }
    report.pl_acc_edited = pseudo_label_accuracy(used, data.pool_gold);
    report.after = label_distribution(used_labels, k);
    report.trained_count = pairs.size();

    std::unique_ptr<Scorer> model = scorer.clone();
    report.eval_acc_initial = evaluate_accuracy(*model, data.eval, cfg.task_kind, cfg.workers);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        model = stage("train", [&] {
            return model->fit(pairs, cfg.learning_rate, 1,
                              derive_seed(derive_seed(cfg.seed, kTrainStream), static_cast<std::uint64_t>(epoch)));
        });
        report.eval_accuracy.push_back(evaluate_accuracy(*model, data.eval, cfg.task_kind, cfg.workers));
    }

    report.wall_time_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

// ---------------------------------------------------------------------------
// Benchmark harness
// ---------------------------------------------------------------------------

namespace {

std::vector<FeatureExample> feature_examples(std::span<const Sample> samples) {
    std::vector<FeatureExample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back({s.features(), *s.gold_label});
    return out;
}

double predicted_share(const ReferenceClassifier& model, std::span<const UnlabeledSample> pool, int cls) {
    std::size_t hits = 0;
    for (const auto& s : pool)
        if (model.predict(std::get<Features>(s.input)) == cls) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pool.size());
}

}  // namespace

Benchmark make_benchmark(const BenchmarkSpec& spec, std::uint64_t seed) {
    SyntheticSpec synth = spec.corpus;
    synth.seed = derive_seed(seed, 0x636f7270ULL);
    return make_benchmark(generate_synthetic_corpus(synth), spec, seed);
}

Benchmark make_benchmark(const LabeledCorpus& corpus, const BenchmarkSpec& spec, std::uint64_t seed) {
    for (const auto& s : corpus.samples())
        if (!std::holds_alternative<Features>(s.input))
            throw ArgumentError("benchmark needs feature vectors, sample " + std::to_string(s.sample_id) + " is text");
        else if (!s.gold_label)
            throw IntegrityError("benchmark needs gold labels, sample " + std::to_string(s.sample_id) + " has none");
    if (spec.seed_split + spec.pool_size > corpus.size())
        throw SizeError("benchmark corpus too small for the seed split and pool");

    // seed split first, then the pool from what is left; the remainder is evaluation
    const PoolSplit seed_cut = select_unlabeled(corpus, spec.seed_split, derive_seed(seed, 0x73656564ULL));
    const auto all_gold = gold_labels(corpus.samples());
    std::vector<Sample> labeled_seed;
    for (const auto& s : seed_cut.pool) labeled_seed.push_back(Sample{s.sample_id, s.input, all_gold.at(s.sample_id)});

    const LabeledCorpus rest(corpus.dimension(), corpus.n_classes(), corpus.task_kind(), seed_cut.eval);
    PoolSplit split = select_unlabeled(rest, spec.pool_size, derive_seed(seed, 0x706f6f6cULL));

    Benchmark b;
    b.data.pool = std::move(split.pool);
    for (const auto& s : b.data.pool) b.data.pool_gold.emplace(s.sample_id, all_gold.at(s.sample_id));
    b.data.eval = std::move(split.eval);

    const auto init = ReferenceClassifier::initialize(corpus.dimension(), spec.hidden, corpus.n_classes(),
                                                      spec.dropout_rate, derive_seed(seed, 0x77656bULL));
    const auto examples = feature_examples(labeled_seed);
    b.weak = init.fit_features(examples, spec.pretrain_learning_rate, spec.pretrain_epochs,
                               derive_seed(seed, 0x707265ULL));

    if (spec.biased_share) {
        const double target = *spec.biased_share;
        if (!(target > 0.0 && target < 1.0)) throw ConfigError("biased share must be in (0,1)");
        double lo = -50.0, hi = 50.0;
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (predicted_share(b.weak.with_output_bias_shift(0, mid), b.data.pool, 0) < target)
                lo = mid;
            else
                hi = mid;
        }
        b.weak = b.weak.with_output_bias_shift(0, hi);
    }

    std::size_t correct = 0;
    for (const auto& s : b.data.pool)
        if (b.weak.predict(std::get<Features>(s.input)) == b.data.pool_gold.at(s.sample_id)) ++correct;
    b.weak_pool_accuracy = static_cast<double>(correct) / static_cast<double>(b.data.pool.size());
    return b;
}

// ---------------------------------------------------------------------------
// Strategy comparison
// ---------------------------------------------------------------------------

Comparison compare_strategies(std::span<const StrategyConfig> grid, std::size_t n_seeds, const BenchmarkSpec& bench,
                              std::uint64_t base_seed, std::size_t workers) {
    if (grid.empty()) throw ConfigError("strategy grid is empty");
    if (n_seeds == 0) throw ConfigError("need at least one seed");

    std::vector<std::optional<Benchmark>> benches(n_seeds);
    std::vector<std::string> bench_errors(n_seeds);
    parallel_for(n_seeds, workers, [&](std::size_t s) {
        try {
            benches[s] = make_benchmark(bench, base_seed + s);
        } catch (const std::exception& e) {
            bench_errors[s] = e.what();
        }
    });

    Comparison out;
    out.rows.resize(grid.size() * n_seeds);
    parallel_for(out.rows.size(), workers, [&](std::size_t cell) {
        const std::size_t g = cell / n_seeds, s = cell % n_seeds;
        auto& row = out.rows[cell];
        row.strategy = grid[g].strategy;
        row.seed = base_seed + s;
        if (!benches[s]) {
            row.error = "benchmark: " + bench_errors[s];
            return;
        }
        StrategyConfig cfg = grid[g];
        cfg.seed = row.seed;
        cfg.workers = 1;
        try {
            row.report = run_strategy(cfg, benches[s]->data, benches[s]->weak);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });

    for (std::size_t g = 0; g < grid.size(); ++g) {
        StrategySummary sum;
        sum.strategy = grid[g].strategy;
        sum.eval_min = sum.pl_min = std::numeric_limits<double>::infinity();
        sum.eval_max = sum.pl_max = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < n_seeds; ++s) {
            const auto& row = out.rows[g * n_seeds + s];
            if (!row.report) {
                ++sum.failures;
                continue;
            }
            const double ev = row.report->final_eval_acc(), pl = row.report->pl_acc_edited;
            ++sum.runs;
            sum.eval_mean += ev;
            sum.pl_mean += pl;
            sum.eval_min = std::min(sum.eval_min, ev);
            sum.eval_max = std::max(sum.eval_max, ev);
            sum.pl_min = std::min(sum.pl_min, pl);
            sum.pl_max = std::max(sum.pl_max, pl);
        }
        if (sum.runs > 0) {
            sum.eval_mean /= static_cast<double>(sum.runs);
            sum.pl_mean /= static_cast<double>(sum.runs);
        } else {
            sum.eval_mean = sum.pl_mean = std::numeric_limits<double>::quiet_NaN();
            sum.eval_min = sum.eval_max = sum.pl_min = sum.pl_max = std::numeric_limits<double>::quiet_NaN();
        }
        out.summaries.push_back(sum);
    }
    return out;
}

std::string comparison_csv(const Comparison& comparison) {
    std::string out =
            "strategy,seed,eval_acc,pl_acc_raw,pl_acc_edited,majority_share_before,majority_share_after,removed,"
            "fallbacks\n";
    char buf[512];
    for (const auto& row : comparison.rows) {
        if (row.report) {
            const auto& r = *row.report;
            std::snprintf(buf, sizeof buf, "%s,%llu,%.6f,%.6f,%.6f,%.6f,%.6f,%zu,%zu\n", to_string(row.strategy),
                          static_cast<unsigned long long>(row.seed), r.final_eval_acc(), r.pl_acc_raw,
                          r.pl_acc_edited, r.before.majority_share, r.after.majority_share, r.removed_count,
                          r.fallback_count);
        } else {
            std::snprintf(buf, sizeof buf, "%s,%llu,nan,nan,nan,nan,nan,,\n", to_string(row.strategy),
                          static_cast<unsigned long long>(row.seed));
        }
        out += buf;
    }
    return out;
}

std::string summary_csv(const Comparison& comparison) {
    std::string out = "strategy,runs,failures,eval_mean,eval_max,eval_min,pl_mean,pl_max,pl_min\n";
    char buf[512];
    for (const auto& s : comparison.summaries) {
        std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", to_string(s.strategy), s.runs,
                      s.failures, s.eval_mean, s.eval_max, s.eval_min, s.pl_mean, s.pl_max, s.pl_min);
        out += buf;
    }
    return out;
}

void write_text(const std::string& text, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IntegrityError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IntegrityError("write failed for " + path.string());
}

}  // namespace simple
