#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simple/dataset.hpp"
#include "simple/editing.hpp"
#include "simple/reference_classifier.hpp"
#include "simple/scorer.hpp"

namespace simple {

enum class Strategy {
    BaselineSt,   // one deterministic pass, train on every pseudo-label
    DropoutVote,  // N stochastic passes, majority vote, no filter
    Setred,       // deterministic labels, drop the most uncertain samples
    Simple,       // ensemble -> uncertainty -> edit, keep every sample
};

const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& text);
inline constexpr Strategy kAllStrategies[] = {Strategy::BaselineSt, Strategy::DropoutVote, Strategy::Setred,
                                              Strategy::Simple};

struct StrategyConfig {
    Strategy strategy = Strategy::Simple;
    std::uint32_t n_passes = 7;
    std::size_t k_neighbors = 9;
    double dropout_rate = 0.1;
    double remove_fraction = 0.2;
    int epochs = 6;
    double learning_rate = 0.05;
    std::uint64_t seed = 0;
    TaskKind task_kind = TaskKind::Binary;
    McTargetPolicy mc_target = McTargetPolicy::Predicted;
    bool rank_renormalized = false;
    bool loo_priors = true;
    std::size_t workers = 1;

    void validate() const;
};

/// Inputs of one self-training run. `pool_gold` is read only by the
/// diagnostics, never by labeling or training.
struct SelfTrainData {
    std::vector<UnlabeledSample> pool;
    std::map<SampleId, int> pool_gold;
    std::vector<Sample> eval;
};

struct LabelHistogram {
    std::vector<std::size_t> counts;
    double majority_share = 0.0;
};

/// Per-label counts and the largest label share (0 for an empty list).
LabelHistogram label_distribution(std::span<const int> labels, int n_classes);

/// Fraction of edited samples whose final label equals gold. Throws
/// IntegrityError if a sample id has no gold label.
double pseudo_label_accuracy(const EditedLabelSet& edited, const std::map<SampleId, int>& gold);

struct RunReport {
    Strategy strategy = Strategy::Simple;
    std::uint64_t seed = 0;

    /// Accuracy of the raw pseudo-labels, one per (sample, pass) record.
    double pl_acc_raw = 0.0;
    /// Accuracy of the labels actually used for training.
    double pl_acc_edited = 0.0;

    /// Deterministic (no-dropout) labels of the pool.
    LabelHistogram before;
    /// Labels used for training.
    LabelHistogram after;

    double eval_acc_initial = 0.0;
    std::vector<double> eval_accuracy;  // after each epoch

    std::size_t removed_count = 0;
    std::size_t fallback_count = 0;
    std::size_t trained_count = 0;
    double wall_time_seconds = 0.0;

    /// (sample_id, label) pairs the scorer was fine-tuned on, in id order.
    std::vector<std::pair<SampleId, int>> training_labels;

    double final_eval_acc() const { return eval_accuracy.empty() ? eval_acc_initial : eval_accuracy.back(); }
};

/// Labels the pool with the configured strategy, fine-tunes a copy of
/// `scorer` on the result for cfg.epochs and evaluates after each epoch.
/// Stage errors are rethrown prefixed with the stage name.
RunReport run_strategy(const StrategyConfig& cfg, const SelfTrainData& data, const Scorer& scorer);

/// Accuracy of a scorer's deterministic predictions on labeled samples.
double evaluate_accuracy(const Scorer& scorer, std::span<const Sample> samples, TaskKind task_kind,
                         std::size_t workers = 1);

// ---------------------------------------------------------------------------
// Synthetic benchmark harness
// ---------------------------------------------------------------------------

struct BenchmarkSpec {
    SyntheticSpec corpus{2, 8, 1000, 1.2, 1.0, 0};
    std::size_t pool_size = 400;
    /// Labeled rows used to pre-train the weak scorer; never evaluated on.
    std::size_t seed_split = 40;
    std::size_t hidden = 8;
    double dropout_rate = 0.1;
    double pretrain_learning_rate = 0.02;
    int pretrain_epochs = 30;
    /// When set, class 0's output bias is shifted until this share of the
    /// pool is predicted as class 0.
    std::optional<double> biased_share;
};

struct Benchmark {
    SelfTrainData data;
    ReferenceClassifier weak;
    double weak_pool_accuracy = 0.0;
};

/// Generates the corpus for `seed`, carves out the seed split, the pool and
/// the evaluation rows, and pre-trains the weak scorer on the seed split.
Benchmark make_benchmark(const BenchmarkSpec& spec, std::uint64_t seed);

/// Same split and pre-training on an existing feature corpus; spec.corpus is
/// ignored.
Benchmark make_benchmark(const LabeledCorpus& corpus, const BenchmarkSpec& spec, std::uint64_t seed);

struct ComparisonRow {
    Strategy strategy = Strategy::Simple;
    std::uint64_t seed = 0;
    std::optional<RunReport> report;  // empty when the run failed
    std::string error;
};

struct StrategySummary {
    Strategy strategy = Strategy::Simple;
    std::size_t runs = 0;
    std::size_t failures = 0;
    double eval_mean = 0.0, eval_max = 0.0, eval_min = 0.0;
    double pl_mean = 0.0, pl_max = 0.0, pl_min = 0.0;
};

struct Comparison {
    std::vector<ComparisonRow> rows;  // grid-major, then seed
    std::vector<StrategySummary> summaries;
};

/// Runs every config in `grid` on seeds base_seed .. base_seed + n_seeds - 1.
/// All strategies see the same benchmark for a given seed. A failing cell is
/// recorded and the sweep continues. Output does not depend on `workers`.
Comparison compare_strategies(std::span<const StrategyConfig> grid, std::size_t n_seeds,
                              const BenchmarkSpec& bench, std::uint64_t base_seed, std::size_t workers = 1);

/// `strategy,seed,eval_acc,pl_acc_raw,pl_acc_edited,majority_share_before,
/// majority_share_after,removed,fallbacks`, reals with six decimals.
std::string comparison_csv(const Comparison& comparison);
std::string summary_csv(const Comparison& comparison);
void write_text(const std::string& text, const std::filesystem::path& path);

}  // namespace simple
