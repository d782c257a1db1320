#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simple/dataset.hpp"

namespace simple {

// ---------------------------------------------------------------------------
// Supposition templates
// ---------------------------------------------------------------------------

/// Placeholders a pattern may use.
inline constexpr const char* kPlaceholders[] = {"p", "h", "t", "q", "q1", "q2", "x", "label_text"};

struct SuppositionTemplate {
    std::string task_name;
    std::string pattern;                  // e.g. "{h} is entailed by {p}"
    std::vector<std::string> label_texts;  // one per class for multi-class tasks

    /// Placeholder names in order of first appearance.
    std::vector<std::string> placeholders() const;

    bool operator==(const SuppositionTemplate&) const = default;
};

/// Substitutes every `{name}` in the pattern with bindings[name]. Bound text
/// is inserted verbatim and never rescanned. Throws TemplateError naming the
/// first unbound placeholder, or if the pattern has no placeholder at all.
std::string build_supposition(const SuppositionTemplate& tmpl,
                              const std::map<std::string, std::string>& bindings);

/// Templates for MNLI, RTE, QNLI, QQP, SST2 and a three-label EMOTION task.
std::vector<SuppositionTemplate> builtin_templates();
const SuppositionTemplate& builtin_template(const std::string& task_name);

/// Registry file: one {"task","pattern","label_texts"} object per line.
std::vector<SuppositionTemplate> load_template_registry(const std::filesystem::path& path);
void write_template_registry(const std::vector<SuppositionTemplate>& templates,
                             const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Entailment score rules
// ---------------------------------------------------------------------------

/// Three-way truth value, index order of the score triple.
enum class Truth { Entail = 0, Neutral = 1, Contradict = 2 };

const char* to_string(Truth t);

/// Entail / neutral / contradict probabilities for one supposition.
struct EntailmentScores {
    double entail = 0.0;
    double neutral = 0.0;
    double contradict = 0.0;

    double operator[](Truth t) const {
        return t == Truth::Entail ? entail : (t == Truth::Neutral ? neutral : contradict);
    }
};

struct TruthProb {
    double p_true = 0.0;
    double p_false = 0.0;
};

/// p_true = entail / (entail + contradict); neutral mass is ignored.
/// Throws DegenerateScoreError when entail = contradict = 0 unless
/// `allow_uniform` is set, in which case 0.5/0.5 is returned.
TruthProb binary_truth_prob(const EntailmentScores& scores, bool allow_uniform = false);

struct RankResult {
    int winner = 0;
    double confidence = 0.0;
};

/// Argmax of the entail probability over candidate suppositions, lowest
/// index on ties. With `renormalized` the ranking key is binary_truth_prob's
/// p_true instead of the raw entail probability. Throws ArgumentError on an
/// empty list.
RankResult rank_multiclass(std::span<const EntailmentScores> per_class, bool renormalized = false);

/// Which truth value a max-confidence target trains toward.
enum class McTargetPolicy {
    Predicted,  // three-way argmax of the winner's own scores
    Entail,     // always "entail"
};

McTargetPolicy parse_mc_target(const std::string& text);

struct MaxConfidenceTarget {
    int supposition = 0;
    Truth label = Truth::Entail;
};

/// The single training target for a multi-class sample: the winning
/// supposition and its truth value. Other classes emit nothing.
MaxConfidenceTarget max_confidence_target(std::span<const EntailmentScores> per_class, int winner,
                                          McTargetPolicy policy = McTargetPolicy::Predicted);

/// Three-way argmax, lowest index (entail first) on ties.
Truth argmax_truth(const EntailmentScores& scores);

// ---------------------------------------------------------------------------
// Scorer contract
// ---------------------------------------------------------------------------

/// How a scorer's output maps to labels.
enum class ScorerKind {
    Direct,      // one probability per class
    Entailment,  // one entail/neutral/contradict triple per supposition
};

/// Output of one forward pass. Direct scorers fill class_scores and a single
/// embedding; entailment scorers fill one triple and one embedding per
/// supposition (one supposition for binary tasks, one per class otherwise).
struct Evaluation {
    std::vector<double> class_scores;
    std::vector<EntailmentScores> suppositions;
    std::vector<std::vector<float>> embeddings;
};

/// A training example. For direct scorers `target` is a class index and
/// `supposition` is ignored; for entailment scorers `target` is a Truth
/// index for the given supposition.
struct TrainingPair {
    SampleInput input;
    int supposition = 0;
    int target = 0;
};

class Scorer {
public:
    virtual ~Scorer() = default;

    virtual ScorerKind kind() const = 0;
    virtual int n_classes() const = 0;

    /// Scores and embeddings of one pass. With stochastic off the result is
    /// a pure function of the input; with stochastic on it is a pure
    /// function of (input, pass_seed). Scores and embeddings come from the
    /// same realization.
    virtual Evaluation evaluate(const SampleInput& input, bool stochastic,
                                std::uint64_t pass_seed) const = 0;

    /// Trains on `pairs` for `epochs` and returns the updated scorer.
    virtual std::unique_ptr<Scorer> fit(std::span<const TrainingPair> pairs, double learning_rate,
                                        int epochs, std::uint64_t seed) const = 0;

    /// Copy with a different dropout rate in [0,1).
    virtual std::unique_ptr<Scorer> with_dropout(double rate) const = 0;
    virtual double dropout_rate() const = 0;

    virtual std::unique_ptr<Scorer> clone() const = 0;

    /// Shorthands over evaluate().
    std::vector<double> score(const SampleInput& input, bool stochastic, std::uint64_t pass_seed) const;
    std::vector<float> embed(const SampleInput& input, bool stochastic, std::uint64_t pass_seed) const;
};

}  // namespace simple
