#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "simple/records.hpp"
#include "simple/scorer.hpp"

namespace simple {

struct EnsembleConfig {
    std::uint32_t n_passes = 7;
    double dropout_rate = 0.1;
    std::uint64_t base_seed = 0;
    std::size_t workers = 1;
    /// Multi-class ranking key: raw entail probability (false) or the
    /// neutral-free renormalized p_true (true).
    bool rank_renormalized = false;

    void validate() const;
};

/// Label, scores and embedding resolved from one forward pass.
struct LabeledPass {
    int label = 0;
    std::vector<float> scores;     // n_classes entries summing to 1
    std::vector<float> embedding;
    std::vector<EntailmentScores> suppositions;  // entailment scorers only

    bool operator==(const LabeledPass& o) const {
        return label == o.label && scores == o.scores && embedding == o.embedding;
    }
};

/// Turns one Evaluation into a pseudo-label.
///  - direct scorers: argmax class (lowest index on ties), scores as given;
///  - entailment, binary/sentence-pair: label 1 (True) iff p_true > p_false,
///    scores = [p_false, p_true];
///  - entailment, multi-class: rank_multiclass winner, scores = entail
///    probabilities normalized over classes, embedding = winner's.
LabeledPass resolve_pass(const Evaluation& ev, int n_classes, TaskKind task_kind, bool rank_renormalized = false);

/// N stochastic passes per pool sample. Pass j of sample i uses
/// pass_seed(cfg.base_seed, sample_id, j); records are assembled by key, so
/// the result is independent of cfg.workers. Scorer errors are rethrown
/// annotated with (sample_id, pass).
EnsembleRecordSet augmented_label(const Scorer& scorer, std::span<const UnlabeledSample> pool,
                                  const EnsembleConfig& cfg, TaskKind task_kind);

/// One pass with dropout off, same label rule as augmented_label.
LabeledPass deterministic_label(const Scorer& scorer, const UnlabeledSample& sample, TaskKind task_kind,
                                bool rank_renormalized = false);

}  // namespace simple
