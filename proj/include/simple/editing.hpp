#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "simple/records.hpp"
#include "simple/scorer.hpp"
#include "simple/uncertainty.hpp"

namespace simple {

/// ceil(fraction * n), with products within 1e-9 of an integer snapped to
/// it so that e.g. 0.1 * 30 removes 3 and not 4. Throws ConfigError when
/// fraction is outside [0,1].
std::size_t removal_count(double fraction, std::size_t n);

/// Keeps all but the removal_count(f, |report|) records with the highest
/// s. Among equal s the lower key is retained. Returned mask is aligned with
/// the report.
std::vector<bool> retained_mask(const UncertaintyReport& report, double fraction);

/// Survivor keys, ascending.
std::vector<RecordKey> filter_uncertain(const UncertaintyReport& report, double fraction);

struct Decided {
    int label = 0;
    bool operator==(const Decided&) const = default;
};
struct Tie {
    std::vector<int> leaders;  // ascending
    bool operator==(const Tie&) const = default;
};
struct Empty {
    bool operator==(const Empty&) const = default;
};
using VoteOutcome = std::variant<Decided, Tie, Empty>;

/// Decided iff one label strictly out-counts every other.
VoteOutcome majority_vote(std::span<const int> labels);

enum class Provenance { Vote, Fallback };
const char* to_string(Provenance p);

struct EditedLabel {
    SampleId sample_id = 0;
    int final_label = 0;
    Provenance provenance = Provenance::Vote;
    std::size_t votes_kept = 0;

    bool operator==(const EditedLabel&) const = default;
};

/// One entry per sample of the record set, in sample-id order.
using EditedLabelSet = std::vector<EditedLabel>;

/// Supplies the no-dropout label of a sample when its vote is tied or empty.
using FallbackLabeler = std::function<int(SampleId)>;

/// Filter, vote per sample, fall back on Tie/Empty. `report` must be the
/// uncertainty report of `set` (same order); it may be empty when
/// fraction = 0.
EditedLabelSet edit_labels(const EnsembleRecordSet& set, const UncertaintyReport& report, double fraction,
                           const FallbackLabeler& fallback);

/// Fallback through ensemble's deterministic_label on the matching pool row.
EditedLabelSet edit_labels(const EnsembleRecordSet& set, const UncertaintyReport& report, double fraction,
                           const Scorer& scorer, std::span<const UnlabeledSample> pool, TaskKind task_kind);

/// Fallback for record files without a model: argmax of the scores averaged
/// over all N passes of the sample (lowest label on ties).
FallbackLabeler mean_score_fallback(const EnsembleRecordSet& set);

/// CSV with header `sample_id,final_label,provenance,votes_kept`.
void write_edited_csv(const EditedLabelSet& labels, const std::filesystem::path& path);

}  // namespace simple
