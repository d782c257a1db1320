#include "simple/editing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <string>

#include "simple/ensemble.hpp"
#include "simple/errors.hpp"

namespace simple {

std::size_t removal_count(double fraction, std::size_t n) {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw ConfigError("remove fraction must be in [0,1], got " + std::to_string(fraction));
    const double product = fraction * static_cast<double>(n);
    const double nearest = std::round(product);
    const double count = std::abs(product - nearest) < 1e-9 ? nearest : std::ceil(product);
    return std::min(n, static_cast<std::size_t>(count));
}

std::vector<bool> retained_mask(const UncertaintyReport& report, double fraction) {
    const std::size_t remove = removal_count(fraction, report.size());
    std::vector<std::size_t> order(report.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // most uncertain first; on equal s the higher key goes first so the lower one survives
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (report[a].score != report[b].score) return report[a].score > report[b].score;
        return report[b].key < report[a].key;
    });
    std::vector<bool> keep(report.size(), true);
    for (std::size_t i = 0; i < remove; ++i) keep[order[i]] = false;
    return keep;
}

std::vector<RecordKey> filter_uncertain(const UncertaintyReport& report, double fraction) {
    const auto keep = retained_mask(report, fraction);
    std::vector<RecordKey> keys;
    for (std::size_t i = 0; i < report.size(); ++i)
        if (keep[i]) keys.push_back(report[i].key);
    std::sort(keys.begin(), keys.end());
    return keys;
}

VoteOutcome majority_vote(std::span<const int> labels) {
    if (labels.empty()) return Empty{};
    std::map<int, std::size_t> counts;
    for (int y : labels) ++counts[y];
    std::size_t top = 0;
    for (const auto& [label, count] : counts) top = std::max(top, count);
    Tie leaders;
    for (const auto& [label, count] : counts)
        if (count == top) leaders.leaders.push_back(label);
    if (leaders.leaders.size() == 1) return Decided{leaders.leaders.front()};
    return leaders;
}

const char* to_string(Provenance p) { return p == Provenance::Vote ? "vote" : "fallback"; }

EditedLabelSet edit_labels(const EnsembleRecordSet& set, const UncertaintyReport& report, double fraction,
                           const FallbackLabeler& fallback) {
    removal_count(fraction, set.size());
    std::vector<bool> keep(set.size(), true);
    if (fraction > 0.0 || !report.empty()) {
        if (report.size() != set.size())
            throw ArgumentError("uncertainty report covers " + std::to_string(report.size()) + " records, set has " +
                                std::to_string(set.size()));
        for (std::size_t i = 0; i < set.size(); ++i)
            if (report[i].key != set[i].key()) throw ArgumentError("uncertainty report is not aligned with the record set");
        keep = retained_mask(report, fraction);
    }

    EditedLabelSet out;
    out.reserve(set.n_samples());
    std::vector<int> votes;
    for (std::size_t i = 0; i < set.n_samples(); ++i) {
        votes.clear();
        const std::size_t base = i * set.n_passes();
        for (std::size_t j = 0; j < set.n_passes(); ++j)
            if (keep[base + j]) votes.push_back(set[base + j].label);

        EditedLabel edited{set.sample_id_at(i), 0, Provenance::Vote, votes.size()};
        const VoteOutcome outcome = majority_vote(votes);
        if (const auto* d = std::get_if<Decided>(&outcome)) {
            edited.final_label = d->label;
        } else {
            edited.final_label = fallback(edited.sample_id);
            edited.provenance = Provenance::Fallback;
        }
        out.push_back(edited);
    }
    return out;
}

EditedLabelSet edit_labels(const EnsembleRecordSet& set, const UncertaintyReport& report, double fraction,
                           const Scorer& scorer, std::span<const UnlabeledSample> pool, TaskKind task_kind) {
    std::map<SampleId, const UnlabeledSample*> by_id;
    for (const auto& s : pool) by_id.emplace(s.sample_id, &s);
    return edit_labels(set, report, fraction, [&](SampleId id) {
        const auto it = by_id.find(id);
        if (it == by_id.end())
            throw IntegrityError("fallback needs sample " + std::to_string(id) + " but it is not in the pool");
        return deterministic_label(scorer, *it->second, task_kind).label;
    });
}

FallbackLabeler mean_score_fallback(const EnsembleRecordSet& set) {
    std::map<SampleId, int> labels;
    for (std::size_t i = 0; i < set.n_samples(); ++i) {
        std::vector<double> mean(set.n_classes(), 0.0);
        for (const auto& r : set.sample_records(i))
            for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += r.scores[c];
        labels[set.sample_id_at(i)] = static_cast<int>(std::max_element(mean.begin(), mean.end()) - mean.begin());
    }
    return [labels = std::move(labels)](SampleId id) {
        const auto it = labels.find(id);
        if (it == labels.end()) throw IntegrityError("no records for sample " + std::to_string(id));
        return it->second;
    };
}

void write_edited_csv(const EditedLabelSet& labels, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IntegrityError("cannot open " + path.string() + " for writing");
    out << "sample_id,final_label,provenance,votes_kept\n";
    for (const auto& e : labels)
        out << e.sample_id << ',' << e.final_label << ',' << to_string(e.provenance) << ',' << e.votes_kept << '\n';
}

}  // namespace simple
