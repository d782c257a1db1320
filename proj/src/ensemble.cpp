#include "simple/ensemble.hpp"

#include <algorithm>
#include <string>

#include "simple/errors.hpp"
#include "simple/parallel.hpp"
#include "simple/rng.hpp"

namespace simple {

void EnsembleConfig::validate() const {
    if (n_passes < 1) throw ConfigError("ensemble needs at least one pass");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout rate must be in [0,1)");
}

namespace {

int argmax_lowest(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

LabeledPass resolve_pass(const Evaluation& ev, int n_classes, TaskKind task_kind, bool rank_renormalized) {
    LabeledPass out;
    if (ev.embeddings.empty()) throw ArgumentError("scorer returned no embedding");

    if (!ev.class_scores.empty()) {
        if (static_cast<int>(ev.class_scores.size()) != n_classes)
            throw ArgumentError("scorer returned " + std::to_string(ev.class_scores.size()) + " class scores, expected " +
                                std::to_string(n_classes));
        out.label = argmax_lowest(ev.class_scores);
        out.scores.assign(ev.class_scores.begin(), ev.class_scores.end());
        out.embedding = ev.embeddings.front();
        return out;
    }

    if (ev.suppositions.empty()) throw ArgumentError("scorer returned neither class scores nor suppositions");
    out.suppositions = ev.suppositions;
    if (task_kind != TaskKind::Multiclass) {
        const TruthProb p = binary_truth_prob(ev.suppositions.front());
        out.label = p.p_true > p.p_false ? 1 : 0;
        out.scores = {static_cast<float>(p.p_false), static_cast<float>(p.p_true)};
        out.embedding = ev.embeddings.front();
        return out;
    }

    if (static_cast<int>(ev.suppositions.size()) != n_classes)
        throw ArgumentError("scorer returned " + std::to_string(ev.suppositions.size()) +
                            " suppositions, expected " + std::to_string(n_classes));
    if (ev.embeddings.size() != ev.suppositions.size())
        throw ArgumentError("multi-class scorer must return one embedding per supposition");
    const RankResult rank = rank_multiclass(ev.suppositions, rank_renormalized);
    double total = 0.0;
    for (const auto& s : ev.suppositions) total += s.entail;
    if (!(total > 0.0)) throw DegenerateScoreError("all suppositions have zero entail probability");
    out.label = rank.winner;
    for (const auto& s : ev.suppositions) out.scores.push_back(static_cast<float>(s.entail / total));
    out.embedding = ev.embeddings[static_cast<std::size_t>(rank.winner)];
    return out;
}

EnsembleRecordSet augmented_label(const Scorer& scorer, std::span<const UnlabeledSample> pool,
                                  const EnsembleConfig& cfg, TaskKind task_kind) {
    cfg.validate();
    if (pool.empty()) throw ConfigError("unlabeled pool is empty");
    const auto model = scorer.with_dropout(cfg.dropout_rate);
    const int k = model->n_classes();
    const std::size_t n = cfg.n_passes;

    std::vector<EnsembleRecord> records(pool.size() * n);
    parallel_for(records.size(), cfg.workers, [&](std::size_t slot) {
        const auto& sample = pool[slot / n];
        const auto pass = static_cast<std::uint32_t>(slot % n);
        try {
            const Evaluation ev = model->evaluate(sample.input, true, pass_seed(cfg.base_seed, sample.sample_id, pass));
            LabeledPass lp = resolve_pass(ev, k, task_kind, cfg.rank_renormalized);
            records[slot] = EnsembleRecord{sample.sample_id, pass, lp.label, std::move(lp.scores),
                                           std::move(lp.embedding)};
        } catch (const Error& e) {
            rethrow_with_context(e, "sample " + std::to_string(sample.sample_id) + ", pass " + std::to_string(pass));
        }
    });

    const auto e_dim = static_cast<std::uint32_t>(records.front().embedding.size());
    return EnsembleRecordSet(cfg.n_passes, e_dim, static_cast<std::uint32_t>(k), std::move(records));
}

LabeledPass deterministic_label(const Scorer& scorer, const UnlabeledSample& sample, TaskKind task_kind,
                                bool rank_renormalized) {
    try {
        return resolve_pass(scorer.evaluate(sample.input, false, 0), scorer.n_classes(), task_kind,
                            rank_renormalized);
    } catch (const Error& e) {
        rethrow_with_context(e, "sample " + std::to_string(sample.sample_id) + " (deterministic pass)");
    }
}

}  // namespace simple
