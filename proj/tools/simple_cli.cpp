#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "simple/dataset.hpp"
#include "simple/editing.hpp"
#include "simple/ensemble.hpp"
#include "simple/errors.hpp"
#include "simple/records.hpp"
#include "simple/reference_classifier.hpp"
#include "simple/selftrain.hpp"
#include "simple/uncertainty.hpp"

namespace fs = std::filesystem;
using namespace simple;

namespace {

struct Options {
    // pipeline
    std::uint32_t passes = 7;
    std::size_t neighbors = 9;
    double dropout = 0.1;
    double remove_frac = 0.2;
    int epochs = 6;
    double lr = 0.05;
    std::uint64_t seed = 0;
    std::vector<std::string> strategies;
    std::size_t seeds = 10;
    std::string format = "binary";
    std::string out;
    std::size_t workers = 1;
    std::string priors = "loo";
    std::string mc_target = "predicted";
    bool rank_renormalized = false;

    // data and model
    std::string corpus;
    std::string records;
    std::string model;
    std::string save_model;
    std::string scores;
    std::size_t pool_size = 400;
    std::size_t seed_split = 40;
    std::size_t hidden = 8;
    double pretrain_lr = 0.02;
    int pretrain_epochs = 30;
    std::optional<double> biased_share;

    // synth
    int classes = 2;
    std::size_t dim = 8;
    std::size_t per_class = 500;
    double separation = 1.2;
    double sigma = 1.0;
};

void add_pipeline_flags(CLI::App* app, Options& o) {
    app->add_option("--passes", o.passes, "Stochastic passes per sample")->capture_default_str();
    app->add_option("--neighbors", o.neighbors, "k for the neighbor graph")->capture_default_str();
    app->add_option("--dropout", o.dropout, "Dropout rate at inference")->capture_default_str();
    app->add_option("--remove-frac", o.remove_frac, "Fraction of records removed as uncertain")->capture_default_str();
    app->add_option("--epochs", o.epochs, "Self-training epochs")->capture_default_str();
    app->add_option("--lr", o.lr, "Self-training learning rate")->capture_default_str();
    app->add_option("--seed", o.seed, "Base seed")->capture_default_str();
    app->add_option("--workers", o.workers, "Worker threads (0 = all cores)")->capture_default_str();
    app->add_option("--priors", o.priors, "Null-model label priors: loo|global")
        ->check(CLI::IsMember({"loo", "global"}))
        ->capture_default_str();
    app->add_option("--mc-target", o.mc_target, "Multiclass training target: predicted|entail")->capture_default_str();
    app->add_flag("--rank-renormalized", o.rank_renormalized, "Renormalize entail over entail+contradict");
}

void add_benchmark_flags(CLI::App* app, Options& o) {
    app->add_option("--pool-size", o.pool_size, "Unlabeled pool size")->capture_default_str();
    app->add_option("--seed-split", o.seed_split, "Labeled rows used to pre-train the weak scorer")->capture_default_str();
    app->add_option("--hidden", o.hidden, "Hidden units of the reference classifier")->capture_default_str();
    app->add_option("--pretrain-lr", o.pretrain_lr, "Weak scorer learning rate")->capture_default_str();
    app->add_option("--pretrain-epochs", o.pretrain_epochs, "Weak scorer epochs")->capture_default_str();
    app->add_option("--biased-share", o.biased_share, "Shift class 0's output bias until this pool share");
}

BenchmarkSpec benchmark_spec(const Options& o) {
    BenchmarkSpec spec;
    spec.pool_size = o.pool_size;
    spec.seed_split = o.seed_split;
    spec.hidden = o.hidden;
    spec.dropout_rate = o.dropout;
    spec.pretrain_learning_rate = o.pretrain_lr;
    spec.pretrain_epochs = o.pretrain_epochs;
    spec.biased_share = o.biased_share;
    return spec;
}

StrategyConfig strategy_config(const Options& o, Strategy strategy, TaskKind task_kind) {
    StrategyConfig cfg;
    cfg.strategy = strategy;
    cfg.n_passes = o.passes;
    cfg.k_neighbors = o.neighbors;
    cfg.dropout_rate = o.dropout;
    cfg.remove_fraction = o.remove_frac;
    cfg.epochs = o.epochs;
    cfg.learning_rate = o.lr;
    cfg.seed = o.seed;
    cfg.task_kind = task_kind;
    cfg.mc_target = parse_mc_target(o.mc_target);
    cfg.rank_renormalized = o.rank_renormalized;
    cfg.loo_priors = o.priors == "loo";
    cfg.workers = o.workers;
    cfg.validate();
    return cfg;
}

std::vector<Strategy> selected_strategies(const Options& o) {
    std::vector<Strategy> out;
    for (const auto& name : o.strategies) out.push_back(parse_strategy(name));
    if (out.empty()) out.assign(std::begin(kAllStrategies), std::end(kAllStrategies));
    return out;
}

Benchmark load_benchmark(const Options& o) {
    const BenchmarkSpec spec = benchmark_spec(o);
    if (o.corpus.empty()) return make_benchmark(spec, o.seed);
    return make_benchmark(load_corpus(o.corpus), spec, o.seed);
}

void require_out(const Options& o) {
    if (o.out.empty()) throw ConfigError("--out is required");
}

int cmd_synth(const Options& o) {
    require_out(o);
    SyntheticSpec spec{o.classes, o.dim, o.per_class, o.separation, o.sigma, o.seed};
    const auto corpus = generate_synthetic_corpus(spec);
    write_corpus(corpus, o.out);
    std::printf("wrote %zu samples (%d classes, d=%zu) to %s\n", corpus.size(), corpus.n_classes(),
                corpus.dimension(), o.out.c_str());
    return 0;
}

int cmd_label(const Options& o) {
    require_out(o);
    std::vector<UnlabeledSample> pool;
    std::unique_ptr<Scorer> scorer;
    TaskKind task_kind = TaskKind::Binary;

    if (!o.model.empty()) {
        if (o.corpus.empty()) throw ConfigError("--model needs --corpus to label");
        const auto corpus = load_corpus(o.corpus);
        task_kind = corpus.task_kind();
        pool = select_unlabeled(corpus, std::min(o.pool_size, corpus.size()), o.seed).pool;
        scorer = std::make_unique<ReferenceClassifier>(load_checkpoint(o.model, o.dropout));
    } else {
        Benchmark b = load_benchmark(o);
        pool = std::move(b.data.pool);
        std::printf("weak scorer pool accuracy %.4f\n", b.weak_pool_accuracy);
        if (!o.save_model.empty()) save_checkpoint(b.weak, o.save_model);
        scorer = std::make_unique<ReferenceClassifier>(std::move(b.weak));
    }

    EnsembleConfig cfg;
    cfg.n_passes = o.passes;
    cfg.dropout_rate = o.dropout;
    cfg.base_seed = o.seed;
    cfg.workers = o.workers;
    cfg.rank_renormalized = o.rank_renormalized;
    const auto set = augmented_label(*scorer, pool, cfg, task_kind);
    write_records(set, o.out, parse_record_format(o.format));
    std::printf("wrote %zu records (%zu samples x %u passes) to %s\n", set.size(), set.n_samples(), set.n_passes(),
                o.out.c_str());
    return 0;
}

int cmd_edit(const Options& o) {
    require_out(o);
    if (o.records.empty()) throw ConfigError("--records is required");
    const auto set = load_records(o.records);
    const UncertaintyReport report =
        o.remove_frac > 0.0 ? uncertainty_scores(set, {o.neighbors, o.priors == "loo", o.workers}) : UncertaintyReport{};
    if (!o.scores.empty()) write_uncertainty_csv(report, o.scores);

    EditedLabelSet edited;
    if (!o.model.empty()) {
        if (o.corpus.empty()) throw ConfigError("--model needs --corpus for the fallback pass");
        const auto corpus = load_corpus(o.corpus);
        std::vector<UnlabeledSample> pool;
        for (const auto& s : corpus.samples()) pool.push_back(strip_label(s));
        const auto scorer = load_checkpoint(o.model, o.dropout);
        edited = edit_labels(set, report, o.remove_frac, scorer, pool, corpus.task_kind());
    } else {
        edited = edit_labels(set, report, o.remove_frac, mean_score_fallback(set));
    }
    write_edited_csv(edited, o.out);

    std::size_t fallbacks = 0;
    for (const auto& e : edited) fallbacks += e.provenance == Provenance::Fallback;
    std::printf("edited %zu samples, removed %zu of %zu records, %zu fallbacks\n", edited.size(),
                removal_count(o.remove_frac, set.size()), set.size(), fallbacks);
    return 0;
}

nlohmann::json report_json(const RunReport& r) {
    nlohmann::json j;
    j["strategy"] = to_string(r.strategy);
    j["seed"] = r.seed;
    j["pl_acc_raw"] = r.pl_acc_raw;
    j["pl_acc_edited"] = r.pl_acc_edited;
    j["histogram_before"] = r.before.counts;
    j["histogram_after"] = r.after.counts;
    j["majority_share_before"] = r.before.majority_share;
    j["majority_share_after"] = r.after.majority_share;
    j["eval_acc_initial"] = r.eval_acc_initial;
    j["eval_accuracy"] = r.eval_accuracy;
    j["removed"] = r.removed_count;
    j["fallbacks"] = r.fallback_count;
    j["trained"] = r.trained_count;
    j["wall_time_seconds"] = r.wall_time_seconds;
    return j;
}

int cmd_selftrain(const Options& o) {
    const Benchmark b = load_benchmark(o);
    std::printf("weak scorer pool accuracy %.4f\n", b.weak_pool_accuracy);
    const TaskKind task_kind = b.weak.n_classes() == 2 ? TaskKind::Binary : TaskKind::Multiclass;
    nlohmann::json all = nlohmann::json::array();
    for (Strategy strategy : selected_strategies(o)) {
        const RunReport r = run_strategy(strategy_config(o, strategy, task_kind), b.data, b.weak);
        std::printf("%-12s pl_raw %.4f pl_edited %.4f eval %.4f -> %.4f removed %zu fallbacks %zu\n",
                    to_string(strategy), r.pl_acc_raw, r.pl_acc_edited, r.eval_acc_initial, r.final_eval_acc(),
                    r.removed_count, r.fallback_count);
        all.push_back(report_json(r));
    }
    if (!o.out.empty()) write_text(all.dump(2) + "\n", o.out);
    return 0;
}

int cmd_compare(const Options& o) {
    require_out(o);
    std::vector<StrategyConfig> grid;
    for (Strategy s : selected_strategies(o)) grid.push_back(strategy_config(o, s, TaskKind::Binary));
    const Comparison c = compare_strategies(grid, o.seeds, benchmark_spec(o), o.seed, o.workers);
    fs::create_directories(o.out);
    write_text(comparison_csv(c), fs::path(o.out) / "comparison.csv");
    write_text(summary_csv(c), fs::path(o.out) / "summary.csv");
    std::fputs(summary_csv(c).c_str(), stdout);
    std::size_t failures = 0;
    for (const auto& row : c.rows)
        if (!row.report) {
            ++failures;
            std::fprintf(stderr, "%s seed %llu failed: %s\n", to_string(row.strategy),
                         static_cast<unsigned long long>(row.seed), row.error.c_str());
        }
    return failures == 0 ? 0 : 1;
}

int cmd_export(const Options& o) {
    require_out(o);
    if (o.records.empty()) throw ConfigError("--records is required");
    const auto set = load_records(o.records);
    const auto report = uncertainty_scores(set, {o.neighbors, o.priors == "loo", o.workers});
    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw IntegrityError("cannot open " + o.out + " for writing");
    out << "sample_id,pass,label,s";
    for (std::uint32_t e = 0; e < set.e_dim(); ++e) out << ",e" << e;
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& r = set[i];
        std::snprintf(buf, sizeof buf, "%.17g", report[i].score);
        out << r.sample_id << ',' << r.pass << ',' << r.label << ',' << buf;
        for (float v : r.embedding) {
            std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
            out << ',' << buf;
        }
        out << '\n';
    }
    std::printf("exported %zu records to %s\n", set.size(), o.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pseudo-label editing for self-training"};
    app.require_subcommand(1);
    Options o;

    auto* synth = app.add_subcommand("synth", "Generate a Gaussian mixture corpus");
    synth->add_option("--classes", o.classes, "Number of classes")->capture_default_str();
    synth->add_option("--dim", o.dim, "Feature dimension")->capture_default_str();
    synth->add_option("--per-class", o.per_class, "Samples per class")->capture_default_str();
    synth->add_option("--separation", o.separation, "Distance of each class mean from the origin")
        ->capture_default_str();
    synth->add_option("--sigma", o.sigma, "Noise standard deviation")->capture_default_str();
    synth->add_option("--seed", o.seed, "Seed")->capture_default_str();
    synth->add_option("--out", o.out, "Output corpus (JSONL)");

    auto* label = app.add_subcommand("label", "Run the dropout ensemble over an unlabeled pool");
    add_pipeline_flags(label, o);
    add_benchmark_flags(label, o);
    label->add_option("--corpus", o.corpus, "Corpus JSONL (synthetic benchmark when omitted)");
    label->add_option("--model", o.model, "Classifier checkpoint to label with");
    label->add_option("--save-model", o.save_model, "Write the pre-trained weak scorer here");
    label->add_option("--format", o.format, "Record format: jsonl|binary")->capture_default_str();
    label->add_option("--out", o.out, "Output record file");

    auto* edit = app.add_subcommand("edit", "Score, filter and relabel an ensemble record file");
    add_pipeline_flags(edit, o);
    edit->add_option("--records", o.records, "Record file (JSONL or binary)");
    edit->add_option("--model", o.model, "Checkpoint for the deterministic fallback pass");
    edit->add_option("--corpus", o.corpus, "Corpus holding the samples for the fallback pass");
    edit->add_option("--scores", o.scores, "Also write per-record uncertainty CSV");
    edit->add_option("--out", o.out, "Edited labels CSV");

    auto* selftrain = app.add_subcommand("selftrain", "Label, edit and fine-tune with one or more strategies");
    add_pipeline_flags(selftrain, o);
    add_benchmark_flags(selftrain, o);
    selftrain->add_option("--strategy", o.strategies, "baseline_st|dropout_vote|setred|simple (repeatable)");
    selftrain->add_option("--corpus", o.corpus, "Corpus JSONL (synthetic benchmark when omitted)");
    selftrain->add_option("--out", o.out, "Run reports (JSON)");

    auto* compare = app.add_subcommand("compare", "Compare strategies over several seeds");
    add_pipeline_flags(compare, o);
    add_benchmark_flags(compare, o);
    compare->add_option("--strategy", o.strategies, "Strategies to include (default all)");
    compare->add_option("--seeds", o.seeds, "Number of seeds")->capture_default_str();
    compare->add_option("--out", o.out, "Output directory for comparison.csv and summary.csv");

    auto* exp = app.add_subcommand("export", "Dump embeddings, labels and uncertainty scores as CSV");
    exp->add_option("--records", o.records, "Record file (JSONL or binary)");
    exp->add_option("--neighbors", o.neighbors, "k for the neighbor graph")->capture_default_str();
    exp->add_option("--priors", o.priors, "Null-model label priors: loo|global")
        ->check(CLI::IsMember({"loo", "global"}))
        ->capture_default_str();
    exp->add_option("--workers", o.workers, "Worker threads")->capture_default_str();
    exp->add_option("--out", o.out, "Output CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*synth) return cmd_synth(o);
        if (*label) return cmd_label(o);
        if (*edit) return cmd_edit(o);
        if (*selftrain) return cmd_selftrain(o);
        if (*compare) return cmd_compare(o);
        if (*exp) return cmd_export(o);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
