#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "simple/dataset.hpp"
#include "simple/editing.hpp"
#include "simple/errors.hpp"
#include "simple/records.hpp"
#include "simple/selftrain.hpp"
#include "simple/uncertainty.hpp"

namespace py = pybind11;
using namespace simple;

namespace {

py::dict report_to_dict(const RunReport& r) {
    py::dict d;
    d["strategy"] = to_string(r.strategy);
    d["seed"] = r.seed;
    d["pl_acc_raw"] = r.pl_acc_raw;
    d["pl_acc_edited"] = r.pl_acc_edited;
    d["majority_share_before"] = r.before.majority_share;
    d["majority_share_after"] = r.after.majority_share;
    d["histogram_before"] = r.before.counts;
    d["histogram_after"] = r.after.counts;
    d["eval_acc_initial"] = r.eval_acc_initial;
    d["eval_accuracy"] = r.eval_accuracy;
    d["eval_acc"] = r.final_eval_acc();
    d["removed"] = r.removed_count;
    d["fallbacks"] = r.fallback_count;
    d["trained"] = r.trained_count;
    d["training_labels"] = r.training_labels;
    return d;
}

StrategyConfig make_config(const std::string& strategy, std::uint64_t seed, std::uint32_t passes, std::size_t k,
                           double dropout, double remove_fraction, int epochs, double lr, bool loo_priors,
                           std::size_t workers) {
    StrategyConfig c;
    c.strategy = parse_strategy(strategy);
    c.seed = seed;
    c.n_passes = passes;
    c.k_neighbors = k;
    c.dropout_rate = dropout;
    c.remove_fraction = remove_fraction;
    c.epochs = epochs;
    c.learning_rate = lr;
    c.loo_priors = loo_priors;
    c.workers = workers;
    c.validate();
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Pseudo-label editing with dropout ensembles and k-NN cut-edge uncertainty";

    static py::exception<Error> base(m, "SimpleError", PyExc_RuntimeError);
    static py::exception<ConfigError> config(m, "ConfigError", base.ptr());
    static py::exception<IntegrityError> data(m, "DataError", base.ptr());
    static py::exception<NumericalError> numerical(m, "NumericalError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            switch (e.kind()) {
                case ErrorKind::Config:
                    py::set_error(config, e.what());
                    break;
                case ErrorKind::Data:
                    py::set_error(data, e.what());
                    break;
                case ErrorKind::Numerical:
                    py::set_error(numerical, e.what());
                    break;
            }
        }
    });

    py::class_<EnsembleRecordSet>(m, "RecordSet")
        .def(py::init([](std::uint32_t n_passes, std::uint32_t e_dim, std::uint32_t n_classes,
                         const std::vector<std::tuple<SampleId, std::uint32_t, int, std::vector<float>,
                                                      std::vector<float>>>& rows) {
                 std::vector<EnsembleRecord> recs;
                 recs.reserve(rows.size());
                 for (const auto& [sid, pass, label, scores, emb] : rows) recs.push_back({sid, pass, label, scores, emb});
                 return EnsembleRecordSet(n_passes, e_dim, n_classes, std::move(recs));
             }),
             py::arg("n_passes"), py::arg("e_dim"), py::arg("n_classes"), py::arg("records"),
             "records: (sample_id, pass, label, scores, embedding) tuples")
        .def_property_readonly("n_samples", &EnsembleRecordSet::n_samples)
        .def_property_readonly("n_passes", &EnsembleRecordSet::n_passes)
        .def_property_readonly("e_dim", &EnsembleRecordSet::e_dim)
        .def_property_readonly("n_classes", &EnsembleRecordSet::n_classes)
        .def("__len__", &EnsembleRecordSet::size)
        .def("__eq__", [](const EnsembleRecordSet& a, const EnsembleRecordSet& b) { return a == b; })
        .def("records", [](const EnsembleRecordSet& s) {
            py::list out;
            for (const auto& r : s.records()) out.append(py::make_tuple(r.sample_id, r.pass, r.label, r.scores, r.embedding));
            return out;
        });

    m.def("load_records", &load_records, py::arg("path"), "Reads a JSONL or binary record file.");
    m.def(
        "write_records",
        [](const EnsembleRecordSet& set, const std::filesystem::path& path, const std::string& format) {
            write_records(set, path, parse_record_format(format));
        },
        py::arg("set"), py::arg("path"), py::arg("format") = "jsonl");

    m.def(
        "synth",
        [](const std::filesystem::path& path, int n_classes, std::size_t dimension, std::size_t per_class,
           double separation, double sigma, std::uint64_t seed) {
            write_corpus(generate_synthetic_corpus({n_classes, dimension, per_class, separation, sigma, seed}), path);
        },
        py::arg("path"), py::arg("n_classes") = 2, py::arg("dimension") = 8, py::arg("per_class") = 500,
        py::arg("separation") = 1.2, py::arg("sigma") = 1.0, py::arg("seed") = 0,
        "Writes a Gaussian-mixture corpus file.");

    m.def(
        "uncertainty",
        [](const EnsembleRecordSet& set, std::size_t k, bool loo_priors, std::size_t workers) {
            py::list out;
            for (const auto& r : uncertainty_scores(set, {k, loo_priors, workers})) {
                py::dict d;
                d["sample_id"] = r.key.sample_id;
                d["pass"] = r.key.pass;
                d["label"] = r.label;
                d["J"] = r.cut_edge;
                d["E"] = r.null_expectation;
                d["sigma"] = r.null_sigma;
                d["s"] = r.score;
                out.append(d);
            }
            return out;
        },
        py::arg("set"), py::arg("k") = 9, py::arg("loo_priors") = true, py::arg("workers") = 1,
        "Cut-edge statistic, null moments and s-score per record, in record order.");

    m.def(
        "edit",
        [](const EnsembleRecordSet& set, double fraction, std::size_t k, bool loo_priors) {
            const auto report = fraction > 0.0 ? uncertainty_scores(set, {k, loo_priors, 1}) : UncertaintyReport{};
            py::list out;
            for (const auto& e : edit_labels(set, report, fraction, mean_score_fallback(set)))
                out.append(py::make_tuple(e.sample_id, e.final_label, to_string(e.provenance), e.votes_kept));
            return out;
        },
        py::arg("set"), py::arg("fraction") = 0.2, py::arg("k") = 9, py::arg("loo_priors") = true,
        "Edited labels as (sample_id, label, provenance, votes_kept). Tied or empty votes fall back to the "
        "argmax of the mean pass scores.");

    m.def(
        "run_strategy",
        [](const std::string& strategy, std::uint64_t seed, std::uint32_t passes, std::size_t k, double dropout,
           double remove_fraction, int epochs, double lr, bool loo_priors, std::size_t workers,
           std::optional<double> biased_share) {
            const auto cfg = make_config(strategy, seed, passes, k, dropout, remove_fraction, epochs, lr, loo_priors,
                                         workers);
            BenchmarkSpec spec;
            spec.biased_share = biased_share;
            py::gil_scoped_release release;
            const auto b = make_benchmark(spec, seed);
            const auto r = run_strategy(cfg, b.data, b.weak);
            py::gil_scoped_acquire acquire;
            return report_to_dict(r);
        },
        py::arg("strategy") = "simple", py::arg("seed") = 0, py::arg("passes") = 7, py::arg("k") = 9,
        py::arg("dropout") = 0.1, py::arg("remove_fraction") = 0.2, py::arg("epochs") = 6, py::arg("lr") = 0.05,
        py::arg("loo_priors") = true, py::arg("workers") = 1, py::arg("biased_share") = py::none(),
        "One self-training run on the synthetic benchmark for `seed`.");

    m.def(
        "compare",
        [](const std::vector<std::string>& strategies, std::size_t seeds, std::uint64_t base_seed,
           std::size_t workers) {
            std::vector<StrategyConfig> grid;
            for (const auto& s : strategies) grid.push_back(make_config(s, 0, 7, 9, 0.1, 0.2, 6, 0.05, true, 1));
            Comparison c;
            {
                py::gil_scoped_release release;
                c = compare_strategies(grid, seeds, BenchmarkSpec{}, base_seed, workers);
            }
            return py::make_tuple(comparison_csv(c), summary_csv(c));
        },
        py::arg("strategies") = std::vector<std::string>{"baseline_st", "dropout_vote", "setred", "simple"},
        py::arg("seeds") = 10, py::arg("base_seed") = 0, py::arg("workers") = 1,
        "Strategy comparison over seeds; returns (comparison_csv, summary_csv).");
}
