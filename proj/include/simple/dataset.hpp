#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace simple {

using SampleId = std::uint64_t;
using Features = std::vector<float>;

/// Named text fields of an imported sentence-pair or single-sentence row
/// (p/h, t/q, q1/q2, x). Passed through verbatim.
using TextFields = std::map<std::string, std::string>;

/// What a scorer sees: numeric features or text fields, never both.
using SampleInput = std::variant<Features, TextFields>;

enum class TaskKind { Binary, Multiclass, SentencePair };

const char* to_string(TaskKind kind);
TaskKind parse_task_kind(const std::string& text);

/// A corpus row. The gold label is kept for evaluation only.
struct Sample {
    SampleId sample_id = 0;
    SampleInput input;
    std::optional<int> gold_label;

    bool has_features() const { return std::holds_alternative<Features>(input); }
    const Features& features() const { return std::get<Features>(input); }

    bool operator==(const Sample&) const = default;
};

/// A pool row handed to the training path. There is no gold label field, so
/// pseudo-labeling code cannot read one.
struct UnlabeledSample {
    SampleId sample_id = 0;
    SampleInput input;

    bool operator==(const UnlabeledSample&) const = default;
};

class LabeledCorpus {
public:
    LabeledCorpus() = default;
    /// Validates ids, dimensions, label ranges and the binary/n_classes rule.
    LabeledCorpus(std::size_t dimension, int n_classes, TaskKind task_kind,
                  std::vector<Sample> samples);

    std::size_t dimension() const { return dimension_; }
    int n_classes() const { return n_classes_; }
    TaskKind task_kind() const { return task_kind_; }
    const std::vector<Sample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }

    bool operator==(const LabeledCorpus&) const = default;

private:
    std::size_t dimension_ = 0;
    int n_classes_ = 2;
    TaskKind task_kind_ = TaskKind::Binary;
    std::vector<Sample> samples_;
};

struct SyntheticSpec {
    int n_classes = 2;
    std::size_t dimension = 8;
    std::size_t samples_per_class = 500;
    double class_mean_separation = 2.0;  // mu
    double noise_sigma = 1.0;
    std::uint64_t seed = 0;
};

/// Class c is drawn from N(mu * e_c, sigma^2 I), with e_c the c-th axis.
/// Samples are emitted class-major with consecutive ids from 0.
/// Throws ConfigError for non-positive counts, n_classes > dimension, or
/// non-finite / negative mu and sigma.
LabeledCorpus generate_synthetic_corpus(const SyntheticSpec& spec);

struct PoolSplit {
    std::vector<UnlabeledSample> pool;
    std::vector<Sample> eval;
};

/// Uniform draw of n samples without replacement (partial Fisher-Yates).
/// Pool keeps the draw order; eval keeps corpus order. Throws SizeError if
/// n exceeds the corpus.
PoolSplit select_unlabeled(const LabeledCorpus& corpus, std::size_t n, std::uint64_t seed);

/// sample_id -> gold label for the rows of a split. Diagnostics only.
std::map<SampleId, int> gold_labels(const std::vector<Sample>& samples);

UnlabeledSample strip_label(const Sample& s);

/// JSONL corpus file: header {"magic":"SPLE-CORPUS","version":1,"dimension":d,
/// "n_classes":K,"task_kind":"binary"|..., "count":n} then one
/// {"sample_id","features"|"text","gold_label"} object per line.
void write_corpus(const LabeledCorpus& corpus, const std::filesystem::path& path);
LabeledCorpus load_corpus(const std::filesystem::path& path);

}  // namespace simple
