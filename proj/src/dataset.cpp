#include "simple/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "simple/errors.hpp"
#include "simple/rng.hpp"

namespace simple {

using nlohmann::json;

const char* to_string(TaskKind kind) {
    switch (kind) {
        case TaskKind::Binary:
            return "binary";
        case TaskKind::Multiclass:
            return "multiclass";
        case TaskKind::SentencePair:
            return "sentence-pair";
    }
    return "binary";
}

TaskKind parse_task_kind(const std::string& text) {
    if (text == "binary") return TaskKind::Binary;
    if (text == "multiclass") return TaskKind::Multiclass;
    if (text == "sentence-pair") return TaskKind::SentencePair;
    throw ConfigError("unknown task kind '" + text + "'");
}

LabeledCorpus::LabeledCorpus(std::size_t dimension, int n_classes, TaskKind task_kind,
                             std::vector<Sample> samples)
        : dimension_(dimension),
          n_classes_(n_classes),
          task_kind_(task_kind),
          samples_(std::move(samples)) {
    if (n_classes_ < 2) throw ConfigError("corpus needs at least 2 classes");
    if (task_kind_ == TaskKind::Binary && n_classes_ != 2)
        throw ConfigError("binary corpus must have exactly 2 classes");
    std::set<SampleId> seen;
    for (const auto& s : samples_) {
        if (!seen.insert(s.sample_id).second)
            throw IntegrityError("duplicate sample_id " + std::to_string(s.sample_id));
        if (s.has_features() && s.features().size() != dimension_)
            throw IntegrityError("sample " + std::to_string(s.sample_id) + " has " +
                                 std::to_string(s.features().size()) +
                                 " features, corpus dimension is " + std::to_string(dimension_));
        if (s.gold_label && (*s.gold_label < 0 || *s.gold_label >= n_classes_))
            throw IntegrityError("sample " + std::to_string(s.sample_id) +
                                 " has gold label out of range");
    }
}

LabeledCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
    if (spec.n_classes < 2) throw ConfigError("synthetic corpus needs n_classes >= 2");
    if (spec.dimension == 0 || spec.samples_per_class == 0)
        throw ConfigError("synthetic corpus needs positive dimension and samples_per_class");
    if (static_cast<std::size_t>(spec.n_classes) > spec.dimension)
        throw ConfigError("axis-aligned class means need n_classes <= dimension");
    if (!std::isfinite(spec.class_mean_separation) || spec.class_mean_separation <= 0.0)
        throw ConfigError("class mean separation must be finite and positive");
    if (!std::isfinite(spec.noise_sigma) || spec.noise_sigma < 0.0)
        throw ConfigError("noise sigma must be finite and non-negative");

    Rng rng(derive_seed(spec.seed, 0x636f72707573ULL));
    std::vector<Sample> samples;
    samples.reserve(spec.samples_per_class * static_cast<std::size_t>(spec.n_classes));
    SampleId next_id = 0;
    for (int c = 0; c < spec.n_classes; ++c) {
        for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
            Features x(spec.dimension);
            for (std::size_t k = 0; k < spec.dimension; ++k) {
                const double mean = (k == static_cast<std::size_t>(c)) ? spec.class_mean_separation : 0.0;
                x[k] = static_cast<float>(mean + spec.noise_sigma * rng.normal());
            }
            samples.push_back(Sample{next_id++, std::move(x), c});
        }
    }
    const TaskKind kind = spec.n_classes == 2 ? TaskKind::Binary : TaskKind::Multiclass;
    return LabeledCorpus(spec.dimension, spec.n_classes, kind, std::move(samples));
}

UnlabeledSample strip_label(const Sample& s) { return UnlabeledSample{s.sample_id, s.input}; }

PoolSplit select_unlabeled(const LabeledCorpus& corpus, std::size_t n, std::uint64_t seed) {
    const auto& samples = corpus.samples();
    if (n > samples.size())
        throw SizeError("cannot select " + std::to_string(n) + " unlabeled samples from a corpus of " +
                        std::to_string(samples.size()));

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x706f6f6cULL));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(order.size() - i));
        std::swap(order[i], order[j]);
    }

    PoolSplit split;
    split.pool.reserve(n);
    std::vector<bool> taken(samples.size(), false);
    for (std::size_t i = 0; i < n; ++i) {
        split.pool.push_back(strip_label(samples[order[i]]));
        taken[order[i]] = true;
    }
    split.eval.reserve(samples.size() - n);
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (!taken[i]) split.eval.push_back(samples[i]);
    return split;
}

std::map<SampleId, int> gold_labels(const std::vector<Sample>& samples) {
    std::map<SampleId, int> gold;
    for (const auto& s : samples)
        if (s.gold_label) gold.emplace(s.sample_id, *s.gold_label);
    return gold;
}

namespace {

json features_to_json(const Features& f) {
    json arr = json::array();
    for (float v : f) {
        if (!std::isfinite(v)) throw IntegrityError("non-finite feature value cannot be written");
        arr.push_back(static_cast<double>(v));
    }
    return arr;
}

}  // namespace

void write_corpus(const LabeledCorpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IntegrityError("cannot open " + path.string() + " for writing");
    json header = {{"magic", "SPLE-CORPUS"},
                   {"version", 1},
                   {"dimension", corpus.dimension()},
                   {"n_classes", corpus.n_classes()},
                   {"task_kind", to_string(corpus.task_kind())},
                   {"count", corpus.size()}};
    out << header.dump() << '\n';
    for (const auto& s : corpus.samples()) {
        json line = {{"sample_id", s.sample_id}};
        if (s.has_features())
            line["features"] = features_to_json(s.features());
        else
            line["text"] = std::get<TextFields>(s.input);
        line["gold_label"] = s.gold_label ? json(*s.gold_label) : json(nullptr);
        out << line.dump() << '\n';
    }
    if (!out) throw IntegrityError("write failed for " + path.string());
}

LabeledCorpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IntegrityError("cannot open " + path.string());
    std::string line;
    std::uint64_t offset = 0;
    if (!std::getline(in, line)) throw FormatError("empty corpus file", 0);

    json header;
    std::size_t dimension = 0;
    int n_classes = 0;
    std::string kind_text;
    try {
        header = json::parse(line);
        if (header.at("magic").get<std::string>() != "SPLE-CORPUS")
            throw FormatError("bad corpus magic", 0);
        if (header.at("version").get<int>() != 1) throw FormatError("unsupported corpus version", 0);
        dimension = header.at("dimension").get<std::size_t>();
        n_classes = header.at("n_classes").get<int>();
        kind_text = header.value("task_kind", std::string("binary"));
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed corpus header: ") + e.what(), 0);
    }
    const auto kind = parse_task_kind(kind_text);
    offset += line.size() + 1;

    std::vector<Sample> samples;
    while (std::getline(in, line)) {
        if (line.empty()) {
            offset += 1;
            continue;
        }
        try {
            const json row = json::parse(line);
            Sample s;
            s.sample_id = row.at("sample_id").get<SampleId>();
            if (row.contains("features")) {
                Features f;
                for (const auto& v : row.at("features")) f.push_back(static_cast<float>(v.get<double>()));
                s.input = std::move(f);
            } else {
                s.input = row.at("text").get<TextFields>();
            }
            if (row.contains("gold_label") && !row.at("gold_label").is_null())
                s.gold_label = row.at("gold_label").get<int>();
            samples.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw FormatError(std::string("malformed corpus row: ") + e.what(), offset);
        }
        offset += line.size() + 1;
    }
    if (header.contains("count") && header.at("count").get<std::size_t>() != samples.size())
        throw IntegrityError("corpus header declares " + std::to_string(header.at("count").get<std::size_t>()) +
                             " samples, file has " + std::to_string(samples.size()));
    return LabeledCorpus(dimension, n_classes, kind, std::move(samples));
}

}  // namespace simple
