#include "simple/reference_classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "simple/errors.hpp"
#include "simple/rng.hpp"

namespace simple {

ReferenceClassifier::ReferenceClassifier(std::size_t d, std::size_t h, std::size_t k, double dropout_rate)
        : d_(d), h_(h), k_(k), dropout_(dropout_rate), params_(h * d + h + k * h + k, 0.0) {
    if (d == 0) throw ConfigError("classifier input dimension must be positive");
    if (h == 0) throw ConfigError("classifier hidden size must be at least 1");
    if (k < 2) throw ConfigError("classifier needs at least 2 outputs");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout rate must be in [0,1)");
}

ReferenceClassifier ReferenceClassifier::initialize(std::size_t d, std::size_t h, int n_classes,
                                                    double dropout_rate, std::uint64_t seed) {
    if (n_classes < 2) throw ConfigError("classifier needs at least 2 classes");
    ReferenceClassifier m(d, h, static_cast<std::size_t>(n_classes), dropout_rate);
    Rng rng(derive_seed(seed, 0x696e6974ULL));
    const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
    for (std::size_t i = 0; i < h * d; ++i) m.params_[m.w1_offset() + i] = s1 * rng.normal();
    for (std::size_t i = 0; i < m.k_ * h; ++i) m.params_[m.w2_offset() + i] = s2 * rng.normal();
    return m;
}

namespace {

void softmax_inplace(std::vector<double>& z) {
    const double top = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (auto& v : z) {
        v = std::exp(v - top);
        total += v;
    }
    for (auto& v : z) v /= total;
}

}  // namespace

ReferenceClassifier::Forward ReferenceClassifier::forward(std::span<const float> x, bool stochastic,
                                                          std::uint64_t pass_seed) const {
    if (x.size() != d_)
        throw ArgumentError("input has " + std::to_string(x.size()) + " features, classifier expects " +
                            std::to_string(d_));
    Forward out;
    out.hidden.resize(h_);
    const double* w1 = params_.data() + w1_offset();
    const double* b1 = params_.data() + b1_offset();
    for (std::size_t j = 0; j < h_; ++j) {
        double z = b1[j];
        for (std::size_t i = 0; i < d_; ++i) z += w1[j * d_ + i] * static_cast<double>(x[i]);
        out.hidden[j] = std::tanh(z);
    }

    if (stochastic && dropout_ > 0.0) {
        Rng rng(pass_seed);
        const double scale = 1.0 / (1.0 - dropout_);
        for (auto& a : out.hidden) a = rng.uniform() < dropout_ ? 0.0 : a * scale;
    }

    const double* w2 = params_.data() + w2_offset();
    const double* b2 = params_.data() + b2_offset();
    out.probs.resize(k_);
    for (std::size_t c = 0; c < k_; ++c) {
        double z = b2[c];
        for (std::size_t j = 0; j < h_; ++j) z += w2[c * h_ + j] * out.hidden[j];
        out.probs[c] = z;
    }
    softmax_inplace(out.probs);
    return out;
}

ReferenceClassifier::Gradient ReferenceClassifier::loss_and_gradient(std::span<const FeatureExample> batch) const {
    Gradient g;
    g.values.assign(params_.size(), 0.0);
    if (batch.empty()) return g;

    const double* w1 = params_.data() + w1_offset();
    const double* b1 = params_.data() + b1_offset();
    const double* w2 = params_.data() + w2_offset();
    const double* b2 = params_.data() + b2_offset();
    double* gw1 = g.values.data() + w1_offset();
    double* gb1 = g.values.data() + b1_offset();
    double* gw2 = g.values.data() + w2_offset();
    double* gb2 = g.values.data() + b2_offset();

    std::vector<double> hidden(h_), logits(k_), dz2(k_), dz1(h_);
    for (const auto& ex : batch) {
        if (ex.x.size() != d_) throw ArgumentError("training example has wrong feature dimension");
        if (ex.target < 0 || static_cast<std::size_t>(ex.target) >= k_)
            throw ArgumentError("training target out of range");
        for (std::size_t j = 0; j < h_; ++j) {
            double z = b1[j];
            for (std::size_t i = 0; i < d_; ++i) z += w1[j * d_ + i] * static_cast<double>(ex.x[i]);
            hidden[j] = std::tanh(z);
        }
        for (std::size_t c = 0; c < k_; ++c) {
            double z = b2[c];
            for (std::size_t j = 0; j < h_; ++j) z += w2[c * h_ + j] * hidden[j];
            logits[c] = z;
        }
        const double top = *std::max_element(logits.begin(), logits.end());
        double total = 0.0;
        for (std::size_t c = 0; c < k_; ++c) total += std::exp(logits[c] - top);
        const double log_norm = top + std::log(total);
        g.loss += log_norm - logits[static_cast<std::size_t>(ex.target)];

        for (std::size_t c = 0; c < k_; ++c)
            dz2[c] = std::exp(logits[c] - log_norm) - (static_cast<int>(c) == ex.target ? 1.0 : 0.0);
        for (std::size_t j = 0; j < h_; ++j) {
            double da = 0.0;
            for (std::size_t c = 0; c < k_; ++c) da += w2[c * h_ + j] * dz2[c];
            dz1[j] = da * (1.0 - hidden[j] * hidden[j]);
        }
        for (std::size_t c = 0; c < k_; ++c) {
            gb2[c] += dz2[c];
            for (std::size_t j = 0; j < h_; ++j) gw2[c * h_ + j] += dz2[c] * hidden[j];
        }
        for (std::size_t j = 0; j < h_; ++j) {
            gb1[j] += dz1[j];
            for (std::size_t i = 0; i < d_; ++i) gw1[j * d_ + i] += dz1[j] * static_cast<double>(ex.x[i]);
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    g.loss *= inv;
    for (auto& v : g.values) v *= inv;
    return g;
}

double ReferenceClassifier::loss(std::span<const FeatureExample> batch) const {
    return loss_and_gradient(batch).loss;
}

ReferenceClassifier ReferenceClassifier::fit_features(std::span<const FeatureExample> examples,
                                                      double learning_rate, int epochs,
                                                      std::uint64_t seed) const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning rate must be positive and finite");
    if (epochs < 0) throw ConfigError("epochs must be non-negative");
    ReferenceClassifier model = *this;
    if (examples.empty() || epochs == 0) return model;

    const std::size_t batch = batch_size_ == 0 ? examples.size() : std::min(batch_size_, examples.size());
    std::vector<std::size_t> order(examples.size());
    std::vector<FeatureExample> chunk;
    chunk.reserve(batch);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);

        for (std::size_t start = 0; start < order.size(); start += batch) {
            chunk.clear();
            const std::size_t stop = std::min(order.size(), start + batch);
            for (std::size_t i = start; i < stop; ++i) chunk.push_back(examples[order[i]]);
            const Gradient g = model.loss_and_gradient(chunk);
            if (!std::isfinite(g.loss))
                throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
            for (std::size_t p = 0; p < model.params_.size(); ++p) model.params_[p] -= learning_rate * g.values[p];
        }
    }
    return model;
}

int ReferenceClassifier::predict(std::span<const float> x) const {
    const auto f = forward(x, false, 0);
    return static_cast<int>(std::max_element(f.probs.begin(), f.probs.end()) - f.probs.begin());
}

ReferenceClassifier ReferenceClassifier::with_output_bias_shift(int cls, double delta) const {
    if (cls < 0 || static_cast<std::size_t>(cls) >= k_) throw ArgumentError("class index out of range");
    ReferenceClassifier m = *this;
    m.params_[b2_offset() + static_cast<std::size_t>(cls)] += delta;
    return m;
}

Evaluation ReferenceClassifier::evaluate(const SampleInput& input, bool stochastic, std::uint64_t pass_seed) const {
    const auto* x = std::get_if<Features>(&input);
    if (x == nullptr) throw ArgumentError("reference classifier needs numeric features, got text fields");
    Forward f = forward(*x, stochastic, pass_seed);
    Evaluation ev;
    ev.class_scores = std::move(f.probs);
    ev.embeddings.emplace_back(f.hidden.begin(), f.hidden.end());
    return ev;
}

std::unique_ptr<Scorer> ReferenceClassifier::fit(std::span<const TrainingPair> pairs, double learning_rate,
                                                 int epochs, std::uint64_t seed) const {
    std::vector<FeatureExample> examples;
    examples.reserve(pairs.size());
    for (const auto& p : pairs) {
        const auto* x = std::get_if<Features>(&p.input);
        if (x == nullptr) throw ArgumentError("reference classifier needs numeric features, got text fields");
        examples.push_back({*x, p.target});
    }
    return std::make_unique<ReferenceClassifier>(fit_features(examples, learning_rate, epochs, seed));
}

std::unique_ptr<Scorer> ReferenceClassifier::with_dropout(double rate) const {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must be in [0,1)");
    auto m = std::make_unique<ReferenceClassifier>(*this);
    m->dropout_ = rate;
    return m;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[4] = {'S', 'P', 'L', 'C'};

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& buf, std::size_t& pos) {
    if (pos + 4 > buf.size()) throw FormatError("truncated checkpoint", pos);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
}

}  // namespace

void save_checkpoint(const ReferenceClassifier& model, const std::filesystem::path& path) {
    std::string buf(kCheckpointMagic, 4);
    put_u32(buf, 1);
    put_u32(buf, static_cast<std::uint32_t>(model.d_));
    put_u32(buf, static_cast<std::uint32_t>(model.h_));
    put_u32(buf, static_cast<std::uint32_t>(model.k_));
    for (double v : model.params_) put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IntegrityError("cannot open " + path.string() + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IntegrityError("write failed for " + path.string());
}

ReferenceClassifier load_checkpoint(const std::filesystem::path& path, double dropout_rate) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IntegrityError("cannot open " + path.string());
    const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 4 || std::memcmp(buf.data(), kCheckpointMagic, 4) != 0)
        throw FormatError("bad checkpoint magic, expected SPLC", 0);
    std::size_t pos = 4;
    if (get_u32(buf, pos) != 1) throw FormatError("unsupported checkpoint version", 4);
    const std::uint32_t d = get_u32(buf, pos);
    const std::uint32_t h = get_u32(buf, pos);
    const std::uint32_t k = get_u32(buf, pos);
    if (d == 0 || h == 0 || k < 2) throw FormatError("checkpoint declares invalid shape", 8);
    ReferenceClassifier model(d, h, k, dropout_rate);
    if (buf.size() - pos != 4 * model.params_.size())
        throw FormatError("checkpoint payload has " + std::to_string(buf.size() - pos) + " bytes, expected " +
                                  std::to_string(4 * model.params_.size()),
                          pos);
    for (auto& v : model.params_) {
        v = static_cast<double>(std::bit_cast<float>(get_u32(buf, pos)));
        if (!std::isfinite(v)) throw FormatError("non-finite weight in checkpoint", pos - 4);
    }
    return model;
}

// ---------------------------------------------------------------------------
// SuppositionScorer
// ---------------------------------------------------------------------------

SuppositionScorer::SuppositionScorer(ReferenceClassifier model, int n_classes)
        : model_(std::move(model)), n_classes_(n_classes) {
    if (n_classes_ < 2) throw ConfigError("supposition scorer needs at least 2 classes");
    if (model_.n_classes() != 3) throw ConfigError("supposition scorer needs a three-way output model");
    if (model_.input_dim() <= static_cast<std::size_t>(n_suppositions()))
        throw ConfigError("supposition scorer model input too small for its one-hot suffix");
}

SuppositionScorer SuppositionScorer::initialize(std::size_t d, std::size_t h, int n_classes, double dropout_rate,
                                                std::uint64_t seed) {
    const std::size_t n_sup = n_classes == 2 ? 1 : static_cast<std::size_t>(n_classes);
    return SuppositionScorer(ReferenceClassifier::initialize(d + n_sup, h, 3, dropout_rate, seed), n_classes);
}

std::vector<float> SuppositionScorer::supposition_input(const Features& x, int supposition) const {
    const std::size_t n_sup = static_cast<std::size_t>(n_suppositions());
    if (x.size() + n_sup != model_.input_dim())
        throw ArgumentError("input has " + std::to_string(x.size()) + " features, scorer expects " +
                            std::to_string(model_.input_dim() - n_sup));
    if (supposition < 0 || static_cast<std::size_t>(supposition) >= n_sup)
        throw ArgumentError("supposition index out of range");
    std::vector<float> v(x.begin(), x.end());
    v.resize(x.size() + n_sup, 0.0f);
    v[x.size() + static_cast<std::size_t>(supposition)] = 1.0f;
    return v;
}

Evaluation SuppositionScorer::evaluate(const SampleInput& input, bool stochastic, std::uint64_t pass_seed) const {
    const auto* x = std::get_if<Features>(&input);
    if (x == nullptr) throw ArgumentError("supposition scorer needs numeric features, got text fields");
    Evaluation ev;
    for (int s = 0; s < n_suppositions(); ++s) {
        // every supposition is its own forward pass with its own dropout mask
        const auto f = model_.forward(supposition_input(*x, s), stochastic,
                                      derive_seed(pass_seed, static_cast<std::uint64_t>(s)));
        ev.suppositions.push_back({f.probs[0], f.probs[1], f.probs[2]});
        ev.embeddings.emplace_back(f.hidden.begin(), f.hidden.end());
    }
    return ev;
}

std::unique_ptr<Scorer> SuppositionScorer::fit(std::span<const TrainingPair> pairs, double learning_rate,
                                               int epochs, std::uint64_t seed) const {
    std::vector<std::vector<float>> inputs;
    inputs.reserve(pairs.size());
    std::vector<FeatureExample> examples;
    examples.reserve(pairs.size());
    for (const auto& p : pairs) {
        const auto* x = std::get_if<Features>(&p.input);
        if (x == nullptr) throw ArgumentError("supposition scorer needs numeric features, got text fields");
        if (p.target < 0 || p.target > 2) throw ArgumentError("entailment target must be a truth index 0..2");
        inputs.push_back(supposition_input(*x, p.supposition));
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) examples.push_back({inputs[i], pairs[i].target});
    return std::make_unique<SuppositionScorer>(model_.fit_features(examples, learning_rate, epochs, seed),
                                               n_classes_);
}

std::unique_ptr<Scorer> SuppositionScorer::with_dropout(double rate) const {
    auto m = model_.with_dropout(rate);
    return std::make_unique<SuppositionScorer>(static_cast<const ReferenceClassifier&>(*m), n_classes_);
}

}  // namespace simple
