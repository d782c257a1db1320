#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "simple/scorer.hpp"

namespace simple {

/// A feature vector with its integer target, the unit the MLP trains on.
struct FeatureExample {
    std::span<const float> x;
    int target = 0;
};

/// Two-layer feed-forward classifier: d -> h (tanh) -> K (softmax).
/// Dropout acts on the hidden activations only, in inverted form: a unit
/// survives with probability 1-p and survivors are scaled by 1/(1-p).
/// The embedding of a pass is the hidden activation vector after that
/// pass's dropout mask, so passes of one sample land at distinct points.
class ReferenceClassifier final : public Scorer {
public:
    struct Forward {
        std::vector<double> probs;
        std::vector<double> hidden;  // activations fed to the output layer (after dropout)
    };

    /// Flat gradient in parameter order W1, b1, W2, b2.
    struct Gradient {
        double loss = 0.0;
        std::vector<double> values;
    };

    ReferenceClassifier() = default;

    /// Random init: W ~ N(0, 1/fan_in), zero biases.
    static ReferenceClassifier initialize(std::size_t d, std::size_t h, int n_classes, double dropout_rate,
                                          std::uint64_t seed);

    /// Mini-batch size for fit(); 0 trains on the full set each step.
    void set_batch_size(std::size_t batch_size) { batch_size_ = batch_size; }
    std::size_t batch_size() const { return batch_size_; }

    std::size_t input_dim() const { return d_; }
    std::size_t hidden_dim() const { return h_; }

    Forward forward(std::span<const float> x, bool stochastic, std::uint64_t pass_seed) const;

    /// Mean cross-entropy and its gradient over `batch`, dropout off.
    Gradient loss_and_gradient(std::span<const FeatureExample> batch) const;
    double loss(std::span<const FeatureExample> batch) const;

    /// One optimizer run over feature examples; throws NumericalError on a
    /// non-finite loss.
    ReferenceClassifier fit_features(std::span<const FeatureExample> examples, double learning_rate, int epochs,
                                     std::uint64_t seed) const;

    /// Deterministic argmax prediction.
    int predict(std::span<const float> x) const;

    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }

    /// Copy whose output bias for `cls` is shifted by `delta`.
    ReferenceClassifier with_output_bias_shift(int cls, double delta) const;

    // Scorer
    ScorerKind kind() const override { return ScorerKind::Direct; }
    int n_classes() const override { return static_cast<int>(k_); }
    Evaluation evaluate(const SampleInput& input, bool stochastic, std::uint64_t pass_seed) const override;
    std::unique_ptr<Scorer> fit(std::span<const TrainingPair> pairs, double learning_rate, int epochs,
                                std::uint64_t seed) const override;
    std::unique_ptr<Scorer> with_dropout(double rate) const override;
    double dropout_rate() const override { return dropout_; }
    std::unique_ptr<Scorer> clone() const override { return std::make_unique<ReferenceClassifier>(*this); }

    bool operator==(const ReferenceClassifier& o) const {
        return d_ == o.d_ && h_ == o.h_ && k_ == o.k_ && dropout_ == o.dropout_ && batch_size_ == o.batch_size_ &&
               params_ == o.params_;
    }

private:
    ReferenceClassifier(std::size_t d, std::size_t h, std::size_t k, double dropout_rate);

    std::size_t w1_offset() const { return 0; }
    std::size_t b1_offset() const { return h_ * d_; }
    std::size_t w2_offset() const { return h_ * d_ + h_; }
    std::size_t b2_offset() const { return h_ * d_ + h_ + k_ * h_; }

    std::size_t d_ = 0;
    std::size_t h_ = 0;
    std::size_t k_ = 0;
    double dropout_ = 0.0;
    std::size_t batch_size_ = 16;
    std::vector<double> params_;  // W1 (h x d), b1 (h), W2 (k x h), b2 (k), row-major

    friend void save_checkpoint(const ReferenceClassifier&, const std::filesystem::path&);
    friend ReferenceClassifier load_checkpoint(const std::filesystem::path&, double);
};

/// Binary checkpoint: "SPLC", version u32 = 1, d, h, K as u32, then W1, b1,
/// W2, b2 as row-major little-endian float32. Dropout rate is not stored.
void save_checkpoint(const ReferenceClassifier& model, const std::filesystem::path& path);
ReferenceClassifier load_checkpoint(const std::filesystem::path& path, double dropout_rate = 0.1);

/// Desk-scale entailment scorer. Each supposition "this sample belongs to
/// class c" is encoded as the features concatenated with a one-hot of c and
/// fed to a ReferenceClassifier with three outputs (entail, neutral,
/// contradict). Binary tasks use a single supposition for class 1.
class SuppositionScorer final : public Scorer {
public:
    SuppositionScorer(ReferenceClassifier model, int n_classes);

    static SuppositionScorer initialize(std::size_t d, std::size_t h, int n_classes, double dropout_rate,
                                        std::uint64_t seed);

    int n_suppositions() const { return n_classes_ == 2 ? 1 : n_classes_; }
    const ReferenceClassifier& model() const { return model_; }

    std::vector<float> supposition_input(const Features& x, int supposition) const;

    ScorerKind kind() const override { return ScorerKind::Entailment; }
    int n_classes() const override { return n_classes_; }
    Evaluation evaluate(const SampleInput& input, bool stochastic, std::uint64_t pass_seed) const override;
    std::unique_ptr<Scorer> fit(std::span<const TrainingPair> pairs, double learning_rate, int epochs,
                                std::uint64_t seed) const override;
    std::unique_ptr<Scorer> with_dropout(double rate) const override;
    double dropout_rate() const override { return model_.dropout_rate(); }
    std::unique_ptr<Scorer> clone() const override { return std::make_unique<SuppositionScorer>(*this); }

private:
    ReferenceClassifier model_;
    int n_classes_ = 2;
};

}  // namespace simple
