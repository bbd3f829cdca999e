#pragma once

#include "fluidrc/signal.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace fluidrc {

using class_scores = std::array<double, n_classes>;

/// Single dense layer with softmax output over the eight pattern classes.
class readout_model {
public:
    readout_model() = default;
    explicit readout_model(int n_features);

    int n_features() const noexcept { return n_features_; }
    /// Row-major n_features x 8.
    std::vector<double>& weights() noexcept { return weights_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    class_scores& bias() noexcept { return bias_; }
    const class_scores& bias() const noexcept { return bias_; }
    std::size_t edge_count() const noexcept { return weights_.size(); }

    class_scores logits(std::span<const double> x) const;
    class_scores probabilities(std::span<const double> x) const;
    /// Argmax class of already-normalized features.
    int predict(std::span<const double> x) const;
    /// Divides raw features by the stored scale, then predicts.
    int predict_raw(std::span<const double> raw) const;

    double scale = 1.0;
    int trained_epochs = 0;
    std::uint64_t seed = 0;
    std::string config_hash;

private:
    int n_features_ = 0;
    std::vector<double> weights_;
    class_scores bias_{};
};

/// Numerically stable softmax.
class_scores softmax(const class_scores& z);

struct train_config {
    double learning_rate = 0.02;
    int max_epochs = 300;
    int patience = 20;
    double min_delta = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct loss_gradient {
    double loss = 0.0;
    std::vector<double> weights;
    class_scores bias{};
};

/// Mean cross-entropy over `data` and its exact gradient.
loss_gradient cross_entropy(const readout_model& model, std::span<const quantized_record> data);

/// Full-batch Adam from a seeded uniform [-0.5, 0.5] initialization. Stops
/// after max_epochs or when the training loss has not improved by min_delta
/// for `patience` epochs. Throws divergence_error on a non-finite loss.
readout_model train(std::span<const quantized_record> data, const train_config& cfg);

struct misclassification {
    pattern_label label;
    pattern_class predicted;
};

struct eval_report {
    double accuracy = 0.0;
    /// confusion[true][predicted]
    std::array<std::array<int, n_classes>, n_classes> confusion{};
    std::vector<misclassification> misclassified;

    int total() const;
    int correct() const;
};

eval_report evaluate(const readout_model& model, std::span<const quantized_record> test);
/// Evaluates records in raw units by dividing by the model's stored scale.
eval_report evaluate_raw(const readout_model& model, std::span<const quantized_record> raw_test);

struct data_split {
    std::vector<quantized_record> train;
    std::vector<quantized_record> test;
};

inline constexpr int test_variants_per_class = 6;
inline constexpr int max_records_per_pattern = n_variants - test_variants_per_class;

/// Six variants per class go to the test set, chosen from `seed` alone, so
/// the test set is identical for every records_per_pattern. Training takes
/// the first records_per_pattern of the remaining four.
data_split split(const std::vector<quantized_record>& records, int records_per_pattern,
                 std::uint64_t seed);

struct ensemble_member {
    std::uint64_t seed;
    double accuracy;
    int epochs;
};

struct ensemble_report {
    std::vector<ensemble_member> members;
    double mean = 0.0;
    /// Population standard deviation.
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t best = 0;
    readout_model best_model;
    eval_report best_eval;
};

/// Trains n_models readouts that differ only in initialization seed
/// (derived from cfg.seed and the member index).
ensemble_report train_ensemble(std::span<const quantized_record> train,
                               std::span<const quantized_record> test, const train_config& cfg,
                               int n_models = 50, unsigned workers = 1);

nlohmann::json to_json(const readout_model& m);
readout_model model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const eval_report& r);
nlohmann::json to_json(const ensemble_report& r);

} // namespace fluidrc
