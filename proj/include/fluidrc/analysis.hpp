#pragma once

#include "fluidrc/augmentation.hpp"
#include "fluidrc/readout.hpp"
#include "fluidrc/signal.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace fluidrc {

/// Plug-in mutual information (bits) of two discrete label sequences.
double mutual_information_bits(std::span<const int> x, std::span<const int> y);
/// Plug-in entropy (bits).
double entropy_bits(std::span<const int> x);

/// Maps values to bin ids 0..n_bins-1 over [min, max] in equal widths; a
/// constant input maps to bin 0.
std::vector<int> equal_width_bins(std::span<const double> values, int n_bins);

/// What one joint-histogram sample is.
enum class mi_sampling {
    /// (record, injection slot): output taken from the interval holding the
    /// slot's midpoint.
    slot,
    /// (record, interval): input taken from the slot holding the interval's
    /// midpoint.
    interval,
};

struct mi_heatmap {
    /// values[input color][series]
    std::array<std::array<double, n_series>, n_colors> values{};
    int intervals = 1;
    std::optional<pattern_class> filter;
    mi_sampling sampling = mi_sampling::slot;
    std::size_t samples = 0;
    /// Marginal entropies, for bounding checks.
    std::array<double, n_colors> input_entropy{};
    std::array<double, n_series> output_entropy{};
};

/// Input/output MI heatmap. `records` must be quantized over all three
/// areas with `intervals` intervals; each is matched to its pattern by label.
mi_heatmap mutual_information(const std::vector<pattern>& corpus,
                              const std::vector<quantized_record>& records, int intervals,
                              std::optional<pattern_class> filter = std::nullopt,
                              mi_sampling sampling = mi_sampling::slot);

/// Same estimator restricted to the variants of one class.
mi_heatmap mi_per_pattern(const std::vector<pattern>& corpus,
                          const std::vector<quantized_record>& records, pattern_class cls,
                          int intervals);

/// One readout experiment on a simulated corpus: quantize, split, fit the
/// global scale on the real training records, optionally augment, normalize,
/// train an ensemble and evaluate it on the real test records.
struct experiment_config {
    quantization_config quant;
    int records_per_pattern = 4;
    bool augment = true;
    double sigma = 8.0;
    int target_total = 200;
    int n_models = 50;
    train_config training;
    /// Split, augmentation and ensemble seeds all derive from this.
    std::uint64_t seed = 42;
    unsigned workers = 1;
};

struct experiment_result {
    data_split raw;
    /// Normalized training set, synthetic records included.
    std::vector<quantized_record> train;
    std::vector<quantized_record> test;
    double scale = 1.0;
    ensemble_report ensemble;
};

experiment_result run_experiment(const std::vector<signal_record>& records, const experiment_config& cfg);

struct sweep_cell {
    int intervals;
    int records_per_pattern;
    double mean;
    double stddev;
};

struct sweep_grid {
    std::vector<int> intervals{1, 2, 5, 10};
    std::vector<int> records_per_pattern{1, 2, 3, 4};
    /// Row-major over (intervals, records_per_pattern).
    std::vector<sweep_cell> cells;

    const sweep_cell& at(int intervals_value, int rpp) const;
};

/// Every (Q, records_per_pattern) cell of `base` run with identical seeds.
sweep_grid sweep_q_records(const std::vector<signal_record>& records, const experiment_config& base,
                           const std::vector<int>& intervals = {1, 2, 5, 10},
                           const std::vector<int>& rpps = {1, 2, 3, 4});

struct area_row {
    std::vector<int> areas;
    int features;
    double mean;
    double stddev;
    double min;
    double max;
};

/// Ensemble accuracy for all seven non-empty subsets of the three areas.
std::vector<area_row> area_study(const std::vector<signal_record>& records, const experiment_config& base);

} // namespace fluidrc
