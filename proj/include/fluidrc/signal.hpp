#pragma once

#include "fluidrc/labeled_matrix.hpp"
#include "fluidrc/signal_record.hpp"

#include <string>
#include <utility>
#include <vector>

namespace fluidrc {

struct quantization_config {
    /// Number of equal time intervals per series; must divide the frame count.
    int intervals = 2;
    /// Zero-based detection areas in ascending order.
    std::vector<int> areas{0, 1, 2};

    int outputs() const noexcept { return n_channels * static_cast<int>(areas.size()); }
    int feature_count() const noexcept { return intervals * outputs(); }
    void validate(std::size_t frames = n_frames) const;
};

/// "1,3" -> {0, 2}. Throws config_error on bad or duplicate ids.
std::vector<int> parse_areas(const std::string& s);
std::string format_areas(const std::vector<int>& areas);

/// Features ordered (area, channel, interval).
struct quantized_record {
    std::vector<double> features;
    pattern_label label;
    int intervals = 1;
    bool synthetic = false;

    int outputs() const noexcept { return static_cast<int>(features.size()) / intervals; }
};

quantized_record quantize(const signal_record& rec, const quantization_config& cfg);
std::vector<quantized_record> quantize_all(const std::vector<signal_record>& recs,
                                           const quantization_config& cfg);

struct white_balance_result {
    signal_record record;
    /// Frames left untouched because a channel mean was zero.
    int skipped_frames = 0;
};

/// Gray-world balance per frame over the nine concurrent values: each
/// channel is scaled so its mean across areas equals the frame's mean.
white_balance_result white_balance(const signal_record& rec);

/// Largest absolute feature over `data`; 1 when every feature is zero.
double global_scale(const std::vector<quantized_record>& data);
void apply_scale(std::vector<quantized_record>& data, double scale);
/// Fits the scale on `data` and divides every feature by it.
std::pair<std::vector<quantized_record>, double> normalize_global(std::vector<quantized_record> data);

/// Mean absolute sample difference as a percentage of `range`.
double mad(const signal_record& a, const signal_record& b, double range = 80.0);
labeled_matrix mad_matrix(const std::vector<signal_record>& recs, group_by by, double range = 80.0);

} // namespace fluidrc
