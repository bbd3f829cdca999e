#pragma once

#include "fluidrc/patterns.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace fluidrc {

inline constexpr int n_areas = 3;
inline constexpr int n_channels = 3;
inline constexpr int n_series = n_areas * n_channels;

/// Series index for (area, channel), both zero-based: D1_R = 0 ... D3_B = 8.
constexpr int series_index(int area, int channel) noexcept { return area * n_channels + channel; }

/// "D2_G"
std::string series_name(int series);

/// Nine detection time series of one run, plus provenance.
struct signal_record {
    pattern_label label;
    std::array<std::vector<double>, n_series> series;
    std::uint64_t seed = 0;
    std::string config_hash;

    std::size_t frames() const noexcept { return series[0].size(); }

    /// Throws dimension_error unless all nine series have `expected_frames`
    /// samples, and data_error for non-finite values.
    void validate(std::size_t expected_frames = n_frames) const;

    bool same_signals(const signal_record& other) const { return series == other.series; }
};

} // namespace fluidrc
