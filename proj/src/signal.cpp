#include "fluidrc/signal.hpp"

#include "fluidrc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fluidrc {

std::string series_name(int series)
{
    static constexpr char channels[] = {'R', 'G', 'B'};
    return "D" + std::to_string(series / n_channels + 1) + "_" + channels[series % n_channels];
}

void signal_record::validate(std::size_t expected_frames) const
{
    for (int s = 0; s < n_series; ++s) {
        if (series[s].size() != expected_frames)
            throw dimension_error(to_string(label) + ": series " + series_name(s) + " has " +
                                  std::to_string(series[s].size()) + " samples, expected " +
                                  std::to_string(expected_frames));
        for (double v : series[s])
            if (!std::isfinite(v))
                throw data_error(to_string(label) + ": non-finite sample in " + series_name(s));
    }
}

void quantization_config::validate(std::size_t frames) const
{
    if (intervals < 1 || frames % static_cast<std::size_t>(intervals) != 0)
        throw config_error("quantization interval count " + std::to_string(intervals) +
                           " does not divide " + std::to_string(frames) + " frames");
    if (areas.empty())
        throw config_error("at least one detection area is required");
    for (std::size_t i = 0; i < areas.size(); ++i) {
        if (areas[i] < 0 || areas[i] >= n_areas)
            throw config_error("detection area out of range");
        if (i > 0 && areas[i] <= areas[i - 1])
            throw config_error("detection areas must be ascending and unique");
    }
}

std::vector<int> parse_areas(const std::string& s)
{
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.size() == 2 && (item[0] == 'D' || item[0] == 'd'))
            item = item.substr(1);
        if (item != "1" && item != "2" && item != "3")
            throw config_error("bad detection area '" + item + "' (expected 1, 2 or 3)");
        out.push_back(item[0] - '1');
    }
    std::sort(out.begin(), out.end());
    if (out.empty() || std::adjacent_find(out.begin(), out.end()) != out.end())
        throw config_error("detection areas must be a non-empty set: '" + s + "'");
    return out;
}

std::string format_areas(const std::vector<int>& areas)
{
    std::string out;
    for (std::size_t i = 0; i < areas.size(); ++i) {
        if (i)
            out += ',';
        out += std::to_string(areas[i] + 1);
    }
    return out;
}

quantized_record quantize(const signal_record& rec, const quantization_config& cfg)
{
    cfg.validate(rec.frames());
    quantized_record q;
    q.label = rec.label;
    q.intervals = cfg.intervals;
    q.features.reserve(cfg.feature_count());
    const std::size_t width = rec.frames() / cfg.intervals;
    for (int area : cfg.areas)
        for (int ch = 0; ch < n_channels; ++ch) {
            const auto& s = rec.series[series_index(area, ch)];
            for (int j = 0; j < cfg.intervals; ++j) {
                double sum = 0.0;
                for (std::size_t t = j * width; t < (j + 1) * width; ++t)
                    sum += s[t];
                q.features.push_back(sum / static_cast<double>(width));
            }
        }
    return q;
}

std::vector<quantized_record> quantize_all(const std::vector<signal_record>& recs,
                                           const quantization_config& cfg)
{
    std::vector<quantized_record> out;
    out.reserve(recs.size());
    for (const auto& r : recs)
        out.push_back(quantize(r, cfg));
    return out;
}

white_balance_result white_balance(const signal_record& rec)
{
    white_balance_result res{rec, 0};
    auto& out = res.record;
    const std::size_t frames = rec.frames();
    for (std::size_t t = 0; t < frames; ++t) {
        std::array<double, n_channels> channel_mean{};
        for (int ch = 0; ch < n_channels; ++ch) {
            for (int a = 0; a < n_areas; ++a)
                channel_mean[ch] += rec.series[series_index(a, ch)][t];
            channel_mean[ch] /= n_areas;
        }
        if (std::any_of(channel_mean.begin(), channel_mean.end(), [](double m) { return m == 0.0; })) {
            ++res.skipped_frames;
            continue;
        }
        const double gray = (channel_mean[0] + channel_mean[1] + channel_mean[2]) / n_channels;
        for (int ch = 0; ch < n_channels; ++ch) {
            const double gain = gray / channel_mean[ch];
            for (int a = 0; a < n_areas; ++a) {
                auto& v = out.series[series_index(a, ch)][t];
                v = std::clamp(v * gain, 0.0, 255.0);
            }
        }
    }
    return res;
}

double global_scale(const std::vector<quantized_record>& data)
{
    double m = 0.0;
    for (const auto& r : data)
        for (double v : r.features)
            m = std::max(m, std::abs(v));
    return m > 0.0 ? m : 1.0;
}

void apply_scale(std::vector<quantized_record>& data, double scale)
{
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw config_error("normalization scale must be positive and finite");
    for (auto& r : data)
        for (auto& v : r.features)
            v /= scale;
}

std::pair<std::vector<quantized_record>, double> normalize_global(std::vector<quantized_record> data)
{
    if (data.empty())
        throw data_error("normalize_global: empty training set");
    const double scale = global_scale(data);
    apply_scale(data, scale);
    return {std::move(data), scale};
}

double mad(const signal_record& a, const signal_record& b, double range)
{
    if (!(range > 0.0))
        throw config_error("mad: range must be positive");
    double sum = 0.0;
    std::size_t count = 0;
    for (int s = 0; s < n_series; ++s) {
        if (a.series[s].size() != b.series[s].size())
            throw dimension_error("mad: series " + series_name(s) + " length mismatch (" +
                                  std::to_string(a.series[s].size()) + " vs " +
                                  std::to_string(b.series[s].size()) + ")");
        for (std::size_t t = 0; t < a.series[s].size(); ++t)
            sum += std::abs(a.series[s][t] - b.series[s][t]);
        count += a.series[s].size();
    }
    if (count == 0)
        return 0.0;
    return 100.0 * sum / static_cast<double>(count) / range;
}

labeled_matrix mad_matrix(const std::vector<signal_record>& recs, group_by by, double range)
{
    if (recs.empty())
        throw data_error("mad_matrix: no records");
    return pairwise_matrix(
        recs, [](const signal_record& r) { return r.label; },
        [range](const signal_record& a, const signal_record& b) { return mad(a, b, range); }, by);
}

} // namespace fluidrc
