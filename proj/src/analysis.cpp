#include "fluidrc/analysis.hpp"

#include "fluidrc/errors.hpp"
#include "fluidrc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace fluidrc {

double entropy_bits(std::span<const int> x)
{
    if (x.empty())
        return 0.0;
    std::map<int, std::size_t> counts;
    for (int v : x)
        ++counts[v];
    const double n = static_cast<double>(x.size());
    double h = 0.0;
    for (const auto& [v, c] : counts) {
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

double mutual_information_bits(std::span<const int> x, std::span<const int> y)
{
    if (x.size() != y.size())
        throw dimension_error("mutual information: sample sequences differ in length");
    if (x.empty())
        throw data_error("mutual information: no samples");
    std::map<int, std::size_t> px;
    std::map<int, std::size_t> py;
    std::map<std::pair<int, int>, std::size_t> pxy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        ++px[x[i]];
        ++py[y[i]];
        ++pxy[{x[i], y[i]}];
    }
    const double n = static_cast<double>(x.size());
    double mi = 0.0;
    for (const auto& [key, c] : pxy) {
        const double joint = static_cast<double>(c);
        const double ratio = joint * n / (static_cast<double>(px[key.first]) * static_cast<double>(py[key.second]));
        mi += joint / n * std::log2(ratio);
    }
    return std::max(mi, 0.0);
}

std::vector<int> equal_width_bins(std::span<const double> values, int n_bins)
{
    if (n_bins < 1)
        throw config_error("bin count must be positive");
    std::vector<int> bins(values.size(), 0);
    if (values.empty())
        return bins;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double width = *hi - *lo;
    if (!(width > 0.0))
        return bins;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const int b = static_cast<int>(std::floor((values[i] - *lo) / width * n_bins));
        bins[i] = std::clamp(b, 0, n_bins - 1);
    }
    return bins;
}

mi_heatmap mutual_information(const std::vector<pattern>& corpus,
                              const std::vector<quantized_record>& records, int intervals,
                              std::optional<pattern_class> filter, mi_sampling sampling)
{
    if (intervals < 1 || n_frames % intervals != 0)
        throw config_error("quantization interval count " + std::to_string(intervals) +
                           " does not divide 1800 frames");
    std::map<pattern_label, const pattern*> by_label;
    for (const auto& p : corpus)
        by_label[p.label()] = &p;

    // Sample list: (pattern, interval index, slot index or -1 for idle).
    struct sample {
        const pattern* pat;
        const quantized_record* rec;
        int interval;
        int slot;
    };
    std::vector<sample> samples;
    std::size_t used_records = 0;
    const int width = n_frames / intervals;
    for (const auto& r : records) {
        if (filter && r.label.cls != *filter)
            continue;
        if (r.intervals != intervals || r.outputs() != n_series)
            throw dimension_error("mutual information needs records quantized over all areas with " +
                                  std::to_string(intervals) + " intervals");
        auto it = by_label.find(r.label);
        if (it == by_label.end())
            throw data_error("no input pattern for record " + to_string(r.label));
        ++used_records;
        if (sampling == mi_sampling::slot) {
            for (int s = 0; s < n_slots; ++s) {
                const int mid = s * frames_per_slot + frames_per_slot / 2;
                samples.push_back({it->second, &r, mid / width, s});
            }
        } else {
            for (int j = 0; j < intervals; ++j) {
                const int mid = j * width + width / 2;
                samples.push_back({it->second, &r, j, mid < idle_start ? mid / frames_per_slot : -1});
            }
        }
    }
    if (used_records < 2)
        throw data_error("mutual information needs at least two records after filtering");

    mi_heatmap hm;
    hm.intervals = intervals;
    hm.filter = filter;
    hm.sampling = sampling;
    hm.samples = samples.size();

    std::array<std::vector<int>, n_colors> inputs;
    for (int c = 0; c < n_colors; ++c) {
        for (const auto& s : samples)
            inputs[c].push_back(s.slot >= 0 && s.pat->cell(c, s.slot) ? 1 : 0);
        hm.input_entropy[c] = entropy_bits(inputs[c]);
    }
    for (int col = 0; col < n_series; ++col) {
        std::vector<double> out;
        out.reserve(samples.size());
        for (const auto& s : samples)
            out.push_back(s.rec->features[static_cast<std::size_t>(col * intervals + s.interval)]);
        const auto bins = equal_width_bins(out, intervals);
        hm.output_entropy[col] = entropy_bits(bins);
        for (int c = 0; c < n_colors; ++c)
            hm.values[c][col] = mutual_information_bits(inputs[c], bins);
    }
    return hm;
}

mi_heatmap mi_per_pattern(const std::vector<pattern>& corpus,
                          const std::vector<quantized_record>& records, pattern_class cls, int intervals)
{
    return mutual_information(corpus, records, intervals, cls);
}

experiment_result run_experiment(const std::vector<signal_record>& records, const experiment_config& cfg)
{
    experiment_result res;
    const auto quantized = quantize_all(records, cfg.quant);
    res.raw = split(quantized, cfg.records_per_pattern, derive_seed(cfg.seed, "split"));
    res.scale = global_scale(res.raw.train);
    if (cfg.augment) {
        augment_config ac{cfg.sigma, cfg.target_total, derive_seed(cfg.seed, "augment")};
        res.train = gaussian_augment(res.raw.train, ac);
    } else {
        res.train = res.raw.train;
    }
    res.test = res.raw.test;
    apply_scale(res.train, res.scale);
    apply_scale(res.test, res.scale);
    train_config tc = cfg.training;
    tc.seed = derive_seed(cfg.seed, "train");
    res.ensemble = train_ensemble(res.train, res.test, tc, cfg.n_models, cfg.workers);
    res.ensemble.best_model.scale = res.scale;
    return res;
}

const sweep_cell& sweep_grid::at(int intervals_value, int rpp) const
{
    for (const auto& c : cells)
        if (c.intervals == intervals_value && c.records_per_pattern == rpp)
            return c;
    throw config_error("sweep grid has no cell Q=" + std::to_string(intervals_value) +
                       " rpp=" + std::to_string(rpp));
}

sweep_grid sweep_q_records(const std::vector<signal_record>& records, const experiment_config& base,
                           const std::vector<int>& intervals, const std::vector<int>& rpps)
{
    sweep_grid grid;
    grid.intervals = intervals;
    grid.records_per_pattern = rpps;
    for (int q : intervals)
        for (int rpp : rpps) {
            experiment_config cfg = base;
            cfg.quant.intervals = q;
            cfg.records_per_pattern = rpp;
            const auto res = run_experiment(records, cfg);
            grid.cells.push_back({q, rpp, res.ensemble.mean, res.ensemble.stddev});
        }
    return grid;
}

std::vector<area_row> area_study(const std::vector<signal_record>& records, const experiment_config& base)
{
    static const std::vector<std::vector<int>> subsets{{0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}, {0, 1, 2}};
    std::vector<area_row> rows;
    for (const auto& areas : subsets) {
        experiment_config cfg = base;
        cfg.quant.areas = areas;
        const auto res = run_experiment(records, cfg);
        rows.push_back({areas, cfg.quant.feature_count(), res.ensemble.mean, res.ensemble.stddev,
                        res.ensemble.min, res.ensemble.max});
    }
    return rows;
}

} // namespace fluidrc
