#pragma once

#include "fluidrc/labeled_matrix.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fluidrc {

inline constexpr int n_colors = 3;
inline constexpr int n_slots = 5;
inline constexpr int frames_per_slot = 300;
inline constexpr int n_frames = 1800;
inline constexpr int idle_start = n_slots * frames_per_slot;
inline constexpr int frame_rate = 60;
inline constexpr int n_variants = 10;

enum class pattern_class : std::uint8_t { P1, P2, P3, P4, P5, PU, PN, PL };
inline constexpr int n_classes = 8;

inline constexpr std::array<pattern_class, n_classes> all_classes{
    pattern_class::P1, pattern_class::P2, pattern_class::P3, pattern_class::P4,
    pattern_class::P5, pattern_class::PU, pattern_class::PN, pattern_class::PL};

std::string_view to_string(pattern_class c) noexcept;
/// Throws config_error for an unknown name.
pattern_class parse_class(std::string_view name);

/// Identifies one record: pattern class plus variant id in [1, 10].
struct pattern_label {
    pattern_class cls = pattern_class::P1;
    int variant = 1;

    auto operator<=>(const pattern_label&) const = default;
};

/// "PN_V10"
std::string to_string(const pattern_label& l);
/// Accepts "PN:10" or "PN_V10".
pattern_label parse_label(std::string_view s);

/// Rows are red, green, blue; columns are the five injection slots.
using pattern_grid = std::array<std::array<std::uint8_t, n_slots>, n_colors>;

class pattern {
public:
    /// Throws data_error if a cell is not 0/1 or the label is out of range.
    pattern(const pattern_grid& grid, pattern_label label);

    const pattern_grid& grid() const noexcept { return grid_; }
    const pattern_label& label() const noexcept { return label_; }
    bool cell(int color, int slot) const { return grid_[color][slot] != 0; }

    bool operator==(const pattern&) const = default;

private:
    pattern_grid grid_;
    pattern_label label_;
};

/// Pump on/off state per frame, ordered red, green, blue.
using pump_state = std::array<bool, n_colors>;

struct injection_schedule {
    std::vector<pump_state> frames;
    int rate = frame_rate;

    bool any_active(std::size_t frame) const
    {
        const auto& f = frames[frame];
        return f[0] || f[1] || f[2];
    }
};

/// Path of the shipped corpus fixtures; FLUIDRC_PATTERNS overrides it.
std::filesystem::path default_patterns_path();

/// Parses the stanza format. `source` is used in error messages only.
std::vector<pattern> parse_corpus(std::istream& in, const std::string& source);
/// Loads and validates a full 8 x 10 corpus. Throws data_error naming the
/// offending entry on any defect.
std::vector<pattern> load_corpus(const std::filesystem::path& path);
std::vector<pattern> canonical_corpus();

void write_corpus(std::ostream& out, const std::vector<pattern>& corpus);

injection_schedule encode_schedule(const pattern& p);
/// Majority vote per 300-frame block over frames 0..1499.
pattern_grid decode_schedule(const injection_schedule& s);

/// Cell-agreement percentage. With `max_over_shifts`, the best score over
/// horizontal shifts of `b` in [-2, 2], counting only overlapping columns.
double pattern_similarity(const pattern& a, const pattern& b, bool max_over_shifts);

/// Pairwise `metric` over items. Class mode averages every cross pair of
/// the two classes' members, self pairs included.
template <class T, class LabelOf, class Metric>
labeled_matrix pairwise_matrix(const std::vector<T>& items, LabelOf label_of, Metric metric,
                               group_by by)
{
    const std::size_t n = items.size();
    std::vector<double> full(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        full[i * n + i] = metric(items[i], items[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = metric(items[i], items[j]);
            full[i * n + j] = v;
            full[j * n + i] = v;
        }
    }
    labeled_matrix out;
    if (by == group_by::variant) {
        for (const auto& it : items)
            out.labels.push_back(to_string(label_of(it)));
        out.values = std::move(full);
        return out;
    }
    std::vector<pattern_class> present;
    for (auto c : all_classes)
        for (const auto& it : items)
            if (label_of(it).cls == c) {
                present.push_back(c);
                break;
            }
    const std::size_t k = present.size();
    out.labels.reserve(k);
    for (auto c : present)
        out.labels.emplace_back(to_string(c));
    out.values.assign(k * k, 0.0);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) {
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (label_of(items[i]).cls != present[a])
                    continue;
                for (std::size_t j = 0; j < n; ++j)
                    if (label_of(items[j]).cls == present[b]) {
                        sum += full[i * n + j];
                        ++count;
                    }
            }
            out.values[a * k + b] = sum / static_cast<double>(count);
        }
    return out;
}

labeled_matrix similarity_matrix(const std::vector<pattern>& corpus, group_by by,
                                 bool max_over_shifts = false);

} // namespace fluidrc
