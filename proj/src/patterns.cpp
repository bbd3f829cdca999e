#include "fluidrc/patterns.hpp"

#include "fluidrc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#ifndef FLUIDRC_DATA_DIR
#define FLUIDRC_DATA_DIR "data"
#endif

namespace fluidrc {

namespace {

constexpr std::array<std::string_view, n_classes> class_names{"P1", "P2", "P3", "P4",
                                                              "P5", "PU", "PN", "PL"};

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

group_by parse_group_by(const std::string& s)
{
    if (s == "variant")
        return group_by::variant;
    if (s == "class")
        return group_by::cls;
    throw config_error("unknown grouping '" + s + "' (expected class|variant)");
}

bool labeled_matrix::is_symmetric(double tol) const
{
    const auto n = size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(at(i, j) - at(j, i)) > tol)
                return false;
    return true;
}

std::string_view to_string(pattern_class c) noexcept
{
    return class_names[static_cast<std::size_t>(c)];
}

pattern_class parse_class(std::string_view name)
{
    for (std::size_t i = 0; i < class_names.size(); ++i)
        if (class_names[i] == name)
            return static_cast<pattern_class>(i);
    throw config_error("unknown pattern class '" + std::string(name) + "'");
}

std::string to_string(const pattern_label& l)
{
    return std::string(to_string(l.cls)) + "_V" + std::to_string(l.variant);
}

pattern_label parse_label(std::string_view s)
{
    std::string_view cls;
    std::string_view var;
    if (auto colon = s.find(':'); colon != std::string_view::npos) {
        cls = s.substr(0, colon);
        var = s.substr(colon + 1);
    } else if (auto v = s.find("_V"); v != std::string_view::npos) {
        cls = s.substr(0, v);
        var = s.substr(v + 2);
    } else {
        throw config_error("bad pattern label '" + std::string(s) + "' (expected PN:10 or PN_V10)");
    }
    pattern_label l;
    l.cls = parse_class(cls);
    try {
        std::size_t used = 0;
        l.variant = std::stoi(std::string(var), &used);
        if (used != var.size())
            throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw config_error("bad variant in label '" + std::string(s) + "'");
    }
    if (l.variant < 1 || l.variant > n_variants)
        throw config_error("variant out of range in label '" + std::string(s) + "'");
    return l;
}

pattern::pattern(const pattern_grid& grid, pattern_label label) : grid_(grid), label_(label)
{
    for (const auto& row : grid_)
        for (auto v : row)
            if (v > 1)
                throw data_error("pattern " + to_string(label_) + ": cell value must be 0 or 1");
    if (label_.variant < 1 || label_.variant > n_variants)
        throw data_error("pattern " + to_string(label_) + ": variant id out of range [1,10]");
    if (static_cast<int>(label_.cls) >= n_classes)
        throw data_error("pattern: class out of range");
}

std::filesystem::path default_patterns_path()
{
    if (const char* env = std::getenv("FLUIDRC_PATTERNS"); env && *env)
        return env;
    return std::filesystem::path(FLUIDRC_DATA_DIR) / "patterns.txt";
}

std::vector<pattern> parse_corpus(std::istream& in, const std::string& source)
{
    std::vector<pattern> out;
    std::string line;
    int lineno = 0;
    auto next_line = [&](std::string& dst) {
        while (std::getline(in, line)) {
            ++lineno;
            dst = trim(line);
            if (!dst.empty() && dst[0] != '#')
                return true;
        }
        return false;
    };

    std::string header;
    while (next_line(header)) {
        const int header_line = lineno;
        std::istringstream hs(header);
        std::string cls_name;
        std::string variant_str;
        std::string extra;
        hs >> cls_name >> variant_str;
        const std::string entry = source + ":" + std::to_string(header_line) + ": entry '" + header + "'";
        if (variant_str.empty() || (hs >> extra))
            throw data_error(entry + ": expected '<class> <variant>'");
        pattern_label label;
        try {
            label.cls = parse_class(cls_name);
            label.variant = std::stoi(variant_str);
        } catch (const std::exception&) {
            throw data_error(entry + ": unknown class or bad variant id");
        }
        pattern_grid grid{};
        for (int r = 0; r < n_colors; ++r) {
            std::string row;
            if (!next_line(row))
                throw data_error(entry + ": truncated, expected 3 grid rows");
            if (row.size() != static_cast<std::size_t>(n_slots))
                throw data_error(entry + ": row " + std::to_string(r + 1) + " must have 5 characters");
            for (int c = 0; c < n_slots; ++c) {
                if (row[c] != '0' && row[c] != '1')
                    throw data_error(entry + ": row " + std::to_string(r + 1) + " has non-binary character");
                grid[r][c] = static_cast<std::uint8_t>(row[c] - '0');
            }
        }
        try {
            out.emplace_back(grid, label);
        } catch (const data_error& e) {
            throw data_error(entry + ": " + e.what());
        }
    }
    return out;
}

std::vector<pattern> load_corpus(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw data_error("cannot open pattern fixtures '" + path.string() + "'");
    auto corpus = parse_corpus(in, path.filename().string());

    std::map<pattern_label, int> seen;
    for (const auto& p : corpus)
        if (++seen[p.label()] > 1)
            throw data_error(path.filename().string() + ": duplicate entry " + to_string(p.label()));
    for (auto c : all_classes)
        for (int v = 1; v <= n_variants; ++v)
            if (!seen.count({c, v}))
                throw data_error(path.filename().string() + ": missing entry " +
                                 to_string(pattern_label{c, v}));

    // Canonical order: class, then variant.
    std::sort(corpus.begin(), corpus.end(),
              [](const pattern& a, const pattern& b) { return a.label() < b.label(); });
    return corpus;
}

std::vector<pattern> canonical_corpus()
{
    return load_corpus(default_patterns_path());
}

void write_corpus(std::ostream& out, const std::vector<pattern>& corpus)
{
    bool first = true;
    for (const auto& p : corpus) {
        if (!first)
            out << '\n';
        first = false;
        out << to_string(p.label().cls) << ' ' << p.label().variant << '\n';
        for (const auto& row : p.grid()) {
            for (auto v : row)
                out << static_cast<char>('0' + v);
            out << '\n';
        }
    }
}

injection_schedule encode_schedule(const pattern& p)
{
    injection_schedule s;
    s.frames.assign(n_frames, pump_state{false, false, false});
    for (int slot = 0; slot < n_slots; ++slot)
        for (int f = slot * frames_per_slot; f < (slot + 1) * frames_per_slot; ++f)
            for (int c = 0; c < n_colors; ++c)
                s.frames[f][c] = p.cell(c, slot);
    return s;
}

pattern_grid decode_schedule(const injection_schedule& s)
{
    if (s.frames.size() < static_cast<std::size_t>(idle_start))
        throw dimension_error("schedule shorter than 1500 frames");
    pattern_grid g{};
    for (int slot = 0; slot < n_slots; ++slot)
        for (int c = 0; c < n_colors; ++c) {
            int on = 0;
            for (int f = slot * frames_per_slot; f < (slot + 1) * frames_per_slot; ++f)
                on += s.frames[f][c] ? 1 : 0;
            g[c][slot] = on * 2 > frames_per_slot ? 1 : 0;
        }
    return g;
}

double pattern_similarity(const pattern& a, const pattern& b, bool max_over_shifts)
{
    const int max_shift = max_over_shifts ? 2 : 0;
    double best = 0.0;
    for (int shift = -max_shift; shift <= max_shift; ++shift) {
        int matches = 0;
        int compared = 0;
        for (int col = 0; col < n_slots; ++col) {
            const int src = col - shift;
            if (src < 0 || src >= n_slots)
                continue;
            for (int r = 0; r < n_colors; ++r) {
                matches += a.grid()[r][col] == b.grid()[r][src] ? 1 : 0;
                ++compared;
            }
        }
        best = std::max(best, 100.0 * matches / compared);
    }
    return best;
}

labeled_matrix similarity_matrix(const std::vector<pattern>& corpus, group_by by, bool max_over_shifts)
{
    if (corpus.empty())
        throw data_error("similarity_matrix: empty corpus");
    return pairwise_matrix(
        corpus, [](const pattern& p) { return p.label(); },
        [max_over_shifts](const pattern& a, const pattern& b) {
            return pattern_similarity(a, b, max_over_shifts);
        },
        by);
}

} // namespace fluidrc
