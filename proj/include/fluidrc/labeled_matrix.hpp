#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fluidrc {

/// Aggregation level for pairwise comparison matrices.
enum class group_by { variant, cls };

group_by parse_group_by(const std::string& s);

/// Square matrix with one label per row/column, row-major storage.
struct labeled_matrix {
    std::vector<std::string> labels;
    std::vector<double> values;

    std::size_t size() const noexcept { return labels.size(); }
    double& at(std::size_t i, std::size_t j) { return values[i * labels.size() + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * labels.size() + j]; }

    bool is_symmetric(double tol = 0.0) const;
};

} // namespace fluidrc
