#pragma once

#include "fluidrc/signal.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace fluidrc {

struct augment_config {
    double sigma = 8.0;
    int target_total = 200;
    std::uint64_t seed = 0;
};

/// Produces `count` synthetic records from real training records.
class synthetic_generator {
public:
    virtual ~synthetic_generator() = default;
    virtual std::vector<quantized_record> generate(const std::vector<quantized_record>& train,
                                                   int count, std::uint64_t seed) const = 0;
};

/// Picks sources round-robin per class and shifts every series of the copy
/// by its own N(0, sigma^2) offset. Synthetic record i draws from a stream
/// seeded by (seed, i) only.
class gaussian_generator final : public synthetic_generator {
public:
    explicit gaussian_generator(double sigma);
    std::vector<quantized_record> generate(const std::vector<quantized_record>& train, int count,
                                           std::uint64_t seed) const override;
    double sigma() const noexcept { return sigma_; }

private:
    double sigma_;
};

/// Real records first (unchanged), then target_total - |train| synthetic ones.
std::vector<quantized_record> augment(const std::vector<quantized_record>& train,
                                      const augment_config& cfg, const synthetic_generator& gen);
std::vector<quantized_record> gaussian_augment(const std::vector<quantized_record>& train,
                                               const augment_config& cfg);

/// Throws data_error if any record is synthetic.
void require_real(const std::vector<quantized_record>& records, const char* where);

struct sigma_result {
    double sigma;
    double mean_accuracy;
};

/// Maps (augmented train, test) to a mean test accuracy in percent.
using ensemble_trainer = std::function<double(const std::vector<quantized_record>&,
                                              const std::vector<quantized_record>&)>;

std::vector<sigma_result> sigma_sweep(const std::vector<quantized_record>& train,
                                      const std::vector<quantized_record>& test,
                                      const std::vector<double>& sigmas, const augment_config& base,
                                      const ensemble_trainer& trainer);

} // namespace fluidrc
