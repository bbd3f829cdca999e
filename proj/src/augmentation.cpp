#include "fluidrc/augmentation.hpp"

#include "fluidrc/errors.hpp"
#include "fluidrc/rng.hpp"

#include <array>
#include <random>

namespace fluidrc {

gaussian_generator::gaussian_generator(double sigma) : sigma_(sigma)
{
    if (!(sigma >= 0.0))
        throw config_error("augmentation sigma must be non-negative");
}

std::vector<quantized_record> gaussian_generator::generate(const std::vector<quantized_record>& train,
                                                           int count, std::uint64_t seed) const
{
    std::array<std::vector<const quantized_record*>, n_classes> by_class;
    for (const auto& r : train) {
        if (r.synthetic)
            throw data_error("augmentation source contains a synthetic record");
        by_class[static_cast<std::size_t>(r.label.cls)].push_back(&r);
    }
    for (auto c : all_classes)
        if (by_class[static_cast<std::size_t>(c)].empty())
            throw data_error("class " + std::string(to_string(c)) +
                             " has no training record; cannot balance synthetic data");

    std::vector<quantized_record> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const auto& members = by_class[static_cast<std::size_t>(i % n_classes)];
        const auto& src = *members[static_cast<std::size_t>(i / n_classes) % members.size()];
        quantized_record r = src;
        r.synthetic = true;
        rng_engine gen(derive_seed(seed, "augment", static_cast<std::uint64_t>(i)));
        std::normal_distribution<double> offset(0.0, sigma_);
        const int q = r.intervals;
        for (int s = 0; s < r.outputs(); ++s) {
            const double o = sigma_ > 0.0 ? offset(gen) : 0.0;
            for (int j = 0; j < q; ++j)
                r.features[static_cast<std::size_t>(s * q + j)] += o;
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<quantized_record> augment(const std::vector<quantized_record>& train,
                                      const augment_config& cfg, const synthetic_generator& gen)
{
    if (train.empty())
        throw data_error("augmentation needs at least one training record");
    if (cfg.target_total < static_cast<int>(train.size()))
        throw config_error("target total " + std::to_string(cfg.target_total) +
                           " is below the number of real records (" + std::to_string(train.size()) + ")");
    std::vector<quantized_record> out = train;
    auto synth = gen.generate(train, cfg.target_total - static_cast<int>(train.size()), cfg.seed);
    out.insert(out.end(), std::make_move_iterator(synth.begin()), std::make_move_iterator(synth.end()));
    return out;
}

std::vector<quantized_record> gaussian_augment(const std::vector<quantized_record>& train,
                                               const augment_config& cfg)
{
    return augment(train, cfg, gaussian_generator(cfg.sigma));
}

void require_real(const std::vector<quantized_record>& records, const char* where)
{
    for (const auto& r : records)
        if (r.synthetic)
            throw data_error(std::string(where) + ": synthetic record " + to_string(r.label) +
                             " is not allowed here");
}

std::vector<sigma_result> sigma_sweep(const std::vector<quantized_record>& train,
                                      const std::vector<quantized_record>& test,
                                      const std::vector<double>& sigmas, const augment_config& base,
                                      const ensemble_trainer& trainer)
{
    require_real(test, "sigma_sweep test set");
    std::vector<sigma_result> rows;
    rows.reserve(sigmas.size());
    for (double sigma : sigmas) {
        augment_config cfg = base;
        cfg.sigma = sigma;
        rows.push_back({sigma, trainer(gaussian_augment(train, cfg), test)});
    }
    return rows;
}

} // namespace fluidrc
