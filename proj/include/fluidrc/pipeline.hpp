#pragma once

#include "fluidrc/analysis.hpp"
#include "fluidrc/reservoir.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace fluidrc {

/// Everything a run depends on. All randomness derives from `seed`:
///   sensor noise  derive_seed(seed, "sensor-noise"), then per label
///   split         derive_seed(seed, "split"), then per class
///   augmentation  derive_seed(seed, "augment"), then per synthetic record
///   readout init  derive_seed(derive_seed(seed, "train"), "ensemble", member)
struct run_config {
    chip_topology topology = default_topology();
    optics_config optics;
    double sensor_sigma = 2.0;
    /// Empty means the shipped corpus.
    std::string patterns_path;

    quantization_config quant{2, {0, 2}};
    int records_per_pattern = 4;
    bool augment = true;
    double sigma = 8.0;
    int target_total = 200;
    int n_models = 50;
    train_config training;

    std::uint64_t seed = 42;
    /// Worker threads; never affects results.
    unsigned workers = 1;

    /// Throws config_error on the first out-of-range field.
    void validate() const;
    experiment_config experiment() const;
    std::vector<pattern> corpus() const;
};

nlohmann::json to_json(const run_config& cfg);
/// Missing keys keep their defaults.
run_config run_config_from_json(const nlohmann::json& j);
run_config load_run_config(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over the canonical JSON of everything that can
/// change a result (worker count excluded).
std::string config_hash(const run_config& cfg);

/// Simulated corpus with sensor noise applied and provenance filled in.
std::vector<signal_record> simulate_corpus(const run_config& cfg);

struct pipeline_summary {
    std::filesystem::path report;
    std::filesystem::path manifest;
    double mean_accuracy;
    std::size_t files_written;
};

/// simulate -> quantize -> split -> augment -> train ensemble -> evaluate.
/// Writes signals/, quantized.csv, train.csv, test.csv, train_augmented.csv,
/// model.json, report.json, config.json and manifest.json under `out_dir`.
/// Errors keep their type and gain the failing stage's name.
pipeline_summary run_pipeline(const run_config& cfg, const std::filesystem::path& out_dir);

} // namespace fluidrc
