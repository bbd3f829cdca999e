#include "fluidrc/pipeline.hpp"

#include "fluidrc/errors.hpp"
#include "fluidrc/record_io.hpp"
#include "fluidrc/rng.hpp"

#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fluidrc {

namespace {

template <class Fn>
auto stage(const char* name, Fn&& fn)
{
    const std::string prefix = std::string("stage '") + name + "': ";
    try {
        return fn();
    } catch (const divergence_error& e) {
        throw divergence_error(prefix + e.what(), e.epoch());
    } catch (const dimension_error& e) {
        throw dimension_error(prefix + e.what());
    } catch (const data_error& e) {
        throw data_error(prefix + e.what());
    } catch (const config_error& e) {
        throw config_error(prefix + e.what());
    }
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

void run_config::validate() const
{
    topology.validate();
    optics.validate();
    quant.validate();
    if (!(sensor_sigma >= 0.0))
        throw config_error("sensor noise sigma must be non-negative");
    if (records_per_pattern < 1 || records_per_pattern > max_records_per_pattern)
        throw config_error("records_per_pattern must be in [1, 4]");
    if (!(sigma >= 0.0))
        throw config_error("augmentation sigma must be non-negative");
    if (augment && target_total < records_per_pattern * n_classes)
        throw config_error("augmentation target_total is below the number of real training records");
    if (n_models < 1)
        throw config_error("n_models must be at least 1");
    training.validate();
    if (!patterns_path.empty() && !std::filesystem::exists(patterns_path))
        throw config_error("pattern fixtures '" + patterns_path + "' do not exist");
}

experiment_config run_config::experiment() const
{
    experiment_config e;
    e.quant = quant;
    e.records_per_pattern = records_per_pattern;
    e.augment = augment;
    e.sigma = sigma;
    e.target_total = target_total;
    e.n_models = n_models;
    e.training = training;
    e.seed = seed;
    e.workers = workers;
    return e;
}

std::vector<pattern> run_config::corpus() const
{
    return patterns_path.empty() ? canonical_corpus() : load_corpus(patterns_path);
}

nlohmann::json to_json(const run_config& cfg)
{
    return {
        {"seed", cfg.seed},
        {"patterns", cfg.patterns_path},
        {"simulation",
         {{"sensor_noise", cfg.sensor_sigma},
          {"topology", to_json(cfg.topology)},
          {"optics", to_json(cfg.optics)}}},
        {"quantization", {{"intervals", cfg.quant.intervals}, {"areas", format_areas(cfg.quant.areas)}}},
        {"split", {{"records_per_pattern", cfg.records_per_pattern}}},
        {"augmentation", {{"enabled", cfg.augment}, {"sigma", cfg.sigma}, {"target_total", cfg.target_total}}},
        {"readout",
         {{"learning_rate", cfg.training.learning_rate},
          {"max_epochs", cfg.training.max_epochs},
          {"patience", cfg.training.patience},
          {"min_delta", cfg.training.min_delta},
          {"beta1", cfg.training.beta1},
          {"beta2", cfg.training.beta2},
          {"epsilon", cfg.training.epsilon},
          {"init", "uniform[-0.5,0.5]"},
          {"early_stopping", "training-loss plateau"},
          {"n_models", cfg.n_models}}},
    };
}

run_config run_config_from_json(const nlohmann::json& j)
{
    run_config c;
    try {
        c.seed = j.value("seed", c.seed);
        c.workers = j.value("workers", c.workers);
        c.patterns_path = j.value("patterns", c.patterns_path);
        if (j.contains("simulation")) {
            const auto& s = j.at("simulation");
            c.sensor_sigma = s.value("sensor_noise", c.sensor_sigma);
            if (s.contains("topology"))
                c.topology = topology_from_json(s.at("topology"));
            if (s.contains("optics"))
                c.optics = optics_from_json(s.at("optics"));
        }
        if (j.contains("quantization")) {
            const auto& q = j.at("quantization");
            c.quant.intervals = q.value("intervals", c.quant.intervals);
            if (q.contains("areas"))
                c.quant.areas = parse_areas(q.at("areas").get<std::string>());
        }
        if (j.contains("split"))
            c.records_per_pattern = j.at("split").value("records_per_pattern", c.records_per_pattern);
        if (j.contains("augmentation")) {
            const auto& a = j.at("augmentation");
            c.augment = a.value("enabled", c.augment);
            c.sigma = a.value("sigma", c.sigma);
            c.target_total = a.value("target_total", c.target_total);
        }
        if (j.contains("readout")) {
            const auto& r = j.at("readout");
            c.training.learning_rate = r.value("learning_rate", c.training.learning_rate);
            c.training.max_epochs = r.value("max_epochs", c.training.max_epochs);
            c.training.patience = r.value("patience", c.training.patience);
            c.training.min_delta = r.value("min_delta", c.training.min_delta);
            c.training.beta1 = r.value("beta1", c.training.beta1);
            c.training.beta2 = r.value("beta2", c.training.beta2);
            c.training.epsilon = r.value("epsilon", c.training.epsilon);
            c.n_models = r.value("n_models", c.n_models);
        }
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("run config: ") + e.what());
    }
    c.validate();
    return c;
}

run_config load_run_config(const std::filesystem::path& path)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw config_error(path.string() + ": " + e.what());
    } catch (const data_error& e) {
        throw config_error(e.what());
    }
    return run_config_from_json(j);
}

std::string config_hash(const run_config& cfg)
{
    return hex64(fnv1a(to_json(cfg).dump()));
}

std::vector<signal_record> simulate_corpus(const run_config& cfg)
{
    const auto corpus = cfg.corpus();
    std::optional<sensor_noise> noise;
    if (cfg.sensor_sigma > 0.0)
        noise = sensor_noise{cfg.sensor_sigma, derive_seed(cfg.seed, "sensor-noise")};
    auto recs = run_corpus(corpus, cfg.topology, cfg.optics, noise, cfg.workers);
    const auto hash = config_hash(cfg);
    for (auto& r : recs)
        r.config_hash = hash;
    return recs;
}

pipeline_summary run_pipeline(const run_config& cfg, const std::filesystem::path& out_dir)
{
    stage("config", [&] {
        cfg.validate();
        return 0;
    });
    const auto hash = config_hash(cfg);
    std::map<std::string, std::string> files;
    auto emit = [&](const std::string& rel, const std::string& content) {
        write_text_file(out_dir / rel, content);
        files[rel] = hex64(fnv1a(content));
    };

    const auto records = stage("simulate", [&] { return simulate_corpus(cfg); });
    stage("write-signals", [&] {
        std::filesystem::create_directories(out_dir / "signals");
        for (const auto& r : records) {
            const auto rel = "signals/" + signal_file_name(r.label).string();
            write_signal_record(out_dir / rel, r);
            files[rel] = hex64(fnv1a(read_text_file(out_dir / rel)));
        }
        return 0;
    });

    const auto quantized = stage("quantize", [&] { return quantize_all(records, cfg.quant); });
    const auto exp = cfg.experiment();
    const auto result = stage("train", [&] { return run_experiment(records, exp); });

    auto csv = [&](const std::vector<quantized_record>& recs, bool flag) {
        std::ostringstream s;
        write_quantized_csv(s, recs, flag);
        return s.str();
    };
    const nlohmann::json qmeta{{"intervals", cfg.quant.intervals}, {"areas", format_areas(cfg.quant.areas)}};
    emit("quantized.csv", csv(quantized, false));
    emit("quantized.json", qmeta.dump(2) + "\n");
    emit("train.csv", csv(result.raw.train, false));
    emit("train.json", qmeta.dump(2) + "\n");
    emit("test.csv", csv(result.raw.test, false));
    emit("test.json", qmeta.dump(2) + "\n");
    emit("train_augmented.csv", csv(result.train, true));
    nlohmann::json ameta = qmeta;
    ameta["normalized_by"] = result.scale;
    emit("train_augmented.json", ameta.dump(2) + "\n");

    auto model = result.ensemble.best_model;
    model.config_hash = hash;
    emit("model.json", to_json(model).dump(2) + "\n");

    nlohmann::json report{
        {"config_hash", hash},
        {"seed", cfg.seed},
        {"quantization", qmeta},
        {"features", cfg.quant.feature_count()},
        {"readout_edges", cfg.quant.feature_count() * n_classes},
        {"scale", result.scale},
        {"train_real", result.raw.train.size()},
        {"train_total", result.train.size()},
        {"test", result.test.size()},
        {"ensemble", to_json(result.ensemble)},
    };
    emit("report.json", report.dump(2) + "\n");
    emit("config.json", to_json(cfg).dump(2) + "\n");

    const std::uint64_t train_seed = derive_seed(cfg.seed, "train");
    nlohmann::json member_seeds = nlohmann::json::array();
    for (const auto& m : result.ensemble.members)
        member_seeds.push_back(m.seed);
    nlohmann::json manifest{
        {"config_hash", hash},
        {"master_seed", cfg.seed},
        {"seeds",
         {{"sensor_noise", derive_seed(cfg.seed, "sensor-noise")},
          {"split", derive_seed(cfg.seed, "split")},
          {"augment", derive_seed(cfg.seed, "augment")},
          {"train", train_seed},
          {"ensemble_members", member_seeds}}},
        {"files", files},
    };
    write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

    return {out_dir / "report.json", out_dir / "manifest.json", result.ensemble.mean, files.size() + 1};
}

} // namespace fluidrc
