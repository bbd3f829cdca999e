// fluidrc: command-line front end for the simulator, readout and analyses.
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 divergence.

#include "fluidrc/analysis.hpp"
#include "fluidrc/augmentation.hpp"
#include "fluidrc/errors.hpp"
#include "fluidrc/pipeline.hpp"
#include "fluidrc/record_io.hpp"
#include "fluidrc/reservoir.hpp"
#include "fluidrc/rng.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

using namespace fluidrc;
namespace fs = std::filesystem;

namespace {

struct globals {
    std::string config_path;
    std::uint64_t seed = 42;
    bool seed_set = false;
    std::string out = "fluidrc_out";
    unsigned threads = 1;
};

run_config load_config(const globals& g)
{
    run_config cfg = g.config_path.empty() ? run_config{} : load_run_config(g.config_path);
    if (g.seed_set)
        cfg.seed = g.seed;
    cfg.workers = g.threads;
    cfg.validate();
    return cfg;
}

/// Signals from --in when given, otherwise simulated from the run config.
std::vector<signal_record> signals_for(const globals& g, const std::string& in)
{
    if (!in.empty())
        return read_signal_dir(in);
    return simulate_corpus(load_config(g));
}

std::vector<pattern> corpus_for(const globals& g)
{
    return load_config(g).corpus();
}

/// --out names a file when it has an extension, otherwise a directory.
fs::path output_file(const globals& g, const char* default_name)
{
    const fs::path out(g.out);
    return out.has_extension() ? out : out / default_name;
}

void ensure_parent(const fs::path& p)
{
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
}

template <class Writer>
void write_table(const fs::path& csv, Writer&& writer, const nlohmann::json& meta)
{
    ensure_parent(csv);
    std::ostringstream s;
    writer(s);
    write_text_file(csv, s.str());
    fs::path sidecar = csv;
    sidecar.replace_extension(".json");
    write_text_file(sidecar, meta.dump(2) + "\n");
    std::cout << csv.string() << "\n";
}

nlohmann::json base_meta(const run_config& cfg)
{
    return {{"config_hash", config_hash(cfg)},
            {"seed", cfg.seed},
            {"seeds",
             {{"sensor_noise", derive_seed(cfg.seed, "sensor-noise")},
              {"split", derive_seed(cfg.seed, "split")},
              {"augment", derive_seed(cfg.seed, "augment")},
              {"train", derive_seed(cfg.seed, "train")}}}};
}

/// Quantization settings from a feature file's sidecar, else `fallback`.
quantization_config sidecar_quantization(const fs::path& csv, const quantization_config& fallback)
{
    fs::path sidecar = csv;
    sidecar.replace_extension(".json");
    if (!fs::exists(sidecar))
        return fallback;
    try {
        const auto j = nlohmann::json::parse(read_text_file(sidecar));
        return {j.at("intervals").get<int>(), parse_areas(j.at("areas").get<std::string>())};
    } catch (const nlohmann::json::exception& e) {
        throw data_error(sidecar.string() + ": " + e.what());
    }
}

experiment_config experiment_for(const run_config& cfg, int q, const std::string& areas, int n_models)
{
    auto exp = cfg.experiment();
    if (q > 0)
        exp.quant.intervals = q;
    if (!areas.empty())
        exp.quant.areas = parse_areas(areas);
    if (n_models > 0)
        exp.n_models = n_models;
    exp.quant.validate();
    return exp;
}

int run(int argc, char** argv)
{
    CLI::App app{"Fluidic reservoir computing toolkit"};
    app.require_subcommand(1);
    globals g;
    app.add_option("--config", g.config_path, "Run config JSON")->check(CLI::ExistingFile);
    app.add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { g.seed = s; g.seed_set = true; }, "Master seed");
    app.add_option("--out", g.out, "Output file or directory");
    app.add_option("--threads", g.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::Range(1u, 256u));
    app.fallthrough();

    // patterns
    std::string pat_action = "list";
    std::string pat_label;
    std::string pat_by = "variant";
    std::string pat_shifts = "off";
    auto* patterns_cmd = app.add_subcommand("patterns", "List, show or compare the input-pattern corpus");
    patterns_cmd->add_option("action", pat_action, "list | show | similarity | write")
        ->check(CLI::IsMember({"list", "show", "similarity", "write"}));
    patterns_cmd->add_option("--pattern", pat_label, "Pattern for show, e.g. PN:10");
    patterns_cmd->add_option("--by", pat_by, "class | variant")->check(CLI::IsMember({"class", "variant"}));
    patterns_cmd->add_option("--shifts", pat_shifts, "on | off")->check(CLI::IsMember({"on", "off"}));
    patterns_cmd->callback([&] {
        const auto cfg = load_config(g);
        const auto corpus = cfg.corpus();
        if (pat_action == "list") {
            for (const auto& p : corpus)
                std::cout << to_string(p.label()) << "\n";
        } else if (pat_action == "show") {
            if (pat_label.empty())
                throw config_error("patterns show needs --pattern");
            const auto want = parse_label(pat_label);
            for (const auto& p : corpus)
                if (p.label() == want) {
                    std::ostringstream s;
                    write_corpus(s, {p});
                    std::cout << s.str();
                }
        } else if (pat_action == "similarity") {
            const auto m = similarity_matrix(corpus, parse_group_by(pat_by), pat_shifts == "on");
            auto meta = base_meta(cfg);
            meta["group_by"] = pat_by;
            meta["shifts"] = pat_shifts == "on";
            write_table(output_file(g, "similarity.csv"), [&](std::ostream& s) { write_matrix_csv(s, m); }, meta);
        } else {
            std::ostringstream s;
            write_corpus(s, corpus);
            const auto out = output_file(g, "patterns.txt");
            ensure_parent(out);
            write_text_file(out, s.str());
            std::cout << out.string() << "\n";
        }
    });

    // simulate
    std::string sim_pattern;
    auto* simulate_cmd = app.add_subcommand("simulate", "Simulate the corpus and write signal CSVs");
    simulate_cmd->add_option("--pattern", sim_pattern, "Only this pattern, e.g. PN:10");
    simulate_cmd->callback([&] {
        auto recs = simulate_corpus(load_config(g));
        if (!sim_pattern.empty()) {
            const auto want = parse_label(sim_pattern);
            std::erase_if(recs, [&](const signal_record& r) { return !(r.label == want); });
            if (recs.empty())
                throw data_error("pattern " + sim_pattern + " is not in the corpus");
        }
        write_signal_dir(g.out, recs);
        std::cout << recs.size() << " records written to " << g.out << "\n";
    });

    // quantize
    std::string q_in;
    int q_intervals = 0;
    std::string q_areas;
    auto* quantize_cmd = app.add_subcommand("quantize", "Interval-average signals into features");
    quantize_cmd->add_option("--in", q_in, "Signal directory (default: simulate)");
    quantize_cmd->add_option("--q", q_intervals, "Number of intervals");
    quantize_cmd->add_option("--areas", q_areas, "Detection areas, e.g. 1,3");
    quantize_cmd->callback([&] {
        auto qc = load_config(g).quant;
        if (q_intervals > 0)
            qc.intervals = q_intervals;
        if (!q_areas.empty())
            qc.areas = parse_areas(q_areas);
        qc.validate();
        const auto recs = quantize_all(signals_for(g, q_in), qc);
        const fs::path out = output_file(g, "quantized.csv");
        ensure_parent(out);
        write_quantized_file(out, recs, qc);
        std::cout << out.string() << "\n";
    });

    // wb
    std::string wb_in;
    auto* wb_cmd = app.add_subcommand("wb", "White-balance signal records");
    wb_cmd->add_option("--in", wb_in, "Signal directory (default: simulate)");
    wb_cmd->callback([&] {
        std::vector<signal_record> out;
        int skipped = 0;
        for (const auto& r : signals_for(g, wb_in)) {
            auto res = white_balance(r);
            skipped += res.skipped_frames;
            out.push_back(std::move(res.record));
        }
        write_signal_dir(g.out, out);
        if (skipped > 0)
            std::cerr << "wb: " << skipped << " frames with a zero channel mean left unchanged\n";
        std::cout << out.size() << " records written to " << g.out << "\n";
    });

    // augment
    std::string aug_in;
    double aug_sigma = -1.0;
    int aug_total = 0;
    auto* augment_cmd = app.add_subcommand("augment", "Add Gaussian-shift synthetic training records");
    augment_cmd->add_option("--in", aug_in, "Quantized training CSV")->required();
    augment_cmd->add_option("--sigma", aug_sigma, "Offset standard deviation");
    augment_cmd->add_option("--total", aug_total, "Target training-set size");
    augment_cmd->callback([&] {
        const auto cfg = load_config(g);
        const auto train = read_quantized_file(aug_in);
        const augment_config ac{aug_sigma >= 0.0 ? aug_sigma : cfg.sigma, aug_total > 0 ? aug_total : cfg.target_total,
                                derive_seed(cfg.seed, "augment")};
        const auto all = gaussian_augment(train, ac);
        const fs::path out = output_file(g, "train_augmented.csv");
        ensure_parent(out);
        const auto qc = sidecar_quantization(aug_in, cfg.quant);
        write_quantized_file(out, all, qc, true);
        std::cout << out.string() << "\n";
    });

    // train
    std::string train_in;
    int train_rpp = 0;
    int train_q = 0;
    std::string train_areas;
    double train_sigma = -1.0;
    int train_total = 0;
    int train_models = 0;
    bool train_no_augment = false;
    auto* train_cmd = app.add_subcommand("train", "Split, augment, train an ensemble and evaluate it");
    train_cmd->add_option("--in", train_in, "Signal directory (default: simulate)");
    train_cmd->add_option("--rpp", train_rpp, "Real training records per pattern");
    train_cmd->add_option("--q", train_q, "Number of intervals");
    train_cmd->add_option("--areas", train_areas, "Detection areas, e.g. 1,3");
    train_cmd->add_option("--sigma", train_sigma, "Augmentation offset standard deviation");
    train_cmd->add_option("--total", train_total, "Augmented training-set size");
    train_cmd->add_option("--models", train_models, "Ensemble size");
    train_cmd->add_flag("--no-augment", train_no_augment, "Train on real records only");
    train_cmd->callback([&] {
        auto cfg = load_config(g);
        if (train_rpp > 0)
            cfg.records_per_pattern = train_rpp;
        if (train_q > 0)
            cfg.quant.intervals = train_q;
        if (!train_areas.empty())
            cfg.quant.areas = parse_areas(train_areas);
        if (train_sigma >= 0.0)
            cfg.sigma = train_sigma;
        if (train_total > 0)
            cfg.target_total = train_total;
        if (train_models > 0)
            cfg.n_models = train_models;
        if (train_no_augment)
            cfg.augment = false;
        cfg.validate();
        const auto res = run_experiment(signals_for(g, train_in), cfg.experiment());
        const auto out = output_file(g, "report.json");
        ensure_parent(out);
        auto model = res.ensemble.best_model;
        model.config_hash = config_hash(cfg);
        const auto model_path = out.parent_path() / "model.json";
        write_text_file(model_path, to_json(model).dump(2) + "\n");
        nlohmann::json report{{"config", to_json(cfg)},
                              {"config_hash", config_hash(cfg)},
                              {"train_real", res.raw.train.size()},
                              {"train_total", res.train.size()},
                              {"test", res.test.size()},
                              {"scale", res.scale},
                              {"ensemble", to_json(res.ensemble)}};
        write_text_file(out, report.dump(2) + "\n");
        std::ostringstream test_csv;
        write_quantized_csv(test_csv, res.raw.test, false);
        write_text_file(out.parent_path() / "test.csv", test_csv.str());
        write_text_file(out.parent_path() / "test.json",
                        nlohmann::json{{"intervals", cfg.quant.intervals}, {"areas", format_areas(cfg.quant.areas)}}
                                .dump(2) + "\n");
        std::cout << "mean accuracy " << res.ensemble.mean << "% (std " << res.ensemble.stddev << "); "
                  << out.string() << ", " << model_path.string() << "\n";
    });

    // eval
    std::string eval_model;
    std::string eval_test;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a saved readout on raw test records");
    eval_cmd->add_option("--model", eval_model, "Model JSON")->required();
    eval_cmd->add_option("--test", eval_test, "Quantized test CSV")->required();
    eval_cmd->callback([&] {
        readout_model model;
        try {
            model = model_from_json(nlohmann::json::parse(read_text_file(eval_model)));
        } catch (const nlohmann::json::exception& e) {
            throw data_error(eval_model + ": " + e.what());
        }
        const auto test = read_quantized_file(eval_test);
        require_real(test, "eval");
        const auto rep = evaluate_raw(model, test);
        const auto out = output_file(g, "eval.json");
        ensure_parent(out);
        write_text_file(out, to_json(rep).dump(2) + "\n");
        std::cout << "accuracy " << rep.accuracy << "% (" << rep.correct() << "/" << rep.total() << ")\n";
    });

    // mi
    std::string mi_in;
    int mi_q = 5;
    std::string mi_pattern;
    std::string mi_sampling_name = "slot";
    auto* mi_cmd = app.add_subcommand("mi", "Input/output mutual-information heatmap");
    mi_cmd->add_option("--in", mi_in, "Signal directory (default: simulate)");
    mi_cmd->add_option("--q", mi_q, "Number of intervals");
    mi_cmd->add_option("--pattern", mi_pattern, "Restrict to one pattern class, e.g. PN");
    mi_cmd->add_option("--sampling", mi_sampling_name, "Joint-sample unit")
        ->check(CLI::IsMember({"slot", "interval"}));
    mi_cmd->callback([&] {
        const auto cfg = load_config(g);
        const quantization_config qc{mi_q, {0, 1, 2}};
        qc.validate();
        const auto recs = quantize_all(signals_for(g, mi_in), qc);
        std::optional<pattern_class> filter;
        if (!mi_pattern.empty())
            filter = parse_class(mi_pattern);
        const auto sampling = mi_sampling_name == "interval" ? mi_sampling::interval : mi_sampling::slot;
        const auto hm = mutual_information(cfg.corpus(), recs, mi_q, filter, sampling);
        auto meta = base_meta(cfg);
        meta["q"] = mi_q;
        meta["filter"] = filter ? std::string(to_string(*filter)) : std::string("all");
        meta["sampling"] = mi_sampling_name;
        meta["samples"] = hm.samples;
        meta["source"] = mi_in.empty() ? std::string("simulated") : mi_in;
        const fs::path out = output_file(g, "mi.csv");
        write_table(out, [&](std::ostream& s) { write_heatmap_csv(s, hm); }, meta);
    });

    // mad
    std::string mad_in;
    std::string mad_group = "variant";
    auto* mad_cmd = app.add_subcommand("mad", "Mean absolute difference between signal records");
    mad_cmd->add_option("--in", mad_in, "Signal directory (default: simulate)");
    mad_cmd->add_option("--by,--group-by", mad_group, "class | variant");
    mad_cmd->callback([&] {
        const auto by = parse_group_by(mad_group);
        const auto m = mad_matrix(signals_for(g, mad_in), by);
        auto meta = mad_in.empty() ? base_meta(load_config(g)) : nlohmann::json{{"source", mad_in}};
        meta["group_by"] = mad_group;
        const fs::path out = output_file(g, "mad.csv");
        write_table(out, [&](std::ostream& s) { write_matrix_csv(s, m); }, meta);
    });

    // similarity
    std::string sim_group = "variant";
    bool sim_shifts = false;
    auto* similarity_cmd = app.add_subcommand("similarity", "Cell-agreement similarity between patterns");
    similarity_cmd->add_option("--by,--group-by", sim_group, "class | variant");
    similarity_cmd->add_flag("--shifts", sim_shifts, "Best score over shifts in [-2, 2]");
    similarity_cmd->callback([&] {
        const auto cfg = load_config(g);
        const auto m = similarity_matrix(cfg.corpus(), parse_group_by(sim_group), sim_shifts);
        auto meta = base_meta(cfg);
        meta["group_by"] = sim_group;
        meta["shifts"] = sim_shifts;
        const fs::path out = output_file(g, "similarity.csv");
        write_table(out, [&](std::ostream& s) { write_matrix_csv(s, m); }, meta);
    });

    // sweep
    std::string sweep_in;
    int sweep_models = 0;
    auto* sweep_cmd = app.add_subcommand("sweep", "Accuracy over intervals x records per pattern");
    sweep_cmd->add_option("--in", sweep_in, "Signal directory (default: simulate)");
    sweep_cmd->add_option("--models", sweep_models, "Ensemble size per cell");
    sweep_cmd->callback([&] {
        const auto cfg = load_config(g);
        const auto exp = experiment_for(cfg, 0, "", sweep_models);
        const auto grid = sweep_q_records(signals_for(g, sweep_in), exp);
        auto meta = base_meta(cfg);
        meta["areas"] = format_areas(exp.quant.areas);
        meta["n_models"] = exp.n_models;
        meta["intervals"] = grid.intervals;
        meta["records_per_pattern"] = grid.records_per_pattern;
        const fs::path out = output_file(g, "sweep.csv");
        write_table(out, [&](std::ostream& s) { write_sweep_csv(s, grid); }, meta);
    });

    // areas
    std::string areas_in;
    int areas_q = 0;
    int areas_models = 0;
    auto* areas_cmd = app.add_subcommand("areas", "Accuracy for every subset of detection areas");
    areas_cmd->add_option("--in", areas_in, "Signal directory (default: simulate)");
    areas_cmd->add_option("--q", areas_q, "Number of intervals");
    areas_cmd->add_option("--models", areas_models, "Ensemble size per subset");
    areas_cmd->callback([&] {
        const auto cfg = load_config(g);
        const auto exp = experiment_for(cfg, areas_q, "", areas_models);
        const auto rows = area_study(signals_for(g, areas_in), exp);
        auto meta = base_meta(cfg);
        meta["q"] = exp.quant.intervals;
        meta["n_models"] = exp.n_models;
        meta["generator"] = "gaussian";
        const fs::path out = output_file(g, "areas.csv");
        write_table(out, [&](std::ostream& s) { write_area_csv(s, rows); }, meta);
    });

    // pipeline
    auto* pipeline_cmd = app.add_subcommand("pipeline", "Run the full pipeline and write a report bundle");
    pipeline_cmd->callback([&] {
        const auto summary = run_pipeline(load_config(g), g.out);
        std::cout << "mean accuracy " << summary.mean_accuracy << "%, " << summary.files_written
                  << " files, report " << summary.report.string() << "\n";
    });

    // ingest
    std::string ingest_in;
    auto* ingest_cmd = app.add_subcommand("ingest", "Validate external signal CSVs and quantize them");
    ingest_cmd->add_option("--in", ingest_in, "Directory of signal CSVs with sidecars")->required();
    ingest_cmd->callback([&] {
        const auto recs = read_signal_dir(ingest_in);
        if (recs.empty())
            throw data_error(ingest_in + ": no signal records found");
        const auto cfg = load_config(g);
        const auto q = quantize_all(recs, cfg.quant);
        const fs::path out = fs::path(g.out) / "quantized.csv";
        fs::create_directories(g.out);
        write_quantized_file(out, q, cfg.quant);
        std::cout << recs.size() << " records ingested; features in " << out.string() << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const divergence_error& e) {
        std::cerr << "divergence at epoch " << e.epoch() << ": " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
