#include "fluidrc/readout.hpp"

#include "fluidrc/augmentation.hpp"
#include "fluidrc/errors.hpp"
#include "fluidrc/parallel.hpp"
#include "fluidrc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include <nlohmann/json.hpp>

namespace fluidrc {

namespace {

void check_dims(int n_features, std::span<const quantized_record> data, const char* where)
{
    for (const auto& r : data)
        if (r.features.size() != static_cast<std::size_t>(n_features))
            throw dimension_error(std::string(where) + ": record " + to_string(r.label) + " has " +
                                  std::to_string(r.features.size()) + " features, model expects " +
                                  std::to_string(n_features));
}

} // namespace

readout_model::readout_model(int n_features)
    : n_features_(n_features), weights_(static_cast<std::size_t>(n_features) * n_classes, 0.0)
{
    if (n_features < 1)
        throw config_error("readout needs at least one input feature");
}

class_scores readout_model::logits(std::span<const double> x) const
{
    if (x.size() != static_cast<std::size_t>(n_features_))
        throw dimension_error("readout input has " + std::to_string(x.size()) + " features, expected " +
                              std::to_string(n_features_));
    class_scores z = bias_;
    for (int f = 0; f < n_features_; ++f) {
        const double xf = x[f];
        const double* w = &weights_[static_cast<std::size_t>(f) * n_classes];
        for (int k = 0; k < n_classes; ++k)
            z[k] += xf * w[k];
    }
    return z;
}

class_scores softmax(const class_scores& z)
{
    const double m = *std::max_element(z.begin(), z.end());
    class_scores p{};
    double sum = 0.0;
    for (int k = 0; k < n_classes; ++k) {
        p[k] = std::exp(z[k] - m);
        sum += p[k];
    }
    for (auto& v : p)
        v /= sum;
    return p;
}

class_scores readout_model::probabilities(std::span<const double> x) const
{
    return softmax(logits(x));
}

int readout_model::predict(std::span<const double> x) const
{
    const auto z = logits(x);
    return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

int readout_model::predict_raw(std::span<const double> raw) const
{
    std::vector<double> x(raw.begin(), raw.end());
    for (auto& v : x)
        v /= scale;
    return predict(x);
}

void train_config::validate() const
{
    if (!(learning_rate > 0.0))
        throw config_error("learning rate must be positive");
    if (max_epochs < 1)
        throw config_error("max_epochs must be at least 1");
    if (patience < 1)
        throw config_error("patience must be at least 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0))
        throw config_error("invalid Adam parameters");
}

loss_gradient cross_entropy(const readout_model& model, std::span<const quantized_record> data)
{
    if (data.empty())
        throw data_error("cross_entropy: empty data set");
    check_dims(model.n_features(), data, "cross_entropy");
    const int nf = model.n_features();
    loss_gradient g;
    g.weights.assign(model.weights().size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(data.size());
    for (const auto& r : data) {
        const auto p = model.probabilities(r.features);
        const int y = static_cast<int>(r.label.cls);
        g.loss -= std::log(std::max(p[y], std::numeric_limits<double>::min())) * inv_n;
        class_scores delta = p;
        delta[y] -= 1.0;
        for (int k = 0; k < n_classes; ++k)
            g.bias[k] += delta[k] * inv_n;
        for (int f = 0; f < nf; ++f) {
            const double xf = r.features[f] * inv_n;
            double* gw = &g.weights[static_cast<std::size_t>(f) * n_classes];
            for (int k = 0; k < n_classes; ++k)
                gw[k] += xf * delta[k];
        }
    }
    return g;
}

readout_model train(std::span<const quantized_record> data, const train_config& cfg)
{
    cfg.validate();
    if (data.empty())
        throw data_error("train: empty training set");
    const int nf = static_cast<int>(data.front().features.size());
    check_dims(nf, data, "train");

    readout_model model(nf);
    model.seed = cfg.seed;
    rng_engine gen(cfg.seed);
    std::uniform_real_distribution<double> init(-0.5, 0.5);
    for (auto& w : model.weights())
        w = init(gen);
    for (auto& b : model.bias())
        b = init(gen);

    // Adam moments, weights followed by bias.
    const std::size_t n_params = model.weights().size() + n_classes;
    std::vector<double> m(n_params, 0.0);
    std::vector<double> v(n_params, 0.0);
    double beta1_t = 1.0;
    double beta2_t = 1.0;

    double best = std::numeric_limits<double>::infinity();
    int stale = 0;
    int epoch = 0;
    while (epoch < cfg.max_epochs) {
        const auto g = cross_entropy(model, data);
        if (!std::isfinite(g.loss))
            throw divergence_error("training loss is not finite at epoch " + std::to_string(epoch + 1),
                                   epoch + 1);
        ++epoch;
        if (g.loss < best - cfg.min_delta) {
            best = g.loss;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }

        beta1_t *= cfg.beta1;
        beta2_t *= cfg.beta2;
        const double step = cfg.learning_rate * std::sqrt(1.0 - beta2_t) / (1.0 - beta1_t);
        auto update = [&](std::size_t i, double grad, double& param) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad * grad;
            param -= step * m[i] / (std::sqrt(v[i]) + cfg.epsilon * std::sqrt(1.0 - beta2_t));
        };
        auto& w = model.weights();
        for (std::size_t i = 0; i < w.size(); ++i)
            update(i, g.weights[i], w[i]);
        for (int k = 0; k < n_classes; ++k)
            update(w.size() + k, g.bias[k], model.bias()[k]);
    }
    model.trained_epochs = epoch;
    return model;
}

int eval_report::total() const
{
    int t = 0;
    for (const auto& row : confusion)
        for (int c : row)
            t += c;
    return t;
}

int eval_report::correct() const
{
    int c = 0;
    for (int k = 0; k < n_classes; ++k)
        c += confusion[k][k];
    return c;
}

eval_report evaluate(const readout_model& model, std::span<const quantized_record> test)
{
    if (test.empty())
        throw data_error("evaluate: empty test set");
    check_dims(model.n_features(), test, "evaluate");
    eval_report rep;
    for (const auto& r : test) {
        if (r.synthetic)
            throw data_error("evaluate: synthetic record " + to_string(r.label) + " in test set");
        const int truth = static_cast<int>(r.label.cls);
        const int pred = model.predict(r.features);
        ++rep.confusion[truth][pred];
        if (pred != truth)
            rep.misclassified.push_back({r.label, static_cast<pattern_class>(pred)});
    }
    rep.accuracy = 100.0 * rep.correct() / static_cast<double>(rep.total());
    return rep;
}

eval_report evaluate_raw(const readout_model& model, std::span<const quantized_record> raw_test)
{
    std::vector<quantized_record> scaled(raw_test.begin(), raw_test.end());
    apply_scale(scaled, model.scale);
    return evaluate(model, scaled);
}

data_split split(const std::vector<quantized_record>& records, int records_per_pattern,
                 std::uint64_t seed)
{
    if (records_per_pattern < 1 || records_per_pattern > max_records_per_pattern)
        throw config_error("records per pattern must be in [1, 4], got " +
                           std::to_string(records_per_pattern));
    require_real(records, "split");
    std::map<pattern_label, const quantized_record*> by_label;
    for (const auto& r : records)
        if (!by_label.emplace(r.label, &r).second)
            throw data_error("split: duplicate record " + to_string(r.label));

    data_split out;
    for (auto c : all_classes) {
        std::vector<int> variants;
        for (int v = 1; v <= n_variants; ++v) {
            if (!by_label.count({c, v}))
                throw data_error("split: missing record " + to_string(pattern_label{c, v}));
            variants.push_back(v);
        }
        rng_engine gen(derive_seed(seed, "split", static_cast<std::uint64_t>(c)));
        std::shuffle(variants.begin(), variants.end(), gen);
        std::sort(variants.begin(), variants.begin() + test_variants_per_class);
        for (int i = 0; i < test_variants_per_class; ++i)
            out.test.push_back(*by_label.at({c, variants[i]}));
        for (int i = 0; i < records_per_pattern; ++i)
            out.train.push_back(*by_label.at({c, variants[test_variants_per_class + i]}));
    }
    return out;
}

ensemble_report train_ensemble(std::span<const quantized_record> train_set,
                               std::span<const quantized_record> test, const train_config& cfg,
                               int n_models, unsigned workers)
{
    if (n_models < 1)
        throw config_error("ensemble needs at least one model");
    std::vector<readout_model> models(static_cast<std::size_t>(n_models));
    std::vector<eval_report> evals(models.size());
    parallel_for(models.size(), workers, [&](std::size_t i) {
        train_config c = cfg;
        c.seed = derive_seed(cfg.seed, "ensemble", i);
        models[i] = train(train_set, c);
        evals[i] = evaluate(models[i], test);
    });

    ensemble_report rep;
    double sum = 0.0;
    for (std::size_t i = 0; i < models.size(); ++i) {
        rep.members.push_back({models[i].seed, evals[i].accuracy, models[i].trained_epochs});
        sum += evals[i].accuracy;
        if (evals[i].accuracy > evals[rep.best].accuracy)
            rep.best = i;
    }
    rep.mean = sum / n_models;
    double ss = 0.0;
    rep.min = rep.max = rep.members.front().accuracy;
    for (const auto& m : rep.members) {
        ss += (m.accuracy - rep.mean) * (m.accuracy - rep.mean);
        rep.min = std::min(rep.min, m.accuracy);
        rep.max = std::max(rep.max, m.accuracy);
    }
    rep.stddev = std::sqrt(ss / n_models);
    rep.best_model = std::move(models[rep.best]);
    rep.best_eval = std::move(evals[rep.best]);
    return rep;
}

nlohmann::json to_json(const readout_model& m)
{
    nlohmann::json w = nlohmann::json::array();
    for (int f = 0; f < m.n_features(); ++f) {
        const auto* row = &m.weights()[static_cast<std::size_t>(f) * n_classes];
        w.push_back(std::vector<double>(row, row + n_classes));
    }
    return {{"weights", w},
            {"bias", m.bias()},
            {"scalar", m.scale},
            {"config_hash", m.config_hash},
            {"seed", m.seed},
            {"trained_epochs", m.trained_epochs}};
}

readout_model model_from_json(const nlohmann::json& j)
{
    try {
        const auto& w = j.at("weights");
        readout_model m(static_cast<int>(w.size()));
        for (std::size_t f = 0; f < w.size(); ++f) {
            const auto row = w[f].get<std::vector<double>>();
            if (row.size() != static_cast<std::size_t>(n_classes))
                throw data_error("model weights row " + std::to_string(f) + " must have 8 entries");
            std::copy(row.begin(), row.end(), m.weights().begin() + static_cast<long>(f * n_classes));
        }
        m.bias() = j.at("bias").get<class_scores>();
        m.scale = j.at("scalar").get<double>();
        m.config_hash = j.value("config_hash", "");
        m.seed = j.value("seed", std::uint64_t{0});
        m.trained_epochs = j.value("trained_epochs", 0);
        if (!(m.scale > 0.0))
            throw data_error("model scalar must be positive");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("model file: ") + e.what());
    }
}

nlohmann::json to_json(const eval_report& r)
{
    nlohmann::json mis = nlohmann::json::array();
    for (const auto& m : r.misclassified)
        mis.push_back({{"record", to_string(m.label)}, {"predicted", std::string(to_string(m.predicted))}});
    std::vector<std::string> labels;
    for (auto c : all_classes)
        labels.emplace_back(to_string(c));
    return {{"accuracy", r.accuracy},
            {"classes", labels},
            {"confusion", r.confusion},
            {"misclassified", mis}};
}

nlohmann::json to_json(const ensemble_report& r)
{
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : r.members)
        members.push_back({{"seed", m.seed}, {"accuracy", m.accuracy}, {"epochs", m.epochs}});
    return {{"mean", r.mean},
            {"std", r.stddev},
            {"min", r.min},
            {"max", r.max},
            {"n_models", r.members.size()},
            {"members", members},
            {"best_member", r.best},
            {"best_eval", to_json(r.best_eval)}};
}

} // namespace fluidrc
