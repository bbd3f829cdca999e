#include "fluidrc/reservoir.hpp"

#include "fluidrc/errors.hpp"
#include "fluidrc/parallel.hpp"
#include "fluidrc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

namespace fluidrc {

namespace {

constexpr double route_tolerance = 1e-9;

const char* kind_name(node_kind k)
{
    switch (k) {
    case node_kind::inlet:
        return "inlet";
    case node_kind::mixing:
        return "mixing";
    case node_kind::plug:
        return "plug";
    case node_kind::outlet:
        return "outlet";
    }
    return "mixing";
}

node_kind parse_kind(const std::string& s)
{
    if (s == "inlet")
        return node_kind::inlet;
    if (s == "mixing")
        return node_kind::mixing;
    if (s == "plug")
        return node_kind::plug;
    if (s == "outlet")
        return node_kind::outlet;
    throw config_error("unknown node kind '" + s + "'");
}

double parcel_mass(const std::deque<chip_state::parcel>& q)
{
    double m = 0.0;
    for (const auto& p : q)
        m += p.volume * (p.dye[0] + p.dye[1] + p.dye[2]);
    return m;
}

dye_triple parcel_mean(const std::deque<chip_state::parcel>& q)
{
    dye_triple mass{};
    double vol = 0.0;
    for (const auto& p : q) {
        vol += p.volume;
        for (int d = 0; d < 3; ++d)
            mass[d] += p.volume * p.dye[d];
    }
    if (vol <= 0.0)
        return {};
    for (auto& m : mass)
        m /= vol;
    return mass;
}

/// Removes `volume` from the front of the channel; returns the drained mixture.
dye_triple drain_front(std::deque<chip_state::parcel>& q, double volume)
{
    dye_triple mass{};
    double remaining = volume;
    while (remaining > plug_volume_epsilon && !q.empty()) {
        auto& front = q.front();
        const double take = std::min(front.volume, remaining);
        for (int d = 0; d < 3; ++d)
            mass[d] += take * front.dye[d];
        front.volume -= take;
        remaining -= take;
        if (front.volume <= plug_volume_epsilon)
            q.pop_front();
    }
    const double drained = volume - remaining;
    if (drained <= 0.0)
        return {};
    for (auto& m : mass)
        m /= drained;
    return mass;
}

} // namespace

int chip_topology::node_index(const std::string& name) const
{
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].name == name)
            return static_cast<int>(i);
    throw config_error("unknown node '" + name + "'");
}

double chip_topology::transfer_coefficient(const chip_edge& e, const pump_state& active) const
{
    double f = 0.0;
    for (int k = 0; k < 3; ++k)
        if (active[k])
            f += e.route[k];
    return pump_rate * f / nodes[e.from].volume;
}

std::vector<int> chip_topology::topological_order() const
{
    const auto n = nodes.size();
    std::vector<int> indegree(n, 0);
    for (const auto& e : edges)
        ++indegree[e.to];
    std::vector<int> order;
    order.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0)
            order.push_back(static_cast<int>(i));
    for (std::size_t head = 0; head < order.size(); ++head)
        for (const auto& e : edges)
            if (e.from == order[head] && --indegree[e.to] == 0)
                order.push_back(e.to);
    if (order.size() != n)
        throw config_error("topology contains a cycle");
    return order;
}

double chip_topology::red_arrival_delay() const
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    const auto order = topological_order();
    std::vector<double> inflow(nodes.size(), 0.0);
    for (const auto& e : edges)
        inflow[e.to] += pump_rate * e.route[0];

    std::vector<double> exit_time(nodes.size(), inf);
    std::vector<double> arrival(nodes.size(), inf);
    arrival[inlets[0]] = 0.0;
    for (int n : order) {
        if (arrival[n] == inf)
            continue;
        const auto& node = nodes[n];
        exit_time[n] = arrival[n];
        if (node.kind == node_kind::plug)
            exit_time[n] += inflow[n] > 0.0 ? node.volume / inflow[n] : inf;
        for (const auto& e : edges)
            if (e.from == n && e.route[0] > 0.0)
                arrival[e.to] = std::min(arrival[e.to], exit_time[n]);
    }
    double first = inf;
    for (int d : detection)
        first = std::min(first, arrival[d]);
    return first;
}

void chip_topology::validate() const
{
    const int n = static_cast<int>(nodes.size());
    if (n == 0)
        throw config_error("topology has no nodes");
    if (!(pump_rate > 0.0))
        throw config_error("pump_rate must be positive");
    for (const auto& node : nodes)
        if (!(node.volume > 0.0))
            throw config_error("node '" + node.name + "' must have positive volume");
    for (int k = 0; k < 3; ++k) {
        if (inlets[k] < 0 || inlets[k] >= n || nodes[inlets[k]].kind != node_kind::inlet)
            throw config_error("inlet " + std::to_string(k) + " is not an inlet node");
        if (detection[k] < 0 || detection[k] >= n)
            throw config_error("detection node " + std::to_string(k) + " out of range");
    }
    for (const auto& e : edges) {
        if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n)
            throw config_error("edge endpoint out of range");
        for (double r : e.route)
            if (!(r >= 0.0))
                throw config_error("negative route fraction on edge " + nodes[e.from].name + "->" +
                                   nodes[e.to].name);
        if (nodes[e.to].kind == node_kind::inlet)
            throw config_error("edge into inlet '" + nodes[e.to].name + "'");
    }
    topological_order();

    // Per pump: unit flow leaves its inlet and is conserved through every
    // non-outlet node.
    for (int k = 0; k < 3; ++k) {
        std::vector<double> in(n, 0.0);
        std::vector<double> out(n, 0.0);
        for (const auto& e : edges) {
            out[e.from] += e.route[k];
            in[e.to] += e.route[k];
        }
        for (int i = 0; i < n; ++i) {
            const auto& node = nodes[i];
            if (node.kind == node_kind::outlet) {
                if (out[i] > 0.0)
                    throw config_error("outlet '" + node.name + "' has outgoing flow");
                continue;
            }
            const double expected_in = i == inlets[k] ? 1.0 : in[i];
            if (node.kind == node_kind::inlet && i != inlets[k] && out[i] > 0.0)
                throw config_error("inlet '" + node.name + "' carries another pump's flow");
            if (std::abs(out[i] - expected_in) > route_tolerance)
                throw config_error("flow of pump " + std::to_string(k) + " not conserved at '" +
                                   node.name + "'");
        }
    }

    std::vector<double> coeff_out(n, 0.0);
    for (const auto& e : edges) {
        const double c = transfer_coefficient(e);
        if (c > 1.0)
            throw config_error("transfer coefficient above 1 on edge " + nodes[e.from].name + "->" +
                               nodes[e.to].name);
        coeff_out[e.from] += c;
    }
    for (int i = 0; i < n; ++i)
        if (coeff_out[i] > 1.0 + route_tolerance)
            throw config_error("outgoing transfer coefficients of '" + nodes[i].name + "' exceed 1");
    std::vector<double> inflow(n, 0.0);
    for (const auto& e : edges)
        inflow[e.to] += pump_rate * (e.route[0] + e.route[1] + e.route[2]);
    for (int i = 0; i < n; ++i)
        if (inflow[i] > nodes[i].volume * (1.0 + route_tolerance))
            throw config_error("per-frame inflow exceeds the volume of '" + nodes[i].name + "'");
    for (int i = 0; i < n; ++i)
        if (nodes[i].kind == node_kind::inlet && pump_rate > nodes[i].volume)
            throw config_error("pump rate exceeds volume of inlet '" + nodes[i].name + "'");

    if (red_arrival_delay() < 2.0 * frames_per_slot)
        throw config_error("red dye would reach a detection node within two injection slots");
}

chip_topology default_topology()
{
    chip_topology t;
    auto add = [&](const char* name, node_kind kind, double volume) {
        t.nodes.push_back({name, kind, volume});
        return static_cast<int>(t.nodes.size() - 1);
    };
    const int in_r = add("inlet_R", node_kind::inlet, 100.0);
    const int in_g = add("inlet_G", node_kind::inlet, 100.0);
    const int in_b = add("inlet_B", node_kind::inlet, 100.0);
    const int p4 = add("prop_4", node_kind::mixing, 60.0);
    const int p5 = add("prop_5", node_kind::mixing, 60.0);
    const int p6 = add("prop_6", node_kind::mixing, 60.0);
    // Long channel between area 4 and area 7: holds 660 frames of red flow.
    const int ch47 = add("chan_4_7", node_kind::plug, 660.0);
    const int o7 = add("out_7", node_kind::mixing, 40.0);
    const int o8 = add("out_8", node_kind::mixing, 40.0);
    const int o9 = add("out_9", node_kind::mixing, 40.0);
    const int d1 = add("det_D1", node_kind::mixing, 30.0);
    const int d2 = add("det_D2", node_kind::mixing, 30.0);
    const int d3 = add("det_D3", node_kind::mixing, 30.0);
    const int x10 = add("outlet_10", node_kind::outlet, 50.0);
    const int x11 = add("outlet_11", node_kind::outlet, 50.0);
    const int x12 = add("outlet_12", node_kind::outlet, 50.0);

    auto edge = [&](int from, int to, double r, double g, double b) {
        t.edges.push_back({from, to, {r, g, b}});
    };
    edge(in_r, p4, 1.0, 0.0, 0.0);
    edge(in_g, p6, 0.0, 1.0, 0.0);
    edge(in_b, p5, 0.0, 0.0, 1.0);

    edge(p4, ch47, 1.0, 0.0, 0.0);
    edge(ch47, o7, 1.0, 0.0, 0.0);
    edge(p6, o7, 0.0, 0.25, 0.0);
    edge(p6, o8, 0.0, 0.5, 0.0);
    edge(p6, o9, 0.0, 0.25, 0.0);
    edge(p5, o7, 0.0, 0.0, 0.05);
    edge(p5, o8, 0.0, 0.0, 0.2);
    edge(p5, o9, 0.0, 0.0, 0.75);

    edge(o7, d1, 0.75, 0.25, 0.05);
    edge(o7, o8, 0.25, 0.0, 0.0);
    edge(o8, d2, 0.2, 0.5, 0.2);
    edge(o8, o9, 0.05, 0.0, 0.0);
    edge(o9, d3, 0.05, 0.25, 0.75);

    edge(d1, x10, 0.75, 0.25, 0.05);
    edge(d2, x11, 0.2, 0.5, 0.2);
    edge(d3, x12, 0.05, 0.25, 0.75);

    t.inlets = {in_r, in_g, in_b};
    t.detection = {d1, d2, d3};
    return t;
}

void optics_config::apply_blue_green_crosstalk(double amount)
{
    absorption[2][1] = std::clamp(absorption[2][1] - amount, 0.0, 1.0);
}

double optics_config::reading(const dye_triple& c, int channel) const
{
    double a = 0.0;
    for (int d = 0; d < 3; ++d)
        a += absorption[d][channel] * c[d];
    return baseline - range() * std::clamp(a, 0.0, 1.0);
}

void optics_config::validate() const
{
    if (!(baseline > floor) || !(floor >= 0.0))
        throw config_error("optics: require baseline > floor >= 0");
    if (baseline > 255.0)
        throw config_error("optics: baseline above 255");
    for (const auto& row : absorption)
        for (double a : row)
            if (!(a >= 0.0 && a <= 1.0))
                throw config_error("optics: absorption entries must lie in [0,1]");
}

bool chip_state::same_distribution(const chip_state& o) const
{
    if (dye != o.dye || plug.size() != o.plug.size())
        return false;
    for (std::size_t i = 0; i < plug.size(); ++i) {
        if (plug[i].size() != o.plug[i].size())
            return false;
        for (std::size_t j = 0; j < plug[i].size(); ++j)
            if (plug[i][j].volume != o.plug[i][j].volume || plug[i][j].dye != o.plug[i][j].dye)
                return false;
    }
    return true;
}

chip_simulator::chip_simulator(chip_topology topo) : topo_(std::move(topo))
{
    topo_.validate();
    const auto n = topo_.nodes.size();
    state_.dye.assign(n, dye_triple{});
    state_.plug.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        if (topo_.nodes[i].kind == node_kind::plug)
            state_.plug[i].push_back({topo_.nodes[i].volume, dye_triple{}});
}

void chip_simulator::step(const pump_state& pumps)
{
    ++state_.frame;
    if (!pumps[0] && !pumps[1] && !pumps[2])
        return;

    const auto n = topo_.nodes.size();
    std::vector<double> flow(topo_.edges.size());
    std::vector<double> outflow(n, 0.0);
    for (std::size_t i = 0; i < topo_.edges.size(); ++i) {
        const auto& e = topo_.edges[i];
        double f = 0.0;
        for (int k = 0; k < 3; ++k)
            if (pumps[k])
                f += e.route[k];
        flow[i] = topo_.pump_rate * f;
        outflow[e.from] += flow[i];
    }

    // Fluid leaving each node this frame, sampled before any update.
    std::vector<dye_triple> leaving = state_.dye;
    for (std::size_t i = 0; i < n; ++i)
        if (topo_.nodes[i].kind == node_kind::plug && outflow[i] > 0.0)
            leaving[i] = drain_front(state_.plug[i], outflow[i]);

    std::vector<double> in_volume(n, 0.0);
    std::vector<dye_triple> in_mass(n, dye_triple{});
    for (std::size_t i = 0; i < topo_.edges.size(); ++i) {
        if (flow[i] <= 0.0)
            continue;
        const auto& e = topo_.edges[i];
        in_volume[e.to] += flow[i];
        for (int d = 0; d < 3; ++d)
            in_mass[e.to][d] += flow[i] * leaving[e.from][d];
    }
    for (int k = 0; k < 3; ++k)
        if (pumps[k]) {
            in_volume[topo_.inlets[k]] += topo_.pump_rate;
            in_mass[topo_.inlets[k]][k] += topo_.pump_rate;
            injected_ += topo_.pump_rate;
        }

    for (std::size_t i = 0; i < n; ++i) {
        if (in_volume[i] <= 0.0)
            continue;
        const auto& node = topo_.nodes[i];
        if (node.kind == node_kind::plug) {
            dye_triple mix{};
            for (int d = 0; d < 3; ++d)
                mix[d] = in_mass[i][d] / in_volume[i];
            state_.plug[i].push_back({in_volume[i], mix});
            state_.dye[i] = parcel_mean(state_.plug[i]);
            continue;
        }
        // Inflow displaces the same volume of resident fluid.
        const double keep = 1.0 - in_volume[i] / node.volume;
        for (int d = 0; d < 3; ++d)
            state_.dye[i][d] = keep * state_.dye[i][d] + in_mass[i][d] / node.volume;
    }
}

dye_triple chip_simulator::concentration(int node) const
{
    return state_.dye[node];
}

double chip_simulator::interior_mass() const
{
    double m = 0.0;
    for (std::size_t i = 0; i < topo_.nodes.size(); ++i) {
        const auto& node = topo_.nodes[i];
        if (node.kind == node_kind::outlet)
            continue;
        if (node.kind == node_kind::plug)
            m += parcel_mass(state_.plug[i]);
        else
            m += node.volume * (state_.dye[i][0] + state_.dye[i][1] + state_.dye[i][2]);
    }
    return m;
}

signal_record simulate(const injection_schedule& schedule, const chip_topology& topo,
                       const optics_config& optics)
{
    if (schedule.frames.size() != static_cast<std::size_t>(n_frames))
        throw dimension_error("schedule has " + std::to_string(schedule.frames.size()) +
                              " frames, expected 1800");
    optics.validate();
    chip_simulator sim(topo);
    signal_record rec;
    for (auto& s : rec.series)
        s.resize(n_frames);
    for (int t = 0; t < n_frames; ++t) {
        sim.step(schedule.frames[t]);
        for (int a = 0; a < n_areas; ++a) {
            const auto c = sim.detection_concentration(a);
            for (int ch = 0; ch < n_channels; ++ch)
                rec.series[series_index(a, ch)][t] = optics.reading(c, ch);
        }
    }
    return rec;
}

std::vector<signal_record> run_corpus(const std::vector<pattern>& corpus, const chip_topology& topo,
                                      const optics_config& optics, std::optional<sensor_noise> noise,
                                      unsigned workers)
{
    topo.validate();
    optics.validate();
    if (noise && !(noise->sigma >= 0.0))
        throw config_error("sensor noise sigma must be non-negative");
    std::vector<signal_record> out(corpus.size());
    parallel_for(corpus.size(), workers, [&](std::size_t i) {
        const auto& p = corpus[i];
        auto rec = simulate(encode_schedule(p), topo, optics);
        rec.label = p.label();
        if (noise) {
            const auto key = static_cast<std::uint64_t>(p.label().cls) * 100 +
                             static_cast<std::uint64_t>(p.label().variant);
            rec.seed = derive_seed(noise->seed, "sensor", key);
            rng_engine gen(rec.seed);
            std::normal_distribution<double> offset(0.0, noise->sigma);
            for (auto& s : rec.series) {
                const double o = noise->sigma > 0.0 ? offset(gen) : 0.0;
                for (auto& v : s)
                    v = std::clamp(v + o, optics.floor, optics.baseline);
            }
        }
        out[i] = std::move(rec);
    });
    return out;
}

nlohmann::json to_json(const chip_topology& topo)
{
    nlohmann::json j;
    j["pump_rate"] = topo.pump_rate;
    j["flow_ml_per_min"] = topo.flow_ml_per_min;
    auto& nodes = j["nodes"] = nlohmann::json::array();
    for (const auto& n : topo.nodes)
        nodes.push_back({{"name", n.name}, {"kind", kind_name(n.kind)}, {"volume", n.volume}});
    auto& edges = j["edges"] = nlohmann::json::array();
    for (const auto& e : topo.edges)
        edges.push_back({{"from", topo.nodes[e.from].name},
                         {"to", topo.nodes[e.to].name},
                         {"route", e.route}});
    for (int k = 0; k < 3; ++k) {
        j["inlets"].push_back(topo.nodes[topo.inlets[k]].name);
        j["detection"].push_back(topo.nodes[topo.detection[k]].name);
    }
    return j;
}

chip_topology topology_from_json(const nlohmann::json& j)
{
    try {
        chip_topology t;
        t.pump_rate = j.value("pump_rate", 1.0);
        t.flow_ml_per_min = j.value("flow_ml_per_min", 3.0);
        for (const auto& n : j.at("nodes"))
            t.nodes.push_back({n.at("name").get<std::string>(),
                               parse_kind(n.at("kind").get<std::string>()),
                               n.at("volume").get<double>()});
        for (const auto& e : j.at("edges"))
            t.edges.push_back({t.node_index(e.at("from").get<std::string>()),
                               t.node_index(e.at("to").get<std::string>()),
                               e.at("route").get<std::array<double, 3>>()});
        const auto inlets = j.at("inlets").get<std::vector<std::string>>();
        const auto detection = j.at("detection").get<std::vector<std::string>>();
        if (inlets.size() != 3 || detection.size() != 3)
            throw config_error("topology needs exactly 3 inlets and 3 detection nodes");
        for (int k = 0; k < 3; ++k) {
            t.inlets[k] = t.node_index(inlets[k]);
            t.detection[k] = t.node_index(detection[k]);
        }
        t.validate();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("topology config: ") + e.what());
    }
}

nlohmann::json to_json(const optics_config& optics)
{
    return {{"baseline", optics.baseline},
            {"floor", optics.floor},
            {"absorption", optics.absorption}};
}

optics_config optics_from_json(const nlohmann::json& j)
{
    try {
        optics_config o;
        o.baseline = j.value("baseline", o.baseline);
        o.floor = j.value("floor", o.floor);
        if (j.contains("absorption"))
            o.absorption = j.at("absorption").get<std::array<std::array<double, 3>, 3>>();
        if (j.contains("blue_green_crosstalk"))
            o.apply_blue_green_crosstalk(j.at("blue_green_crosstalk").get<double>());
        o.validate();
        return o;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("optics config: ") + e.what());
    }
}

} // namespace fluidrc
