#pragma once

// Compartment-flow model of the branching microfluidic chip.
//
// Each pump drives a fixed volume per frame along its own route through the
// node graph; an edge carries the sum of the routes of the pumps that are on.
// Mixing nodes are well stirred, plug nodes are first-in first-out channels
// whose volume sets an exact transport delay. With every pump off nothing
// moves, so the dye distribution is frozen.

#include "fluidrc/patterns.hpp"
#include "fluidrc/signal_record.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace fluidrc {

/// Dye concentrations (red, green, blue); the remainder is clear water.
using dye_triple = std::array<double, 3>;

enum class node_kind { inlet, mixing, plug, outlet };

struct chip_node {
    std::string name;
    node_kind kind = node_kind::mixing;
    double volume = 1.0;
};

struct chip_edge {
    int from = 0;
    int to = 0;
    /// Fraction of each pump's flow (red, green, blue) routed along this edge.
    std::array<double, 3> route{};
};

/// Below this, a plug parcel is treated as fully drained.
inline constexpr double plug_volume_epsilon = 1e-12;

class chip_topology {
public:
    std::vector<chip_node> nodes;
    std::vector<chip_edge> edges;
    /// Inlet node per pump, ordered red, green, blue.
    std::array<int, 3> inlets{};
    /// Detection nodes D1, D2, D3.
    std::array<int, 3> detection{};
    /// Volume each active pump pushes per frame.
    double pump_rate = 1.0;
    /// Physical pump setting; informational only.
    double flow_ml_per_min = 3.0;

    int node_index(const std::string& name) const;

    /// Fraction of the source node's volume moved along `e` in one frame
    /// when the pumps in `active` are on.
    double transfer_coefficient(const chip_edge& e, const pump_state& active) const;
    double transfer_coefficient(const chip_edge& e) const
    {
        return transfer_coefficient(e, pump_state{true, true, true});
    }

    /// Frames of red-only pumping before red dye can first reach any
    /// detection node (sum of plug transit times along the fastest route).
    double red_arrival_delay() const;

    /// Throws config_error describing the first violated invariant.
    void validate() const;

    /// Node indices in an order where every edge points forward.
    std::vector<int> topological_order() const;
};

chip_topology default_topology();

struct optics_config {
    double baseline = 120.0;
    double floor = 40.0;
    /// absorption[dye][channel]; zero diagonal so a dye keeps its own channel high.
    std::array<std::array<double, 3>, 3> absorption{{{0, 1, 1}, {1, 0, 1}, {1, 1, 0}}};

    double range() const noexcept { return baseline - floor; }
    /// Lowers how much blue dye darkens the green channel, so blue reads
    /// partly as green.
    void apply_blue_green_crosstalk(double amount);
    double reading(const dye_triple& c, int channel) const;
    void validate() const;
};

/// Latent chip state: one dye triple per node plus plug contents.
struct chip_state {
    struct parcel {
        double volume;
        dye_triple dye;
    };

    std::vector<dye_triple> dye;
    std::vector<std::deque<parcel>> plug;
    long frame = 0;

    /// Equal dye distribution (frame counter ignored).
    bool same_distribution(const chip_state& o) const;
};

/// Frame-by-frame stepper. Starts from a chip filled with clear water.
class chip_simulator {
public:
    explicit chip_simulator(chip_topology topo);

    void step(const pump_state& pumps);
    const chip_state& state() const noexcept { return state_; }
    const chip_topology& topology() const noexcept { return topo_; }

    /// Volume-weighted mean concentration, also for plug nodes.
    dye_triple concentration(int node) const;
    dye_triple detection_concentration(int area) const { return concentration(topo_.detection[area]); }

    /// Pure dye volume that has entered through the inlets so far.
    double injected_mass() const noexcept { return injected_; }
    /// Dye volume currently held in non-outlet nodes.
    double interior_mass() const;

private:
    chip_topology topo_;
    chip_state state_;
    double injected_ = 0.0;
};

/// Nine detection signals for one schedule. Deterministic.
/// Throws dimension_error unless the schedule has 1800 frames.
signal_record simulate(const injection_schedule& schedule, const chip_topology& topo,
                       const optics_config& optics);

struct sensor_noise {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

/// Simulates every pattern (order preserving). Optional noise adds one
/// seeded offset per (record, series) after simulation, clamped to
/// [floor, baseline]; the offset stream depends only on (seed, label).
std::vector<signal_record> run_corpus(const std::vector<pattern>& corpus, const chip_topology& topo,
                                      const optics_config& optics,
                                      std::optional<sensor_noise> noise = std::nullopt,
                                      unsigned workers = 1);

nlohmann::json to_json(const chip_topology& topo);
chip_topology topology_from_json(const nlohmann::json& j);
nlohmann::json to_json(const optics_config& optics);
optics_config optics_from_json(const nlohmann::json& j);

} // namespace fluidrc
