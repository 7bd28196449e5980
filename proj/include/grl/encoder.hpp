#pragma once

#include <string>
#include <vector>

#include "grl/matrix.hpp"
#include "grl/sim.hpp"

namespace grl {

constexpr std::size_t kNodeFeatureCount = 8;  // speed, position, lane one-hot x3, intention one-hot x3

struct EncoderConfig {
    std::size_t slots = 40;
    double sensing_range = 30.0;
    double v_max_hv = 60.0 / 3.6;
    double v_max_av = 75.0 / 3.6;
    double highway_length = 500.0;

    static EncoderConfig from_scenario(const ScenarioConfig& s, std::size_t slots_override = 0);
    double v_max(VehicleKind k) const { return k == VehicleKind::Hv ? v_max_hv : v_max_av; }
    void validate() const;
};

constexpr int kEmptySlot = -1;

struct GraphObservation {
    Matrix nodes;               // slots x 8
    Matrix adjacency;           // slots x slots, {0,1}
    std::vector<double> filter; // slots, {0,1}; 1 iff slot holds an active AV
    std::vector<int> slot_map;  // slot -> vehicle id, kEmptySlot when unoccupied
};

std::vector<double> node_row(const Vehicle& veh, const EncoderConfig& cfg);
Matrix adjacency(const SimState& state, const EncoderConfig& cfg);
std::vector<double> rl_filter(const SimState& state, const EncoderConfig& cfg);
GraphObservation encode(const SimState& state, const EncoderConfig& cfg);

// Debug dump: "slots,f" header then row-major N, A, F.
std::string dump_observation(const GraphObservation& obs);

}  // namespace grl
