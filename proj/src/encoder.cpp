#include "grl/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace grl {

namespace {

// Active vehicles in ascending id order; slot assignment is stable across
// steps so transition pairs keep each vehicle in the same slot.
std::vector<const Vehicle*> active_sorted(const SimState& state) {
    std::vector<const Vehicle*> out;
    for (const Vehicle& v : state.vehicles)
        if (v.active) out.push_back(&v);
    std::sort(out.begin(), out.end(), [](const Vehicle* a, const Vehicle* b) { return a->id < b->id; });
    return out;
}

}  // namespace

EncoderConfig EncoderConfig::from_scenario(const ScenarioConfig& s, std::size_t slots_override) {
    EncoderConfig cfg;
    cfg.slots = slots_override ? slots_override : static_cast<std::size_t>(s.total_vehicles());
    cfg.sensing_range = s.sensing_range;
    cfg.v_max_hv = s.v_max_hv;
    cfg.v_max_av = s.v_max_av;
    cfg.highway_length = s.highway_length;
    return cfg;
}

void EncoderConfig::validate() const {
    if (slots == 0) throw std::invalid_argument("encoder: slots must be > 0");
    if (!(sensing_range > 0.0)) throw std::invalid_argument("encoder: sensing_range must be > 0");
    if (!(v_max_hv > 0.0 && v_max_av > 0.0 && highway_length > 0.0))
        throw std::invalid_argument("encoder: speed/length references must be > 0");
}

std::vector<double> node_row(const Vehicle& veh, const EncoderConfig& cfg) {
    if (!veh.active) throw std::invalid_argument("node_row: vehicle not active");
    std::vector<double> row(kNodeFeatureCount, 0.0);
    row[0] = veh.v / cfg.v_max(veh.kind);
    row[1] = veh.x / cfg.highway_length;
    row[2 + veh.lane] = 1.0;
    row[5 + static_cast<int>(veh.intention)] = 1.0;
    return row;
}

Matrix adjacency(const SimState& state, const EncoderConfig& cfg) {
    auto active = active_sorted(state);
    if (active.size() > cfg.slots) throw std::invalid_argument("adjacency: active vehicles exceed slots");
    Matrix a(cfg.slots, cfg.slots);
    for (std::size_t i = 0; i < active.size(); ++i) {
        a(i, i) = 1.0;
        for (std::size_t j = i + 1; j < active.size(); ++j) {
            const Vehicle& vi = *active[i];
            const Vehicle& vj = *active[j];
            bool share = false;
            if (is_av(vi.kind) && is_av(vj.kind)) {
                share = true;  // AVs share regardless of distance
            } else if (is_av(vi.kind) || is_av(vj.kind)) {
                share = std::abs(vi.x - vj.x) <= cfg.sensing_range;
            }
            if (share) {
                a(i, j) = 1.0;
                a(j, i) = 1.0;
            }
        }
    }
    return a;
}

std::vector<double> rl_filter(const SimState& state, const EncoderConfig& cfg) {
    auto active = active_sorted(state);
    if (active.size() > cfg.slots) throw std::invalid_argument("rl_filter: active vehicles exceed slots");
    std::vector<double> f(cfg.slots, 0.0);
    for (std::size_t i = 0; i < active.size(); ++i)
        if (is_av(active[i]->kind)) f[i] = 1.0;
    return f;
}

GraphObservation encode(const SimState& state, const EncoderConfig& cfg) {
    cfg.validate();
    auto active = active_sorted(state);
    if (active.size() > cfg.slots) throw std::invalid_argument("encode: active vehicles exceed slots");
    GraphObservation obs;
    obs.nodes = Matrix(cfg.slots, kNodeFeatureCount);
    obs.slot_map.assign(cfg.slots, kEmptySlot);
    for (std::size_t i = 0; i < active.size(); ++i) {
        auto row = node_row(*active[i], cfg);
        for (std::size_t j = 0; j < kNodeFeatureCount; ++j) obs.nodes(i, j) = row[j];
        obs.slot_map[i] = active[i]->id;
    }
    obs.adjacency = adjacency(state, cfg);
    obs.filter = rl_filter(state, cfg);
    return obs;
}

std::string dump_observation(const GraphObservation& obs) {
    std::ostringstream os;
    os << obs.nodes.rows() << ',' << obs.nodes.cols() << '\n';
    auto write = [&os](const Matrix& m) {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            for (std::size_t j = 0; j < m.cols(); ++j) {
                if (j) os << ',';
                os << m(i, j);
            }
            os << '\n';
        }
    };
    write(obs.nodes);
    write(obs.adjacency);
    for (std::size_t i = 0; i < obs.filter.size(); ++i) {
        if (i) os << ',';
        os << obs.filter[i];
    }
    os << '\n';
    return os.str();
}

}  // namespace grl
