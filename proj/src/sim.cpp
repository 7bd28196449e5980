#include "grl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace grl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Neighbor {
    const Vehicle* veh = nullptr;
    double gap = kInf;  // bumper-to-bumper
};

Neighbor leader_in_lane(const SimState& state, int lane, double x, double vehicle_length,
                        int skip_id = -1) {
    Neighbor best;
    for (const Vehicle& o : state.vehicles) {
        if (!o.active || o.lane != lane || o.id == skip_id) continue;
        if (o.x <= x) continue;
        double gap = o.x - x - vehicle_length;
        if (gap < best.gap) best = {&o, gap};
    }
    return best;
}

Neighbor follower_in_lane(const SimState& state, int lane, double x, double vehicle_length,
                          int skip_id = -1) {
    Neighbor best;
    for (const Vehicle& o : state.vehicles) {
        if (!o.active || o.lane != lane || o.id == skip_id) continue;
        if (o.x > x) continue;
        double gap = x - o.x - vehicle_length;
        if (gap < best.gap) best = {&o, gap};
    }
    return best;
}

double desired_gap(double v, double dv, const IdmParams& idm) {
    double s = idm.s0 + v * idm.t_headway + v * dv / (2.0 * std::sqrt(idm.a_max * idm.b_comf));
    return std::max(idm.s0, s);
}

// Gap-acceptance test for moving veh into target_lane: the new lead gap must
// cover veh's desired gap and the new lag gap must cover the follower's.
bool lane_change_safe(const SimState& state, const Vehicle& veh, int target_lane,
                      const ScenarioConfig& cfg) {
    Neighbor lead = leader_in_lane(state, target_lane, veh.x, cfg.vehicle_length, veh.id);
    if (lead.veh) {
        double dv = veh.v - lead.veh->v;
        if (lead.gap < desired_gap(veh.v, dv, cfg.idm)) return false;
    }
    Neighbor lag = follower_in_lane(state, target_lane, veh.x, cfg.vehicle_length, veh.id);
    if (lag.veh) {
        double dv = lag.veh->v - veh.v;
        if (lag.gap < desired_gap(lag.veh->v, dv, cfg.idm)) return false;
    }
    return true;
}

void log_event(SimState& state, const Vehicle& veh, SimEventKind ev) {
    state.event_log.push_back({state.clock, veh.id, veh.kind, ev});
}

void insert_vehicle(SimState& state, const ScenarioConfig& cfg, VehicleKind kind, int lane) {
    Vehicle v;
    v.id = state.next_id++;
    v.kind = kind;
    v.lane = lane;
    v.x = 0.0;
    v.v = 0.6 * cfg.v_max(kind);
    v.intention = LateralAction::Straight;
    v.active = true;
    state.vehicles.push_back(v);
    log_event(state, state.vehicles.back(), SimEventKind::Spawn);
}

// Lanes at x=0 whose nearest same-lane vehicle is at least s0 + length away.
std::vector<int> open_entry_lanes(const SimState& state, const ScenarioConfig& cfg) {
    std::vector<int> open;
    for (int lane = 0; lane < cfg.lane_count(); ++lane) {
        double nearest = kInf;
        for (const Vehicle& o : state.vehicles)
            if (o.active && o.lane == lane) nearest = std::min(nearest, o.x);
        if (nearest >= cfg.idm.s0 + cfg.vehicle_length) open.push_back(lane);
    }
    return open;
}

}  // namespace

std::string kind_name(VehicleKind k) {
    switch (k) {
        case VehicleKind::Hv: return "hv";
        case VehicleKind::AvRamp1: return "av_ramp1";
        case VehicleKind::AvRamp2: return "av_ramp2";
    }
    return "?";
}

std::string event_name(SimEventKind k) {
    switch (k) {
        case SimEventKind::Spawn: return "spawn";
        case SimEventKind::LaneChange: return "lane_change";
        case SimEventKind::Collision: return "collision";
        case SimEventKind::ExitOk: return "exit_ok";
        case SimEventKind::ExitMiss: return "exit_miss";
    }
    return "?";
}

double ScenarioConfig::target_ramp_x(VehicleKind k) const {
    if (k == VehicleKind::AvRamp1) return x_ramp1;
    if (k == VehicleKind::AvRamp2) return x_ramp2;
    throw std::invalid_argument("target_ramp_x: HVs have no target ramp");
}

void ScenarioConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw std::invalid_argument(std::string("scenario: ") + name + " must be > 0");
    };
    positive(highway_length, "highway_length");
    positive(x_ramp1, "x_ramp1");
    positive(x_ramp2, "x_ramp2");
    positive(v_max_hv, "v_max_hv");
    positive(v_max_av, "v_max_av");
    positive(inflow_hv, "inflow_hv");
    positive(inflow_av, "inflow_av");
    positive(dt, "dt");
    positive(vehicle_length, "vehicle_length");
    positive(sensing_range, "sensing_range");
    positive(ramp_window, "ramp_window");
    positive(idm.a_max, "idm.a_max");
    positive(idm.b_comf, "idm.b_comf");
    positive(idm.s0, "idm.s0");
    positive(idm.t_headway, "idm.t_headway");
    if (n_hvs < 0 || n_avs < 0 || n_ramp1 < 0 || n_ramp2 < 0)
        throw std::invalid_argument("scenario: vehicle counts must be >= 0");
    if (max_steps <= 0) throw std::invalid_argument("scenario: max_steps must be > 0");
    if (!(x_ramp1 < x_ramp2 && x_ramp2 < highway_length))
        throw std::invalid_argument("scenario: need x_ramp1 < x_ramp2 < highway_length");
    if (n_ramp1 + n_ramp2 != n_avs)
        throw std::invalid_argument("scenario: n_ramp1 + n_ramp2 must equal n_avs");
}

const Vehicle* SimState::find(int id) const {
    for (const Vehicle& v : vehicles)
        if (v.id == id) return &v;
    return nullptr;
}

Vehicle* SimState::find(int id) {
    for (Vehicle& v : vehicles)
        if (v.id == id) return &v;
    return nullptr;
}

int SimState::active_count() const {
    return static_cast<int>(std::count_if(vehicles.begin(), vehicles.end(),
                                          [](const Vehicle& v) { return v.active; }));
}

SimState make_initial_state(const ScenarioConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    SimState s;
    s.pending_hvs = cfg.n_hvs;
    s.pending_ramp1 = cfg.n_ramp1;
    s.pending_ramp2 = cfg.n_ramp2;
    s.rng.seed(seed);
    return s;
}

void spawn_inflows(SimState& state, const ScenarioConfig& cfg) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (state.pending_hvs > 0 && coin(state.rng) < cfg.inflow_hv * cfg.dt) {
        auto open = open_entry_lanes(state, cfg);
        if (!open.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
            insert_vehicle(state, cfg, VehicleKind::Hv, open[pick(state.rng)]);
            state.pending_hvs -= 1;
        }
    }
    int pending_avs = state.pending_ramp1 + state.pending_ramp2;
    if (pending_avs > 0 && coin(state.rng) < cfg.inflow_av * cfg.dt) {
        auto open = open_entry_lanes(state, cfg);
        if (!open.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
            int lane = open[pick(state.rng)];
            // ramp assignment proportional to what is left to spawn
            std::uniform_int_distribution<int> which(0, pending_avs - 1);
            if (which(state.rng) < state.pending_ramp1) {
                insert_vehicle(state, cfg, VehicleKind::AvRamp1, lane);
                state.pending_ramp1 -= 1;
            } else {
                insert_vehicle(state, cfg, VehicleKind::AvRamp2, lane);
                state.pending_ramp2 -= 1;
            }
        }
    }
}

double idm_acceleration(double v, double v_desired, double gap, double dv, const IdmParams& idm) {
    if (v < 0.0) throw std::invalid_argument("idm_acceleration: negative speed");
    if (gap <= 0.0) throw std::logic_error("idm_acceleration: non-positive gap to an uncollided leader");
    double interaction = 0.0;
    if (std::isfinite(gap)) {
        double s_star = desired_gap(v, dv, idm);
        interaction = (s_star / gap) * (s_star / gap);
    }
    double a = idm.a_max * (1.0 - std::pow(v / v_desired, idm.delta) - interaction);
    return std::clamp(a, -idm.b_emergency, idm.a_max);
}

LateralAction hv_lateral_decision(const SimState& state, int veh_id, const ScenarioConfig& cfg) {
    const Vehicle* veh = state.find(veh_id);
    if (!veh || !veh->active || veh->kind != VehicleKind::Hv)
        throw std::invalid_argument("hv_lateral_decision: id is not an active HV");
    Neighbor lead = leader_in_lane(state, veh->lane, veh->x, cfg.vehicle_length, veh->id);
    if (!lead.veh) return LateralAction::Straight;
    double s_star = desired_gap(veh->v, veh->v - lead.veh->v, cfg.idm);
    if (lead.gap >= 2.0 * s_star) return LateralAction::Straight;

    LateralAction best = LateralAction::Straight;
    double best_gap = lead.gap;
    // left first so ties prefer the lower lane index
    for (auto [action, target] : {std::pair{LateralAction::ChangeLeft, veh->lane - 1},
                                  std::pair{LateralAction::ChangeRight, veh->lane + 1}}) {
        if (target < 0 || target >= cfg.lane_count()) continue;
        if (!lane_change_safe(state, *veh, target, cfg)) continue;
        double gap = leader_in_lane(state, target, veh->x, cfg.vehicle_length, veh->id).gap;
        if (gap > best_gap) {
            best_gap = gap;
            best = action;
        }
    }
    return best;
}

namespace {

// Executes one lane-change request; returns true when the move happened.
bool try_lane_change(SimState& state, Vehicle& veh, LateralAction action,
                     const ScenarioConfig& cfg) {
    if (action == LateralAction::Straight) return false;
    int target = veh.lane + (action == LateralAction::ChangeLeft ? -1 : 1);
    if (target < 0 || target >= cfg.lane_count()) return false;
    if (!lane_change_safe(state, veh, target, cfg)) return false;
    veh.lane = target;
    veh.intention = action;
    log_event(state, veh, SimEventKind::LaneChange);
    return true;
}

}  // namespace

int apply_av_actions(SimState& state, const std::map<int, LateralAction>& actions,
                     const ScenarioConfig& cfg) {
    int attempts = 0;
    for (const auto& [id, action] : actions) {
        Vehicle* veh = state.find(id);
        if (!veh || !veh->active || !is_av(veh->kind))
            throw std::invalid_argument("apply_av_actions: id is not an active AV");
        if (action == LateralAction::Straight) continue;
        attempts += 1;
        try_lane_change(state, *veh, action, cfg);
    }
    return attempts;
}

StepOutcome compute_reward(const StepEvents& events, const ScenarioConfig& cfg) {
    const RewardParams& rw = cfg.reward;
    StepOutcome out;
    out.r_intention = rw.exit_bonus * events.exits_correct +
                      rw.approach_bonus * events.avs_in_exit_approach -
                      rw.miss_penalty * events.exits_missed;
    if (!events.active_av_speed_ratio.empty()) {
        double sum = 0.0;
        for (double r : events.active_av_speed_ratio) sum += r;
        out.r_avg_speed = sum / static_cast<double>(events.active_av_speed_ratio.size());
    }
    out.p_lane_change = -rw.lc_magnitude * events.av_lane_change_attempts;
    out.p_collision = -rw.collision_magnitude * events.new_collisions;
    out.reward_total = rw.w1 * out.r_intention + rw.w2 * out.r_avg_speed +
                       rw.w3 * out.p_lane_change + rw.w4 * out.p_collision;
    out.collisions = events.new_collisions;
    out.exits_correct = events.exits_correct;
    out.exits_missed = events.exits_missed;
    return out;
}

StepOutcome step(SimState& state, const std::map<int, LateralAction>& av_actions,
                 const ScenarioConfig& cfg) {
    if (is_terminal(state, cfg)) throw std::logic_error("step: state is terminal");

    StepEvents ev;
    for (Vehicle& v : state.vehicles)
        if (v.active) v.intention = LateralAction::Straight;

    spawn_inflows(state, cfg);

    // HV lateral decisions on the pre-move state, then all moves applied
    std::vector<std::pair<int, LateralAction>> hv_moves;
    for (const Vehicle& v : state.vehicles)
        if (v.active && v.kind == VehicleKind::Hv) {
            LateralAction a = hv_lateral_decision(state, v.id, cfg);
            if (a != LateralAction::Straight) hv_moves.emplace_back(v.id, a);
        }
    for (auto& [id, action] : hv_moves) try_lane_change(state, *state.find(id), action, cfg);
    ev.av_lane_change_attempts = apply_av_actions(state, av_actions, cfg);

    // IDM accelerations against the nearest same-lane leader, then
    // semi-implicit Euler integration with per-kind speed caps
    std::vector<double> accel(state.vehicles.size(), 0.0);
    for (std::size_t i = 0; i < state.vehicles.size(); ++i) {
        const Vehicle& v = state.vehicles[i];
        if (!v.active) continue;
        Neighbor lead = leader_in_lane(state, v.lane, v.x, cfg.vehicle_length, v.id);
        double dv = lead.veh ? v.v - lead.veh->v : 0.0;
        double gap = lead.veh ? std::max(lead.gap, 1e-6) : kInf;
        accel[i] = idm_acceleration(v.v, cfg.v_max(v.kind), gap, dv, cfg.idm);
    }
    for (std::size_t i = 0; i < state.vehicles.size(); ++i) {
        Vehicle& v = state.vehicles[i];
        if (!v.active) continue;
        v.v = std::clamp(v.v + accel[i] * cfg.dt, 0.0, cfg.v_max(v.kind));
        v.x += v.v * cfg.dt;
    }

    // exits
    for (Vehicle& v : state.vehicles) {
        if (!v.active) continue;
        if (is_av(v.kind) && !v.ramp_missed && !v.exited_ok) {
            double ramp_x = cfg.target_ramp_x(v.kind);
            if (v.x >= ramp_x) {
                if (v.lane == cfg.lane_count() - 1) {
                    v.active = false;
                    v.exited_ok = true;
                    ev.exits_correct += 1;
                    log_event(state, v, SimEventKind::ExitOk);
                    continue;
                }
                v.ramp_missed = true;
                ev.exits_missed += 1;
                log_event(state, v, SimEventKind::ExitMiss);
            }
        }
        if (v.x >= cfg.highway_length) {
            v.active = false;
            if (v.kind == VehicleKind::Hv) {
                v.exited_ok = true;
                log_event(state, v, SimEventKind::ExitOk);
            }
            // missed AVs were already logged at their ramp crossing
        }
    }

    // collisions: same-lane bumper overlap freezes both vehicles
    for (std::size_t i = 0; i < state.vehicles.size(); ++i) {
        for (std::size_t j = i + 1; j < state.vehicles.size(); ++j) {
            Vehicle& a = state.vehicles[i];
            Vehicle& b = state.vehicles[j];
            if (!a.active || !b.active || a.lane != b.lane) continue;
            if (std::abs(a.x - b.x) < cfg.vehicle_length) {
                ev.new_collisions += 1;
                for (Vehicle* v : {&a, &b}) {
                    v->collided = true;
                    v->active = false;
                    v->v = 0.0;
                    log_event(state, *v, SimEventKind::Collision);
                }
            }
        }
    }

    for (const Vehicle& v : state.vehicles) {
        if (!v.active || !is_av(v.kind)) continue;
        ev.active_av_speed_ratio.push_back(v.v / cfg.v_max_av);
        if (!v.ramp_missed && v.lane == cfg.lane_count() - 1) {
            double ramp_x = cfg.target_ramp_x(v.kind);
            if (v.x >= ramp_x - cfg.ramp_window && v.x < ramp_x) ev.avs_in_exit_approach += 1;
        }
    }

    state.clock += 1;
    StepOutcome out = compute_reward(ev, cfg);
    out.done = is_terminal(state, cfg);
    return out;
}

std::map<int, LateralAction> baseline_policy(const SimState& state, const ScenarioConfig& cfg) {
    std::map<int, LateralAction> actions;
    for (const Vehicle& v : state.vehicles) {
        if (!v.active || !is_av(v.kind)) continue;
        LateralAction a = LateralAction::Straight;
        double ramp_x = v.ramp_missed ? kInf : cfg.target_ramp_x(v.kind);
        bool in_window = v.x >= ramp_x - cfg.ramp_window && v.x < ramp_x;
        if (in_window) {
            if (v.lane < cfg.lane_count() - 1) a = LateralAction::ChangeRight;
        } else {
            // outside the exit approach AVs behave like the HV surrogate
            Neighbor lead = leader_in_lane(state, v.lane, v.x, cfg.vehicle_length, v.id);
            if (lead.veh) {
                double s_star = desired_gap(v.v, v.v - lead.veh->v, cfg.idm);
                if (lead.gap < 2.0 * s_star) {
                    double best_gap = lead.gap;
                    for (auto [cand, target] : {std::pair{LateralAction::ChangeLeft, v.lane - 1},
                                                std::pair{LateralAction::ChangeRight, v.lane + 1}}) {
                        if (target < 0 || target >= cfg.lane_count()) continue;
                        if (!lane_change_safe(state, v, target, cfg)) continue;
                        double gap = leader_in_lane(state, target, v.x, cfg.vehicle_length, v.id).gap;
                        if (gap > best_gap) {
                            best_gap = gap;
                            a = cand;
                        }
                    }
                }
            }
        }
        actions[v.id] = a;
    }
    return actions;
}

bool is_terminal(const SimState& state, const ScenarioConfig& cfg) {
    if (state.clock >= cfg.max_steps) return true;
    int pending = state.pending_hvs + state.pending_ramp1 + state.pending_ramp2;
    return pending == 0 && state.active_count() == 0;
}

std::string export_event_log(const SimState& state) {
    std::ostringstream os;
    for (const SimEvent& e : state.event_log)
        os << e.step << ',' << e.veh_id << ',' << kind_name(e.kind) << ',' << event_name(e.event)
           << '\n';
    return os.str();
}

}  // namespace grl
