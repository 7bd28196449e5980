#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace grl {

enum class VehicleKind { Hv, AvRamp1, AvRamp2 };

enum class LateralAction { ChangeLeft = 0, Straight = 1, ChangeRight = 2 };

inline bool is_av(VehicleKind k) { return k != VehicleKind::Hv; }
std::string kind_name(VehicleKind k);

struct Vehicle {
    int id = -1;
    VehicleKind kind = VehicleKind::Hv;
    int lane = 0;    // 0 = leftmost, 2 = rightmost
    double x = 0.0;  // longitudinal position, m
    double v = 0.0;  // speed, m/s
    LateralAction intention = LateralAction::Straight;
    bool active = false;
    bool exited_ok = false;
    bool collided = false;
    bool ramp_missed = false;  // AV passed its target ramp outside lane 2
};

struct IdmParams {
    double a_max = 1.5;        // m/s^2
    double b_comf = 2.0;       // m/s^2
    double delta = 4.0;
    double s0 = 2.0;           // m
    double t_headway = 1.0;    // s
    double b_emergency = 9.0;  // m/s^2
};

struct RewardParams {
    double w1 = 1.0;  // intention
    double w2 = 1.0;  // average speed
    double w3 = 1.0;  // lane-change penalty
    double w4 = 1.0;  // collision penalty
    double exit_bonus = 10.0;
    double approach_bonus = 0.1;
    double miss_penalty = 5.0;
    double lc_magnitude = 0.1;
    double collision_magnitude = 10.0;
};

struct ScenarioConfig {
    int n_hvs = 20;
    int n_avs = 20;
    int n_ramp1 = 10;
    int n_ramp2 = 10;
    double highway_length = 500.0;  // m
    double x_ramp1 = 200.0;
    double x_ramp2 = 400.0;
    double v_max_hv = 60.0 / 3.6;   // 60 km/h
    double v_max_av = 75.0 / 3.6;   // 75 km/h
    double inflow_hv = 0.3;         // veh/s
    double inflow_av = 0.15;        // veh/s
    double dt = 0.5;                // s
    int max_steps = 600;
    double vehicle_length = 5.0;    // m
    double sensing_range = 30.0;    // m
    double ramp_window = 50.0;      // m
    IdmParams idm;
    RewardParams reward;

    int lane_count() const { return 3; }
    int total_vehicles() const { return n_hvs + n_avs; }
    double v_max(VehicleKind k) const { return k == VehicleKind::Hv ? v_max_hv : v_max_av; }
    double target_ramp_x(VehicleKind k) const;

    // Throws std::invalid_argument naming the offending field.
    void validate() const;
};

enum class SimEventKind { Spawn, LaneChange, Collision, ExitOk, ExitMiss };
std::string event_name(SimEventKind k);

struct SimEvent {
    int step = 0;
    int veh_id = -1;
    VehicleKind kind = VehicleKind::Hv;
    SimEventKind event = SimEventKind::Spawn;
};

struct SimState {
    std::vector<Vehicle> vehicles;  // append-only; index != id in general
    int clock = 0;
    int pending_hvs = 0;
    int pending_ramp1 = 0;
    int pending_ramp2 = 0;
    std::mt19937_64 rng;
    std::vector<SimEvent> event_log;
    int next_id = 0;

    const Vehicle* find(int id) const;
    Vehicle* find(int id);
    int active_count() const;
};

struct StepOutcome {
    double r_intention = 0.0;
    double r_avg_speed = 0.0;
    double p_lane_change = 0.0;
    double p_collision = 0.0;
    double reward_total = 0.0;
    int collisions = 0;
    int exits_correct = 0;
    int exits_missed = 0;
    bool done = false;
};

// Raw counters for one step, fed to compute_reward.
struct StepEvents {
    int exits_correct = 0;
    int exits_missed = 0;
    int av_lane_change_attempts = 0;
    int new_collisions = 0;       // pairs
    int avs_in_exit_approach = 0; // active AVs in lane 2 inside the ramp window
    std::vector<double> active_av_speed_ratio;  // v / v_max_av per active AV
};

SimState make_initial_state(const ScenarioConfig& cfg, std::uint64_t seed);

void spawn_inflows(SimState& state, const ScenarioConfig& cfg);

// gap is bumper-to-bumper distance to the leader; pass +inf when none.
double idm_acceleration(double v, double v_desired, double gap, double dv, const IdmParams& idm);

LateralAction hv_lateral_decision(const SimState& state, int veh_id, const ScenarioConfig& cfg);

// Applies AV lane-change requests in-place; returns the attempt count.
int apply_av_actions(SimState& state, const std::map<int, LateralAction>& actions,
                     const ScenarioConfig& cfg);

StepOutcome compute_reward(const StepEvents& events, const ScenarioConfig& cfg);

StepOutcome step(SimState& state, const std::map<int, LateralAction>& av_actions,
                 const ScenarioConfig& cfg);

std::map<int, LateralAction> baseline_policy(const SimState& state, const ScenarioConfig& cfg);

bool is_terminal(const SimState& state, const ScenarioConfig& cfg);

// Line-delimited event export: step,veh_id,kind,event
std::string export_event_log(const SimState& state);

}  // namespace grl
