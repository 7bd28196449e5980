#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>
#include <vector>

#include "grl/config.hpp"
#include "grl/encoder.hpp"
#include "grl/gradcheck.hpp"
#include "grl/qnet.hpp"
#include "grl/sim.hpp"
#include "grl/trainer.hpp"

namespace py = pybind11;
using namespace grl;

namespace {

// Matrix -> list-of-lists; keeps the python surface free of array deps.
std::vector<std::vector<double>> matrix_rows(const Matrix& m) {
    std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
    return out;
}

}  // namespace

PYBIND11_MODULE(_grltraffic, m) {
    m.doc() = "graph reinforcement learning for cooperative lane changing";

    py::enum_<VehicleKind>(m, "VehicleKind")
        .value("Hv", VehicleKind::Hv)
        .value("AvRamp1", VehicleKind::AvRamp1)
        .value("AvRamp2", VehicleKind::AvRamp2);

    py::enum_<LateralAction>(m, "LateralAction")
        .value("ChangeLeft", LateralAction::ChangeLeft)
        .value("Straight", LateralAction::Straight)
        .value("ChangeRight", LateralAction::ChangeRight);

    py::enum_<AlgoVariant>(m, "AlgoVariant")
        .value("Dqn", AlgoVariant::Dqn)
        .value("DoubleDqn", AlgoVariant::DoubleDqn)
        .value("DuelingDqn", AlgoVariant::DuelingDqn)
        .value("D3qn", AlgoVariant::D3qn);
    m.def("variant_name", &variant_name);
    m.def("variant_from_name", &variant_from_name);

    py::class_<IdmParams>(m, "IdmParams")
        .def(py::init<>())
        .def_readwrite("a_max", &IdmParams::a_max)
        .def_readwrite("b_comf", &IdmParams::b_comf)
        .def_readwrite("delta", &IdmParams::delta)
        .def_readwrite("s0", &IdmParams::s0)
        .def_readwrite("t_headway", &IdmParams::t_headway)
        .def_readwrite("b_emergency", &IdmParams::b_emergency);

    py::class_<RewardParams>(m, "RewardParams")
        .def(py::init<>())
        .def_readwrite("w1", &RewardParams::w1)
        .def_readwrite("w2", &RewardParams::w2)
        .def_readwrite("w3", &RewardParams::w3)
        .def_readwrite("w4", &RewardParams::w4)
        .def_readwrite("exit_bonus", &RewardParams::exit_bonus)
        .def_readwrite("approach_bonus", &RewardParams::approach_bonus)
        .def_readwrite("miss_penalty", &RewardParams::miss_penalty)
        .def_readwrite("lc_magnitude", &RewardParams::lc_magnitude)
        .def_readwrite("collision_magnitude", &RewardParams::collision_magnitude);

    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_readwrite("n_hvs", &ScenarioConfig::n_hvs)
        .def_readwrite("n_avs", &ScenarioConfig::n_avs)
        .def_readwrite("n_ramp1", &ScenarioConfig::n_ramp1)
        .def_readwrite("n_ramp2", &ScenarioConfig::n_ramp2)
        .def_readwrite("highway_length", &ScenarioConfig::highway_length)
        .def_readwrite("x_ramp1", &ScenarioConfig::x_ramp1)
        .def_readwrite("x_ramp2", &ScenarioConfig::x_ramp2)
        .def_readwrite("v_max_hv", &ScenarioConfig::v_max_hv)
        .def_readwrite("v_max_av", &ScenarioConfig::v_max_av)
        .def_readwrite("inflow_hv", &ScenarioConfig::inflow_hv)
        .def_readwrite("inflow_av", &ScenarioConfig::inflow_av)
        .def_readwrite("dt", &ScenarioConfig::dt)
        .def_readwrite("max_steps", &ScenarioConfig::max_steps)
        .def_readwrite("vehicle_length", &ScenarioConfig::vehicle_length)
        .def_readwrite("sensing_range", &ScenarioConfig::sensing_range)
        .def_readwrite("ramp_window", &ScenarioConfig::ramp_window)
        .def_readwrite("idm", &ScenarioConfig::idm)
        .def_readwrite("reward", &ScenarioConfig::reward)
        .def("total_vehicles", &ScenarioConfig::total_vehicles)
        .def("validate", &ScenarioConfig::validate);

    py::class_<Vehicle>(m, "Vehicle")
        .def_readonly("id", &Vehicle::id)
        .def_readonly("kind", &Vehicle::kind)
        .def_readonly("lane", &Vehicle::lane)
        .def_readonly("x", &Vehicle::x)
        .def_readonly("v", &Vehicle::v)
        .def_readonly("intention", &Vehicle::intention)
        .def_readonly("active", &Vehicle::active)
        .def_readonly("exited_ok", &Vehicle::exited_ok)
        .def_readonly("collided", &Vehicle::collided);

    py::class_<SimState>(m, "SimState")
        .def_readonly("clock", &SimState::clock)
        .def_readonly("vehicles", &SimState::vehicles)
        .def("active_count", &SimState::active_count);

    py::class_<StepOutcome>(m, "StepOutcome")
        .def_readonly("r_intention", &StepOutcome::r_intention)
        .def_readonly("r_avg_speed", &StepOutcome::r_avg_speed)
        .def_readonly("p_lane_change", &StepOutcome::p_lane_change)
        .def_readonly("p_collision", &StepOutcome::p_collision)
        .def_readonly("reward_total", &StepOutcome::reward_total)
        .def_readonly("collisions", &StepOutcome::collisions)
        .def_readonly("exits_correct", &StepOutcome::exits_correct)
        .def_readonly("exits_missed", &StepOutcome::exits_missed)
        .def_readonly("done", &StepOutcome::done);

    m.def("make_initial_state", &make_initial_state, py::arg("scenario"), py::arg("seed"));
    m.def("step", &step, py::arg("state"), py::arg("av_actions"), py::arg("scenario"));
    m.def("baseline_policy", &baseline_policy, py::arg("state"), py::arg("scenario"));
    m.def("is_terminal", &is_terminal, py::arg("state"), py::arg("scenario"));

    py::class_<EncoderConfig>(m, "EncoderConfig")
        .def(py::init<>())
        .def_static("from_scenario", &EncoderConfig::from_scenario, py::arg("scenario"),
                    py::arg("slots_override") = 0)
        .def_readwrite("slots", &EncoderConfig::slots)
        .def_readwrite("sensing_range", &EncoderConfig::sensing_range)
        .def("validate", &EncoderConfig::validate);

    py::class_<GraphObservation>(m, "GraphObservation")
        .def_property_readonly("nodes",
                               [](const GraphObservation& o) { return matrix_rows(o.nodes); })
        .def_property_readonly(
            "adjacency", [](const GraphObservation& o) { return matrix_rows(o.adjacency); })
        .def_readonly("filter", &GraphObservation::filter)
        .def_readonly("slot_map", &GraphObservation::slot_map);

    m.def("encode", &encode, py::arg("state"), py::arg("encoder"));

    py::class_<QNetwork>(m, "QNetwork")
        .def_property_readonly("variant", [](const QNetwork& n) { return n.variant; });

    m.def(
        "make_qnetwork",
        [](AlgoVariant variant, std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            return make_qnetwork(variant, rng);
        },
        py::arg("variant"), py::arg("seed"));
    m.def(
        "q_values",
        [](const QNetwork& net, const GraphObservation& obs) {
            return matrix_rows(q_forward(net, obs));
        },
        py::arg("net"), py::arg("obs"));
    m.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("net"));
    m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("episodes", &TrainConfig::episodes)
        .def_readwrite("random_phase_steps", &TrainConfig::random_phase_steps)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("replay_capacity", &TrainConfig::replay_capacity)
        .def_readwrite("gamma", &TrainConfig::gamma)
        .def_readwrite("lr", &TrainConfig::lr)
        .def_readwrite("online_update_every", &TrainConfig::online_update_every)
        .def_readwrite("target_update_every", &TrainConfig::target_update_every)
        .def_readwrite("soft_tau", &TrainConfig::soft_tau)
        .def_readwrite("epsilon", &TrainConfig::epsilon)
        .def_readwrite("epsilon_linear_decay", &TrainConfig::epsilon_linear_decay)
        .def_readwrite("epsilon_start", &TrainConfig::epsilon_start)
        .def_readwrite("epsilon_decay_steps", &TrainConfig::epsilon_decay_steps)
        .def_readwrite("seeds", &TrainConfig::seeds)
        .def_readwrite("variant", &TrainConfig::variant)
        .def_readwrite("best_eval_every", &TrainConfig::best_eval_every)
        .def_readwrite("best_eval_episodes", &TrainConfig::best_eval_episodes)
        .def("validate", &TrainConfig::validate);

    py::class_<EpisodeMetrics>(m, "EpisodeMetrics")
        .def_readonly("episode", &EpisodeMetrics::episode)
        .def_readonly("steps", &EpisodeMetrics::steps)
        .def_readonly("total_reward", &EpisodeMetrics::total_reward)
        .def_readonly("mean_loss", &EpisodeMetrics::mean_loss)
        .def_readonly("mean_q", &EpisodeMetrics::mean_q)
        .def_readonly("epsilon_used", &EpisodeMetrics::epsilon_used)
        .def_readonly("collisions", &EpisodeMetrics::collisions)
        .def_readonly("exits_correct", &EpisodeMetrics::exits_correct)
        .def_readonly("exits_missed", &EpisodeMetrics::exits_missed)
        .def_readonly("wall_time_s", &EpisodeMetrics::wall_time_s);

    py::class_<SeedRunResult>(m, "SeedRunResult")
        .def_readonly("seed", &SeedRunResult::seed)
        .def_readonly("episodes", &SeedRunResult::episodes)
        .def_readonly("final_net", &SeedRunResult::final_net)
        .def_readonly("best_net", &SeedRunResult::best_net)
        .def_readonly("best_eval_mean", &SeedRunResult::best_eval_mean)
        .def_readonly("decision_steps", &SeedRunResult::decision_steps)
        .def_readonly("stored_transitions", &SeedRunResult::stored_transitions)
        .def_readonly("gradient_updates", &SeedRunResult::gradient_updates)
        .def_readonly("diverged", &SeedRunResult::diverged)
        .def_readonly("diagnostic", &SeedRunResult::diagnostic);

    py::class_<EvalResult>(m, "EvalResult")
        .def_readonly("mean", &EvalResult::mean)
        .def_readonly("stddev", &EvalResult::stddev)
        .def_readonly("episode_rewards", &EvalResult::episode_rewards);

    py::class_<BaselineResult>(m, "BaselineResult")
        .def_readonly("summary", &BaselineResult::summary)
        .def_readonly("episodes", &BaselineResult::episodes);

    m.def("train_seed", &train_seed, py::arg("scenario"), py::arg("encoder"), py::arg("training"),
          py::arg("seed"));
    m.def("evaluate", &evaluate, py::arg("net"), py::arg("scenario"), py::arg("encoder"),
          py::arg("episodes"), py::arg("seed"));
    m.def("run_baseline", &run_baseline, py::arg("scenario"), py::arg("episodes"),
          py::arg("seed"));
    m.def("derive_seed", &derive_seed, py::arg("root"), py::arg("tag"));

    py::class_<GradCheckEntry>(m, "GradCheckEntry")
        .def_readonly("name", &GradCheckEntry::name)
        .def_readonly("max_rel_error", &GradCheckEntry::max_rel_error)
        .def_readonly("pass_", &GradCheckEntry::pass);

    py::class_<GradCheckReport>(m, "GradCheckReport")
        .def_readonly("entries", &GradCheckReport::entries)
        .def_readonly("all_pass", &GradCheckReport::all_pass)
        .def_readonly("runtime_s", &GradCheckReport::runtime_s);

    m.def(
        "run_gradcheck", [] { return run_gradcheck(); },
        "finite-difference check of every analytic gradient");

    m.def("parse_config_text", &parse_run_config_text, py::arg("text"));
    m.def("resolved_config_text", &resolved_config_text, py::arg("config"));

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("scenario", &RunConfig::scenario)
        .def_readwrite("training", &RunConfig::training)
        .def_readwrite("encoder_slots", &RunConfig::encoder_slots)
        .def_readwrite("output_dir", &RunConfig::output_dir)
        .def_readwrite("run_label", &RunConfig::run_label)
        .def("encoder", &RunConfig::encoder)
        .def("validate", &RunConfig::validate);
}
