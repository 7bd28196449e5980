#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grl/encoder.hpp"
#include "grl/qnet.hpp"
#include "grl/sim.hpp"

namespace grl {

struct TrainConfig {
    int episodes = 150;
    long random_phase_steps = 20000;
    int batch_size = 32;
    std::size_t replay_capacity = 1000000;
    double gamma = 0.9;
    double lr = 1e-4;
    int online_update_every = 10;    // environment steps per gradient step
    int target_update_every = 1000;  // environment steps per soft blend
    double soft_tau = 0.01;
    double epsilon = 0.05;  // held constant after the random phase
    bool epsilon_linear_decay = false;
    double epsilon_start = 1.0;
    long epsilon_decay_steps = 10000;  // post-phase steps to decay from epsilon_start to epsilon
    std::vector<std::uint64_t> seeds = {0, 1, 2};
    AlgoVariant variant = AlgoVariant::Dqn;
    QNetworkWidths widths;
    bool literal_adjacency_norm = false;  // comparison switch for the printed normalization

    // Best-evaluation snapshot: every N episodes (0 = disabled) run a greedy
    // evaluation on a held-out seed stream and keep the best-scoring network.
    int best_eval_every = 0;
    int best_eval_episodes = 10;

    void validate() const;
};

struct EpisodeMetrics {
    int episode = 0;
    int steps = 0;
    double total_reward = 0.0;
    std::optional<double> mean_loss;  // empty until updates happen in the episode
    std::optional<double> mean_q;     // empty when no step had an active AV
    double epsilon_used = 0.0;
    int collisions = 0;
    int exits_correct = 0;
    int exits_missed = 0;
    double wall_time_s = 0.0;
};

struct SeedRunResult {
    std::uint64_t seed = 0;
    std::vector<EpisodeMetrics> episodes;
    QNetwork final_net;
    QNetwork best_net;  // best-evaluation snapshot; equals final_net when disabled
    double best_eval_mean = 0.0;
    long decision_steps = 0;       // steps with at least one active AV
    long stored_transitions = 0;
    long gradient_updates = 0;
    bool diverged = false;
    std::string diagnostic;
};

struct TrainResult {
    std::vector<SeedRunResult> seeds;
};

SeedRunResult train_seed(const ScenarioConfig& scenario, const EncoderConfig& encoder,
                         const TrainConfig& cfg, std::uint64_t seed);
TrainResult train(const ScenarioConfig& scenario, const EncoderConfig& encoder,
                  const TrainConfig& cfg);

// Flat mean over all steps' filtered Q entries (3 per agent slot).
class MeanQAccumulator {
public:
    void add_step(const Matrix& q, const std::vector<double>& filter);
    std::optional<double> value() const;

private:
    double sum_ = 0.0;
    long count_ = 0;
};

struct EvalResult {
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> episode_rewards;
};

// Greedy rollouts on evaluation seeds; never mutates the network or any buffer.
EvalResult evaluate(const QNetwork& net, const ScenarioConfig& scenario,
                    const EncoderConfig& encoder, int episodes, std::uint64_t seed);

struct BaselineResult {
    EvalResult summary;
    std::vector<EpisodeMetrics> episodes;
};

BaselineResult run_baseline(const ScenarioConfig& scenario, int episodes, std::uint64_t seed);

// CSV schema: episode,steps,total_reward,mean_loss,mean_q,epsilon,collisions,
// exits_correct,exits_missed,wall_time_s. Missing values stay empty.
void write_metrics_csv(const std::string& path, const std::vector<EpisodeMetrics>& rows);

struct AggregateRow {
    std::string variant;
    std::uint64_t seed;
    EpisodeMetrics metrics;
};

void write_aggregate_csv(const std::string& path, const std::vector<AggregateRow>& rows);

// Deterministic sub-seed derivation; tag separates independent streams.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag);

}  // namespace grl
