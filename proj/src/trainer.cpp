#include "grl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace grl {

namespace {

// Per-slot actions -> per-vehicle action map via the slot_map.
std::map<int, LateralAction> to_vehicle_actions(const std::vector<int>& slot_actions,
                                                const GraphObservation& obs) {
    std::map<int, LateralAction> out;
    for (std::size_t i = 0; i < slot_actions.size(); ++i) {
        if (slot_actions[i] < 0) continue;
        out[obs.slot_map[i]] = static_cast<LateralAction>(slot_actions[i]);
    }
    return out;
}

bool has_agent(const GraphObservation& obs) {
    for (double f : obs.filter)
        if (f == 1.0) return true;
    return false;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

void write_metrics_row(std::ostream& os, const EpisodeMetrics& m) {
    os << m.episode << ',' << m.steps << ',' << format_double(m.total_reward) << ','
       << format_optional(m.mean_loss) << ',' << format_optional(m.mean_q) << ','
       << format_double(m.epsilon_used) << ',' << m.collisions << ',' << m.exits_correct << ','
       << m.exits_missed << ',' << format_double(m.wall_time_s) << '\n';
}

constexpr const char* kMetricsHeader =
    "episode,steps,total_reward,mean_loss,mean_q,epsilon,collisions,exits_correct,exits_missed,"
    "wall_time_s";

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag) {
    // splitmix64 over the combined value
    std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void TrainConfig::validate() const {
    if (episodes <= 0) throw std::invalid_argument("training: episodes must be > 0");
    if (random_phase_steps < 0) throw std::invalid_argument("training: random_phase_steps must be >= 0");
    if (batch_size <= 0) throw std::invalid_argument("training: batch_size must be > 0");
    if (replay_capacity == 0) throw std::invalid_argument("training: replay_capacity must be > 0");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("training: gamma must be in [0,1)");
    if (!(lr > 0.0)) throw std::invalid_argument("training: lr must be > 0");
    if (online_update_every <= 0) throw std::invalid_argument("training: online_update_every must be > 0");
    if (target_update_every <= 0) throw std::invalid_argument("training: target_update_every must be > 0");
    if (!(soft_tau >= 0.0 && soft_tau <= 1.0)) throw std::invalid_argument("training: soft_tau must be in [0,1]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("training: epsilon must be in [0,1]");
    if (seeds.empty()) throw std::invalid_argument("training: at least one seed required");
    if (best_eval_every < 0) throw std::invalid_argument("training: best_eval_every must be >= 0");
    if (best_eval_episodes <= 0)
        throw std::invalid_argument("training: best_eval_episodes must be > 0");
}

void MeanQAccumulator::add_step(const Matrix& q, const std::vector<double>& filter) {
    for (std::size_t i = 0; i < filter.size(); ++i) {
        if (filter[i] != 1.0) continue;
        for (std::size_t a = 0; a < q.cols(); ++a) {
            sum_ += q(i, a);
            count_ += 1;
        }
    }
}

std::optional<double> MeanQAccumulator::value() const {
    if (count_ == 0) return std::nullopt;
    return sum_ / static_cast<double>(count_);
}

SeedRunResult train_seed(const ScenarioConfig& scenario, const EncoderConfig& encoder,
                         const TrainConfig& cfg, std::uint64_t seed) {
    scenario.validate();
    encoder.validate();
    cfg.validate();

    SeedRunResult result;
    result.seed = seed;

    std::mt19937_64 net_rng(derive_seed(seed, 1));
    std::mt19937_64 policy_rng(derive_seed(seed, 2));
    std::mt19937_64 replay_rng(derive_seed(seed, 3));

    QNetwork online = make_qnetwork(cfg.variant, net_rng, cfg.widths);
    online.literal_adjacency_norm = cfg.literal_adjacency_norm;
    QNetwork target = online;
    QNetworkOptimizer optimizer(online);
    ReplayBuffer replay(cfg.replay_capacity);

    std::uniform_int_distribution<int> uniform_action(0, kActionCount - 1);
    long global_step = 0;

    for (int ep = 0; ep < cfg.episodes; ++ep) {
        auto t0 = std::chrono::steady_clock::now();
        SimState state = make_initial_state(scenario, derive_seed(seed, 1000 + ep));
        EpisodeMetrics m;
        m.episode = ep;
        MeanQAccumulator mean_q;
        double loss_sum = 0.0;
        int loss_count = 0;
        double epsilon_last = 1.0;

        try {
            while (!is_terminal(state, scenario)) {
                GraphObservation obs = encode(state, encoder);
                Matrix q = q_forward(online, obs);
                mean_q.add_step(q, obs.filter);

                std::vector<int> slot_actions(obs.filter.size(), -1);
                bool random_phase = global_step < cfg.random_phase_steps;
                if (random_phase) {
                    epsilon_last = 1.0;
                    for (std::size_t i = 0; i < obs.filter.size(); ++i)
                        if (obs.filter[i] == 1.0) slot_actions[i] = uniform_action(policy_rng);
                } else {
                    double eps = cfg.epsilon;
                    if (cfg.epsilon_linear_decay) {
                        long post = global_step - cfg.random_phase_steps;
                        double frac = cfg.epsilon_decay_steps > 0
                                          ? std::min(1.0, static_cast<double>(post) /
                                                              static_cast<double>(cfg.epsilon_decay_steps))
                                          : 1.0;
                        eps = cfg.epsilon_start + frac * (cfg.epsilon - cfg.epsilon_start);
                    }
                    epsilon_last = eps;
                    slot_actions = select_actions_from_q(q, obs.filter, eps, policy_rng);
                }

                bool agents_present = has_agent(obs);
                StepOutcome outcome = step(state, to_vehicle_actions(slot_actions, obs), scenario);
                GraphObservation next_obs = encode(state, encoder);

                if (agents_present) {
                    Transition t;
                    t.obs = obs;
                    t.actions = slot_actions;
                    t.reward = outcome.reward_total;
                    t.next_obs = next_obs;
                    t.done = outcome.done;
                    replay.push(std::move(t));
                    result.stored_transitions += 1;
                    result.decision_steps += 1;
                }

                m.steps += 1;
                m.total_reward += outcome.reward_total;
                m.collisions += outcome.collisions;
                m.exits_correct += outcome.exits_correct;
                m.exits_missed += outcome.exits_missed;
                global_step += 1;

                long post_phase = global_step - cfg.random_phase_steps;
                if (post_phase > 0) {
                    if (post_phase % cfg.online_update_every == 0 &&
                        replay.size() >= static_cast<std::size_t>(cfg.batch_size)) {
                        auto batch = replay.sample(static_cast<std::size_t>(cfg.batch_size), replay_rng);
                        TdResult td = td_loss_and_grads(batch, online, target, cfg.gamma);
                        if (!std::isfinite(td.loss))
                            throw std::runtime_error("training diverged: non-finite loss");
                        optimizer.step(online, td.grads, cfg.lr);
                        loss_sum += td.loss;
                        loss_count += 1;
                        result.gradient_updates += 1;
                    }
                    if (post_phase % cfg.target_update_every == 0)
                        soft_update_network(target, online, cfg.soft_tau);
                }
            }
        } catch (const std::runtime_error& e) {
            result.diverged = true;
            result.diagnostic = e.what();
            result.episodes.push_back(m);
            break;
        }

        if (loss_count > 0) m.mean_loss = loss_sum / loss_count;
        m.mean_q = mean_q.value();
        m.epsilon_used = epsilon_last;
        m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.episodes.push_back(m);

        // Best-evaluation snapshot on a held-out seed stream, disjoint from
        // both the training episodes (tag 1000+) and reported evaluations.
        if (cfg.best_eval_every > 0 &&
            ((ep + 1) % cfg.best_eval_every == 0 || ep + 1 == cfg.episodes)) {
            EvalResult probe =
                evaluate(online, scenario, encoder, cfg.best_eval_episodes, derive_seed(seed, 777));
            if (result.best_net.fc.W.size() == 0 || probe.mean > result.best_eval_mean) {
                result.best_eval_mean = probe.mean;
                result.best_net = online;
            }
        }
    }

    result.final_net = online;
    if (result.best_net.fc.W.size() == 0) result.best_net = online;  // disabled or diverged early
    return result;
}

TrainResult train(const ScenarioConfig& scenario, const EncoderConfig& encoder,
                  const TrainConfig& cfg) {
    TrainResult result;
    for (std::uint64_t seed : cfg.seeds)
        result.seeds.push_back(train_seed(scenario, encoder, cfg, seed));
    return result;
}

namespace {

EvalResult summarize(std::vector<double> rewards) {
    EvalResult r;
    r.episode_rewards = std::move(rewards);
    for (double v : r.episode_rewards) r.mean += v;
    r.mean /= static_cast<double>(r.episode_rewards.size());
    double var = 0.0;
    for (double v : r.episode_rewards) var += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(var / static_cast<double>(r.episode_rewards.size()));
    return r;
}

}  // namespace

EvalResult evaluate(const QNetwork& net, const ScenarioConfig& scenario,
                    const EncoderConfig& encoder, int episodes, std::uint64_t seed) {
    if (episodes <= 0) throw std::invalid_argument("evaluate: episodes must be > 0");
    std::mt19937_64 greedy_rng(0);  // epsilon = 0 never draws from it
    std::vector<double> rewards;
    for (int ep = 0; ep < episodes; ++ep) {
        SimState state = make_initial_state(scenario, derive_seed(seed, 500000 + ep));
        double total = 0.0;
        while (!is_terminal(state, scenario)) {
            GraphObservation obs = encode(state, encoder);
            auto slot_actions = select_actions(net, obs, 0.0, greedy_rng);
            total += step(state, to_vehicle_actions(slot_actions, obs), scenario).reward_total;
        }
        rewards.push_back(total);
    }
    return summarize(std::move(rewards));
}

BaselineResult run_baseline(const ScenarioConfig& scenario, int episodes, std::uint64_t seed) {
    if (episodes <= 0) throw std::invalid_argument("run_baseline: episodes must be > 0");
    BaselineResult result;
    std::vector<double> rewards;
    for (int ep = 0; ep < episodes; ++ep) {
        auto t0 = std::chrono::steady_clock::now();
        SimState state = make_initial_state(scenario, derive_seed(seed, 500000 + ep));
        EpisodeMetrics m;
        m.episode = ep;
        while (!is_terminal(state, scenario)) {
            StepOutcome outcome = step(state, baseline_policy(state, scenario), scenario);
            m.steps += 1;
            m.total_reward += outcome.reward_total;
            m.collisions += outcome.collisions;
            m.exits_correct += outcome.exits_correct;
            m.exits_missed += outcome.exits_missed;
        }
        m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rewards.push_back(m.total_reward);
        result.episodes.push_back(m);
    }
    result.summary = summarize(std::move(rewards));
    return result;
}

void write_metrics_csv(const std::string& path, const std::vector<EpisodeMetrics>& rows) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open metrics file for write: " + path);
    os << kMetricsHeader << '\n';
    for (const EpisodeMetrics& m : rows) write_metrics_row(os, m);
    if (!os) throw std::runtime_error("metrics write failed: " + path);
}

void write_aggregate_csv(const std::string& path, const std::vector<AggregateRow>& rows) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open aggregate file for write: " + path);
    os << "variant,seed," << kMetricsHeader << '\n';
    for (const AggregateRow& r : rows) {
        os << r.variant << ',' << r.seed << ',';
        write_metrics_row(os, r.metrics);
    }
    if (!os) throw std::runtime_error("aggregate write failed: " + path);
}

}  // namespace grl
