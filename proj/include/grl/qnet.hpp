#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "grl/encoder.hpp"
#include "grl/layers.hpp"
#include "grl/matrix.hpp"

namespace grl {

enum class AlgoVariant { Dqn, DoubleDqn, DuelingDqn, D3qn };

constexpr int kActionCount = 3;  // change-left, straight, change-right

inline bool uses_dueling(AlgoVariant v) {
    return v == AlgoVariant::DuelingDqn || v == AlgoVariant::D3qn;
}
inline bool uses_double(AlgoVariant v) {
    return v == AlgoVariant::DoubleDqn || v == AlgoVariant::D3qn;
}
std::string variant_name(AlgoVariant v);
AlgoVariant variant_from_name(const std::string& name);

struct QNetworkWidths {
    std::size_t h1 = 32;
    std::size_t h2 = 32;
    std::size_t h3 = 32;
};

// FC -> GCN -> head. Single-stream head: shared + out; dueling head:
// shared + value/advantage streams recombined by mean-centered aggregation.
struct QNetwork {
    AlgoVariant variant = AlgoVariant::Dqn;
    bool literal_adjacency_norm = false;
    DenseLayer fc;         // f -> h1, ReLU
    GcnLayer gcn;          // h1 -> h2
    DenseLayer shared;     // h2 -> h3, ReLU
    DenseLayer out;        // h3 -> 3, Identity (single-stream only)
    DenseLayer value;      // h3 -> 1, Identity (dueling only)
    DenseLayer advantage;  // h3 -> 3, Identity (dueling only)

    // Visits every parameter tensor in a fixed order (checkpoint manifest order).
    void for_each_tensor(const std::function<void(const std::string&, Matrix&)>& fn);
    void for_each_tensor(const std::function<void(const std::string&, const Matrix&)>& fn) const;
};

QNetwork make_qnetwork(AlgoVariant variant, std::mt19937_64& rng, QNetworkWidths widths = {});

struct QForwardCache {
    DenseCache fc;
    GcnCache gcn;
    DenseCache shared;
    DenseCache out;
    DenseCache value;
    DenseCache advantage;
    Matrix q;  // slots x 3
};

// Q[a] = v + adv[a] - mean(adv), per slot.
Matrix dueling_aggregate(const Matrix& value, const Matrix& advantage);

Matrix q_forward(const QNetwork& net, const GraphObservation& obs, QForwardCache* cache = nullptr);

struct QNetworkGrads {
    std::vector<Matrix> tensors;  // same order as for_each_tensor
};

QNetworkGrads q_backward(const QNetwork& net, const QForwardCache& cache, const Matrix& grad_q);

struct Transition {
    GraphObservation obs;
    std::vector<int> actions;  // per slot; -1 where obs.filter == 0
    double reward = 0.0;
    GraphObservation next_obs;
    bool done = false;
};

// One bootstrap term from next-state Q rows: max over the target row, or the
// target row entry at the online row's argmax for double variants.
double target_bootstrap(AlgoVariant variant, const Matrix& q_online, const Matrix& q_target,
                        std::size_t row);

// Per-slot targets. Slots absent from next_obs (exited agents) and terminal
// transitions bootstrap-free at Y = r.
std::vector<double> compute_target(AlgoVariant variant, double reward,
                                   const GraphObservation& next_obs, bool done,
                                   const QNetwork& online, const QNetwork& target, double gamma);

struct TdResult {
    double loss = 0.0;
    QNetworkGrads grads;
    std::size_t agent_terms = 0;
};

TdResult td_loss_and_grads(const std::vector<const Transition*>& batch, const QNetwork& online,
                           const QNetwork& target, double gamma);

// Epsilon-greedy per filtered slot; ties break to the lowest action index.
std::vector<int> select_actions(const QNetwork& net, const GraphObservation& obs, double epsilon,
                                std::mt19937_64& rng);
std::vector<int> select_actions_from_q(const Matrix& q, const std::vector<double>& filter,
                                       double epsilon, std::mt19937_64& rng);

int argmax_row(const Matrix& q, std::size_t row);

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(Transition t);
    std::vector<const Transition*> sample(std::size_t batch_size, std::mt19937_64& rng) const;
    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }

private:
    std::size_t capacity_;
    std::size_t write_pos_ = 0;
    std::vector<Transition> storage_;
};

// Adam over every tensor of a QNetwork, one shared step counter.
class QNetworkOptimizer {
public:
    explicit QNetworkOptimizer(const QNetwork& net);
    void step(QNetwork& net, const QNetworkGrads& grads, double lr);

private:
    std::vector<AdamState> states_;
};

void soft_update_network(QNetwork& target, const QNetwork& online, double tau);

// Versioned binary checkpoint; bit-exact round trip.
void save_checkpoint(const std::string& path, const QNetwork& net);
QNetwork load_checkpoint(const std::string& path);

}  // namespace grl
