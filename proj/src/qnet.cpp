#include "grl/qnet.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace grl {

std::string variant_name(AlgoVariant v) {
    switch (v) {
        case AlgoVariant::Dqn: return "dqn";
        case AlgoVariant::DoubleDqn: return "double";
        case AlgoVariant::DuelingDqn: return "dueling";
        case AlgoVariant::D3qn: return "d3qn";
    }
    return "?";
}

AlgoVariant variant_from_name(const std::string& name) {
    if (name == "dqn") return AlgoVariant::Dqn;
    if (name == "double") return AlgoVariant::DoubleDqn;
    if (name == "dueling") return AlgoVariant::DuelingDqn;
    if (name == "d3qn") return AlgoVariant::D3qn;
    throw std::invalid_argument("unknown variant: " + name);
}

void QNetwork::for_each_tensor(const std::function<void(const std::string&, Matrix&)>& fn) {
    fn("fc.W", fc.W);
    fn("fc.bias", fc.bias);
    fn("gcn.W", gcn.W);
    fn("shared.W", shared.W);
    fn("shared.bias", shared.bias);
    if (uses_dueling(variant)) {
        fn("value.W", value.W);
        fn("value.bias", value.bias);
        fn("advantage.W", advantage.W);
        fn("advantage.bias", advantage.bias);
    } else {
        fn("out.W", out.W);
        fn("out.bias", out.bias);
    }
}

void QNetwork::for_each_tensor(const std::function<void(const std::string&, const Matrix&)>& fn) const {
    const_cast<QNetwork*>(this)->for_each_tensor(
        [&fn](const std::string& name, Matrix& m) { fn(name, m); });
}

QNetwork make_qnetwork(AlgoVariant variant, std::mt19937_64& rng, QNetworkWidths w) {
    QNetwork net;
    net.variant = variant;
    net.fc = {glorot_init(kNodeFeatureCount, w.h1, rng), Matrix(1, w.h1), Activation::ReLU};
    net.gcn = {glorot_init(w.h1, w.h2, rng)};
    net.shared = {glorot_init(w.h2, w.h3, rng), Matrix(1, w.h3), Activation::ReLU};
    if (uses_dueling(variant)) {
        net.value = {glorot_init(w.h3, 1, rng), Matrix(1, 1), Activation::Identity};
        net.advantage = {glorot_init(w.h3, kActionCount, rng), Matrix(1, kActionCount),
                         Activation::Identity};
    } else {
        net.out = {glorot_init(w.h3, kActionCount, rng), Matrix(1, kActionCount),
                   Activation::Identity};
    }
    return net;
}

Matrix dueling_aggregate(const Matrix& value, const Matrix& advantage) {
    require_shape(value.cols() == 1 && value.rows() == advantage.rows(),
                  "dueling_aggregate: shape mismatch");
    Matrix q(advantage.rows(), advantage.cols());
    for (std::size_t i = 0; i < advantage.rows(); ++i) {
        double mean = 0.0;
        for (std::size_t a = 0; a < advantage.cols(); ++a) mean += advantage(i, a);
        mean /= static_cast<double>(advantage.cols());
        for (std::size_t a = 0; a < advantage.cols(); ++a)
            q(i, a) = value(i, 0) + advantage(i, a) - mean;
    }
    return q;
}

Matrix q_forward(const QNetwork& net, const GraphObservation& obs, QForwardCache* cache) {
    QForwardCache local;
    QForwardCache& c = cache ? *cache : local;
    Matrix n_fc = dense_forward(obs.nodes, net.fc, &c.fc);
    Matrix a_hat = normalize_adjacency(obs.adjacency, net.literal_adjacency_norm);
    Matrix g = gcn_forward(n_fc, a_hat, net.gcn, &c.gcn);
    Matrix h = dense_forward(g, net.shared, &c.shared);
    Matrix q;
    if (uses_dueling(net.variant)) {
        Matrix v = dense_forward(h, net.value, &c.value);
        Matrix adv = dense_forward(h, net.advantage, &c.advantage);
        q = dueling_aggregate(v, adv);
    } else {
        q = dense_forward(h, net.out, &c.out);
    }
    c.q = q;
    return q;
}

QNetworkGrads q_backward(const QNetwork& net, const QForwardCache& cache, const Matrix& grad_q) {
    Matrix dh;
    DenseGrads g_out, g_value, g_advantage;
    if (uses_dueling(net.variant)) {
        const std::size_t slots = grad_q.rows();
        Matrix dval(slots, 1);
        Matrix dadv(slots, kActionCount);
        for (std::size_t i = 0; i < slots; ++i) {
            double sum = 0.0;
            for (std::size_t a = 0; a < grad_q.cols(); ++a) sum += grad_q(i, a);
            dval(i, 0) = sum;
            for (std::size_t a = 0; a < grad_q.cols(); ++a)
                dadv(i, a) = grad_q(i, a) - sum / static_cast<double>(kActionCount);
        }
        g_value = dense_backward(net.value, cache.value, dval);
        g_advantage = dense_backward(net.advantage, cache.advantage, dadv);
        dh = add(g_value.dinput, g_advantage.dinput);
    } else {
        g_out = dense_backward(net.out, cache.out, grad_q);
        dh = g_out.dinput;
    }
    DenseGrads g_shared = dense_backward(net.shared, cache.shared, dh);
    GcnGrads g_gcn = gcn_backward(net.gcn, cache.gcn, g_shared.dinput);
    DenseGrads g_fc = dense_backward(net.fc, cache.fc, g_gcn.dinput);

    QNetworkGrads grads;
    grads.tensors = {g_fc.dW, g_fc.dbias, g_gcn.dW, g_shared.dW, g_shared.dbias};
    if (uses_dueling(net.variant)) {
        grads.tensors.push_back(g_value.dW);
        grads.tensors.push_back(g_value.dbias);
        grads.tensors.push_back(g_advantage.dW);
        grads.tensors.push_back(g_advantage.dbias);
    } else {
        grads.tensors.push_back(g_out.dW);
        grads.tensors.push_back(g_out.dbias);
    }
    return grads;
}

int argmax_row(const Matrix& q, std::size_t row) {
    int best = 0;
    for (std::size_t a = 1; a < q.cols(); ++a)
        if (q(row, a) > q(row, best)) best = static_cast<int>(a);
    return best;
}

double target_bootstrap(AlgoVariant variant, const Matrix& q_online, const Matrix& q_target,
                        std::size_t row) {
    if (uses_double(variant)) return q_target(row, argmax_row(q_online, row));
    return q_target(row, argmax_row(q_target, row));
}

std::vector<double> compute_target(AlgoVariant variant, double reward,
                                   const GraphObservation& next_obs, bool done,
                                   const QNetwork& online, const QNetwork& target, double gamma) {
    const std::size_t slots = next_obs.filter.size();
    std::vector<double> y(slots, reward);
    if (done) return y;
    bool any = false;
    for (double f : next_obs.filter) any = any || f == 1.0;
    if (!any) return y;
    Matrix q_target = q_forward(target, next_obs);
    Matrix q_online;
    if (uses_double(variant)) q_online = q_forward(online, next_obs);
    for (std::size_t i = 0; i < slots; ++i) {
        if (next_obs.filter[i] != 1.0) continue;
        y[i] = reward + gamma * target_bootstrap(variant, uses_double(variant) ? q_online : q_target,
                                                 q_target, i);
    }
    return y;
}

TdResult td_loss_and_grads(const std::vector<const Transition*>& batch, const QNetwork& online,
                           const QNetwork& target, double gamma) {
    if (batch.empty()) throw std::invalid_argument("td_loss_and_grads: empty batch");

    struct PerTransition {
        QForwardCache cache;
        std::vector<double> y;
    };
    std::vector<PerTransition> fwd(batch.size());
    std::size_t terms = 0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Transition& t = *batch[b];
        q_forward(online, t.obs, &fwd[b].cache);
        fwd[b].y = compute_target(online.variant, t.reward, t.next_obs, t.done, online, target, gamma);
        for (std::size_t i = 0; i < t.obs.filter.size(); ++i)
            if (t.obs.filter[i] == 1.0) terms += 1;
    }
    if (terms == 0) throw std::runtime_error("td_loss_and_grads: batch contains no agent slots");

    TdResult result;
    result.agent_terms = terms;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Transition& t = *batch[b];
        const Matrix& q = fwd[b].cache.q;
        Matrix dq(q.rows(), q.cols());
        for (std::size_t i = 0; i < t.obs.filter.size(); ++i) {
            if (t.obs.filter[i] != 1.0) continue;
            int a = t.actions[i];
            if (a < 0 || a >= kActionCount)
                throw std::invalid_argument("td_loss_and_grads: missing action for agent slot");
            double err = fwd[b].y[i] - q(i, a);
            result.loss += err * err / static_cast<double>(terms);
            dq(i, a) = -2.0 * err / static_cast<double>(terms);
        }
        QNetworkGrads g = q_backward(online, fwd[b].cache, dq);
        if (result.grads.tensors.empty()) {
            result.grads = std::move(g);
        } else {
            for (std::size_t k = 0; k < g.tensors.size(); ++k)
                result.grads.tensors[k] = add(result.grads.tensors[k], g.tensors[k]);
        }
    }
    return result;
}

std::vector<int> select_actions_from_q(const Matrix& q, const std::vector<double>& filter,
                                       double epsilon, std::mt19937_64& rng) {
    if (epsilon < 0.0 || epsilon > 1.0)
        throw std::invalid_argument("select_actions: epsilon out of [0,1]");
    std::vector<int> actions(filter.size(), -1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> uniform_action(0, kActionCount - 1);
    for (std::size_t i = 0; i < filter.size(); ++i) {
        if (filter[i] != 1.0) continue;
        if (epsilon > 0.0 && coin(rng) < epsilon)
            actions[i] = uniform_action(rng);
        else
            actions[i] = argmax_row(q, i);
    }
    return actions;
}

std::vector<int> select_actions(const QNetwork& net, const GraphObservation& obs, double epsilon,
                                std::mt19937_64& rng) {
    return select_actions_from_q(q_forward(net, obs), obs.filter, epsilon, rng);
}

void ReplayBuffer::push(Transition t) {
    if (storage_.size() < capacity_) {
        storage_.push_back(std::move(t));
    } else {
        storage_[write_pos_] = std::move(t);
    }
    write_pos_ = (write_pos_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch_size,
                                                    std::mt19937_64& rng) const {
    if (batch_size > storage_.size())
        throw std::runtime_error("ReplayBuffer::sample: fewer transitions than batch size");
    // partial Fisher-Yates over an index list: distinct draws within a batch
    std::vector<std::size_t> idx(storage_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<const Transition*> out;
    out.reserve(batch_size);
    for (std::size_t k = 0; k < batch_size; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
        std::swap(idx[k], idx[pick(rng)]);
        out.push_back(&storage_[idx[k]]);
    }
    return out;
}

QNetworkOptimizer::QNetworkOptimizer(const QNetwork& net) {
    net.for_each_tensor([this](const std::string&, const Matrix& m) {
        states_.emplace_back(m.rows(), m.cols());
    });
}

void QNetworkOptimizer::step(QNetwork& net, const QNetworkGrads& grads, double lr) {
    std::size_t k = 0;
    net.for_each_tensor([&](const std::string&, Matrix& m) {
        adam_step(m, grads.tensors.at(k), states_.at(k), lr);
        ++k;
    });
}

void soft_update_network(QNetwork& target, const QNetwork& online, double tau) {
    std::vector<const Matrix*> online_tensors;
    online.for_each_tensor([&](const std::string&, const Matrix& m) { online_tensors.push_back(&m); });
    std::size_t k = 0;
    target.for_each_tensor([&](const std::string&, Matrix& m) {
        soft_update(m, *online_tensors.at(k), tau);
        ++k;
    });
}

namespace {

constexpr char kMagic[8] = {'G', 'R', 'L', 'Q', 'N', 'E', 'T', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const QNetwork& net) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path);
    os.write(kMagic, sizeof(kMagic));
    write_pod(os, kFormatVersion);
    write_pod(os, static_cast<std::uint32_t>(net.variant));
    std::uint32_t count = 0;
    net.for_each_tensor([&count](const std::string&, const Matrix&) { ++count; });
    write_pod(os, count);
    net.for_each_tensor([&os](const std::string& name, const Matrix& m) {
        write_pod(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(os, static_cast<std::uint64_t>(m.rows()));
        write_pod(os, static_cast<std::uint64_t>(m.cols()));
    });
    net.for_each_tensor([&os](const std::string&, const Matrix& m) {
        os.write(reinterpret_cast<const char*>(m.data()),
                 static_cast<std::streamsize>(m.size() * sizeof(double)));
    });
    if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

QNetwork load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("checkpoint: bad magic (not a checkpoint file)");
    auto version = read_pod<std::uint32_t>(is);
    if (version != kFormatVersion)
        throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));
    auto variant = static_cast<AlgoVariant>(read_pod<std::uint32_t>(is));
    if (variant != AlgoVariant::Dqn && variant != AlgoVariant::DoubleDqn &&
        variant != AlgoVariant::DuelingDqn && variant != AlgoVariant::D3qn)
        throw std::runtime_error("checkpoint: invalid variant tag");
    auto count = read_pod<std::uint32_t>(is);

    struct Entry {
        std::string name;
        std::uint64_t rows, cols;
    };
    std::vector<Entry> manifest(count);
    for (auto& e : manifest) {
        auto len = read_pod<std::uint32_t>(is);
        e.name.resize(len);
        is.read(e.name.data(), len);
        e.rows = read_pod<std::uint64_t>(is);
        e.cols = read_pod<std::uint64_t>(is);
        if (!is) throw std::runtime_error("checkpoint: truncated manifest");
    }

    std::mt19937_64 dummy(0);
    QNetworkWidths widths;
    for (const Entry& e : manifest) {
        if (e.name == "fc.W") widths.h1 = e.cols;
        if (e.name == "gcn.W") widths.h2 = e.cols;
        if (e.name == "shared.W") widths.h3 = e.cols;
    }
    QNetwork net = make_qnetwork(variant, dummy, widths);

    std::size_t k = 0;
    net.for_each_tensor([&](const std::string& name, Matrix& m) {
        if (k >= manifest.size()) throw std::runtime_error("checkpoint: manifest too short");
        const Entry& e = manifest[k++];
        if (e.name != name || e.rows != m.rows() || e.cols != m.cols())
            throw std::runtime_error("checkpoint: tensor " + e.name +
                                     " does not match architecture tensor " + name);
        is.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
        if (!is) throw std::runtime_error("checkpoint: truncated tensor data");
    });
    if (k != manifest.size()) throw std::runtime_error("checkpoint: extra tensors in manifest");
    return net;
}

}  // namespace grl
