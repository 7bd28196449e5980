#include "grl/gradcheck.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "grl/encoder.hpp"
#include "grl/layers.hpp"
#include "grl/qnet.hpp"

namespace grl {

namespace {

double rel_error(double analytic, double numeric) {
    double denom = std::max(std::abs(analytic), std::abs(numeric));
    if (denom < 1e-10) return 0.0;
    return std::abs(analytic - numeric) / denom;
}

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix m(r, c);
    for (double& v : m.raw()) v = dist(rng);
    return m;
}

// Instances whose pre-activations sit near the ReLU kink make central
// differences meaningless; redraw until every unit is clear of it.
bool clear_of_kink(const Matrix& pre, double margin = 1e-3) {
    for (double v : pre.raw())
        if (std::abs(v) < margin) return false;
    return true;
}

double loss_of(const Matrix& out, const Matrix& coeff) {
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.raw()[i] * coeff.raw()[i];
    return s;
}

double fd_slope(const std::function<double()>& eval, double& param, double h) {
    double orig = param;
    param = orig + h;
    double up = eval();
    param = orig - h;
    double down = eval();
    param = orig;
    return (up - down) / (2.0 * h);
}

double check_dense(std::mt19937_64& rng, const GradCheckOptions& opts) {
    std::uniform_int_distribution<std::size_t> dim(1, 6);
    double worst = 0.0;
    for (int inst = 0; inst < opts.instances; ++inst) {
        std::size_t rows, in, out_dim;
        DenseLayer layer;
        Matrix x;
        DenseCache cache;
        do {
            rows = dim(rng);
            in = dim(rng);
            out_dim = dim(rng);
            layer = {random_matrix(in, out_dim, rng), random_matrix(1, out_dim, rng),
                     inst % 2 == 0 ? Activation::ReLU : Activation::Identity};
            x = random_matrix(rows, in, rng);
            dense_forward(x, layer, &cache);
        } while (layer.activation == Activation::ReLU && !clear_of_kink(cache.pre));

        Matrix coeff = random_matrix(rows, out_dim, rng);
        DenseGrads analytic = dense_backward(layer, cache, coeff);
        auto eval = [&]() { return loss_of(dense_forward(x, layer), coeff); };
        for (std::size_t i = 0; i < layer.W.size(); ++i)
            worst = std::max(worst, rel_error(analytic.dW.raw()[i],
                                              fd_slope(eval, layer.W.raw()[i], opts.step)));
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            worst = std::max(worst, rel_error(analytic.dbias.raw()[i],
                                              fd_slope(eval, layer.bias.raw()[i], opts.step)));
        for (std::size_t i = 0; i < x.size(); ++i)
            worst = std::max(worst,
                             rel_error(analytic.dinput.raw()[i], fd_slope(eval, x.raw()[i], opts.step)));
    }
    return worst;
}

Matrix random_adjacency(std::size_t n, std::mt19937_64& rng) {
    std::bernoulli_distribution edge(0.5);
    std::bernoulli_distribution occupied(0.8);
    Matrix a(n, n);
    std::vector<bool> occ(n);
    for (std::size_t i = 0; i < n; ++i) occ[i] = occupied(rng);
    for (std::size_t i = 0; i < n; ++i) {
        if (!occ[i]) continue;
        a(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (occ[j] && edge(rng)) {
                a(i, j) = 1.0;
                a(j, i) = 1.0;
            }
        }
    }
    return a;
}

double check_gcn(std::mt19937_64& rng, const GradCheckOptions& opts) {
    std::uniform_int_distribution<std::size_t> dim(1, 6);
    double worst = 0.0;
    for (int inst = 0; inst < opts.instances; ++inst) {
        std::size_t n, in, out_dim;
        GcnLayer layer;
        Matrix x, a_hat;
        GcnCache cache;
        do {
            n = dim(rng);
            in = dim(rng);
            out_dim = dim(rng);
            layer = {random_matrix(in, out_dim, rng)};
            x = random_matrix(n, in, rng);
            a_hat = normalize_adjacency(random_adjacency(n, rng));
            gcn_forward(x, a_hat, layer, &cache);
        } while (!clear_of_kink(cache.pre));

        Matrix coeff = random_matrix(n, out_dim, rng);
        GcnGrads analytic = gcn_backward(layer, cache, coeff);
        if (opts.corrupt_gcn)
            for (double& v : analytic.dW.raw()) v = v * 1.05 + 1e-3;
        auto eval = [&]() { return loss_of(gcn_forward(x, a_hat, layer), coeff); };
        for (std::size_t i = 0; i < layer.W.size(); ++i)
            worst = std::max(worst, rel_error(analytic.dW.raw()[i],
                                              fd_slope(eval, layer.W.raw()[i], opts.step)));
        for (std::size_t i = 0; i < x.size(); ++i)
            worst = std::max(worst,
                             rel_error(analytic.dinput.raw()[i], fd_slope(eval, x.raw()[i], opts.step)));
    }
    return worst;
}

double check_network(AlgoVariant variant, std::mt19937_64& rng, const GradCheckOptions& opts) {
    constexpr std::size_t slots = 5;
    double worst = 0.0;
    for (int inst = 0; inst < opts.instances; ++inst) {
        QNetwork net;
        GraphObservation obs;
        QForwardCache cache;
        do {
            QNetworkWidths widths{4, 4, 4};
            net = make_qnetwork(variant, rng, widths);
            // weights beyond the Glorot range keep activations away from the kink
            net.for_each_tensor([&rng](const std::string&, Matrix& m) {
                m = random_matrix(m.rows(), m.cols(), rng, -0.8, 0.8);
            });
            obs.nodes = random_matrix(slots, kNodeFeatureCount, rng, 0.0, 1.0);
            obs.adjacency = random_adjacency(slots, rng);
            obs.filter.assign(slots, 0.0);
            q_forward(net, obs, &cache);
        } while (!clear_of_kink(cache.fc.pre) || !clear_of_kink(cache.gcn.pre) ||
                 !clear_of_kink(cache.shared.pre));

        Matrix coeff = random_matrix(slots, kActionCount, rng);
        QNetworkGrads analytic = q_backward(net, cache, coeff);
        auto eval = [&]() { return loss_of(q_forward(net, obs), coeff); };
        std::size_t k = 0;
        net.for_each_tensor([&](const std::string&, Matrix& tensor) {
            const Matrix& grad = analytic.tensors[k++];
            for (std::size_t i = 0; i < tensor.size(); ++i)
                worst = std::max(worst,
                                 rel_error(grad.raw()[i], fd_slope(eval, tensor.raw()[i], opts.step)));
        });
    }
    return worst;
}

}  // namespace

GradCheckReport run_gradcheck(const GradCheckOptions& opts) {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(opts.seed);
    GradCheckReport report;
    auto record = [&](const std::string& name, double err) {
        bool pass = err < opts.tolerance;
        report.entries.push_back({name, err, pass});
        report.all_pass = report.all_pass && pass;
    };
    record("dense", check_dense(rng, opts));
    record("gcn", check_gcn(rng, opts));
    record("network_single_stream", check_network(AlgoVariant::Dqn, rng, opts));
    record("network_dueling", check_network(AlgoVariant::D3qn, rng, opts));
    report.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace grl
