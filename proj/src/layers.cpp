#include "grl/layers.hpp"

#include <cmath>

namespace grl {

Matrix dense_forward(const Matrix& x, const DenseLayer& layer, DenseCache* cache) {
    require_shape(x.cols() == layer.W.rows(), "dense_forward: input width != W rows");
    require_shape(layer.bias.rows() == 1 && layer.bias.cols() == layer.W.cols(),
                  "dense_forward: bias length != W cols");
    Matrix pre = matmul(x, layer.W);
    for (std::size_t i = 0; i < pre.rows(); ++i)
        for (std::size_t j = 0; j < pre.cols(); ++j) pre(i, j) += layer.bias(0, j);
    Matrix out = pre;
    if (layer.activation == Activation::ReLU)
        for (double& v : out.raw())
            if (v < 0.0) v = 0.0;
    if (cache) {
        cache->input = x;
        cache->pre = pre;
    }
    return out;
}

DenseGrads dense_backward(const DenseLayer& layer, const DenseCache& cache, const Matrix& grad_out) {
    require_shape(cache.pre.same_shape(grad_out), "dense_backward: grad shape != forward output");
    Matrix dpre = grad_out;
    if (layer.activation == Activation::ReLU)
        for (std::size_t i = 0; i < dpre.size(); ++i)
            if (cache.pre.raw()[i] <= 0.0) dpre.raw()[i] = 0.0;
    DenseGrads g;
    g.dW = matmul(transpose(cache.input), dpre);
    g.dbias = Matrix(1, layer.W.cols());
    for (std::size_t i = 0; i < dpre.rows(); ++i)
        for (std::size_t j = 0; j < dpre.cols(); ++j) g.dbias(0, j) += dpre(i, j);
    g.dinput = matmul(dpre, transpose(layer.W));
    return g;
}

Matrix normalize_adjacency(const Matrix& a, bool literal_exponent) {
    require_shape(a.rows() == a.cols(), "normalize_adjacency: matrix not square");
    const std::size_t n = a.rows();
    std::vector<double> deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
    std::vector<double> left(n, 0.0), right(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (deg[i] <= 0.0) continue;  // empty slot: row/col stays zero
        right[i] = 1.0 / std::sqrt(deg[i]);
        left[i] = literal_exponent ? std::sqrt(deg[i]) : right[i];
    }
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) = left[i] * a(i, j) * right[j];
    return out;
}

Matrix gcn_forward(const Matrix& x, const Matrix& a_hat, const GcnLayer& layer, GcnCache* cache) {
    require_shape(a_hat.rows() == a_hat.cols(), "gcn_forward: adjacency not square");
    require_shape(a_hat.cols() == x.rows(), "gcn_forward: adjacency / feature rows mismatch");
    require_shape(x.cols() == layer.W.rows(), "gcn_forward: feature width != W rows");
    Matrix mixed = matmul(a_hat, x);
    Matrix pre = matmul(mixed, layer.W);
    Matrix out = pre;
    for (double& v : out.raw())
        if (v < 0.0) v = 0.0;
    if (cache) {
        cache->a_hat = a_hat;
        cache->input = x;
        cache->mixed = mixed;
        cache->pre = pre;
    }
    return out;
}

GcnGrads gcn_backward(const GcnLayer& layer, const GcnCache& cache, const Matrix& grad_out) {
    require_shape(cache.pre.same_shape(grad_out), "gcn_backward: grad shape != forward output");
    Matrix dpre = grad_out;
    for (std::size_t i = 0; i < dpre.size(); ++i)
        if (cache.pre.raw()[i] <= 0.0) dpre.raw()[i] = 0.0;
    GcnGrads g;
    g.dW = matmul(transpose(cache.mixed), dpre);
    // a_hat is data, not a parameter; gradients pass through it as a constant
    g.dinput = matmul(transpose(cache.a_hat), matmul(dpre, transpose(layer.W)));
    return g;
}

void adam_step(Matrix& params, const Matrix& grads, AdamState& state, double lr) {
    require_shape(params.same_shape(grads), "adam_step: param/grad shape mismatch");
    require_shape(params.same_shape(state.m), "adam_step: state shape mismatch");
    for (double g : grads.raw())
        if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads.raw()[i];
        double& m = state.m.raw()[i];
        double& v = state.v.raw()[i];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        params.raw()[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

void soft_update(Matrix& target, const Matrix& online, double tau) {
    require_shape(target.same_shape(online), "soft_update: shape mismatch");
    for (std::size_t i = 0; i < target.size(); ++i)
        target.raw()[i] = (1.0 - tau) * target.raw()[i] + tau * online.raw()[i];
}

Matrix glorot_init(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(fan_in, fan_out);
    for (double& v : w.raw()) v = dist(rng);
    return w;
}

}  // namespace grl
