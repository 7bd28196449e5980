#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "grl/matrix.hpp"

namespace grl {

enum class Activation { ReLU, Identity };

struct DenseLayer {
    Matrix W;     // in x out
    Matrix bias;  // 1 x out
    Activation activation = Activation::ReLU;
};

// Graph convolution weight; propagation uses a degree-normalized adjacency
// and a fixed zero offset, activation is always ReLU.
struct GcnLayer {
    Matrix W;  // in x out
};

struct DenseCache {
    Matrix input;
    Matrix pre;  // pre-activation X*W + b
};

struct GcnCache {
    Matrix a_hat;    // normalized adjacency used in the forward pass
    Matrix input;    // node features entering the layer
    Matrix mixed;    // a_hat * input
    Matrix pre;      // mixed * W
};

struct DenseGrads {
    Matrix dW;
    Matrix dbias;  // 1 x out
    Matrix dinput;
};

struct GcnGrads {
    Matrix dW;
    Matrix dinput;
};

Matrix dense_forward(const Matrix& x, const DenseLayer& layer, DenseCache* cache = nullptr);
DenseGrads dense_backward(const DenseLayer& layer, const DenseCache& cache, const Matrix& grad_out);

// D^{-1/2} A D^{-1/2} with D_ii = sum_j A_ij; zero-degree rows stay zero.
// literal_exponent switches to D^{1/2} A D^{-1/2} for comparison runs.
Matrix normalize_adjacency(const Matrix& a, bool literal_exponent = false);

// ReLU(a_hat * x * W). a_hat must already be normalized.
Matrix gcn_forward(const Matrix& x, const Matrix& a_hat, const GcnLayer& layer, GcnCache* cache = nullptr);
GcnGrads gcn_backward(const GcnLayer& layer, const GcnCache& cache, const Matrix& grad_out);

struct AdamState {
    Matrix m;  // first moment, same shape as the parameter
    Matrix v;  // second moment
    std::int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(std::size_t rows = 0, std::size_t cols = 0) : m(rows, cols), v(rows, cols) {}
};

// In-place Adam update with bias correction. Throws on non-finite gradients.
void adam_step(Matrix& params, const Matrix& grads, AdamState& state, double lr);

// target <- (1 - tau) * target + tau * online, elementwise.
void soft_update(Matrix& target, const Matrix& online, double tau);

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Matrix glorot_init(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

}  // namespace grl
