#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "mapd/dataset.hpp"
#include "mapd/error.hpp"
#include "mapd/rng.hpp"

namespace mapd {

enum class Activation { tanh, relu };

struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> w; // row-major, out x in
    std::vector<double> b; // out

    bool operator==(const Layer&) const = default;
};

/// Softmax classifier: either plain softmax regression (hidden = 0) or one
/// hidden layer for richer memorization dynamics.
struct ModelState {
    int num_classes = 0;
    std::size_t dim = 0;
    Activation activation = Activation::relu;
    std::vector<Layer> layers;

    bool operator==(const ModelState&) const = default;
};

inline ModelState init_model(int num_classes, std::size_t dim, std::size_t hidden,
                             Activation activation, std::uint64_t seed) {
    if (num_classes < 2 || dim < 1)
        throw Error(ErrorCode::precondition, "model needs num_classes >= 2 and dim >= 1");
    ModelState m;
    m.num_classes = num_classes;
    m.dim = dim;
    m.activation = activation;
    Rng rng(seed);
    auto make_layer = [&](std::size_t in, std::size_t out, bool randomize) {
        Layer layer;
        layer.in = in;
        layer.out = out;
        layer.w.assign(in * out, 0.0);
        layer.b.assign(out, 0.0);
        if (randomize) {
            const double scale = 1.0 / std::sqrt(static_cast<double>(in));
            for (double& v : layer.w) v = scale * rng.normal();
        }
        return layer;
    };
    if (hidden == 0) {
        // Zero init: the softmax-regression objective is convex, and zero
        // weights give the exactly-uniform initial prediction.
        m.layers.push_back(make_layer(dim, static_cast<std::size_t>(num_classes), false));
    } else {
        m.layers.push_back(make_layer(dim, hidden, true));
        m.layers.push_back(make_layer(hidden, static_cast<std::size_t>(num_classes), true));
    }
    return m;
}

namespace detail {

inline void affine(const Layer& layer, std::span<const double> x, std::vector<double>& out) {
    out.assign(layer.out, 0.0);
    for (std::size_t r = 0; r < layer.out; ++r) {
        const double* row = layer.w.data() + r * layer.in;
        double sum = layer.b[r];
        for (std::size_t c = 0; c < layer.in; ++c) sum += row[c] * x[c];
        out[r] = sum;
    }
}

inline void apply_activation(Activation act, std::vector<double>& v) {
    if (act == Activation::tanh)
        for (double& x : v) x = std::tanh(x);
    else
        for (double& x : v) x = x > 0.0 ? x : 0.0;
}

inline double log_sum_exp(std::span<const double> z) {
    double zmax = z[0];
    for (double v : z) zmax = std::max(zmax, v);
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    return zmax + std::log(sum);
}

} // namespace detail

inline std::vector<double> logits(const ModelState& m, std::span<const double> features) {
    if (features.size() != m.dim)
        throw Error(ErrorCode::precondition, "feature dimension mismatch");
    std::vector<double> cur(features.begin(), features.end());
    std::vector<double> next;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        detail::affine(m.layers[l], cur, next);
        if (l + 1 < m.layers.size()) detail::apply_activation(m.activation, next);
        cur.swap(next);
    }
    return cur;
}

/// Softmax output: strictly positive, sums to 1.
inline std::vector<double> forward(const ModelState& m, std::span<const double> features) {
    std::vector<double> z = logits(m, features);
    const double lse = detail::log_sum_exp(z);
    for (double& v : z) v = std::exp(v - lse);
    return z;
}

inline int predict_class(const ModelState& m, std::span<const double> features) {
    std::vector<double> z = logits(m, features);
    return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

/// Cross-entropy -log p(label), computed in log space so it stays finite.
inline double example_loss(const ModelState& m, std::span<const double> features, int label) {
    if (label < 0 || label >= m.num_classes)
        throw Error(ErrorCode::precondition, "label out of range");
    std::vector<double> z = logits(m, features);
    const double loss = detail::log_sum_exp(z) - z[static_cast<std::size_t>(label)];
    return std::max(0.0, loss);
}

inline double example_loss(const ModelState& m, const Example& e) {
    return example_loss(m, e.features, e.label);
}

/// Soft-label cross-entropy -sum_c ybar_c log p_c for corrected labels.
inline double soft_example_loss(const ModelState& m, std::span<const double> features,
                                std::span<const double> soft_label) {
    std::vector<double> z = logits(m, features);
    if (soft_label.size() != z.size())
        throw Error(ErrorCode::precondition, "soft label has wrong length");
    const double lse = detail::log_sum_exp(z);
    double dot = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) dot += soft_label[c] * z[c];
    return std::max(0.0, lse - dot);
}

struct BatchItem {
    const Example* example = nullptr;
    const std::vector<double>* soft_target = nullptr; // null => one-hot example label
};

using ModelGradient = std::vector<Layer>;

inline ModelGradient zero_gradient(const ModelState& m) {
    ModelGradient g = m.layers;
    for (Layer& layer : g) {
        std::fill(layer.w.begin(), layer.w.end(), 0.0);
        std::fill(layer.b.begin(), layer.b.end(), 0.0);
    }
    return g;
}

/// Analytic gradient of the mean cross-entropy over the batch (no weight
/// decay; regularization is the optimizer's business).
inline ModelGradient gradient(const ModelState& m, std::span<const BatchItem> batch) {
    if (batch.empty())
        throw Error(ErrorCode::precondition, "gradient of empty batch");
    ModelGradient grad = zero_gradient(m);
    const std::size_t L = m.layers.size();
    std::vector<std::vector<double>> acts(L + 1); // acts[0] = input, acts[l] = post-activation
    std::vector<double> delta, delta_prev;

    for (const BatchItem& item : batch) {
        const Example& e = *item.example;
        if (e.features.size() != m.dim)
            throw Error(ErrorCode::precondition, "feature dimension mismatch");
        acts[0].assign(e.features.begin(), e.features.end());
        for (std::size_t l = 0; l < L; ++l) {
            detail::affine(m.layers[l], acts[l], acts[l + 1]);
            if (l + 1 < L) detail::apply_activation(m.activation, acts[l + 1]);
        }
        // softmax + cross-entropy: delta = p - target
        std::vector<double>& z = acts[L];
        const double lse = detail::log_sum_exp(z);
        delta.resize(z.size());
        for (std::size_t c = 0; c < z.size(); ++c) delta[c] = std::exp(z[c] - lse);
        if (item.soft_target) {
            for (std::size_t c = 0; c < z.size(); ++c) delta[c] -= (*item.soft_target)[c];
        } else {
            delta[static_cast<std::size_t>(e.label)] -= 1.0;
        }

        for (std::size_t l = L; l-- > 0;) {
            Layer& g = grad[l];
            const Layer& layer = m.layers[l];
            const std::vector<double>& a_in = acts[l];
            for (std::size_t r = 0; r < layer.out; ++r) {
                g.b[r] += delta[r];
                double* grow = g.w.data() + r * layer.in;
                for (std::size_t c = 0; c < layer.in; ++c) grow[c] += delta[r] * a_in[c];
            }
            if (l == 0) break;
            // propagate through the activation of layer l-1
            delta_prev.assign(layer.in, 0.0);
            for (std::size_t r = 0; r < layer.out; ++r) {
                const double* row = layer.w.data() + r * layer.in;
                for (std::size_t c = 0; c < layer.in; ++c) delta_prev[c] += row[c] * delta[r];
            }
            const std::vector<double>& a = acts[l];
            for (std::size_t c = 0; c < layer.in; ++c) {
                if (m.activation == Activation::tanh)
                    delta_prev[c] *= 1.0 - a[c] * a[c];
                else
                    delta_prev[c] *= a[c] > 0.0 ? 1.0 : 0.0;
            }
            delta.swap(delta_prev);
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (Layer& layer : grad) {
        for (double& v : layer.w) v *= inv;
        for (double& v : layer.b) v *= inv;
    }
    return grad;
}

/// Classic SGD with momentum; weight decay is folded into the gradient here.
struct SgdState {
    ModelGradient velocity;
};

inline SgdState make_sgd_state(const ModelState& m) { return SgdState{zero_gradient(m)}; }

inline void sgd_step(ModelState& m, const ModelGradient& grad, SgdState& state, double lr,
                     double momentum, double weight_decay) {
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        Layer& layer = m.layers[l];
        Layer& vel = state.velocity[l];
        const Layer& g = grad[l];
        for (std::size_t i = 0; i < layer.w.size(); ++i) {
            vel.w[i] = momentum * vel.w[i] - lr * (g.w[i] + weight_decay * layer.w[i]);
            layer.w[i] += vel.w[i];
        }
        for (std::size_t i = 0; i < layer.b.size(); ++i) {
            vel.b[i] = momentum * vel.b[i] - lr * g.b[i];
            layer.b[i] += vel.b[i];
        }
    }
}

} // namespace mapd
