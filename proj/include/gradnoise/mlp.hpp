#pragma once

#include "dataset.hpp"
#include "error.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace gradnoise {

enum class Activation { relu, tanh };

inline const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

inline Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    fail(ErrorKind::parameter, "unknown activation '" + name + "' (expected relu or tanh)");
}

/// Fully connected network. All weights and biases live in one flat vector
/// so that gradients, SGD updates and noise vectors share one indexing.
/// Layer l stores an in x out weight block (row-major) followed by its bias.
class ModelState {
public:
    ModelState() = default;

    ModelState(std::vector<std::size_t> layer_sizes, Activation activation)
        : sizes_(std::move(layer_sizes)), activation_(activation) {
        require(sizes_.size() >= 2, ErrorKind::parameter, "a network needs at least two layer sizes");
        for (auto s : sizes_) require(s >= 1, ErrorKind::parameter, "layer sizes must be >= 1");
        std::size_t offset = 0;
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            weight_offsets_.push_back(offset);
            offset += sizes_[l] * sizes_[l + 1];
            bias_offsets_.push_back(offset);
            offset += sizes_[l + 1];
        }
        params_.assign(offset, 0.0);
    }

    const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
    Activation activation() const noexcept { return activation_; }
    std::size_t layers() const noexcept { return sizes_.size() - 1; }
    std::size_t fan_in(std::size_t l) const noexcept { return sizes_[l]; }
    std::size_t fan_out(std::size_t l) const noexcept { return sizes_[l + 1]; }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }

    std::size_t weight_offset(std::size_t l) const noexcept { return weight_offsets_[l]; }
    std::size_t bias_offset(std::size_t l) const noexcept { return bias_offsets_[l]; }

    std::span<const double> weights(std::size_t l) const noexcept {
        return params().subspan(weight_offsets_[l], fan_in(l) * fan_out(l));
    }
    std::span<double> weights(std::size_t l) noexcept {
        return params().subspan(weight_offsets_[l], fan_in(l) * fan_out(l));
    }
    std::span<const double> bias(std::size_t l) const noexcept {
        return params().subspan(bias_offsets_[l], fan_out(l));
    }
    std::span<double> bias(std::size_t l) noexcept { return params().subspan(bias_offsets_[l], fan_out(l)); }

    friend bool operator==(const ModelState&, const ModelState&) = default;

private:
    std::vector<std::size_t> sizes_;
    Activation activation_ = Activation::relu;
    std::vector<std::size_t> weight_offsets_;
    std::vector<std::size_t> bias_offsets_;
    std::vector<double> params_;
};

/// Xavier-uniform weights on +-sqrt(6 / (fan_in + fan_out)), zero biases.
inline ModelState init_model(std::vector<std::size_t> layer_sizes, std::uint64_t seed,
                             Activation activation = Activation::relu) {
    ModelState model(std::move(layer_sizes), activation);
    Rng rng(derive_seed(seed, streams::init));
    for (std::size_t l = 0; l < model.layers(); ++l) {
        const double bound = std::sqrt(6.0 / static_cast<double>(model.fan_in(l) + model.fan_out(l)));
        for (auto& w : model.weights(l)) w = rng.uniform(-bound, bound);
    }
    return model;
}

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

namespace detail {

inline double activate(Activation a, double z) { return a == Activation::relu ? std::max(z, 0.0) : std::tanh(z); }

// Derivative expressed through the pre-activation z and output h = act(z).
inline double activate_grad(Activation a, double z, double h) {
    return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - h * h;
}

struct ForwardPass {
    std::vector<std::vector<double>> h;  // h[0] inputs, h[L] logits; each rows x width
    std::vector<std::vector<double>> z;  // pre-activations of layers 0..L-1
};

inline ForwardPass forward(const ModelState& model, const Dataset& data, std::span<const std::size_t> index) {
    const std::size_t rows = index.size();
    const std::size_t layers = model.layers();
    ForwardPass pass;
    pass.h.resize(layers + 1);
    pass.z.resize(layers);
    pass.h[0].resize(rows * data.d);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto x = data.input(index[r]);
        std::copy(x.begin(), x.end(), pass.h[0].begin() + static_cast<std::ptrdiff_t>(r * data.d));
    }
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in = model.fan_in(l);
        const std::size_t out = model.fan_out(l);
        const auto w = model.weights(l);
        const auto b = model.bias(l);
        auto& z = pass.z[l];
        z.resize(rows * out);
        for (std::size_t r = 0; r < rows; ++r) {
            double* zr = z.data() + r * out;
            std::copy(b.begin(), b.end(), zr);
            const double* hr = pass.h[l].data() + r * in;
            for (std::size_t i = 0; i < in; ++i) {
                const double hv = hr[i];
                const double* wi = w.data() + i * out;
                for (std::size_t o = 0; o < out; ++o) zr[o] += hv * wi[o];
            }
        }
        if (l + 1 == layers) {
            pass.h[l + 1] = z;
        } else {
            auto& h = pass.h[l + 1];
            h.resize(rows * out);
            for (std::size_t k = 0; k < z.size(); ++k) h[k] = activate(model.activation(), z[k]);
        }
    }
    return pass;
}

inline double log_sum_exp(std::span<const double> logits) {
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - top);
    return top + std::log(sum);
}

inline void check_batch(const ModelState& model, const Dataset& data, std::span<const std::size_t> index) {
    require(!index.empty(), ErrorKind::parameter, "index set must be nonempty");
    require(model.fan_in(0) == data.d, ErrorKind::shape, "model input width does not match dataset dimension");
    require(model.layer_sizes().back() >= data.classes, ErrorKind::shape, "model has fewer outputs than classes");
    for (auto i : index) require(i < data.n, ErrorKind::parameter, "example index out of range");
}

}  // namespace detail

/// Mean softmax cross-entropy over the examples in `index` (repeats count
/// with multiplicity) and its exact gradient by reverse-mode differentiation.
inline LossGrad loss_and_grad(const ModelState& model, const Dataset& data, std::span<const std::size_t> index) {
    detail::check_batch(model, data, index);
    const std::size_t rows = index.size();
    const std::size_t layers = model.layers();
    const double inv_rows = 1.0 / static_cast<double>(rows);
    auto pass = detail::forward(model, data, index);

    const std::size_t classes = model.layer_sizes().back();
    std::vector<double> delta(rows * classes);
    double loss = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        std::span<const double> logits(pass.h[layers].data() + r * classes, classes);
        const double lse = detail::log_sum_exp(logits);
        const auto y = data.labels[index[r]];
        loss += lse - logits[y];
        for (std::size_t c = 0; c < classes; ++c) {
            const double prob = std::exp(logits[c] - lse);
            delta[r * classes + c] = (prob - (c == y ? 1.0 : 0.0)) * inv_rows;
        }
    }

    LossGrad out;
    out.loss = loss * inv_rows;
    out.grad.assign(model.parameter_count(), 0.0);
    for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = model.fan_in(l);
        const std::size_t width = model.fan_out(l);
        double* gw = out.grad.data() + model.weight_offset(l);
        double* gb = out.grad.data() + model.bias_offset(l);
        const auto& h = pass.h[l];
        for (std::size_t r = 0; r < rows; ++r) {
            const double* dr = delta.data() + r * width;
            const double* hr = h.data() + r * in;
            for (std::size_t i = 0; i < in; ++i) {
                const double hv = hr[i];
                double* gwi = gw + i * width;
                for (std::size_t o = 0; o < width; ++o) gwi[o] += hv * dr[o];
            }
            for (std::size_t o = 0; o < width; ++o) gb[o] += dr[o];
        }
        if (l == 0) break;
        const auto w = model.weights(l);
        const auto& z_prev = pass.z[l - 1];
        std::vector<double> next(rows * in);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* dr = delta.data() + r * width;
            for (std::size_t i = 0; i < in; ++i) {
                const double* wi = w.data() + i * width;
                double acc = 0.0;
                for (std::size_t o = 0; o < width; ++o) acc += dr[o] * wi[o];
                const std::size_t k = r * in + i;
                next[k] = acc * detail::activate_grad(model.activation(), z_prev[k], h[k]);
            }
        }
        delta = std::move(next);
    }
    return out;
}

/// w <- w - lr * grad f(w; batch).
inline ModelState sgd_step(const ModelState& model, const Dataset& data, std::span<const std::size_t> batch,
                           double learning_rate) {
    require(learning_rate >= 0.0 && std::isfinite(learning_rate), ErrorKind::parameter,
            "learning rate must be finite and >= 0");
    const auto lg = loss_and_grad(model, data, batch);
    ModelState next = model;
    auto p = next.params();
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= learning_rate * lg.grad[k];
    return next;
}

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Full-dataset mean loss and accuracy, evaluated in fixed-size chunks.
inline Evaluation evaluate(const ModelState& model, const Dataset& data) {
    constexpr std::size_t chunk = 512;
    const std::size_t classes = model.layer_sizes().back();
    double loss = 0.0;
    std::size_t correct = 0;
    std::vector<std::size_t> index;
    for (std::size_t start = 0; start < data.n; start += chunk) {
        const std::size_t stop = std::min(data.n, start + chunk);
        index.resize(stop - start);
        for (std::size_t i = start; i < stop; ++i) index[i - start] = i;
        detail::check_batch(model, data, index);
        const auto pass = detail::forward(model, data, index);
        const auto& logits_all = pass.h.back();
        for (std::size_t r = 0; r < index.size(); ++r) {
            std::span<const double> logits(logits_all.data() + r * classes, classes);
            const auto y = data.labels[index[r]];
            loss += detail::log_sum_exp(logits) - logits[y];
            const auto best = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
            if (best == y) ++correct;
        }
    }
    return {loss / static_cast<double>(data.n), static_cast<double>(correct) / static_cast<double>(data.n)};
}

}  // namespace gradnoise
