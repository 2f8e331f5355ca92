#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "flowcast/tensor.hpp"

namespace flowcast {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment buffers for one fixed parameter list.
class AdamState {
  public:
    AdamState() = default;

    explicit AdamState(const std::vector<Tensor>& params, AdamConfig cfg = {}) : cfg_(cfg) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (const Tensor& p : params) {
            m_.emplace_back(p.numel(), 0.0);
            v_.emplace_back(p.numel(), 0.0);
        }
    }

    const AdamConfig& config() const { return cfg_; }
    std::int64_t step_count() const { return t_; }
    std::size_t slot_count() const { return m_.size(); }

    friend void adam_step(std::vector<Tensor>& params, AdamState& state);

  private:
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

/// In-place update p -= lr * m_hat / (sqrt(v_hat) + eps); missing gradients
/// are treated as zero.
inline void adam_step(std::vector<Tensor>& params, AdamState& state) {
    if (params.size() != state.m_.size()) {
        throw TensorError("adam_step: parameter count does not match optimizer state");
    }
    state.t_ += 1;
    const AdamConfig& c = state.cfg_;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t_));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = params[i];
        if (p.numel() != state.m_[i].size()) {
            throw TensorError("adam_step: parameter shape changed between steps");
        }
        auto vals = p.mutable_value();
        std::vector<double>& m = state.m_[i];
        std::vector<double>& v = state.v_[i];
        const bool has = p.has_grad();
        std::span<const double> g = has ? p.grad() : std::span<const double>{};
        for (std::size_t j = 0; j < vals.size(); ++j) {
            const double gj = has ? g[j] : 0.0;
            if (!std::isfinite(gj)) throw TensorError("adam_step: non-finite gradient");
            m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * gj;
            v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * gj * gj;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            vals[j] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
        }
    }
}

inline void zero_grads(std::vector<Tensor>& params) {
    for (Tensor& p : params) p.zero_grad();
}

inline double global_grad_norm(const std::vector<Tensor>& params) {
    double acc = 0;
    for (const Tensor& p : params) {
        if (!p.has_grad()) continue;
        for (double g : p.grad()) acc += g * g;
    }
    return std::sqrt(acc);
}

/// Scales all gradients so the global norm is at most max_norm. Returns the
/// pre-clip norm (NaN propagates, letting the caller abort the run).
inline double clip_grad_norm(std::vector<Tensor>& params, double max_norm) {
    const double norm = global_grad_norm(params);
    if (std::isfinite(norm) && norm > max_norm) {
        const double scale = max_norm / norm;
        for (Tensor& p : params) {
            if (!p.has_grad()) continue;
            double* g = p.node()->grad_data();
            for (std::size_t i = 0; i < p.numel(); ++i) g[i] *= scale;
        }
    }
    return norm;
}

}  // namespace flowcast
