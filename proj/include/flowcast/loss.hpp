#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "flowcast/tensor.hpp"

namespace flowcast {

enum class LossKind { kMse, kMae, kHuber };

struct LossSpec {
    LossKind kind = LossKind::kMse;
    double delta = 1.0;  // huber threshold

    void validate() const {
        if (kind == LossKind::kHuber && !(delta > 0)) {
            throw std::invalid_argument("huber delta must be positive");
        }
    }
};

inline const char* to_string(LossKind k) {
    switch (k) {
        case LossKind::kMse: return "mse";
        case LossKind::kMae: return "mae";
        case LossKind::kHuber: return "huber";
    }
    return "?";
}

inline std::optional<LossKind> loss_kind_from_string(std::string_view s) {
    if (s == "mse") return LossKind::kMse;
    if (s == "mae") return LossKind::kMae;
    if (s == "huber") return LossKind::kHuber;
    return std::nullopt;
}

/// Scalar mean loss over all elements. MAE uses subgradient 0 at zero
/// residual; huber switches branches on |r| <= delta with the branch mask
/// held constant.
inline Tensor compute_loss(Tape& tape, const LossSpec& spec, const Tensor& pred,
                           const Tensor& target) {
    spec.validate();
    if (pred.shape() != target.shape()) {
        throw TensorError("compute_loss: pred/target shape mismatch");
    }
    Tensor r = tape.sub(pred, target);
    switch (spec.kind) {
        case LossKind::kMse:
            return tape.reduce_mean(tape.square(r));
        case LossKind::kMae:
            return tape.reduce_mean(tape.abs(r));
        case LossKind::kHuber: {
            const double d = spec.delta;
            std::vector<double> mask(r.numel());
            for (std::size_t i = 0; i < r.numel(); ++i) {
                mask[i] = std::fabs(r.value()[i]) <= d ? 1.0 : 0.0;
            }
            Tensor m = Tensor::from(r.shape(), std::move(mask));
            Tensor quad = tape.mul_scalar(tape.square(r), 0.5);
            // d * (|r| - d/2) on the linear branch
            Tensor lin = tape.mul_scalar(tape.add_scalar(tape.abs(r), -0.5 * d), d);
            Tensor inv = tape.add_scalar(tape.mul_scalar(m, -1.0), 1.0);
            Tensor elems = tape.add(tape.mul(m, quad), tape.mul(inv, lin));
            return tape.reduce_mean(elems);
        }
    }
    throw TensorError("compute_loss: unknown loss kind");
}

}  // namespace flowcast
