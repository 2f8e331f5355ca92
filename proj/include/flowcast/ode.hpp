#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "flowcast/tensor.hpp"

namespace flowcast {

enum class SolverMethod { kEuler, kRk4 };

struct SolverConfig {
    SolverMethod method = SolverMethod::kRk4;
    int steps_per_unit = 4;

    void validate() const {
        if (steps_per_unit < 1) throw std::invalid_argument("steps_per_unit must be >= 1");
    }
};

inline const char* to_string(SolverMethod m) {
    return m == SolverMethod::kEuler ? "euler" : "rk4";
}

inline std::optional<SolverMethod> solver_method_from_string(std::string_view s) {
    if (s == "euler") return SolverMethod::kEuler;
    if (s == "rk4") return SolverMethod::kRk4;
    return std::nullopt;
}

struct SolverError : std::runtime_error {
    int failing_step;
    SolverError(int step, const std::string& what)
        : std::runtime_error("ode step " + std::to_string(step) + ": " + what),
          failing_step(step) {}
};

using OdeField = std::function<Tensor(Tape&, double t, const Tensor& h)>;

/// Fixed-step explicit integration of h' = field(t, h) from t0 to t1. Every
/// stage runs through the tape, so gradients reach both h0 and any parameters
/// the field closes over.
inline Tensor integrate(Tape& tape, const OdeField& field, const Tensor& h0, double t0, double t1,
                        const SolverConfig& cfg) {
    cfg.validate();
    if (t1 < t0) throw std::invalid_argument("integrate: t1 < t0");
    const double span = t1 - t0;
    if (span == 0.0) return h0;
    const int steps = std::max(1, static_cast<int>(std::ceil(span * cfg.steps_per_unit - 1e-12)));
    const double dt = span / steps;
    Tensor h = h0;
    for (int s = 0; s < steps; ++s) {
        const double t = t0 + s * dt;
        try {
            if (cfg.method == SolverMethod::kEuler) {
                h = tape.add(h, tape.mul_scalar(field(tape, t, h), dt));
            } else {
                Tensor k1 = field(tape, t, h);
                Tensor k2 = field(tape, t + 0.5 * dt, tape.add(h, tape.mul_scalar(k1, 0.5 * dt)));
                Tensor k3 = field(tape, t + 0.5 * dt, tape.add(h, tape.mul_scalar(k2, 0.5 * dt)));
                Tensor k4 = field(tape, t + dt, tape.add(h, tape.mul_scalar(k3, dt)));
                Tensor sum = tape.add(tape.add(k1, k4),
                                      tape.mul_scalar(tape.add(k2, k3), 2.0));
                h = tape.add(h, tape.mul_scalar(sum, dt / 6.0));
            }
        } catch (const TensorError& e) {
            throw SolverError(s, e.what());
        }
    }
    return h;
}

}  // namespace flowcast
