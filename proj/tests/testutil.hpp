#pragma once

// Shared helpers for the test suites: a central finite-difference gradient
// oracle and an ARMA process simulator. Both stay independent of the code
// paths they check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "flowcast/tensor.hpp"

namespace flowcast::testutil {

inline double rel_error(double analytic, double numeric) {
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
    return std::fabs(analytic - numeric) / denom;
}

struct FdReport {
    double max_rel = 0.0;
    std::size_t checked = 0;
};

/// Central finite differences (default step 1e-5) against tape gradients.
/// build(tape) must construct the scalar loss from the given leaves.
template <typename BuildLoss>
FdReport finite_difference_check(std::vector<Tensor>& leaves, BuildLoss&& build,
                                 double h = 1e-5) {
    Tape tape;
    Tensor loss = build(tape);
    tape.backward(loss);
    std::vector<std::vector<double>> analytic;
    for (Tensor& leaf : leaves) {
        if (leaf.has_grad()) {
            analytic.emplace_back(leaf.grad().begin(), leaf.grad().end());
        } else {
            analytic.emplace_back(leaf.numel(), 0.0);
        }
        leaf.zero_grad();
    }

    FdReport report;
    Tape probe;
    probe.set_recording(false);
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        auto vals = leaves[li].mutable_value();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double keep = vals[i];
            vals[i] = keep + h;
            const double up = build(probe).item();
            vals[i] = keep - h;
            const double down = build(probe).item();
            vals[i] = keep;
            const double numeric = (up - down) / (2.0 * h);
            report.max_rel = std::max(report.max_rel, rel_error(analytic[li][i], numeric));
            ++report.checked;
        }
    }
    return report;
}

inline std::vector<double> random_values(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                         double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> out(n);
    for (double& x : out) x = dist(rng);
    return out;
}

/// ARMA(p,q) simulation with Gaussian innovations and a burn-in prefix.
inline std::vector<double> simulate_arma(std::size_t n, std::vector<double> phi,
                                         std::vector<double> theta, double c, double sigma,
                                         std::uint64_t seed, std::size_t burn = 200) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    const std::size_t total = n + burn;
    std::vector<double> e(total), y(total);
    for (std::size_t t = 0; t < total; ++t) {
        e[t] = noise(rng);
        double acc = c + e[t];
        for (std::size_t i = 0; i < phi.size(); ++i) {
            if (t >= i + 1) acc += phi[i] * y[t - 1 - i];
        }
        for (std::size_t j = 0; j < theta.size(); ++j) {
            if (t >= j + 1) acc += theta[j] * e[t - 1 - j];
        }
        y[t] = acc;
    }
    return {y.begin() + burn, y.end()};
}

/// Random-walk simulation (unit root) for stationarity tests.
inline std::vector<double> simulate_random_walk(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> y(n);
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        acc += noise(rng);
        y[t] = acc;
    }
    return y;
}

}  // namespace flowcast::testutil
