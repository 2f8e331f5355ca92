#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flowcast {

struct ArimaOrder {
    int p = 0;
    int d = 0;
    int q = 0;

    void validate() const {
        if (p < 0 || p > 5 || d < 0 || d > 2 || q < 0 || q > 5) {
            throw std::invalid_argument("arima order out of search bounds (p<=5, d<=2, q<=5)");
        }
    }
    bool operator==(const ArimaOrder&) const = default;
};

struct FitReport {
    double loglik = 0.0;
    double aic = 0.0;
    bool converged = false;
    int iterations = 0;
};

namespace arima_detail {

// Innovations are conditioned on a fixed number of initial observations so
// CSS log-likelihoods stay comparable across candidate orders.
inline constexpr int kConditioning = 5;
inline constexpr double kKpss5pcCritical = 0.463;
inline constexpr double kRootPenaltyBoundary = 1.001;
inline constexpr double kRootAdequacyMin = 1.01;   // reject near-unit-root fits
inline constexpr double kRootCancelMinDist = 0.15; // reject AR/MA common factors
inline constexpr double kAicTieMargin = 2.0;

}  // namespace arima_detail

/// d-fold first differences; output is shorter by d.
inline std::vector<double> difference(std::span<const double> series, int d) {
    if (d < 0 || series.size() <= static_cast<std::size_t>(d)) {
        throw std::invalid_argument("difference: series too short for d=" + std::to_string(d));
    }
    std::vector<double> w(series.begin(), series.end());
    for (int k = 0; k < d; ++k) {
        if (w.size() < 2) throw std::invalid_argument("difference: series too short");
        for (std::size_t i = 0; i + 1 < w.size(); ++i) w[i] = w[i + 1] - w[i];
        w.pop_back();
    }
    return w;
}

struct ArimaModel {
    ArimaOrder order;
    std::vector<double> phi;    // AR coefficients
    std::vector<double> theta;  // MA coefficients
    double c = 0.0;             // constant on the differenced scale
    double sigma2 = 0.0;        // innovation variance
    std::vector<double> history;    // observed series y
    std::vector<double> diffed;     // d-differenced series
    std::vector<double> residuals;  // innovations on the differenced scale
    bool fitted = false;
    int refit_every = 168;  // observations between refits; 0 disables
    int since_refit = 0;
    FitReport last_report;
};

namespace arima_detail {

/// Innovation recursion with zero pre-sample values: residuals before the
/// conditioning offset are fixed at 0.
inline void recompute_residuals(const std::vector<double>& w, double c,
                                const std::vector<double>& phi, const std::vector<double>& theta,
                                std::vector<double>& eps) {
    const int n = static_cast<int>(w.size());
    const int p = static_cast<int>(phi.size());
    const int q = static_cast<int>(theta.size());
    eps.assign(w.size(), 0.0);
    for (int t = kConditioning; t < n; ++t) {
        double pred = c;
        for (int i = 0; i < p; ++i) pred += phi[i] * w[t - 1 - i];
        for (int j = 0; j < q; ++j) {
            if (t - 1 - j >= kConditioning) pred += theta[j] * eps[t - 1 - j];
        }
        eps[t] = w[t] - pred;
    }
}

inline double css_of(const std::vector<double>& eps) {
    double sse = 0.0;
    for (int t = kConditioning; t < static_cast<int>(eps.size()); ++t) sse += eps[t] * eps[t];
    return sse;
}

/// Roots of the lag polynomial 1 - c1 z - ... - ck z^k (trailing
/// near-zero coefficients are dropped).
inline std::vector<std::complex<double>> lag_poly_roots(std::span<const double> coefs) {
    int k = static_cast<int>(coefs.size());
    while (k > 0 && std::fabs(coefs[k - 1]) < 1e-12) --k;
    if (k == 0) return {};
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(k, k);
    for (int i = 1; i < k; ++i) companion(i, i - 1) = 1.0;
    // monic form z^k + sum_i (c_i/c_k) z^i - 1/c_k
    companion(0, k - 1) = 1.0 / coefs[k - 1];
    for (int i = 1; i < k; ++i) companion(i, k - 1) = -coefs[i - 1] / coefs[k - 1];
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
    std::vector<std::complex<double>> roots;
    roots.reserve(k);
    for (int i = 0; i < k; ++i) roots.push_back(solver.eigenvalues()[i]);
    return roots;
}

inline double min_root_modulus(std::span<const double> coefs) {
    auto roots = lag_poly_roots(coefs);
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : roots) m = std::min(m, std::abs(r));
    return m;
}

inline std::vector<double> negate(std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) x = -x;
    return out;
}

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
};

template <typename F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0, double init_step, int max_iter,
                             double xatol, double frtol) {
    const int n = static_cast<int>(x0.size());
    NelderMeadResult result;
    if (n == 0) {
        result.x = std::move(x0);
        result.fx = f(result.x);
        result.converged = true;
        return result;
    }
    std::vector<std::vector<double>> simplex(n + 1, x0);
    for (int i = 0; i < n; ++i) simplex[i + 1][i] += init_step;
    std::vector<double> fv(n + 1);
    for (int i = 0; i <= n; ++i) fv[i] = f(simplex[i]);

    std::vector<int> idx(n + 1);
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        const int best = idx[0], worst = idx[n], second = idx[n - 1];

        double fspread = std::fabs(fv[worst] - fv[best]);
        double xspread = 0.0;
        for (int i = 0; i <= n; ++i) {
            for (int j = 0; j < n; ++j) {
                xspread = std::max(xspread, std::fabs(simplex[i][j] - simplex[best][j]));
            }
        }
        if (fspread <= frtol * (std::fabs(fv[best]) + 1e-12) && xspread <= xatol) {
            result.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (int i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (int j = 0; j < n; ++j) centroid[j] += simplex[i][j];
        }
        for (double& v : centroid) v /= n;

        auto blend = [&](double coef) {
            std::vector<double> x(n);
            for (int j = 0; j < n; ++j) x[j] = centroid[j] + coef * (centroid[j] - simplex[worst][j]);
            return x;
        };

        std::vector<double> xr = blend(1.0);
        double fr = f(xr);
        if (fr < fv[best]) {
            std::vector<double> xe = blend(2.0);
            double fe = f(xe);
            if (fe < fr) {
                simplex[worst] = std::move(xe);
                fv[worst] = fe;
            } else {
                simplex[worst] = std::move(xr);
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            simplex[worst] = std::move(xr);
            fv[worst] = fr;
        } else {
            const bool outside = fr < fv[worst];
            std::vector<double> xc = blend(outside ? 0.5 : -0.5);
            double fc = f(xc);
            if (fc < (outside ? fr : fv[worst])) {
                simplex[worst] = std::move(xc);
                fv[worst] = fc;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (int j = 0; j < n; ++j) {
                        simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
                    }
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    result.x = simplex[idx[0]];
    result.fx = fv[idx[0]];
    result.iterations = iter;
    return result;
}

struct UnpackedParams {
    double c = 0.0;
    std::vector<double> phi;
    std::vector<double> theta;
};

inline UnpackedParams unpack(std::span<const double> x, int p, int q, bool with_c) {
    UnpackedParams u;
    std::size_t idx = 0;
    if (with_c) u.c = x[idx++];
    u.phi.assign(x.begin() + idx, x.begin() + idx + p);
    idx += p;
    u.theta.assign(x.begin() + idx, x.begin() + idx + q);
    return u;
}

inline double sample_mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_variance(std::span<const double> v) {
    const double m = sample_mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size());
}

}  // namespace arima_detail

/// Conditional-sum-of-squares fit by Nelder-Mead from a zero start.
/// Stationarity/invertibility is enforced by a penalty outside the
/// unit-root region; the constant is included only when d = 0.
inline std::pair<ArimaModel, FitReport> css_fit(std::span<const double> series, ArimaOrder order) {
    order.validate();
    using namespace arima_detail;
    const int p = order.p, q = order.q;
    std::vector<double> w = difference(series, order.d);
    const int n = static_cast<int>(w.size());
    if (n < 10 * (p + q + 1)) {
        throw std::invalid_argument("css_fit: differenced length " + std::to_string(n) +
                                    " below 10*(p+q+1)");
    }
    const bool with_c = order.d == 0;
    const int k = p + q + (with_c ? 1 : 0) + 1;  // +1 for sigma^2

    ArimaModel model;
    model.order = order;
    model.history.assign(series.begin(), series.end());
    model.diffed = w;
    model.refit_every = 168;

    FitReport report;
    const double var_w = sample_variance(w);
    if (var_w < 1e-12) {
        // degenerate constant series
        model.phi.assign(p, 0.0);
        model.theta.assign(q, 0.0);
        model.c = with_c ? sample_mean(w) : 0.0;
        model.sigma2 = 0.0;
        recompute_residuals(w, model.c, model.phi, model.theta, model.residuals);
        report.converged = true;
        report.loglik = 0.0;
        report.aic = 2.0 * k;
        model.fitted = true;
        model.last_report = report;
        return {std::move(model), report};
    }

    std::vector<double> eps;
    auto objective = [&](const std::vector<double>& x) {
        UnpackedParams u = unpack(x, p, q, with_c);
        double viol = 0.0;
        if (p > 0) {
            double m = min_root_modulus(u.phi);
            if (m <= kRootPenaltyBoundary) viol += kRootPenaltyBoundary - m;
        }
        if (q > 0) {
            double m = min_root_modulus(negate(u.theta));
            if (m <= kRootPenaltyBoundary) viol += kRootPenaltyBoundary - m;
        }
        if (viol > 0.0) return 1e12 * (1.0 + viol);
        recompute_residuals(w, u.c, u.phi, u.theta, eps);
        return css_of(eps);
    };

    const int dim = p + q + (with_c ? 1 : 0);
    auto nm = nelder_mead(objective, std::vector<double>(dim, 0.0), 0.1, 200 * dim + 300, 1e-6,
                          1e-10);
    UnpackedParams u = unpack(nm.x, p, q, with_c);
    model.c = u.c;
    model.phi = std::move(u.phi);
    model.theta = std::move(u.theta);
    recompute_residuals(w, model.c, model.phi, model.theta, model.residuals);
    const double sse = css_of(model.residuals);
    const int cnt = n - kConditioning;
    model.sigma2 = sse / cnt;
    const double sigma2_floored = std::max(model.sigma2, 1e-12);
    constexpr double kTwoPi = 6.283185307179586;
    report.loglik = -0.5 * cnt * (std::log(kTwoPi * sigma2_floored) + 1.0);
    report.aic = -2.0 * report.loglik + 2.0 * k;
    report.converged = nm.converged;
    report.iterations = nm.iterations;
    model.fitted = true;
    model.last_report = report;
    return {std::move(model), report};
}

/// Assembles a model directly from known coefficients; residuals follow the
/// standard innovation recursion over the supplied history.
inline ArimaModel arima_from_coefficients(ArimaOrder order, std::vector<double> phi,
                                          std::vector<double> theta, double c, double sigma2,
                                          std::span<const double> history) {
    order.validate();
    if (static_cast<int>(phi.size()) != order.p || static_cast<int>(theta.size()) != order.q) {
        throw std::invalid_argument("arima_from_coefficients: coefficient counts disagree with order");
    }
    ArimaModel model;
    model.order = order;
    model.phi = std::move(phi);
    model.theta = std::move(theta);
    model.c = c;
    model.sigma2 = sigma2;
    model.history.assign(history.begin(), history.end());
    model.diffed = difference(history, order.d);
    arima_detail::recompute_residuals(model.diffed, model.c, model.phi, model.theta,
                                      model.residuals);
    model.fitted = true;
    return model;
}

/// Level-stationarity KPSS statistic with a Bartlett-window long-run
/// variance at lag floor(4*(n/100)^(1/4)). Zero-variance series yield 0.
inline double kpss_statistic(std::span<const double> series) {
    const int n = static_cast<int>(series.size());
    if (n < 20) throw std::invalid_argument("kpss_statistic: need at least 20 observations");
    const double mean = arima_detail::sample_mean(series);
    std::vector<double> e(n);
    for (int i = 0; i < n; ++i) e[i] = series[i] - mean;
    double cum = 0.0, num = 0.0, gamma0 = 0.0;
    for (int i = 0; i < n; ++i) {
        cum += e[i];
        num += cum * cum;
        gamma0 += e[i] * e[i];
    }
    num /= static_cast<double>(n) * n;
    gamma0 /= n;
    if (gamma0 < 1e-300) return 0.0;
    const int lag = static_cast<int>(std::floor(4.0 * std::pow(n / 100.0, 0.25)));
    double lrv = gamma0;
    for (int s = 1; s <= lag; ++s) {
        double g = 0.0;
        for (int t = s; t < n; ++t) g += e[t] * e[t - s];
        g /= n;
        lrv += 2.0 * (1.0 - static_cast<double>(s) / (lag + 1)) * g;
    }
    if (lrv <= 0) return 0.0;
    return num / lrv;
}

struct AutoSelectReport {
    ArimaOrder order;
    double aic = 0.0;
    int models_fitted = 0;
    std::array<double, 3> kpss{};  // statistic per differencing level tried (NaN if skipped)
};

/// Order selection: the differencing level comes from repeated KPSS tests at
/// the 5% critical value, then a stepwise AIC search over (p,q) from the
/// standard four starting points. Fits whose AR/MA roots hug the unit circle
/// or nearly cancel are rejected as inadequate, and AIC differences within a
/// small margin resolve toward the more parsimonious model.
inline AutoSelectReport auto_select_report(std::span<const double> series) {
    using namespace arima_detail;
    if (series.size() < 50) throw std::invalid_argument("auto_select: need at least 50 observations");

    AutoSelectReport rep;
    rep.kpss.fill(std::numeric_limits<double>::quiet_NaN());
    int d = 2;
    for (int dd = 0; dd <= 2; ++dd) {
        std::vector<double> w = difference(series, dd);
        rep.kpss[dd] = kpss_statistic(w);
        if (rep.kpss[dd] < kKpss5pcCritical) {
            d = dd;
            break;
        }
    }

    std::map<std::pair<int, int>, double> aic_cache;
    auto fit_aic = [&](int p, int q) {
        auto key = std::make_pair(p, q);
        auto it = aic_cache.find(key);
        if (it != aic_cache.end()) return it->second;
        double aic = std::numeric_limits<double>::infinity();
        try {
            auto [model, report] = css_fit(series, ArimaOrder{p, d, q});
            bool adequate = true;
            if (p > 0 && min_root_modulus(model.phi) < kRootAdequacyMin) adequate = false;
            if (q > 0 && min_root_modulus(negate(model.theta)) < kRootAdequacyMin) adequate = false;
            if (adequate && p > 0 && q > 0) {
                auto ar = lag_poly_roots(model.phi);
                auto ma = lag_poly_roots(negate(model.theta));
                for (const auto& ra : ar) {
                    for (const auto& rm : ma) {
                        if (std::abs(ra - rm) < kRootCancelMinDist) adequate = false;
                    }
                }
            }
            if (adequate) aic = report.aic;
            ++rep.models_fitted;
        } catch (const std::invalid_argument&) {
            // series too short for this order; leave aic infinite
        }
        aic_cache[key] = aic;
        return aic;
    };

    // a strictly beats b when its AIC is lower by more than the margin;
    // within the margin the tie breaks toward smaller p+q, then smaller p
    auto better = [&](std::pair<int, int> a, std::pair<int, int> b) {
        const double aa = aic_cache.at(a), ab = aic_cache.at(b);
        if (std::isinf(aa) && std::isinf(ab)) return false;
        if (ab - aa > kAicTieMargin) return true;
        if (aa - ab > kAicTieMargin) return false;
        if (a.first + a.second != b.first + b.second) {
            return a.first + a.second < b.first + b.second;
        }
        return a.first < b.first;
    };

    const std::array<std::pair<int, int>, 4> starts{{{0, 0}, {1, 0}, {0, 1}, {2, 2}}};
    for (auto s : starts) fit_aic(s.first, s.second);
    std::pair<int, int> current = starts[0];
    for (auto s : starts) {
        if (better(s, current)) current = s;
    }
    bool improved = true;
    while (improved) {
        improved = false;
        const auto [p, q] = current;
        const std::array<std::pair<int, int>, 4> neighbors{
            {{p + 1, q}, {p - 1, q}, {p, q + 1}, {p, q - 1}}};
        for (auto nb : neighbors) {
            if (nb.first < 0 || nb.first > 5 || nb.second < 0 || nb.second > 5) continue;
            fit_aic(nb.first, nb.second);
            if (better(nb, current)) {
                current = nb;
                improved = true;
            }
        }
    }
    rep.order = ArimaOrder{current.first, d, current.second};
    rep.aic = aic_cache.at(current);
    return rep;
}

inline ArimaOrder auto_select(std::span<const double> series) {
    return auto_select_report(series).order;
}

namespace arima_detail {

inline double diffed_one_step(const ArimaModel& m) {
    const int n = static_cast<int>(m.diffed.size());
    double pred = m.c;
    for (int i = 0; i < static_cast<int>(m.phi.size()); ++i) {
        const int t = n - 1 - i;
        if (t >= 0) pred += m.phi[i] * m.diffed[t];
    }
    for (int j = 0; j < static_cast<int>(m.theta.size()); ++j) {
        const int t = n - 1 - j;
        if (t >= 0) pred += m.theta[j] * m.residuals[t];
    }
    return pred;
}

/// Next value of the d-fold difference, given the pending observation y.
inline double next_diffed_value(const ArimaModel& m, double y) {
    const int d = m.order.d;
    if (static_cast<int>(m.history.size()) < d) {
        throw std::logic_error("update: history shorter than differencing order");
    }
    std::vector<double> tail(m.history.end() - d, m.history.end());
    tail.push_back(y);
    for (int k = 0; k < d; ++k) {
        for (std::size_t i = 0; i + 1 < tail.size(); ++i) tail[i] = tail[i + 1] - tail[i];
        tail.pop_back();
    }
    return tail.back();
}

}  // namespace arima_detail

/// Undoes d-fold differencing for a one-step-ahead forecast by cumulative
/// re-summation from the last d observed values.
inline double integrate_forecast(const ArimaModel& model, double diffed_forecast) {
    const int d = model.order.d;
    if (d == 0) return diffed_forecast;
    if (static_cast<int>(model.history.size()) < d) {
        throw std::invalid_argument("integrate_forecast: insufficient history");
    }
    double v = diffed_forecast;
    std::vector<double> level(model.history.end() - d, model.history.end());
    for (int k = 0; k < d; ++k) {
        v += level.back();
        for (std::size_t i = 0; i + 1 < level.size(); ++i) level[i] = level[i + 1] - level[i];
        level.pop_back();
    }
    return v;
}

/// One-step-ahead forecast on the original scale. Negative values are kept;
/// clamping happens at the reporting/metrics layer.
inline double forecast_one_step(const ArimaModel& model) {
    if (!model.fitted) throw std::logic_error("forecast_one_step: model not fitted");
    return integrate_forecast(model, arima_detail::diffed_one_step(model));
}

/// Filter update: appends the observation and its innovation without
/// changing coefficients; refits on the full history every refit_every
/// observations when enabled.
inline void update_with_observation(ArimaModel& model, double y_true) {
    if (!model.fitted) throw std::logic_error("update_with_observation: model not fitted");
    const double zhat = arima_detail::diffed_one_step(model);
    const double ztrue = arima_detail::next_diffed_value(model, y_true);
    model.history.push_back(y_true);
    model.diffed.push_back(ztrue);
    model.residuals.push_back(ztrue - zhat);
    model.since_refit += 1;
    if (model.refit_every > 0 && model.since_refit >= model.refit_every) {
        const int keep_refit_every = model.refit_every;
        auto [refit, report] = css_fit(model.history, model.order);
        refit.refit_every = keep_refit_every;
        model = std::move(refit);
    }
}

struct RollingResult {
    std::vector<double> predictions;
    std::vector<double> step_seconds;
};

/// One-step-ahead rolling evaluation: forecast, then reveal the true value.
inline RollingResult rolling_evaluate(ArimaModel& model, std::span<const double> test_series) {
    RollingResult out;
    out.predictions.reserve(test_series.size());
    out.step_seconds.reserve(test_series.size());
    for (double y : test_series) {
        const auto t0 = std::chrono::steady_clock::now();
        out.predictions.push_back(forecast_one_step(model));
        update_with_observation(model, y);
        const auto t1 = std::chrono::steady_clock::now();
        out.step_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    return out;
}

}  // namespace flowcast
