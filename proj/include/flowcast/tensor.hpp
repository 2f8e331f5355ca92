#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flowcast {

struct TensorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Shape = std::vector<std::size_t>;

namespace detail {

inline std::size_t numel_of(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

inline void check_finite(std::span<const double> v, const char* op) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw TensorError(std::string("non-finite value produced by op '") + op + "'");
        }
    }
}

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

}  // namespace detail

struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // allocated lazily during backward
    bool requires_grad = false;  // leaf parameter flag
    bool needs_grad = false;     // transitive: some ancestor requires grad

    double* grad_data() {
        if (grad.empty()) grad.assign(value.size(), 0.0);
        return grad.data();
    }
};

/// Handle to a dense row-major 64-bit float array. Copies are shallow; the
/// underlying buffer is shared.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        auto node = std::make_shared<TensorNode>();
        node->value.assign(detail::numel_of(shape), 0.0);
        node->shape = std::move(shape);
        node->requires_grad = requires_grad;
        node->needs_grad = requires_grad;
        return Tensor(std::move(node));
    }

    static Tensor full(Shape shape, double fill, bool requires_grad = false) {
        Tensor t = zeros(std::move(shape), requires_grad);
        std::fill(t.node_->value.begin(), t.node_->value.end(), fill);
        return t;
    }

    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false) {
        if (detail::numel_of(shape) != values.size()) {
            throw TensorError("tensor data length " + std::to_string(values.size()) +
                              " does not match shape " + detail::shape_str(shape));
        }
        detail::check_finite(values, "from");
        auto node = std::make_shared<TensorNode>();
        node->shape = std::move(shape);
        node->value = std::move(values);
        node->requires_grad = requires_grad;
        node->needs_grad = requires_grad;
        return Tensor(std::move(node));
    }

    static Tensor scalar(double v, bool requires_grad = false) {
        return from({1}, {v}, requires_grad);
    }

    /// Leaf parameter with entries drawn uniformly from [-bound, +bound].
    static Tensor uniform(Shape shape, double bound, std::mt19937_64& rng) {
        Tensor t = zeros(std::move(shape), true);
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& x : t.node_->value) x = dist(rng);
        return t;
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t numel() const { return node_->value.size(); }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t rows() const { return rank() == 2 ? node_->shape[0] : 1; }
    std::size_t cols() const { return rank() == 2 ? node_->shape[1] : numel(); }
    bool is_scalar() const { return numel() == 1; }

    std::span<const double> value() const { return node_->value; }
    std::span<double> mutable_value() { return node_->value; }
    double item() const {
        if (!is_scalar()) throw TensorError("item() on non-scalar tensor");
        return node_->value[0];
    }

    bool requires_grad() const { return node_->requires_grad; }
    bool needs_grad() const { return node_->needs_grad; }
    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const double> grad() const {
        if (node_->grad.empty()) throw TensorError("gradient not populated");
        return node_->grad;
    }
    void zero_grad() { node_->grad.clear(); }

    TensorNode* node() const { return node_.get(); }
    const std::shared_ptr<TensorNode>& ptr() const { return node_; }

  private:
    explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}
    std::shared_ptr<TensorNode> node_;

    friend class Tape;
};

/// Define-by-run reverse-mode tape. Ops append nodes in execution order,
/// which is already topological; backward() replays them once in reverse.
class Tape {
  public:
    bool recording() const { return recording_; }
    void set_recording(bool on) { recording_ = on; }

    std::size_t size() const { return ops_.size(); }

    void clear() { ops_.clear(); }

    /// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every
    /// recorded tensor on a path to a requires_grad leaf.
    void backward(const Tensor& loss) {
        if (!loss.is_scalar()) {
            throw TensorError("backward() requires a scalar loss, got shape " +
                              detail::shape_str(loss.shape()));
        }
        loss.node()->grad_data()[0] = 1.0;
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    }

    // ---- primitive ops ----

    Tensor matmul(const Tensor& a, const Tensor& b) {
        if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
            throw TensorError("matmul shape mismatch " + detail::shape_str(a.shape()) + " x " +
                              detail::shape_str(b.shape()));
        }
        const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
        Tensor out = make_out({m, n}, {a, b});
        detail::ECMap am(a.value().data(), m, k);
        detail::ECMap bm(b.value().data(), k, n);
        detail::EMap om(out.mutable_value().data(), m, n);
        om.noalias() = am * bm;
        detail::check_finite(out.value(), "matmul");
        record(out, [a, b, out, m, k, n]() {
            if (out.node()->grad.empty()) return;
            detail::ECMap g(out.node()->grad.data(), m, n);
            if (a.needs_grad()) {
                detail::ECMap bm(b.value().data(), k, n);
                detail::EMap ga(a.node()->grad_data(), m, k);
                ga.noalias() += g * bm.transpose();
            }
            if (b.needs_grad()) {
                detail::ECMap am(a.value().data(), m, k);
                detail::EMap gb(b.node()->grad_data(), k, n);
                gb.noalias() += am.transpose() * g;
            }
        });
        return out;
    }

    Tensor add(const Tensor& a, const Tensor& b) {
        return binary_op(a, b, "add", [](double x, double y) { return x + y; },
                         [](double, double, double g) { return std::pair{g, g}; });
    }

    Tensor sub(const Tensor& a, const Tensor& b) {
        return binary_op(a, b, "sub", [](double x, double y) { return x - y; },
                         [](double, double, double g) { return std::pair{g, -g}; });
    }

    Tensor mul(const Tensor& a, const Tensor& b) {
        return binary_op(a, b, "mul", [](double x, double y) { return x * y; },
                         [](double x, double y, double g) { return std::pair{g * y, g * x}; });
    }

    Tensor div(const Tensor& a, const Tensor& b) {
        return binary_op(a, b, "div", [](double x, double y) { return x / y; },
                         [](double x, double y, double g) {
                             return std::pair{g / y, -g * x / (y * y)};
                         });
    }

    Tensor add_scalar(const Tensor& a, double s) {
        return unary_op(a, "add_scalar", [s](double x) { return x + s; },
                        [](double, double g) { return g; });
    }

    Tensor mul_scalar(const Tensor& a, double s) {
        return unary_op(a, "mul_scalar", [s](double x) { return x * s; },
                        [s](double, double g) { return g * s; });
    }

    Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

    Tensor tanh(const Tensor& a) {
        return unary_cached(a, "tanh", [](double x) { return std::tanh(x); },
                            [](double y, double g) { return g * (1.0 - y * y); });
    }

    Tensor sigmoid(const Tensor& a) {
        return unary_cached(a, "sigmoid",
                            [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                            [](double y, double g) { return g * y * (1.0 - y); });
    }

    Tensor exp(const Tensor& a) {
        return unary_cached(a, "exp", [](double x) { return std::exp(x); },
                            [](double y, double g) { return g * y; });
    }

    Tensor log(const Tensor& a) {
        return unary_op(a, "log", [](double x) { return std::log(x); },
                        [](double x, double g) { return g / x; });
    }

    Tensor softplus(const Tensor& a) {
        return unary_op(a, "softplus",
                        [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
                        [](double x, double g) { return g / (1.0 + std::exp(-x)); });
    }

    Tensor relu(const Tensor& a) { return max_scalar(a, 0.0); }

    /// Elementwise max(x, s); subgradient at the kink is 0.
    Tensor max_scalar(const Tensor& a, double s) {
        return unary_op(a, "max_scalar", [s](double x) { return x > s ? x : s; },
                        [s](double x, double g) { return x > s ? g : 0.0; });
    }

    Tensor abs(const Tensor& a) {
        return unary_op(a, "abs", [](double x) { return std::fabs(x); },
                        [](double x, double g) { return x > 0 ? g : (x < 0 ? -g : 0.0); });
    }

    Tensor square(const Tensor& a) {
        return unary_op(a, "square", [](double x) { return x * x; },
                        [](double x, double g) { return 2.0 * g * x; });
    }

    /// Broadcast a length-n vector to [rows, n].
    Tensor expand_rows(const Tensor& v, std::size_t rows) {
        if (v.rank() != 1) throw TensorError("expand_rows expects a vector");
        const std::size_t n = v.numel();
        Tensor out = make_out({rows, n}, {v});
        for (std::size_t i = 0; i < rows; ++i) {
            std::copy(v.value().begin(), v.value().end(), out.mutable_value().begin() + i * n);
        }
        record(out, [v, out, rows, n]() {
            if (out.node()->grad.empty() || !v.needs_grad()) return;
            double* gv = v.node()->grad_data();
            const double* g = out.node()->grad.data();
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < n; ++j) gv[j] += g[i * n + j];
        });
        return out;
    }

    /// Broadcast a length-n vector to [n, cols] (each row constant).
    Tensor expand_cols(const Tensor& v, std::size_t cols) {
        if (v.rank() != 1) throw TensorError("expand_cols expects a vector");
        const std::size_t n = v.numel();
        Tensor out = make_out({n, cols}, {v});
        for (std::size_t i = 0; i < n; ++i) {
            std::fill_n(out.mutable_value().begin() + i * cols, cols, v.value()[i]);
        }
        record(out, [v, out, cols, n]() {
            if (out.node()->grad.empty() || !v.needs_grad()) return;
            double* gv = v.node()->grad_data();
            const double* g = out.node()->grad.data();
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0;
                for (std::size_t j = 0; j < cols; ++j) acc += g[i * cols + j];
                gv[i] += acc;
            }
        });
        return out;
    }

    Tensor concat_cols(const Tensor& a, const Tensor& b) {
        if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows()) {
            throw TensorError("concat_cols shape mismatch " + detail::shape_str(a.shape()) +
                              " | " + detail::shape_str(b.shape()));
        }
        const std::size_t r = a.rows(), ca = a.cols(), cb = b.cols();
        Tensor out = make_out({r, ca + cb}, {a, b});
        double* o = out.mutable_value().data();
        for (std::size_t i = 0; i < r; ++i) {
            std::copy_n(a.value().data() + i * ca, ca, o + i * (ca + cb));
            std::copy_n(b.value().data() + i * cb, cb, o + i * (ca + cb) + ca);
        }
        record(out, [a, b, out, r, ca, cb]() {
            if (out.node()->grad.empty()) return;
            const double* g = out.node()->grad.data();
            if (a.needs_grad()) {
                double* ga = a.node()->grad_data();
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < ca; ++j) ga[i * ca + j] += g[i * (ca + cb) + j];
            }
            if (b.needs_grad()) {
                double* gb = b.node()->grad_data();
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < cb; ++j) gb[i * cb + j] += g[i * (ca + cb) + ca + j];
            }
        });
        return out;
    }

    /// Columns [from, to) of a 2-d tensor.
    Tensor slice_cols(const Tensor& a, std::size_t from, std::size_t to) {
        if (a.rank() != 2 || from >= to || to > a.cols()) {
            throw TensorError("slice_cols out of range [" + std::to_string(from) + "," +
                              std::to_string(to) + ") of " + detail::shape_str(a.shape()));
        }
        const std::size_t r = a.rows(), c = a.cols(), w = to - from;
        Tensor out = make_out({r, w}, {a});
        double* o = out.mutable_value().data();
        for (std::size_t i = 0; i < r; ++i) std::copy_n(a.value().data() + i * c + from, w, o + i * w);
        record(out, [a, out, r, c, w, from]() {
            if (out.node()->grad.empty() || !a.needs_grad()) return;
            double* ga = a.node()->grad_data();
            const double* g = out.node()->grad.data();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < w; ++j) ga[i * c + from + j] += g[i * w + j];
        });
        return out;
    }

    Tensor reduce_sum(const Tensor& a) {
        Tensor out = make_out({1}, {a});
        double acc = 0;
        for (double x : a.value()) acc += x;
        out.mutable_value()[0] = acc;
        detail::check_finite(out.value(), "reduce_sum");
        record(out, [a, out]() {
            if (out.node()->grad.empty() || !a.needs_grad()) return;
            const double g = out.node()->grad[0];
            double* ga = a.node()->grad_data();
            for (std::size_t i = 0; i < a.numel(); ++i) ga[i] += g;
        });
        return out;
    }

    Tensor reduce_mean(const Tensor& a) {
        const double inv = 1.0 / static_cast<double>(a.numel());
        return mul_scalar(reduce_sum(a), inv);
    }

  private:
    Tensor make_out(Shape shape, std::initializer_list<Tensor> inputs) {
        Tensor out = Tensor::zeros(std::move(shape));
        bool needs = false;
        for (const Tensor& t : inputs) needs = needs || t.needs_grad();
        out.node_->needs_grad = needs && recording_;
        return out;
    }

    template <typename Fwd, typename Bwd>
    Tensor unary_op(const Tensor& a, const char* name, Fwd fwd, Bwd bwd) {
        Tensor out = make_out(a.shape(), {a});
        const double* in = a.value().data();
        double* o = out.mutable_value().data();
        const std::size_t n = a.numel();
        for (std::size_t i = 0; i < n; ++i) o[i] = fwd(in[i]);
        detail::check_finite(out.value(), name);
        record(out, [a, out, bwd, n]() {
            if (out.node()->grad.empty() || !a.needs_grad()) return;
            double* ga = a.node()->grad_data();
            const double* g = out.node()->grad.data();
            const double* in = a.value().data();
            for (std::size_t i = 0; i < n; ++i) ga[i] += bwd(in[i], g[i]);
        });
        return out;
    }

    // Like unary_op but the backward rule reads the cached output value.
    template <typename Fwd, typename Bwd>
    Tensor unary_cached(const Tensor& a, const char* name, Fwd fwd, Bwd bwd) {
        Tensor out = make_out(a.shape(), {a});
        const double* in = a.value().data();
        double* o = out.mutable_value().data();
        const std::size_t n = a.numel();
        for (std::size_t i = 0; i < n; ++i) o[i] = fwd(in[i]);
        detail::check_finite(out.value(), name);
        record(out, [a, out, bwd, n]() {
            if (out.node()->grad.empty() || !a.needs_grad()) return;
            double* ga = a.node()->grad_data();
            const double* g = out.node()->grad.data();
            const double* y = out.value().data();
            for (std::size_t i = 0; i < n; ++i) ga[i] += bwd(y[i], g[i]);
        });
        return out;
    }

    template <typename Fwd, typename Bwd>
    Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, Fwd fwd, Bwd bwd) {
        if (a.shape() != b.shape()) {
            throw TensorError(std::string(name) + " shape mismatch " +
                              detail::shape_str(a.shape()) + " vs " + detail::shape_str(b.shape()));
        }
        Tensor out = make_out(a.shape(), {a, b});
        const double* x = a.value().data();
        const double* y = b.value().data();
        double* o = out.mutable_value().data();
        const std::size_t n = a.numel();
        for (std::size_t i = 0; i < n; ++i) o[i] = fwd(x[i], y[i]);
        detail::check_finite(out.value(), name);
        record(out, [a, b, out, bwd, n]() {
            if (out.node()->grad.empty()) return;
            const double* g = out.node()->grad.data();
            const double* x = a.value().data();
            const double* y = b.value().data();
            const bool na = a.needs_grad(), nb = b.needs_grad();
            if (!na && !nb) return;
            double* ga = na ? a.node()->grad_data() : nullptr;
            double* gb = nb ? b.node()->grad_data() : nullptr;
            for (std::size_t i = 0; i < n; ++i) {
                auto [dx, dy] = bwd(x[i], y[i], g[i]);
                if (na) ga[i] += dx;
                if (nb) gb[i] += dy;
            }
        });
        return out;
    }

    void record(const Tensor& out, std::function<void()> fn) {
        if (recording_ && out.needs_grad()) ops_.push_back(std::move(fn));
    }

    bool recording_ = true;
    std::vector<std::function<void()>> ops_;
};

}  // namespace flowcast
