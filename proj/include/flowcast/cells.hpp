#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flowcast/ode.hpp"
#include "flowcast/tensor.hpp"

namespace flowcast {

enum class CellKind {
    kVanillaRnn,
    kLstm,
    kPhasedLstm,
    kGruD,
    kCtRnn,
    kCtLstm,
    kOdeRnnAnode,
};

inline constexpr std::array<CellKind, 7> kAllCellKinds = {
    CellKind::kVanillaRnn, CellKind::kLstm,   CellKind::kPhasedLstm, CellKind::kGruD,
    CellKind::kCtRnn,      CellKind::kCtLstm, CellKind::kOdeRnnAnode,
};

inline const char* to_string(CellKind k) {
    switch (k) {
        case CellKind::kVanillaRnn: return "vanilla_rnn";
        case CellKind::kLstm: return "lstm";
        case CellKind::kPhasedLstm: return "phased_lstm";
        case CellKind::kGruD: return "gru_d";
        case CellKind::kCtRnn: return "ct_rnn";
        case CellKind::kCtLstm: return "ct_lstm";
        case CellKind::kOdeRnnAnode: return "anode";
    }
    return "?";
}

/// Human-readable name used in report tables.
inline const char* display_name(CellKind k) {
    switch (k) {
        case CellKind::kVanillaRnn: return "Vanilla RNN";
        case CellKind::kLstm: return "LSTM";
        case CellKind::kPhasedLstm: return "Phased LSTM";
        case CellKind::kGruD: return "GRU-D";
        case CellKind::kCtRnn: return "CT-RNN";
        case CellKind::kCtLstm: return "CT-LSTM";
        case CellKind::kOdeRnnAnode: return "ANODE";
    }
    return "?";
}

inline std::optional<CellKind> cell_kind_from_string(std::string_view s) {
    for (CellKind k : kAllCellKinds) {
        if (s == to_string(k)) return k;
    }
    return std::nullopt;
}

struct CellConfig {
    CellKind kind = CellKind::kLstm;
    std::size_t hidden_size = 32;
    std::size_t input_size = 1;
    std::size_t output_size = 1;   // P, joint prediction width
    std::size_t augment_dims = 4;  // ANODE only
    double r_on = 0.1;             // phased-LSTM open ratio
    double leak_alpha = 1e-3;      // phased-LSTM closed-phase leak
    double ct_tau_init = 1.0;      // CT-RNN time constant at init
    double phased_tau_min = 1.0;   // hours; log-uniform tau init range
    double phased_tau_max = 168.0;
    SolverConfig solver;

    void validate() const {
        if (hidden_size == 0 || input_size == 0 || output_size == 0) {
            throw std::invalid_argument("cell sizes must be positive");
        }
        if (!(r_on > 0.0 && r_on <= 1.0)) throw std::invalid_argument("r_on must be in (0,1]");
        if (!(leak_alpha >= 0.0 && leak_alpha < 1.0)) {
            throw std::invalid_argument("leak_alpha must be in [0,1)");
        }
        if (ct_tau_init <= 0 || phased_tau_min <= 0 || phased_tau_max < phased_tau_min) {
            throw std::invalid_argument("invalid time-constant configuration");
        }
        solver.validate();
    }

    std::size_t state_size() const {
        return kind == CellKind::kOdeRnnAnode ? hidden_size + augment_dims : hidden_size;
    }
};

struct ParamEntry {
    std::string name;
    Tensor tensor;
    bool trainable = true;
};

/// Ordered collection of named arrays; order is fixed at construction so the
/// optimizer slots and checkpoints stay aligned.
class ParamSet {
  public:
    Tensor& add(std::string name, Tensor t, bool trainable = true) {
        for (const auto& e : entries_) {
            if (e.name == name) throw std::invalid_argument("duplicate parameter " + name);
        }
        entries_.push_back({std::move(name), std::move(t), trainable});
        return entries_.back().tensor;
    }

    const Tensor& at(std::string_view name) const {
        for (const auto& e : entries_) {
            if (e.name == name) return e.tensor;
        }
        throw std::invalid_argument("unknown parameter '" + std::string(name) + "'");
    }

    void set_values(std::string_view name, std::span<const double> values) {
        for (auto& e : entries_) {
            if (e.name == name) {
                if (values.size() != e.tensor.numel()) {
                    throw std::invalid_argument("size mismatch for parameter '" + std::string(name) + "'");
                }
                std::copy(values.begin(), values.end(), e.tensor.mutable_value().begin());
                return;
            }
        }
        throw std::invalid_argument("unknown parameter '" + std::string(name) + "'");
    }

    std::vector<Tensor> trainable() const {
        std::vector<Tensor> out;
        for (const auto& e : entries_) {
            if (e.trainable) out.push_back(e.tensor);
        }
        return out;
    }

    std::size_t trainable_count() const {
        std::size_t n = 0;
        for (const auto& e : entries_) {
            if (e.trainable) n += e.tensor.numel();
        }
        return n;
    }

    const std::vector<ParamEntry>& entries() const { return entries_; }
    std::vector<ParamEntry>& entries() { return entries_; }

  private:
    std::vector<ParamEntry> entries_;
};

struct CellParams {
    CellConfig cfg;
    ParamSet params;

    std::size_t parameter_count() const { return params.trainable_count(); }
};

namespace detail {

inline double softplus_inv(double y) {
    if (y > 30.0) return y;
    return y + std::log(-std::expm1(-y));
}

inline Tensor uniform_fan_in(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return Tensor::uniform(std::move(shape), bound, rng);
}

}  // namespace detail

/// Builds a freshly initialized parameter set. Matrices and biases start
/// uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]; time constants use their
/// configured reparameterized inits.
inline CellParams make_cell_params(const CellConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    CellParams cell{cfg, {}};
    ParamSet& ps = cell.params;
    const std::size_t H = cfg.hidden_size, F = cfg.input_size, P = cfg.output_size;

    auto add_gates = [&](std::size_t n_gates) {
        ps.add("w_in", detail::uniform_fan_in({F, n_gates * H}, F, rng));
        ps.add("u_rec", detail::uniform_fan_in({H, n_gates * H}, H, rng));
        ps.add("bias", detail::uniform_fan_in({n_gates * H}, H, rng));
    };

    switch (cfg.kind) {
        case CellKind::kVanillaRnn:
            add_gates(1);
            break;
        case CellKind::kLstm:
            add_gates(4);
            break;
        case CellKind::kPhasedLstm: {
            add_gates(4);
            std::uniform_real_distribution<double> logu(std::log(cfg.phased_tau_min),
                                                        std::log(cfg.phased_tau_max));
            std::vector<double> tau_raw(H), shift(H);
            for (std::size_t i = 0; i < H; ++i) {
                const double tau = std::exp(logu(rng));
                tau_raw[i] = detail::softplus_inv(tau);
                shift[i] = std::uniform_real_distribution<double>(0.0, tau)(rng);
            }
            ps.add("tau_raw", Tensor::from({H}, std::move(tau_raw), true));
            ps.add("shift", Tensor::from({H}, std::move(shift), true));
            break;
        }
        case CellKind::kGruD: {
            add_gates(3);
            ps.add("w_decay_x", detail::uniform_fan_in({F}, F, rng));
            ps.add("b_decay_x", detail::uniform_fan_in({F}, F, rng));
            ps.add("w_decay_h", detail::uniform_fan_in({F, H}, F, rng));
            ps.add("b_decay_h", detail::uniform_fan_in({H}, F, rng));
            ps.add("x_mean", Tensor::zeros({F}), /*trainable=*/false);
            break;
        }
        case CellKind::kCtRnn: {
            add_gates(1);
            ps.add("tau_raw",
                   Tensor::full({H}, detail::softplus_inv(cfg.ct_tau_init), true));
            break;
        }
        case CellKind::kCtLstm:
            add_gates(7);  // i, f, g, o, i_limit, f_limit, decay-rate
            break;
        case CellKind::kOdeRnnAnode: {
            const std::size_t S = cfg.state_size();
            const std::size_t W = H;  // field hidden width
            ps.add("f_w1", detail::uniform_fan_in({S, W}, S, rng));
            ps.add("f_b1", detail::uniform_fan_in({W}, S, rng));
            ps.add("f_w2", detail::uniform_fan_in({W, S}, W, rng));
            ps.add("f_b2", detail::uniform_fan_in({S}, W, rng));
            add_gates(3);  // GRU-style observation update
            break;
        }
    }
    ps.add("out_w", detail::uniform_fan_in({H, P}, H, rng));
    ps.add("out_b", detail::uniform_fan_in({P}, H, rng));
    return cell;
}

struct CellState {
    Tensor h;        // [B, state_size]
    Tensor c;        // LSTM family memory
    Tensor c_limit;  // CT-LSTM asymptotic cell
    Tensor x_last;   // GRU-D last observed input
    double t_last = 0.0;
};

inline CellState init_state(const CellParams& cell, std::size_t batch) {
    CellState s;
    s.h = Tensor::zeros({batch, cell.cfg.state_size()});
    switch (cell.cfg.kind) {
        case CellKind::kLstm:
        case CellKind::kPhasedLstm:
            s.c = Tensor::zeros({batch, cell.cfg.hidden_size});
            break;
        case CellKind::kCtLstm:
            s.c = Tensor::zeros({batch, cell.cfg.hidden_size});
            s.c_limit = Tensor::zeros({batch, cell.cfg.hidden_size});
            break;
        case CellKind::kGruD:
            s.x_last = Tensor::zeros({batch, cell.cfg.input_size});
            break;
        default:
            break;
    }
    return s;
}

namespace detail {

inline Tensor gate_preact(Tape& tape, const CellParams& cell, const Tensor& x, const Tensor& h) {
    Tensor pre = tape.add(tape.matmul(x, cell.params.at("w_in")),
                          tape.matmul(h, cell.params.at("u_rec")));
    return tape.add(pre, tape.expand_rows(cell.params.at("bias"), x.rows()));
}

struct LstmProposal {
    Tensor c;
    Tensor h;
};

inline LstmProposal lstm_proposal(Tape& tape, const CellParams& cell, const Tensor& x,
                                  const Tensor& h, const Tensor& c) {
    const std::size_t H = cell.cfg.hidden_size;
    Tensor pre = gate_preact(tape, cell, x, h);
    Tensor i = tape.sigmoid(tape.slice_cols(pre, 0, H));
    Tensor f = tape.sigmoid(tape.slice_cols(pre, H, 2 * H));
    Tensor g = tape.tanh(tape.slice_cols(pre, 2 * H, 3 * H));
    Tensor o = tape.sigmoid(tape.slice_cols(pre, 3 * H, 4 * H));
    LstmProposal out;
    out.c = tape.add(tape.mul(f, c), tape.mul(i, g));
    out.h = tape.mul(o, tape.tanh(out.c));
    return out;
}

/// GRU update (update gate z, reset gate r, candidate n):
/// h' = (1-z) * n + z * h.
inline Tensor gru_update(Tape& tape, const CellParams& cell, const Tensor& x, const Tensor& h) {
    const std::size_t H = cell.cfg.hidden_size;
    const std::size_t B = x.rows();
    Tensor px = tape.add(tape.matmul(x, cell.params.at("w_in")),
                         tape.expand_rows(cell.params.at("bias"), B));
    Tensor ph = tape.matmul(h, cell.params.at("u_rec"));
    Tensor z = tape.sigmoid(tape.add(tape.slice_cols(px, 0, H), tape.slice_cols(ph, 0, H)));
    Tensor r = tape.sigmoid(tape.add(tape.slice_cols(px, H, 2 * H), tape.slice_cols(ph, H, 2 * H)));
    Tensor n = tape.tanh(tape.add(tape.slice_cols(px, 2 * H, 3 * H),
                                  tape.mul(r, tape.slice_cols(ph, 2 * H, 3 * H))));
    Tensor one_minus_z = tape.add_scalar(tape.mul_scalar(z, -1.0), 1.0);
    return tape.add(tape.mul(one_minus_z, n), tape.mul(z, h));
}

inline Tensor positive_tau(Tape& tape, const Tensor& raw) {
    return tape.max_scalar(tape.softplus(raw), 1e-3);
}

}  // namespace detail

inline CellState vanilla_step(Tape& tape, const CellParams& cell, const CellState& state,
                              const Tensor& x) {
    CellState next = state;
    next.h = tape.tanh(detail::gate_preact(tape, cell, x, state.h));
    return next;
}

inline CellState lstm_step(Tape& tape, const CellParams& cell, const CellState& state,
                           const Tensor& x) {
    auto prop = detail::lstm_proposal(tape, cell, x, state.h, state.c);
    CellState next = state;
    next.c = prop.c;
    next.h = prop.h;
    return next;
}

/// Phased LSTM: a rhythmic time gate k(t) in [0,1] blends the LSTM proposal
/// with the previous state. Cycle phase phi = ((t - shift) mod tau) / tau;
/// k is a triangular pulse of width r_on with leak alpha*phi when closed.
/// tau and shift are learnable per hidden unit.
inline CellState phased_lstm_step(Tape& tape, const CellParams& cell, const CellState& state,
                                  const Tensor& x, const Tensor& t_abs) {
    const std::size_t H = cell.cfg.hidden_size;
    const std::size_t B = x.rows();
    if (t_abs.numel() != B) throw TensorError("phased_lstm_step: t_abs must have one entry per row");

    auto prop = detail::lstm_proposal(tape, cell, x, state.h, state.c);

    Tensor tau = detail::positive_tau(tape, cell.params.at("tau_raw"));
    Tensor tau_b = tape.expand_rows(tau, B);
    Tensor shift_b = tape.expand_rows(cell.params.at("shift"), B);
    Tensor t_b = tape.expand_cols(t_abs, H);
    Tensor ratio = tape.div(tape.sub(t_b, shift_b), tau_b);

    // whole cycles are a detached constant; phi stays differentiable in
    // tau and shift within the current cycle
    std::vector<double> cycles(ratio.numel());
    for (std::size_t i = 0; i < ratio.numel(); ++i) cycles[i] = std::floor(ratio.value()[i]);
    Tensor phi = tape.sub(ratio, Tensor::from(ratio.shape(), std::move(cycles)));

    const double r_on = cell.cfg.r_on;
    std::vector<double> m_rise(phi.numel(), 0.0), m_fall(phi.numel(), 0.0), m_closed(phi.numel(), 0.0);
    for (std::size_t i = 0; i < phi.numel(); ++i) {
        const double p = phi.value()[i];
        if (p < 0.5 * r_on) m_rise[i] = 1.0;
        else if (p < r_on) m_fall[i] = 1.0;
        else m_closed[i] = 1.0;
    }
    Tensor rise = tape.mul(Tensor::from(phi.shape(), std::move(m_rise)),
                           tape.mul_scalar(phi, 2.0 / r_on));
    Tensor fall = tape.mul(Tensor::from(phi.shape(), std::move(m_fall)),
                           tape.add_scalar(tape.mul_scalar(phi, -2.0 / r_on), 2.0));
    Tensor leak = tape.mul(Tensor::from(phi.shape(), std::move(m_closed)),
                           tape.mul_scalar(phi, cell.cfg.leak_alpha));
    Tensor k = tape.add(tape.add(rise, fall), leak);

    Tensor one_minus_k = tape.add_scalar(tape.mul_scalar(k, -1.0), 1.0);
    CellState next = state;
    next.c = tape.add(tape.mul(k, prop.c), tape.mul(one_minus_k, state.c));
    next.h = tape.add(tape.mul(k, prop.h), tape.mul(one_minus_k, state.h));
    return next;
}

/// GRU-D: exponential input/hidden decay driven by the time gaps delta.
/// Unobserved inputs decay from the last observation toward the training
/// mean; the hidden state decays toward zero before the GRU update.
inline CellState gru_d_step(Tape& tape, const CellParams& cell, const CellState& state,
                            const Tensor& x, const Tensor& mask, const Tensor& delta) {
    const std::size_t B = x.rows();
    if (mask.shape() != x.shape() || delta.shape() != x.shape()) {
        throw TensorError("gru_d_step: mask/delta must match x");
    }
    for (double d : delta.value()) {
        if (d < 0) throw TensorError("gru_d_step: negative time gap");
    }

    Tensor ones = Tensor::full(x.shape(), 1.0);
    Tensor not_mask = tape.sub(ones, mask);

    Tensor gx_arg = tape.add(tape.mul(delta, tape.expand_rows(cell.params.at("w_decay_x"), B)),
                             tape.expand_rows(cell.params.at("b_decay_x"), B));
    Tensor gamma_x = tape.exp(tape.neg(tape.relu(gx_arg)));
    Tensor x_mean_b = tape.expand_rows(cell.params.at("x_mean"), B);
    Tensor one_minus_gx = tape.sub(ones, gamma_x);
    Tensor x_hist = tape.add(tape.mul(gamma_x, state.x_last), tape.mul(one_minus_gx, x_mean_b));
    Tensor x_hat = tape.add(tape.mul(mask, x), tape.mul(not_mask, x_hist));

    Tensor gh_arg = tape.add(tape.matmul(delta, cell.params.at("w_decay_h")),
                             tape.expand_rows(cell.params.at("b_decay_h"), B));
    Tensor gamma_h = tape.exp(tape.neg(tape.relu(gh_arg)));
    Tensor h_decayed = tape.mul(gamma_h, state.h);

    CellState next = state;
    next.h = detail::gru_update(tape, cell, x_hat, h_decayed);
    next.x_last = tape.add(tape.mul(mask, x), tape.mul(not_mask, state.x_last));
    return next;
}

/// CT-RNN: h' obeys dh/dt = -h/tau + tanh(W x + U h + b) between
/// observations, integrated with the configured fixed-step solver; x is held
/// constant over the interval.
inline CellState ct_rnn_step(Tape& tape, const CellParams& cell, const CellState& state,
                             const Tensor& x, double dt) {
    if (!(dt > 0)) throw std::invalid_argument("ct_rnn_step: dt must be positive");
    const std::size_t B = x.rows();
    Tensor tau = detail::positive_tau(tape, cell.params.at("tau_raw"));
    Tensor tau_b = tape.expand_rows(tau, B);
    OdeField field = [&](Tape& tp, double, const Tensor& h) {
        Tensor drive = tp.tanh(detail::gate_preact(tp, cell, x, h));
        return tp.sub(drive, tp.div(h, tau_b));
    };
    CellState next = state;
    next.h = integrate(tape, field, state.h, 0.0, dt, cell.cfg.solver);
    return next;
}

/// CT-LSTM: two memory cells. The gated update writes a fast cell and a
/// limit cell; between observations the memory relaxes from fast toward
/// limit at a learned positive rate, c(dt) = limit + (fast-limit)*exp(-d*dt).
inline CellState ct_lstm_step(Tape& tape, const CellParams& cell, const CellState& state,
                              const Tensor& x, double dt) {
    if (!(dt > 0)) throw std::invalid_argument("ct_lstm_step: dt must be positive");
    const std::size_t H = cell.cfg.hidden_size;
    Tensor pre = detail::gate_preact(tape, cell, x, state.h);
    Tensor i = tape.sigmoid(tape.slice_cols(pre, 0, H));
    Tensor f = tape.sigmoid(tape.slice_cols(pre, H, 2 * H));
    Tensor g = tape.tanh(tape.slice_cols(pre, 2 * H, 3 * H));
    Tensor o = tape.sigmoid(tape.slice_cols(pre, 3 * H, 4 * H));
    Tensor i_lim = tape.sigmoid(tape.slice_cols(pre, 4 * H, 5 * H));
    Tensor f_lim = tape.sigmoid(tape.slice_cols(pre, 5 * H, 6 * H));
    Tensor rate = tape.softplus(tape.slice_cols(pre, 6 * H, 7 * H));

    Tensor c_fast = tape.add(tape.mul(f, state.c), tape.mul(i, g));
    Tensor c_lim = tape.add(tape.mul(f_lim, state.c_limit), tape.mul(i_lim, g));
    Tensor decay = tape.exp(tape.mul_scalar(rate, -dt));
    Tensor c_dt = tape.add(c_lim, tape.mul(tape.sub(c_fast, c_lim), decay));

    CellState next = state;
    next.c = c_dt;
    next.c_limit = c_lim;
    next.h = tape.mul(o, tape.tanh(c_dt));
    return next;
}

/// ODE-RNN with augmented state: the concatenated [hidden | augment] vector
/// evolves under a two-layer tanh field between observations, then a
/// GRU-style update mixes the observation into the hidden block.
inline CellState ode_rnn_anode_step(Tape& tape, const CellParams& cell, const CellState& state,
                                    const Tensor& x, double dt) {
    if (!(dt > 0)) throw std::invalid_argument("ode_rnn_anode_step: dt must be positive");
    const std::size_t H = cell.cfg.hidden_size;
    const std::size_t S = cell.cfg.state_size();
    const std::size_t B = x.rows();

    OdeField field = [&](Tape& tp, double, const Tensor& h) {
        Tensor hidden = tp.tanh(tp.add(tp.matmul(h, cell.params.at("f_w1")),
                                       tp.expand_rows(cell.params.at("f_b1"), B)));
        return tp.add(tp.matmul(hidden, cell.params.at("f_w2")),
                      tp.expand_rows(cell.params.at("f_b2"), B));
    };
    Tensor evolved = integrate(tape, field, state.h, 0.0, dt, cell.cfg.solver);

    Tensor h_obs = detail::gru_update(
        tape, cell, x, S == H ? evolved : tape.slice_cols(evolved, 0, H));
    CellState next = state;
    next.h = S == H ? h_obs : tape.concat_cols(h_obs, tape.slice_cols(evolved, H, S));
    return next;
}

/// Per-step timing: absolute hour per batch row (phased LSTM) and hours
/// elapsed since the previous observation (continuous-time cells).
struct StepTiming {
    Tensor t_abs;
    double dt = 1.0;
};

inline CellState cell_step(Tape& tape, const CellParams& cell, const CellState& state,
                           const Tensor& x, const StepTiming& timing) {
    switch (cell.cfg.kind) {
        case CellKind::kVanillaRnn:
            return vanilla_step(tape, cell, state, x);
        case CellKind::kLstm:
            return lstm_step(tape, cell, state, x);
        case CellKind::kPhasedLstm:
            return phased_lstm_step(tape, cell, state, x, timing.t_abs);
        case CellKind::kGruD: {
            // fully observed, regularly sampled: all-ones mask, constant gap
            Tensor mask = Tensor::full(x.shape(), 1.0);
            Tensor delta = Tensor::full(x.shape(), timing.dt);
            return gru_d_step(tape, cell, state, x, mask, delta);
        }
        case CellKind::kCtRnn:
            return ct_rnn_step(tape, cell, state, x, timing.dt);
        case CellKind::kCtLstm:
            return ct_lstm_step(tape, cell, state, x, timing.dt);
        case CellKind::kOdeRnnAnode:
            return ode_rnn_anode_step(tape, cell, state, x, timing.dt);
    }
    throw std::invalid_argument("unknown cell kind");
}

/// Linear readout from the hidden block to all P outputs at once.
inline Tensor readout(Tape& tape, const CellParams& cell, const Tensor& h) {
    const std::size_t H = cell.cfg.hidden_size;
    Tensor hh = h.cols() == H ? h : tape.slice_cols(h, 0, H);
    return tape.add(tape.matmul(hh, cell.params.at("out_w")),
                    tape.expand_rows(cell.params.at("out_b"), h.rows()));
}

/// Runs the cell over a window of L steps on an hourly grid and applies the
/// readout to the final hidden state. xs[i] is the [B,F] input at step i;
/// start_hours gives each row's absolute hour for step 0.
inline Tensor sequence_forward(Tape& tape, const CellParams& cell, std::span<const Tensor> xs,
                               std::span<const double> start_hours) {
    if (xs.empty()) throw std::invalid_argument("sequence_forward: empty window");
    const std::size_t B = xs.front().rows();
    if (start_hours.size() != B) {
        throw std::invalid_argument("sequence_forward: start_hours must have one entry per row");
    }
    for (const Tensor& x : xs) {
        if (x.rows() != B || x.cols() != cell.cfg.input_size) {
            throw TensorError("sequence_forward: window feature shape mismatch");
        }
    }
    CellState state = init_state(cell, B);
    std::vector<double> hours(start_hours.begin(), start_hours.end());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        StepTiming timing;
        timing.dt = 1.0;
        if (cell.cfg.kind == CellKind::kPhasedLstm) {
            std::vector<double> t(hours);
            for (double& v : t) v += static_cast<double>(i);
            timing.t_abs = Tensor::from({B}, std::move(t));
        }
        state = cell_step(tape, cell, state, xs[i], timing);
    }
    return readout(tape, cell, state.h);
}

/// Single-window convenience overload: window is L x F row-major.
inline Tensor sequence_forward(Tape& tape, const CellParams& cell,
                               const std::vector<std::vector<double>>& window,
                               double start_hour = 0.0) {
    std::vector<Tensor> xs;
    xs.reserve(window.size());
    for (const auto& row : window) {
        xs.push_back(Tensor::from({1, row.size()}, row));
    }
    const double start[] = {start_hour};
    return sequence_forward(tape, cell, xs, start);
}

}  // namespace flowcast
