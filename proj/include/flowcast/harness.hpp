#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "flowcast/arima.hpp"
#include "flowcast/cells.hpp"
#include "flowcast/csv.hpp"
#include "flowcast/datapipe.hpp"
#include "flowcast/loss.hpp"
#include "flowcast/optim.hpp"

namespace flowcast {

// ---------------------------------------------------------------------------
// metrics

struct Metrics {
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t n = 0;
};

class MetricAccumulator {
  public:
    void add(double predicted, double actual) {
        const double e = predicted - actual;
        abs_sum_ += std::fabs(e);
        sq_sum_ += e * e;
        ++n_;
    }

    Metrics finalize() const {
        if (n_ == 0) throw std::invalid_argument("metrics over an empty set");
        Metrics m;
        m.n = n_;
        m.mae = abs_sum_ / static_cast<double>(n_);
        m.rmse = std::sqrt(sq_sum_ / static_cast<double>(n_));
        return m;
    }

  private:
    double abs_sum_ = 0.0;
    double sq_sum_ = 0.0;
    std::size_t n_ = 0;
};

// ---------------------------------------------------------------------------
// worker pool

inline std::size_t default_worker_count() {
    if (const char* env = std::getenv("FLOWCAST_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

/// Runs fn(0..job_count) on a fixed-width pool with dynamic job pickup; the
/// first exception is rethrown after all workers finish.
template <typename Fn>
void run_parallel(std::size_t job_count, std::size_t workers, Fn&& fn) {
    if (job_count == 0) return;
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
        std::size_t i;
        while ((i = next.fetch_add(1)) < job_count) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        const std::size_t width = std::min(workers, job_count);
        threads.reserve(width);
        for (std::size_t w = 0; w < width; ++w) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// configuration

struct TrainConfig {
    std::size_t sequence_length = 30;
    std::size_t batch_size = 16;
    std::size_t epochs = 300;
    std::size_t hidden_size = 32;
    AdamConfig adam;
    LossSpec loss;
    bool normalize_visitors = true;
    bool use_external_features = false;
    std::uint64_t seed = 1;
    SolverConfig solver;
    double grad_clip = 100.0;

    void validate() const {
        if (sequence_length == 0 || batch_size == 0 || epochs == 0 || hidden_size == 0) {
            throw std::invalid_argument("train config sizes must be positive");
        }
        loss.validate();
        solver.validate();
    }
};

inline const char* features_tag(bool external) { return external ? "ext" : "vis"; }

struct RunResult {
    CellKind kind = CellKind::kLstm;
    TrainConfig config;
    double mae = 0.0;
    double rmse = 0.0;
    double train_seconds = 0.0;
    double predict_ms = 0.0;
    std::size_t parameter_count = 0;
    std::vector<double> loss_curve;  // mean training loss per epoch
    std::string status = "ok";
};

struct GridSpec {
    std::vector<LossKind> losses = {LossKind::kMse, LossKind::kMae, LossKind::kHuber};
    std::vector<std::size_t> sizes = {32, 64, 128};
    std::vector<bool> normalize = {true, false};
    int seeds_per_config = 3;

    /// Full cross product, each configuration exactly once.
    std::vector<TrainConfig> enumerate(const TrainConfig& base) const {
        std::vector<TrainConfig> out;
        for (LossKind loss : losses) {
            for (std::size_t size : sizes) {
                for (bool norm : normalize) {
                    for (int s = 1; s <= seeds_per_config; ++s) {
                        TrainConfig cfg = base;
                        cfg.loss.kind = loss;
                        cfg.hidden_size = size;
                        cfg.normalize_visitors = norm;
                        cfg.seed = static_cast<std::uint64_t>(s);
                        out.push_back(cfg);
                    }
                }
            }
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// dataset view: feature-mode column selection and batch assembly

class DatasetView {
  public:
    DatasetView(const WindowedDataset& ds, bool external_features, bool normalized)
        : ds_(&ds), frame_(ds.frame), external_(external_features), normalized_(normalized) {}

    std::size_t input_size() const {
        return external_ ? frame_->feature_count : frame_->poi_count;
    }
    std::size_t output_size() const { return frame_->poi_count; }
    std::size_t size() const { return ds_->size(); }
    const FeatureFrame& frame() const { return *frame_; }
    const WindowedDataset& windows() const { return *ds_; }

    /// Per-feature means over every row of this split (input-decay targets).
    std::vector<double> feature_means() const {
        const std::size_t f_sel = input_size();
        std::vector<double> mean(f_sel, 0.0);
        const RowRange r = ds_->range;
        for (std::size_t t = r.begin; t < r.end; ++t) {
            for (std::size_t f = 0; f < f_sel; ++f) mean[f] += feature_at(t, f);
        }
        for (double& m : mean) m /= static_cast<double>(r.size());
        return mean;
    }

    struct Batch {
        std::vector<Tensor> xs;           // L tensors of shape [B, F]
        std::vector<double> start_hours;  // absolute hour of step 0 per row
        Tensor train_targets;             // [B, P] on the training scale
        std::vector<double> raw_targets;  // B x P visitor counts
        std::vector<std::size_t> target_rows;
    };

    Batch make_batch(std::span<const std::size_t> window_ids, bool with_targets = true) const {
        const std::size_t B = window_ids.size();
        const std::size_t L = ds_->length;
        const std::size_t F = input_size();
        const std::size_t P = frame_->poi_count;
        Batch batch;
        batch.xs.reserve(L);
        for (std::size_t i = 0; i < L; ++i) {
            std::vector<double> buf(B * F);
            for (std::size_t b = 0; b < B; ++b) {
                const std::size_t row = ds_->starts[window_ids[b]] + i;
                for (std::size_t f = 0; f < F; ++f) buf[b * F + f] = feature_at(row, f);
            }
            batch.xs.push_back(Tensor::from({B, F}, std::move(buf)));
        }
        batch.start_hours.reserve(B);
        for (std::size_t b = 0; b < B; ++b) {
            batch.start_hours.push_back(
                static_cast<double>(frame_->hour_of_row(ds_->starts[window_ids[b]])));
        }
        if (with_targets) {
            std::vector<double> train_t(B * P);
            batch.raw_targets.resize(B * P);
            batch.target_rows.resize(B);
            for (std::size_t b = 0; b < B; ++b) {
                const std::size_t row = ds_->starts[window_ids[b]] + L;
                batch.target_rows[b] = row;
                for (std::size_t p = 0; p < P; ++p) {
                    const double raw = frame_->raw_count(row, p);
                    batch.raw_targets[b * P + p] = raw;
                    train_t[b * P + p] = normalized_ ? frame_->normalize_count(p, raw) : raw;
                }
            }
            batch.train_targets = Tensor::from({B, P}, std::move(train_t));
        }
        return batch;
    }

    /// Prediction on the training scale back to visitor counts.
    double denormalize(std::size_t poi, double v) const {
        return normalized_ ? frame_->denormalize_count(poi, v) : v;
    }

  private:
    double feature_at(std::size_t row, std::size_t f_sel) const {
        if (external_) {
            const std::size_t f = f_sel;
            if (!normalized_ && f >= frame_->count_col(0)) {
                return frame_->raw_count(row, f - frame_->count_col(0));
            }
            return frame_->feature(row, f);
        }
        return normalized_ ? frame_->feature(row, frame_->count_col(f_sel))
                           : frame_->raw_count(row, f_sel);
    }

    const WindowedDataset* ds_;
    const FeatureFrame* frame_;
    bool external_;
    bool normalized_;
};

// ---------------------------------------------------------------------------
// training and evaluation

namespace harness_detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t run_seed(CellKind kind, const TrainConfig& cfg) {
    std::uint64_t h = cfg.seed;
    h = splitmix64(h ^ static_cast<std::uint64_t>(kind));
    h = splitmix64(h ^ cfg.hidden_size);
    h = splitmix64(h ^ static_cast<std::uint64_t>(cfg.loss.kind));
    h = splitmix64(h ^ (cfg.normalize_visitors ? 1 : 2));
    h = splitmix64(h ^ (cfg.use_external_features ? 3 : 4));
    return h;
}

}  // namespace harness_detail

struct TrainedModel {
    CellParams cell;
    RunResult result;
};

/// Seeded mini-batch training with BPTT over each window. Shuffling, weight
/// init and batch order depend only on (kind, config), so reruns of a grid
/// cell are bitwise reproducible.
inline TrainedModel train(CellKind kind, const DatasetView& data, const TrainConfig& cfg) {
    cfg.validate();
    CellConfig cell_cfg;
    cell_cfg.kind = kind;
    cell_cfg.hidden_size = cfg.hidden_size;
    cell_cfg.input_size = data.input_size();
    cell_cfg.output_size = data.output_size();
    cell_cfg.solver = cfg.solver;

    TrainedModel out;
    const std::uint64_t seed = harness_detail::run_seed(kind, cfg);
    out.cell = make_cell_params(cell_cfg, seed);
    if (kind == CellKind::kGruD) {
        out.cell.params.set_values("x_mean", data.feature_means());
    }
    out.result.kind = kind;
    out.result.config = cfg;
    out.result.parameter_count = out.cell.parameter_count();

    std::vector<Tensor> trainable = out.cell.params.trainable();
    AdamState adam(trainable, cfg.adam);
    std::mt19937_64 shuffle_rng(harness_detail::splitmix64(seed ^ 0xfeedull));

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    const auto t0 = std::chrono::steady_clock::now();
    Tape tape;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
            const std::size_t take = std::min(cfg.batch_size, order.size() - at);
            auto batch = data.make_batch({order.data() + at, take});
            try {
                Tensor pred = sequence_forward(tape, out.cell, batch.xs, batch.start_hours);
                Tensor loss = compute_loss(tape, cfg.loss, pred, batch.train_targets);
                epoch_loss += loss.item();
                tape.backward(loss);
                const double norm = clip_grad_norm(trainable, cfg.grad_clip);
                if (!std::isfinite(norm)) throw TensorError("non-finite gradient norm");
                adam_step(trainable, adam);
            } catch (const std::runtime_error& e) {
                out.result.status = std::string("diverged: ") + e.what();
                out.result.train_seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                return out;
            }
            zero_grads(trainable);
            tape.clear();
            ++batches;
        }
        out.result.loss_curve.push_back(epoch_loss / static_cast<double>(batches));
    }
    out.result.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

struct PredictionRecord {
    std::string model;
    std::size_t poi = 0;
    HourIndex hour = 0;
    double y_true = 0.0;
    double y_pred = 0.0;
};

struct EvalOptions {
    bool clamp_negative = true;
    std::size_t latency_reps = 100;
    std::size_t batch_size = 64;
    std::vector<PredictionRecord>* predictions_out = nullptr;
    std::string model_label;
};

/// Pooled MAE/RMSE in visitor-count units over all test windows and POIs,
/// plus the median latency of a single all-POI prediction.
inline RunResult evaluate(const CellParams& cell, const DatasetView& test,
                          RunResult partial, const EvalOptions& opts = {}) {
    if (test.size() == 0) throw std::invalid_argument("evaluate: empty test set");
    Tape tape;
    tape.set_recording(false);
    MetricAccumulator acc;
    const std::size_t P = test.output_size();
    std::vector<std::size_t> ids(test.size());
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t at = 0; at < ids.size(); at += opts.batch_size) {
        const std::size_t take = std::min(opts.batch_size, ids.size() - at);
        auto batch = test.make_batch({ids.data() + at, take});
        Tensor pred = sequence_forward(tape, cell, batch.xs, batch.start_hours);
        for (std::size_t b = 0; b < take; ++b) {
            for (std::size_t p = 0; p < P; ++p) {
                double yhat = test.denormalize(p, pred.value()[b * P + p]);
                if (opts.clamp_negative) yhat = std::max(0.0, yhat);
                const double y = batch.raw_targets[b * P + p];
                acc.add(yhat, y);
                if (opts.predictions_out) {
                    opts.predictions_out->push_back(
                        {opts.model_label.empty() ? to_string(partial.kind) : opts.model_label, p,
                         test.frame().hour_of_row(batch.target_rows[b]), y, yhat});
                }
            }
        }
        tape.clear();
    }
    const Metrics m = acc.finalize();
    partial.mae = m.mae;
    partial.rmse = m.rmse;
    if (partial.rmse + 1e-12 < partial.mae) {
        throw std::logic_error("rmse < mae; metric accumulation is broken");
    }

    // median single-prediction latency over repeated runs of one window
    const std::size_t one[] = {0};
    auto single = test.make_batch(one, /*with_targets=*/false);
    std::vector<double> times;
    times.reserve(opts.latency_reps);
    for (std::size_t rep = 0; rep < 3; ++rep) {
        sequence_forward(tape, cell, single.xs, single.start_hours);  // warmup
    }
    for (std::size_t rep = 0; rep < opts.latency_reps; ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        sequence_forward(tape, cell, single.xs, single.start_hours);
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    partial.predict_ms = times[times.size() / 2];
    return partial;
}

// ---------------------------------------------------------------------------
// baselines

/// Forecast equal to the value observed exactly lag_hours earlier.
inline Metrics seasonal_naive_metrics(const FeatureFrame& frame, RowRange test,
                                      std::size_t eval_from, int lag_hours = 168) {
    MetricAccumulator acc;
    for (std::size_t t = test.begin + eval_from; t < test.end; ++t) {
        if (static_cast<long>(t) - lag_hours < 0) continue;
        for (std::size_t p = 0; p < frame.poi_count; ++p) {
            acc.add(frame.raw_count(t - lag_hours, p), frame.raw_count(t, p));
        }
    }
    return acc.finalize();
}

struct ArimaPoiResult {
    std::size_t poi = 0;
    ArimaOrder order;
    FitReport report;
    double mean_step_seconds = 0.0;
    std::vector<double> predictions;  // aligned with test rows
};

struct ArimaBenchmark {
    std::vector<ArimaPoiResult> per_poi;
    Metrics pooled;           // over rows >= test.begin + eval_from
    double total_step_ms = 0; // sum over POIs of mean rolling-step latency
    double fit_seconds = 0;
    std::size_t params = 0;   // fitted coefficient count across POIs
};

/// Per-POI order selection + CSS fit on the training split, then rolling
/// one-step-ahead evaluation across the test split.
inline ArimaBenchmark run_arima_baseline(const FeatureFrame& frame, RowRange train, RowRange test,
                                         std::size_t eval_from, int refit_every,
                                         std::size_t workers, bool clamp_negative = true) {
    const std::size_t P = frame.poi_count;
    ArimaBenchmark bench;
    bench.per_poi.resize(P);
    const auto t0 = std::chrono::steady_clock::now();
    run_parallel(P, workers, [&](std::size_t p) {
        std::vector<double> series;
        series.reserve(train.size());
        for (std::size_t t = train.begin; t < train.end; ++t) series.push_back(frame.raw_count(t, p));
        ArimaPoiResult r;
        r.poi = p;
        r.order = auto_select(series);
        auto [model, report] = css_fit(series, r.order);
        r.report = report;
        model.refit_every = refit_every;
        std::vector<double> test_series;
        test_series.reserve(test.size());
        for (std::size_t t = test.begin; t < test.end; ++t) test_series.push_back(frame.raw_count(t, p));
        RollingResult rolling = rolling_evaluate(model, test_series);
        double total = 0;
        for (double s : rolling.step_seconds) total += s;
        r.mean_step_seconds = total / static_cast<double>(rolling.step_seconds.size());
        r.predictions = std::move(rolling.predictions);
        bench.per_poi[p] = std::move(r);
    });
    bench.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    MetricAccumulator acc;
    for (std::size_t t = test.begin + eval_from; t < test.end; ++t) {
        for (std::size_t p = 0; p < P; ++p) {
            double yhat = bench.per_poi[p].predictions[t - test.begin];
            if (clamp_negative) yhat = std::max(0.0, yhat);
            acc.add(yhat, frame.raw_count(t, p));
        }
    }
    bench.pooled = acc.finalize();
    for (const auto& r : bench.per_poi) {
        bench.total_step_ms += r.mean_step_seconds * 1e3;
        bench.params += r.order.p + r.order.q + (r.order.d == 0 ? 1 : 0) + 1;
    }
    return bench;
}

// ---------------------------------------------------------------------------
// run ledger

struct LedgerRow {
    std::string model;
    std::string loss;
    std::size_t hidden = 0;
    bool normalized = true;
    std::string features = "vis";
    std::uint64_t seed = 1;
    double mae = 0, rmse = 0, train_s = 0, predict_ms = 0;
    std::size_t params = 0;
    std::string status = "ok";

    std::string key() const {
        std::ostringstream os;
        os << model << '|' << loss << '|' << hidden << '|' << (normalized ? 1 : 0) << '|'
           << features << '|' << seed;
        return os.str();
    }
};

inline constexpr const char* kLedgerHeader =
    "model,loss,hidden,normalized,features,seed,mae,rmse,train_s,predict_ms,params,status";

inline LedgerRow ledger_row_from(const RunResult& r) {
    LedgerRow row;
    row.model = to_string(r.kind);
    row.loss = to_string(r.config.loss.kind);
    row.hidden = r.config.hidden_size;
    row.normalized = r.config.normalize_visitors;
    row.features = features_tag(r.config.use_external_features);
    row.seed = r.config.seed;
    row.mae = r.mae;
    row.rmse = r.rmse;
    row.train_s = r.train_seconds;
    row.predict_ms = r.predict_ms;
    row.params = r.parameter_count;
    row.status = r.status;
    return row;
}

inline std::vector<LedgerRow> read_ledger(const std::string& path) {
    std::vector<LedgerRow> rows;
    std::ifstream probe(path);
    if (!probe) return rows;
    probe.close();
    csv::for_each_row(path, kLedgerHeader, [&](std::size_t line, const auto& fields) {
        if (fields.size() != 12) throw csv::ParseError(path, line, "want 12 fields");
        LedgerRow r;
        r.model = std::string(csv::trim(fields[0]));
        r.loss = std::string(csv::trim(fields[1]));
        r.hidden = static_cast<std::size_t>(csv::to_long(fields[2], path, line));
        r.normalized = csv::to_long(fields[3], path, line) != 0;
        r.features = std::string(csv::trim(fields[4]));
        r.seed = static_cast<std::uint64_t>(csv::to_long(fields[5], path, line));
        r.mae = csv::to_double(fields[6], path, line);
        r.rmse = csv::to_double(fields[7], path, line);
        r.train_s = csv::to_double(fields[8], path, line);
        r.predict_ms = csv::to_double(fields[9], path, line);
        r.params = static_cast<std::size_t>(csv::to_long(fields[10], path, line));
        r.status = std::string(csv::trim(fields[11]));
        rows.push_back(std::move(r));
    });
    return rows;
}

inline void append_ledger_row(const std::string& path, const LedgerRow& row) {
    const bool exists = static_cast<bool>(std::ifstream(path));
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot write " + path);
    if (!exists) out << kLedgerHeader << '\n';
    char buf[384];
    std::snprintf(buf, sizeof(buf), "%s,%s,%zu,%d,%s,%llu,%.17g,%.17g,%.6f,%.6f,%zu,%s",
                  row.model.c_str(), row.loss.c_str(), row.hidden, row.normalized ? 1 : 0,
                  row.features.c_str(), static_cast<unsigned long long>(row.seed), row.mae,
                  row.rmse, row.train_s, row.predict_ms, row.params, row.status.c_str());
    out << buf << '\n';
}

// ---------------------------------------------------------------------------
// grid search

/// Runs every (loss, size, normalize, seed) cell that is not already in the
/// ledger, appending a row per finished run, and returns the run with the
/// lowest test RMSE for this model kind and feature mode.
inline LedgerRow grid_search(CellKind kind, const FeatureFrame& frame, const WindowedDataset& train_ds,
                             const WindowedDataset& test_ds, const GridSpec& spec,
                             const TrainConfig& base, const std::string& ledger_path,
                             std::size_t workers) {
    std::vector<TrainConfig> configs = spec.enumerate(base);
    std::vector<LedgerRow> existing = read_ledger(ledger_path);
    std::vector<const TrainConfig*> todo;
    for (const TrainConfig& cfg : configs) {
        RunResult probe;
        probe.kind = kind;
        probe.config = cfg;
        const std::string key = ledger_row_from(probe).key();
        const bool done = std::any_of(existing.begin(), existing.end(), [&](const LedgerRow& r) {
            return r.key() == key && r.status == "ok";
        });
        if (!done) todo.push_back(&cfg);
    }
    std::mutex ledger_mutex;
    run_parallel(todo.size(), workers, [&](std::size_t i) {
        const TrainConfig& cfg = *todo[i];
        DatasetView train_view(train_ds, cfg.use_external_features, cfg.normalize_visitors);
        DatasetView test_view(test_ds, cfg.use_external_features, cfg.normalize_visitors);
        TrainedModel trained = train(kind, train_view, cfg);
        RunResult result = trained.result;
        if (result.status == "ok") {
            result = evaluate(trained.cell, test_view, std::move(result));
        }
        std::lock_guard<std::mutex> lock(ledger_mutex);
        append_ledger_row(ledger_path, ledger_row_from(result));
    });

    std::vector<LedgerRow> all = read_ledger(ledger_path);
    const LedgerRow* best = nullptr;
    for (const LedgerRow& r : all) {
        if (r.model != to_string(kind) || r.features != features_tag(base.use_external_features)) {
            continue;
        }
        if (r.status != "ok") continue;
        if (!best || r.rmse < best->rmse) best = &r;
    }
    if (!best) throw std::runtime_error("grid_search: all runs failed for " +
                                        std::string(to_string(kind)));
    return *best;
}

// ---------------------------------------------------------------------------
// comparison table

struct CompareRow {
    std::string model;
    std::string cells;  // hidden size, "-" for ARIMA
    std::size_t params = 0;
    double train_min = 0.0;
    double predict_ms = 0.0;
    std::optional<double> mae_vis, rmse_vis, mae_ext, rmse_ext;
};

inline constexpr const char* kCompareHeader =
    "model,cells,params,train_min,predict_ms,mae_vis,rmse_vis,mae_ext,rmse_ext";

/// Table rows in the fixed report order: ARIMA first, then the DL kinds.
/// ARIMA cannot consume the external features, so those cells stay empty.
inline std::vector<CompareRow> compare_with_arima(std::span<const LedgerRow> ledger,
                                                  const ArimaBenchmark& arima) {
    auto best_of = [&](CellKind kind, const char* features) -> const LedgerRow* {
        const LedgerRow* best = nullptr;
        for (const LedgerRow& r : ledger) {
            if (r.model != to_string(kind) || r.features != features || r.status != "ok") continue;
            if (!best || r.rmse < best->rmse) best = &r;
        }
        return best;
    };

    std::vector<CompareRow> rows;
    CompareRow arow;
    arow.model = "ARIMA";
    arow.cells = "-";
    arow.params = arima.params;
    arow.train_min = 0.0;  // fitting is folded into every rolling step
    arow.predict_ms = arima.total_step_ms;
    arow.mae_vis = arima.pooled.mae;
    arow.rmse_vis = arima.pooled.rmse;
    rows.push_back(std::move(arow));

    const std::array<CellKind, 7> order = {
        CellKind::kOdeRnnAnode, CellKind::kVanillaRnn, CellKind::kLstm, CellKind::kPhasedLstm,
        CellKind::kCtLstm,      CellKind::kCtRnn,      CellKind::kGruD,
    };
    for (CellKind kind : order) {
        const LedgerRow* vis = best_of(kind, "vis");
        const LedgerRow* ext = best_of(kind, "ext");
        if (!vis && !ext) {
            throw std::runtime_error(std::string("compare: no completed runs for ") +
                                     to_string(kind));
        }
        const LedgerRow* primary = vis && ext ? (vis->rmse <= ext->rmse ? vis : ext)
                                              : (vis ? vis : ext);
        CompareRow row;
        row.model = display_name(kind);
        row.cells = std::to_string(primary->hidden);
        row.params = primary->params;
        row.train_min = primary->train_s / 60.0;
        row.predict_ms = primary->predict_ms;
        if (vis) {
            row.mae_vis = vis->mae;
            row.rmse_vis = vis->rmse;
        }
        if (ext) {
            row.mae_ext = ext->mae;
            row.rmse_ext = ext->rmse;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_compare_csv(const std::string& path, std::span<const CompareRow> rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << kCompareHeader << '\n';
    auto cell = [](const std::optional<double>& v) {
        if (!v) return std::string{};
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.4f", *v);
        return std::string(buf);
    };
    for (const auto& r : rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s,%s,%zu,%.3f,%.4f", r.model.c_str(), r.cells.c_str(),
                      r.params, r.train_min, r.predict_ms);
        out << buf << ',' << cell(r.mae_vis) << ',' << cell(r.rmse_vis) << ',' << cell(r.mae_ext)
            << ',' << cell(r.rmse_ext) << '\n';
    }
}

// ---------------------------------------------------------------------------
// prediction records

inline constexpr const char* kPredictionsHeader = "model,poi,timestamp,y_true,y_pred";

inline void write_predictions_csv(const std::string& path,
                                  std::span<const PredictionRecord> records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << kPredictionsHeader << '\n';
    for (const auto& r : records) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s,%zu,%s,%.6f,%.6f", r.model.c_str(), r.poi,
                      format_hour(r.hour).c_str(), r.y_true, r.y_pred);
        out << buf << '\n';
    }
}

inline std::vector<PredictionRecord> read_predictions_csv(const std::string& path) {
    std::vector<PredictionRecord> out;
    csv::for_each_row(path, kPredictionsHeader, [&](std::size_t line, const auto& fields) {
        if (fields.size() != 5) throw csv::ParseError(path, line, "want 5 fields");
        PredictionRecord r;
        r.model = std::string(csv::trim(fields[0]));
        r.poi = static_cast<std::size_t>(csv::to_long(fields[1], path, line));
        try {
            r.hour = hour_of_seconds(parse_timestamp_seconds(fields[2]));
        } catch (const std::invalid_argument& ex) {
            throw csv::ParseError(path, line, ex.what());
        }
        r.y_true = csv::to_double(fields[3], path, line);
        r.y_pred = csv::to_double(fields[4], path, line);
        out.push_back(std::move(r));
    });
    return out;
}

}  // namespace flowcast
