// Command-line front end: synthetic data generation, ingestion, ARIMA
// fitting, RNN training, grid search, comparison tables and plots.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "flowcast/checkpoint.hpp"
#include "flowcast/datapipe.hpp"
#include "flowcast/harness.hpp"
#include "flowcast/plot.hpp"

namespace fs = std::filesystem;
using namespace flowcast;

namespace {

void ensure_writable(const fs::path& path, bool force) {
    if (fs::exists(path) && !force) {
        throw std::invalid_argument(path.string() + " already exists; rerun with --force");
    }
}

void announce(const fs::path& path) { std::cout << "wrote " << path.string() << "\n"; }

std::pair<int, int> parse_year_range(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) {
        throw std::invalid_argument("expected year range like 2017:2019, got '" + s + "'");
    }
    return {std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
}

std::vector<int> parse_year_list(const std::string& s) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        out.push_back(std::stoi(s.substr(pos, comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

HourIndex parse_hour_arg(const std::string& s) {
    if (s.find(':') != std::string::npos) return hour_of_seconds(parse_timestamp_seconds(s));
    return static_cast<HourIndex>(parse_date(s)) * 24;
}

struct SplitArgs {
    std::string train_years = "2017,2018";
    int test_year = 2019;
    std::size_t seq_length = 30;
};

void add_split_options(CLI::App* cmd, SplitArgs& args) {
    cmd->add_option("--train-years", args.train_years, "training years, comma separated");
    cmd->add_option("--test-year", args.test_year, "held-out test year");
    cmd->add_option("--seq-length", args.seq_length, "input window length");
}

struct LoadedSplits {
    FeatureFrame frame;
    RowRange train_range;
    RowRange test_range;
    std::size_t seq_length = 30;
};

LoadedSplits load_splits(const std::string& frame_path, const SplitArgs& args) {
    LoadedSplits out;
    out.frame = load_frame(frame_path);
    out.seq_length = args.seq_length;
    const std::vector<int> train_years = parse_year_list(args.train_years);
    std::tie(out.train_range, out.test_range) =
        split_by_year(out.frame, train_years, args.test_year);
    return out;
}

std::string run_stem(CellKind kind, const TrainConfig& cfg) {
    std::ostringstream os;
    os << to_string(kind) << '_' << features_tag(cfg.use_external_features) << '_'
       << cfg.hidden_size << '_' << to_string(cfg.loss.kind) << '_'
       << (cfg.normalize_visitors ? "norm" : "raw") << "_s" << cfg.seed;
    return os.str();
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::uint64_t seed = 0;
    std::string years = "2017:2019";
    std::size_t pois = 32;
    std::string out_dir = "data";
    bool force = false;
};

void run_synth(const SynthArgs& args) {
    auto [y0, y1] = parse_year_range(args.years);
    SynthConfig cfg = SynthConfig::make_default(args.pois, y0, y1, args.seed);
    SynthData data = synth_generate(cfg);
    fs::create_directories(args.out_dir);
    const fs::path dir(args.out_dir);
    for (const char* name : {"entries.csv", "weather.csv", "holidays.csv", "manifest.txt"}) {
        ensure_writable(dir / name, args.force);
    }
    write_entries_csv((dir / "entries.csv").string(), data.entries);
    write_weather_csv((dir / "weather.csv").string(), data.weather);
    write_holidays_csv((dir / "holidays.csv").string(), data.holidays);
    write_manifest((dir / "manifest.txt").string(), cfg);
    for (const char* name : {"entries.csv", "weather.csv", "holidays.csv", "manifest.txt"}) {
        announce(dir / name);
    }
}

struct IngestArgs {
    std::string entries, weather, holidays;
    std::string out = "frame.bin";
    std::string train_years = "2017,2018";
    std::size_t pois = 0;  // 0 = infer
    bool force = false;
};

void run_ingest(const IngestArgs& args) {
    ensure_writable(args.out, args.force);
    std::vector<EntryRecord> entries = read_entries_csv(args.entries);
    if (entries.empty()) throw std::invalid_argument(args.entries + ": no entries");
    std::vector<WeatherRecord> weather = read_weather_csv(args.weather);
    std::vector<HolidayRecord> holidays = read_holidays_csv(args.holidays);

    std::size_t pois = args.pois;
    HourIndex lo = hour_of_seconds(entries.front().t_seconds);
    HourIndex hi = lo;
    for (const auto& e : entries) {
        const HourIndex h = hour_of_seconds(e.t_seconds);
        lo = std::min(lo, h);
        hi = std::max(hi, h);
        if (pois == 0 || static_cast<std::size_t>(e.poi_id) >= pois) {
            pois = std::max(pois, static_cast<std::size_t>(e.poi_id) + 1);
        }
    }
    // full calendar years so absent hours become explicit zeros
    const HourIndex start = hour_index(year_of_hour(lo), 1, 1, 0);
    const HourIndex end = hour_index(year_of_hour(hi) + 1, 1, 1, 0);

    HourlyPanel panel = aggregate_hourly(entries, start, end, pois);
    FeatureBuildConfig cfg;
    cfg.train_years = parse_year_list(args.train_years);
    FeatureFrame frame = build_features(panel, holidays, weather, cfg);
    for (const auto& w : frame.warnings) std::cerr << "warning: " << w << "\n";
    save_frame(frame, args.out);
    announce(args.out);
}

struct FitArimaArgs {
    std::string frame;
    SplitArgs split;
    std::string out_dir = "arima";
    int refit_every = 168;
    bool hourly_refit = false;
    bool evaluate = false;
    std::string predictions;
    std::size_t workers = 0;
    bool force = false;
};

void run_fit_arima(const FitArimaArgs& args) {
    LoadedSplits data = load_splits(args.frame, args.split);
    const FeatureFrame& frame = data.frame;
    fs::create_directories(args.out_dir);
    const fs::path dir(args.out_dir);
    ensure_writable(dir / "arima_orders.csv", args.force);
    const std::size_t workers = args.workers ? args.workers : default_worker_count();
    const int refit = args.hourly_refit ? 1 : args.refit_every;

    const RowRange train = data.train_range;
    const RowRange test = data.test_range;
    if (!args.evaluate) {
        // order selection + fit only
        std::ofstream out(dir / "arima_orders.csv", std::ios::trunc);
        out << "poi,p,d,q,aic,converged\n";
        std::vector<std::string> lines(frame.poi_count);
        run_parallel(frame.poi_count, workers, [&](std::size_t p) {
            std::vector<double> series;
            for (std::size_t t = train.begin; t < train.end; ++t) {
                series.push_back(frame.raw_count(t, p));
            }
            AutoSelectReport rep = auto_select_report(series);
            auto [model, report] = css_fit(series, rep.order);
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%zu,%d,%d,%d,%.3f,%d", p, rep.order.p, rep.order.d,
                          rep.order.q, report.aic, report.converged ? 1 : 0);
            lines[p] = buf;
        });
        for (const auto& l : lines) out << l << '\n';
        announce(dir / "arima_orders.csv");
        return;
    }

    ArimaBenchmark bench =
        run_arima_baseline(frame, train, test, args.split.seq_length, refit, workers);
    {
        std::ofstream out(dir / "arima_orders.csv", std::ios::trunc);
        out << "poi,p,d,q,aic,converged\n";
        for (const auto& r : bench.per_poi) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%zu,%d,%d,%d,%.3f,%d", r.poi, r.order.p, r.order.d,
                          r.order.q, r.report.aic, r.report.converged ? 1 : 0);
            out << buf << '\n';
        }
    }
    announce(dir / "arima_orders.csv");
    {
        ensure_writable(dir / "arima_metrics.csv", args.force);
        std::ofstream out(dir / "arima_metrics.csv", std::ios::trunc);
        out << "mae,rmse,total_step_ms,params,fit_seconds\n";
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.4f,%zu,%.2f", bench.pooled.mae,
                      bench.pooled.rmse, bench.total_step_ms, bench.params, bench.fit_seconds);
        out << buf << '\n';
    }
    announce(dir / "arima_metrics.csv");
    if (!args.predictions.empty()) {
        ensure_writable(args.predictions, args.force);
        std::vector<PredictionRecord> records;
        for (std::size_t t = test.begin + args.split.seq_length; t < test.end; ++t) {
            for (std::size_t p = 0; p < frame.poi_count; ++p) {
                const double yhat = std::max(0.0, bench.per_poi[p].predictions[t - test.begin]);
                records.push_back({"ARIMA", p, frame.hour_of_row(t), frame.raw_count(t, p), yhat});
            }
        }
        write_predictions_csv(args.predictions, records);
        announce(args.predictions);
    }
}

struct TrainArgs {
    std::string frame;
    SplitArgs split;
    std::string model = "lstm";
    std::size_t hidden = 32;
    std::string loss = "mse";
    std::size_t epochs = 300;
    std::size_t batch = 16;
    std::uint64_t seed = 1;
    bool no_normalize = false;
    bool external = false;
    std::string solver = "rk4";
    int solver_steps = 4;
    std::string out_dir = "runs";
    std::string ledger;
    std::string predictions;
    bool force = false;
};

TrainConfig config_from(const TrainArgs& args) {
    TrainConfig cfg;
    cfg.sequence_length = args.split.seq_length;
    cfg.batch_size = args.batch;
    cfg.epochs = args.epochs;
    cfg.hidden_size = args.hidden;
    const auto loss = loss_kind_from_string(args.loss);
    if (!loss) throw std::invalid_argument("unknown loss '" + args.loss + "'");
    cfg.loss.kind = *loss;
    cfg.normalize_visitors = !args.no_normalize;
    cfg.use_external_features = args.external;
    cfg.seed = args.seed;
    const auto method = solver_method_from_string(args.solver);
    if (!method) throw std::invalid_argument("unknown solver '" + args.solver + "'");
    cfg.solver.method = *method;
    cfg.solver.steps_per_unit = args.solver_steps;
    cfg.validate();
    return cfg;
}

void run_train(const TrainArgs& args) {
    const auto kind = cell_kind_from_string(args.model);
    if (!kind) throw std::invalid_argument("unknown model '" + args.model + "'");
    TrainConfig cfg = config_from(args);
    LoadedSplits data = load_splits(args.frame, args.split);
    WindowedDataset train_ds = window(data.frame, data.train_range, data.seq_length);
    WindowedDataset test_ds = window(data.frame, data.test_range, data.seq_length);
    fs::create_directories(args.out_dir);
    const fs::path dir(args.out_dir);
    const std::string stem = run_stem(*kind, cfg);
    const fs::path ckpt = dir / (stem + ".ckpt");
    ensure_writable(ckpt, args.force);

    DatasetView train_view(train_ds, cfg.use_external_features, cfg.normalize_visitors);
    DatasetView test_view(test_ds, cfg.use_external_features, cfg.normalize_visitors);
    TrainedModel trained = train(*kind, train_view, cfg);
    RunResult result = trained.result;
    std::vector<PredictionRecord> records;
    if (result.status == "ok") {
        EvalOptions opts;
        opts.model_label = display_name(*kind);
        if (!args.predictions.empty()) opts.predictions_out = &records;
        result = evaluate(trained.cell, test_view, std::move(result), opts);
    } else {
        std::cerr << "training aborted: " << result.status << "\n";
    }

    save_checkpoint(trained.cell.params, ckpt.string());
    announce(ckpt);
    const std::string ledger_path =
        args.ledger.empty() ? (dir / "ledger.csv").string() : args.ledger;
    append_ledger_row(ledger_path, ledger_row_from(result));
    announce(ledger_path);
    if (!args.predictions.empty() && result.status == "ok") {
        ensure_writable(args.predictions, args.force);
        write_predictions_csv(args.predictions, records);
        announce(args.predictions);
    }
    std::cout << to_string(*kind) << ": mae=" << result.mae << " rmse=" << result.rmse
              << " train_s=" << result.train_seconds << " predict_ms=" << result.predict_ms
              << " params=" << result.parameter_count << " status=" << result.status << "\n";
}

struct GridArgs {
    std::string frame;
    SplitArgs split;
    std::string model = "all";
    std::string features = "both";
    std::size_t epochs = 300;
    std::size_t batch = 16;
    int seeds = 3;
    std::string sizes = "32,64,128";
    std::string losses = "mse,mae,huber";
    std::string solver = "rk4";
    int solver_steps = 4;
    std::string ledger = "ledger.csv";
    std::size_t workers = 0;
};

void run_grid(const GridArgs& args) {
    LoadedSplits data = load_splits(args.frame, args.split);
    WindowedDataset train_ds = window(data.frame, data.train_range, data.seq_length);
    WindowedDataset test_ds = window(data.frame, data.test_range, data.seq_length);
    std::vector<CellKind> kinds;
    if (args.model == "all") {
        kinds.assign(kAllCellKinds.begin(), kAllCellKinds.end());
    } else {
        const auto kind = cell_kind_from_string(args.model);
        if (!kind) throw std::invalid_argument("unknown model '" + args.model + "'");
        kinds.push_back(*kind);
    }
    std::vector<bool> feature_modes;
    if (args.features == "both") feature_modes = {false, true};
    else if (args.features == "vis") feature_modes = {false};
    else if (args.features == "ext") feature_modes = {true};
    else throw std::invalid_argument("--features must be vis, ext or both");

    GridSpec spec;
    spec.seeds_per_config = args.seeds;
    spec.sizes.clear();
    for (const auto& s : parse_year_list(args.sizes)) spec.sizes.push_back(static_cast<std::size_t>(s));
    spec.losses.clear();
    for (std::size_t pos = 0, next = 0; pos <= args.losses.size(); pos = next + 1) {
        next = args.losses.find(',', pos);
        const std::string name = args.losses.substr(pos, next - pos);
        const auto k = loss_kind_from_string(name);
        if (!k) throw std::invalid_argument("unknown loss '" + name + "'");
        spec.losses.push_back(*k);
        if (next == std::string::npos) break;
    }

    TrainConfig base;
    base.sequence_length = args.split.seq_length;
    base.batch_size = args.batch;
    base.epochs = args.epochs;
    const auto method = solver_method_from_string(args.solver);
    if (!method) throw std::invalid_argument("unknown solver '" + args.solver + "'");
    base.solver.method = *method;
    base.solver.steps_per_unit = args.solver_steps;

    const std::size_t workers = args.workers ? args.workers : default_worker_count();
    for (CellKind kind : kinds) {
        for (bool ext : feature_modes) {
            TrainConfig cfg = base;
            cfg.use_external_features = ext;
            LedgerRow best = grid_search(kind, data.frame, train_ds, test_ds, spec, cfg,
                                         args.ledger, workers);
            std::cout << "best " << to_string(kind) << " (" << features_tag(ext)
                      << "): rmse=" << best.rmse << " mae=" << best.mae << " hidden=" << best.hidden
                      << " loss=" << best.loss << " normalized=" << best.normalized
                      << " seed=" << best.seed << "\n";
        }
    }
    announce(args.ledger);
}

struct CompareArgs {
    std::string ledger = "ledger.csv";
    std::string arima_metrics;
    std::string out = "compare.csv";
    bool force = false;
};

void run_compare(const CompareArgs& args) {
    if (!fs::exists(args.ledger)) {
        throw std::invalid_argument("missing run ledger '" + args.ledger +
                                    "'; run the grid command first");
    }
    std::vector<LedgerRow> ledger = read_ledger(args.ledger);
    ArimaBenchmark arima;
    if (!args.arima_metrics.empty()) {
        if (!fs::exists(args.arima_metrics)) {
            throw std::invalid_argument("missing ARIMA metrics '" + args.arima_metrics +
                                        "'; run fit-arima --evaluate first");
        }
        csv::for_each_row(args.arima_metrics, "mae,rmse,total_step_ms,params,fit_seconds",
                          [&](std::size_t line, const auto& fields) {
                              if (fields.size() != 5) {
                                  throw csv::ParseError(args.arima_metrics, line, "want 5 fields");
                              }
                              arima.pooled.mae = csv::to_double(fields[0], args.arima_metrics, line);
                              arima.pooled.rmse = csv::to_double(fields[1], args.arima_metrics, line);
                              arima.pooled.n = 1;
                              arima.total_step_ms =
                                  csv::to_double(fields[2], args.arima_metrics, line);
                              arima.params = static_cast<std::size_t>(
                                  csv::to_long(fields[3], args.arima_metrics, line));
                              arima.fit_seconds =
                                  csv::to_double(fields[4], args.arima_metrics, line);
                          });
    } else {
        throw std::invalid_argument("--arima <metrics csv> is required; run fit-arima --evaluate");
    }
    ensure_writable(args.out, args.force);
    std::vector<CompareRow> rows = compare_with_arima(ledger, arima);
    write_compare_csv(args.out, rows);
    announce(args.out);
    for (const auto& r : rows) {
        std::cout << r.model << ": cells=" << r.cells << " params=" << r.params;
        if (r.mae_vis) std::cout << " mae_vis=" << *r.mae_vis << " rmse_vis=" << *r.rmse_vis;
        if (r.mae_ext) std::cout << " mae_ext=" << *r.mae_ext << " rmse_ext=" << *r.rmse_ext;
        std::cout << "\n";
    }
}

struct PlotArgs {
    std::string predictions;
    std::size_t poi = 0;
    std::string from, to;
    std::string out = "plot.svg";
    bool force = false;
};

void run_plot(const PlotArgs& args) {
    ensure_writable(args.out, args.force);
    std::vector<PredictionRecord> records = read_predictions_csv(args.predictions);
    plot_series(records, args.poi, parse_hour_arg(args.from), parse_hour_arg(args.to), args.out);
    announce(args.out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowcast: hourly visitor-flow forecasting benchmark"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    synth->add_option("--seed", synth_args.seed, "rng seed");
    synth->add_option("--years", synth_args.years, "year range, e.g. 2017:2019");
    synth->add_option("--pois", synth_args.pois, "number of POIs");
    synth->add_option("--out", synth_args.out_dir, "output directory");
    synth->add_flag("--force", synth_args.force, "overwrite existing artifacts");
    synth->set_config("--config");
    synth->callback([&] { run_synth(synth_args); });

    IngestArgs ingest_args;
    CLI::App* ingest = app.add_subcommand("ingest", "build and cache a feature frame");
    ingest->add_option("--entries", ingest_args.entries, "entries csv")->required();
    ingest->add_option("--weather", ingest_args.weather, "weather csv")->required();
    ingest->add_option("--holidays", ingest_args.holidays, "holidays csv")->required();
    ingest->add_option("--out", ingest_args.out, "output frame file");
    ingest->add_option("--train-years", ingest_args.train_years,
                       "years whose rows define normalization statistics");
    ingest->add_option("--pois", ingest_args.pois, "POI count (default: infer)");
    ingest->add_flag("--force", ingest_args.force, "overwrite existing artifacts");
    ingest->set_config("--config");
    ingest->callback([&] { run_ingest(ingest_args); });

    FitArimaArgs arima_args;
    CLI::App* arima = app.add_subcommand("fit-arima", "per-POI order selection and fitting");
    arima->add_option("--frame", arima_args.frame, "feature frame")->required();
    add_split_options(arima, arima_args.split);
    arima->add_option("--out-dir", arima_args.out_dir, "output directory");
    arima->add_option("--refit-every", arima_args.refit_every,
                      "observations between refits during rolling evaluation (0 disables)");
    arima->add_flag("--hourly-refit", arima_args.hourly_refit, "refit before every prediction");
    arima->add_flag("--evaluate", arima_args.evaluate, "rolling one-step evaluation on the test year");
    arima->add_option("--predictions", arima_args.predictions, "also write predictions csv");
    arima->add_option("--workers", arima_args.workers, "worker pool width");
    arima->add_flag("--force", arima_args.force, "overwrite existing artifacts");
    arima->set_config("--config");
    arima->callback([&] { run_fit_arima(arima_args); });

    TrainArgs train_args;
    CLI::App* traincmd = app.add_subcommand("train", "train one model configuration");
    traincmd->add_option("--frame", train_args.frame, "feature frame")->required();
    add_split_options(traincmd, train_args.split);
    traincmd->add_option("--model", train_args.model, "cell kind");
    traincmd->add_option("--hidden", train_args.hidden, "hidden size");
    traincmd->add_option("--loss", train_args.loss, "mse, mae or huber");
    traincmd->add_option("--epochs", train_args.epochs, "training epochs");
    traincmd->add_option("--batch", train_args.batch, "batch size");
    traincmd->add_option("--seed", train_args.seed, "run seed");
    traincmd->add_flag("--no-normalize", train_args.no_normalize, "train on raw visitor counts");
    traincmd->add_flag("--external-features", train_args.external,
                       "use calendar/holiday/weather inputs");
    traincmd->add_option("--solver", train_args.solver, "euler or rk4");
    traincmd->add_option("--solver-steps", train_args.solver_steps, "solver steps per hour");
    traincmd->add_option("--out-dir", train_args.out_dir, "artifact directory");
    traincmd->add_option("--ledger", train_args.ledger, "run ledger csv");
    traincmd->add_option("--predictions", train_args.predictions, "write predictions csv");
    traincmd->add_flag("--force", train_args.force, "overwrite existing artifacts");
    traincmd->set_config("--config");
    traincmd->callback([&] { run_train(train_args); });

    GridArgs grid_args;
    CLI::App* grid = app.add_subcommand("grid", "grid search per model kind");
    grid->add_option("--frame", grid_args.frame, "feature frame")->required();
    add_split_options(grid, grid_args.split);
    grid->add_option("--model", grid_args.model, "cell kind or 'all'");
    grid->add_option("--features", grid_args.features, "vis, ext or both");
    grid->add_option("--epochs", grid_args.epochs, "training epochs");
    grid->add_option("--batch", grid_args.batch, "batch size");
    grid->add_option("--seeds", grid_args.seeds, "seeds per configuration");
    grid->add_option("--sizes", grid_args.sizes, "hidden sizes, comma separated");
    grid->add_option("--losses", grid_args.losses, "loss kinds, comma separated");
    grid->add_option("--solver", grid_args.solver, "euler or rk4");
    grid->add_option("--solver-steps", grid_args.solver_steps, "solver steps per hour");
    grid->add_option("--ledger", grid_args.ledger, "run ledger csv");
    grid->add_option("--workers", grid_args.workers, "worker pool width");
    grid->set_config("--config");
    grid->callback([&] { run_grid(grid_args); });

    CompareArgs compare_args;
    CLI::App* compare = app.add_subcommand("compare", "emit the model comparison table");
    compare->add_option("--ledger", compare_args.ledger, "run ledger csv");
    compare->add_option("--arima", compare_args.arima_metrics, "arima metrics csv");
    compare->add_option("--out", compare_args.out, "output csv");
    compare->add_flag("--force", compare_args.force, "overwrite existing artifacts");
    compare->set_config("--config");
    compare->callback([&] { run_compare(compare_args); });

    PlotArgs plot_args;
    CLI::App* plot = app.add_subcommand("plot", "render predictions as an SVG line chart");
    plot->add_option("--predictions", plot_args.predictions, "predictions csv")->required();
    plot->add_option("--poi", plot_args.poi, "POI index")->required();
    plot->add_option("--from", plot_args.from, "start date or timestamp")->required();
    plot->add_option("--to", plot_args.to, "end date or timestamp (exclusive)")->required();
    plot->add_option("--out", plot_args.out, "output svg");
    plot->add_flag("--force", plot_args.force, "overwrite existing artifacts");
    plot->set_config("--config");
    plot->callback([&] { run_plot(plot_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
