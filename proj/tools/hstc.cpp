// hstc: synthesize, fit, calibrate, run, evaluate and forecast from the
// command line. Every key of the flat config file can also be given as a
// flag of the same name; flags win.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hstc/conformal.hpp"
#include "hstc/csv.hpp"
#include "hstc/error.hpp"
#include "hstc/eval.hpp"
#include "hstc/model_io.hpp"
#include "hstc/panel.hpp"
#include "hstc/random.hpp"
#include "hstc/report_io.hpp"
#include "hstc/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct RunConfig {
    // inputs
    std::string panel;
    std::string events;
    std::string topology;
    std::string covariates;
    std::string model;
    std::string start = "2010-01-01";
    std::string end;
    std::string bin_length = "6M";
    std::string out = "out";

    // pipeline
    double alpha = 0.05;
    std::size_t k = 10;
    std::size_t epochs = 1000;
    double learning_rate = 1e-2;
    double convergence_tol = 1e-8;
    std::string quantile_method = "empirical";
    std::size_t qr_window = 10;
    std::size_t t0 = 0;
    std::size_t cal_len = 40;
    std::size_t test_len = 0;
    std::size_t horizon = 1;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    bool learn_cap = true;
    std::string excitation = "dense";
    bool use_covariates = false;
    bool refit_each_step = false;
    bool half_nodes = false;

    // synth
    std::string preset = "small";
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t bins = 0;
    double cap = 0.0;
};

void add_options(CLI::App& app, RunConfig& c) {
    app.add_option("--panel", c.panel, "Panel JSON (alternative to --events)");
    app.add_option("--events", c.events, "Events CSV: circuit_id,timestamp");
    app.add_option("--topology", c.topology, "Topology CSV: circuit_id,substation_id");
    app.add_option("--covariates", c.covariates, "Covariates CSV: circuit_id,bin_start,cov_1..cov_p");
    app.add_option("--model", c.model, "Use this fitted model instead of fitting");
    app.add_option("--start", c.start, "First bin start for event ingestion (ISO-8601)");
    app.add_option("--end", c.end, "Exclusive end of the ingestion window (ISO-8601)");
    app.add_option("--bin_length", c.bin_length, "Bin width, e.g. 6M, 1Y, 14D");
    app.add_option("--out", c.out, "Output directory");
    app.add_option("--alpha", c.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    app.add_option("--k,--K", c.k, "Scenarios per bin")->check(CLI::PositiveNumber);
    app.add_option("--epochs", c.epochs, "Adam epochs")->check(CLI::PositiveNumber);
    app.add_option("--learning_rate", c.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
    app.add_option("--convergence_tol", c.convergence_tol, "Relative log-likelihood change for early stop");
    app.add_option("--quantile_method", c.quantile_method, "empirical | qr")
        ->check(CLI::IsMember({"empirical", "qr"}));
    app.add_option("--qr_window", c.qr_window, "Lag window for quantile regression")->check(CLI::PositiveNumber);
    app.add_option("--t0", c.t0, "Number of training bins (0: derive from cal_len and test_len)");
    app.add_option("--cal_len", c.cal_len, "Calibration bins when t0 is 0");
    app.add_option("--test_len", c.test_len, "Held-out test bins at the end of the panel");
    app.add_option("--horizon", c.horizon, "Forecast horizon in bins");
    app.add_option("--seed", c.seed, "Root seed; all randomness derives from it");
    app.add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--learn_cap", c.learn_cap, "Fit the saturation cap (false: no saturation)");
    app.add_option("--excitation", c.excitation, "dense | same_substation")
        ->check(CLI::IsMember({"dense", "same_substation"}));
    app.add_option("--use_covariates", c.use_covariates, "Modulate baselines by covariates");
    app.add_option("--refit_each_step", c.refit_each_step, "Refit the model at every test bin");
    app.add_option("--half_nodes", c.half_nodes, "Also run the half-nodes trial when evaluating");
    app.add_option("--preset", c.preset, "Synthetic preset: small | saturating");
    app.add_option("--n", c.n, "Synthetic circuit count (overrides preset)");
    app.add_option("--m", c.m, "Synthetic substation count (overrides preset)");
    app.add_option("--bins", c.bins, "Synthetic bin count (overrides preset)");
    app.add_option("--cap", c.cap, "Synthetic saturation cap (overrides preset; 0 keeps preset)");
}

hstc::PipelineConfig pipeline_config(const RunConfig& c) {
    hstc::PipelineConfig p;
    p.fit.epochs = c.epochs;
    p.fit.learning_rate = c.learning_rate;
    p.fit.convergence_tol = c.convergence_tol;
    p.fit.learn_cap = c.learn_cap;
    p.fit.use_covariates = c.use_covariates;
    p.fit.excitation =
        c.excitation == "dense" ? hstc::ExcitationStructure::dense : hstc::ExcitationStructure::same_substation;
    p.k = c.k;
    p.alpha = c.alpha;
    p.method = hstc::parse_quantile_method(c.quantile_method);
    p.qr_window = c.qr_window;
    p.seed = c.seed;
    p.threads = c.threads;
    return p;
}

// Re-raises with the failing stage named, keeping the error category.
template <class Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const hstc::Error& e) {
        throw hstc::Error(e.kind(), std::string(name) + ": " + e.what());
    }
}

fs::path prepare_out(const RunConfig& c) {
    const fs::path dir(c.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw hstc::PreconditionError("cannot create output directory '" + c.out + "': " + ec.message());
    }
    const fs::path probe = dir / ".hstc_write_probe";
    {
        std::ofstream test(probe);
        if (!test) throw hstc::PreconditionError("output directory '" + c.out + "' is not writable");
    }
    fs::remove(probe, ec);
    return dir;
}

struct Inputs {
    hstc::CountPanel panel;
    hstc::NetworkTopology topology;
};

Inputs load_inputs(const RunConfig& c) {
    return stage("load", [&] {
        if (c.topology.empty()) throw hstc::PreconditionError("--topology is required");
        auto topo = hstc::load_topology_csv(c.topology);
        hstc::CountPanel panel;
        if (!c.panel.empty()) {
            panel = hstc::load_panel(c.panel);
        } else if (!c.events.empty()) {
            if (c.end.empty()) throw hstc::PreconditionError("--end is required with --events");
            panel = hstc::ingest_events(c.events, topo, hstc::BinLength::parse(c.bin_length),
                                        hstc::parse_timestamp(c.start), hstc::parse_timestamp(c.end));
        } else {
            throw hstc::PreconditionError("one of --panel or --events is required");
        }
        if (panel.circuit_ids != topo.circuit_ids()) {
            throw hstc::DataError("panel circuits do not match the topology (same ids in the same order required)");
        }
        if (!c.covariates.empty()) hstc::load_covariates_csv(panel, c.covariates);
        return Inputs{std::move(panel), std::move(topo)};
    });
}

hstc::SplitSpec split_spec(const RunConfig& c, const hstc::CountPanel& panel) {
    hstc::SplitSpec s;
    s.test_bins = c.test_len;
    if (c.t0 != 0) {
        s.train_bins = c.t0;
    } else {
        if (panel.bins() < c.test_len + c.cal_len + 2) {
            throw hstc::PreconditionError("panel too short for cal_len + test_len; set --t0 explicitly");
        }
        s.train_bins = panel.bins() - c.test_len - c.cal_len;
    }
    return s;
}

std::optional<hstc::HawkesModel> maybe_model(const RunConfig& c) {
    if (c.model.empty()) return std::nullopt;
    return stage("load model", [&] { return hstc::load_model(c.model); });
}

int cmd_synth(const RunConfig& c) {
    auto cfg = stage("synth", [&] { return hstc::SyntheticConfig::preset(c.preset); });
    if (c.n) cfg.circuits = c.n;
    if (c.m) cfg.substations = c.m;
    if (c.bins) cfg.bins = c.bins;
    if (c.cap > 0.0) cfg.cap = c.cap;
    cfg.bin_length = hstc::BinLength::parse(c.bin_length);
    cfg.start = c.start;
    const auto data = stage("synth", [&] { return hstc::generate_synthetic(cfg, c.seed); });
    const fs::path dir = prepare_out(c);
    hstc::save_panel(data.panel, dir / "panel.json");
    hstc::save_topology_csv(data.topology, dir / "topology.csv");
    hstc::save_model(data.truth, dir / "truth_model.json");
    hstc::save_events_csv(data.panel, dir / "events.csv");
    std::cout << "synth: n=" << data.topology.n() << " m=" << data.topology.m() << " T=" << data.panel.bins()
              << " events=" << data.panel.total() << '\n';
    return 0;
}

int cmd_fit(const RunConfig& c) {
    const auto in = load_inputs(c);
    const auto spec = split_spec(c, in.panel);
    const auto cfg = pipeline_config(c);
    const auto s = stage("split", [&] { return hstc::split(in.panel, spec); });
    auto fit_cfg = cfg.fit;
    fit_cfg.seed = hstc::derive_seed(cfg.seed, "fit");
    const auto model = stage("fit", [&] { return hstc::fit(hstc::slice_bins(in.panel, s.train), in.topology, fit_cfg); });
    const fs::path dir = prepare_out(c);
    hstc::save_model(model, dir / "model.json");
    std::cout << "fit: epochs=" << model.fit_info.epochs_run
              << " log_likelihood=" << hstc::csv::format_double(model.fit_info.final_log_likelihood)
              << " initial=" << hstc::csv::format_double(model.fit_info.initial_log_likelihood) << '\n';
    return 0;
}

int cmd_calibrate(const RunConfig& c) {
    const auto in = load_inputs(c);
    const auto spec = split_spec(c, in.panel);
    const auto cfg = pipeline_config(c);
    const auto pre = maybe_model(c);
    const auto result = stage("calibrate", [&] {
        return hstc::hst_conformal_pipeline(in.panel, in.topology, spec, cfg, pre ? &*pre : nullptr);
    });
    const fs::path dir = prepare_out(c);
    hstc::save_model(result.audit.model, dir / "model.json");
    hstc::write_text(dir / "scores.json",
                     hstc::scores_to_json(result.audit.scores, result.audit.quantiles, in.topology));
    std::cout << "calibrate: bins=" << result.audit.scores.length() << " circuits=" << in.topology.n() << '\n';
    return 0;
}

int cmd_run(const RunConfig& c) {
    const auto in = load_inputs(c);
    const auto spec = split_spec(c, in.panel);
    const auto cfg = pipeline_config(c);
    const auto pre = maybe_model(c);
    const auto result = stage("run", [&] {
        return hstc::hst_conformal_pipeline(in.panel, in.topology, spec, cfg, pre ? &*pre : nullptr);
    });
    const fs::path dir = prepare_out(c);
    const std::span<const hstc::IntervalForecast> one(&result.forecast, 1);
    hstc::write_circuit_intervals(dir / "circuit_intervals.csv", one, in.topology);
    hstc::write_substation_intervals(dir / "substation_intervals.csv", one, in.topology);
    hstc::write_audit(dir / "audit.json", result, in.topology);
    hstc::save_model(result.audit.model, dir / "model.json");
    const double width = (result.forecast.upper - result.forecast.lower).mean();
    std::cout << "run: bin=" << result.forecast.bin << " alpha=" << hstc::csv::format_double(cfg.alpha)
              << " mean_width=" << hstc::csv::format_double(width) << '\n';
    return 0;
}

int cmd_evaluate(const RunConfig& c) {
    const auto in = load_inputs(c);
    const auto spec = split_spec(c, in.panel);
    const auto cfg = pipeline_config(c);
    const auto report =
        stage("evaluate", [&] { return hstc::rolling_evaluate(in.panel, in.topology, spec, cfg, c.refit_each_step); });
    const fs::path dir = prepare_out(c);
    hstc::write_metrics(dir / "metrics.txt", report);
    hstc::write_eval_cells(dir / "eval_cells.csv", report);
    hstc::write_circuit_intervals(dir / "circuit_intervals.csv", report.intervals, in.topology);
    hstc::write_substation_intervals(dir / "substation_intervals.csv", report.intervals, in.topology);
    std::cout << "evaluate: val=" << hstc::csv::format_double(report.val)
              << " agg_val=" << hstc::csv::format_double(report.agg_val)
              << " size=" << hstc::csv::format_double(report.size) << '\n';
    if (c.half_nodes) {
        const auto half = stage("half_nodes", [&] {
            return hstc::half_nodes_trial(in.panel, in.topology, spec, cfg, c.seed);
        });
        hstc::write_metrics(dir / "half_metrics.txt", half);
        hstc::write_eval_cells(dir / "half_eval_cells.csv", half);
        std::cout << "half_nodes: val=" << hstc::csv::format_double(half.val)
                  << " agg_val=" << hstc::csv::format_double(half.agg_val)
                  << " size=" << hstc::csv::format_double(half.size) << '\n';
    }
    return 0;
}

int cmd_forecast(const RunConfig& c) {
    if (c.horizon == 0) throw hstc::PreconditionError("forecast: horizon must be >= 1");
    const auto in = load_inputs(c);
    const auto spec = split_spec(c, in.panel);
    const auto cfg = pipeline_config(c);
    const auto pre = maybe_model(c);
    const auto fc = stage("forecast", [&] {
        return hstc::horizon_forecast(in.panel, in.topology, spec, cfg, c.horizon, pre ? &*pre : nullptr);
    });
    const fs::path dir = prepare_out(c);
    hstc::write_horizon_csv(dir / "forecast.csv", fc, in.topology, in.panel);
    std::cout << "forecast: horizon=" << fc.steps.size() << " first_bin=" << fc.first_bin
              << " rows=" << fc.steps.size() * (in.topology.n() + in.topology.m()) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical conformal prediction intervals for circuit/substation event counts"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key = value config file; flags override it");
    RunConfig cfg;
    add_options(app, cfg);

    std::function<int()> action;
    auto add = [&](const char* name, const char* help, int (*fn)(const RunConfig&)) {
        auto* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        sub->callback([&, fn] { action = [&, fn] { return fn(cfg); }; });
        return sub;
    };
    add("synth", "Write a synthetic panel, topology and ground-truth model", cmd_synth);
    add("fit", "Fit the Hawkes model on the training bins", cmd_fit);
    add("calibrate", "Fit (or load) a model and write calibration scores", cmd_calibrate);
    add("run", "Full pipeline: intervals for the bin after calibration", cmd_run)->alias("predict");
    add("evaluate", "Rolling one-step evaluation over the test bins", cmd_evaluate);
    add("forecast", "Multi-step interval forecast from the end of calibration", cmd_forecast);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        return action();
    } catch (const hstc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
