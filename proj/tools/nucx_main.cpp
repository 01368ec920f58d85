#include "nucx/allan.hpp"
#include "nucx/constants.hpp"
#include "nucx/experiment.hpp"
#include "nucx/fit.hpp"
#include "nucx/io.hpp"
#include "nucx/motion.hpp"
#include "nucx/parallel.hpp"
#include "nucx/response.hpp"
#include "nucx/signal.hpp"
#include "nucx/tls.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

// Batch front door: configuration-driven simulate / fit / analyze commands.
// Every command records a <out>.manifest.json with digests of the files it
// read and wrote.  Exit codes: 0 ok, 2 input error, 3 non-convergence,
// 4 insufficient statistics.

namespace {

using namespace nucx;

constexpr int exit_ok = 0;
constexpr int exit_input_error = 2;
constexpr int exit_not_converged = 3;
constexpr int exit_insufficient_statistics = 4;

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

std::vector<experiment::DeadInterval> parse_dead(const std::vector<std::string>& specs) {
    std::vector<experiment::DeadInterval> dead;
    for (const auto& s : specs) {
        experiment::DeadInterval d;
        if (std::sscanf(s.c_str(), "%lf:%lf", &d.start_s, &d.duration_s) != 2 ||
            d.duration_s <= 0.0)
            throw std::invalid_argument("bad --dead value '" + s +
                                        "' (expected start_s:duration_s)");
        dead.push_back(d);
    }
    return dead;
}

std::vector<double> parse_tau_list(const std::string& csv) {
    std::vector<double> taus;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        taus.push_back(std::stod(item));
    }
    if (taus.empty()) throw std::invalid_argument("empty --tau list");
    return taus;
}

// ---- simulate ------------------------------------------------------------

struct SimulateOptions {
    std::string config_path;
    std::string out_path = "events.csv";
    std::uint64_t seed = 1;
    std::vector<std::string> dead_specs;
    double drift_sigma_zs = 0.0;
    double drift_interval_s = 20.0;
};

int cmd_simulate(const SimulateOptions& opt) {
    Stopwatch clock;
    auto config = io::config_from_json(io::load_json(opt.config_path));

    experiment::EventSet data;
    if (opt.drift_sigma_zs > 0.0) {
        data = experiment::sample_events_with_interval_drifts(
            config, opt.drift_interval_s, opt.drift_sigma_zs, opt.seed);
    } else {
        experiment::IntensityModel model(config);
        auto lambda = model.expected(config.motion);
        data = experiment::sample_events(lambda, config, opt.seed);
    }
    if (!opt.dead_specs.empty())
        data = experiment::inject_dead_time(data, parse_dead(opt.dead_specs));

    io::save_events_csv(opt.out_path, data);

    io::RunManifest manifest;
    manifest.command = "simulate";
    manifest.config_path = opt.config_path;
    manifest.seed = opt.seed;
    manifest.add_input(opt.config_path);
    manifest.add_output(opt.out_path);
    manifest.duration_s = clock.seconds();
    io::save_manifest(opt.out_path + ".manifest.json", manifest);

    std::cout << "simulate: " << data.events.size() << " events -> " << opt.out_path << "\n";
    return exit_ok;
}

// ---- fit-motion ----------------------------------------------------------

struct FitMotionOptions {
    std::string events_path;
    std::string config_path;
    std::string out_path = "fit.json";
    std::string trace_path;
    std::uint64_t seed = 1;
    fit::EaParams ea;
    bool allow_nonconverged = false;
};

int cmd_fit_motion(const FitMotionOptions& opt) {
    Stopwatch clock;
    auto config = io::config_from_json(io::load_json(opt.config_path));
    auto data = io::load_events_csv(opt.events_path);
    if (data.events.empty())
        throw std::invalid_argument(opt.events_path + ": no events to fit");

    auto spectrum = experiment::bin_to_spectrum(
        data.events, config.time_bin_edges_ns(), config.detuning_bin_edges(), config,
        data.dead, 0.0, config.run_seconds);
    experiment::IntensityModel model(config);
    auto result = fit::fit_motion_evolutionary(spectrum, model, opt.ea, opt.seed);

    auto j = io::to_json(result);
    j["config"] = io::to_json(config);
    io::save_json(opt.out_path, j);
    if (!opt.trace_path.empty()) io::save_fit_trace_csv(opt.trace_path, result.best_by_generation);

    io::RunManifest manifest;
    manifest.command = "fit-motion";
    manifest.config_path = opt.config_path;
    manifest.seed = opt.seed;
    manifest.add_input(opt.config_path);
    manifest.add_input(opt.events_path);
    manifest.add_output(opt.out_path);
    if (!opt.trace_path.empty()) manifest.add_output(opt.trace_path);
    manifest.duration_s = clock.seconds();
    io::save_manifest(opt.out_path + ".manifest.json", manifest);

    std::cout << "fit-motion: log-likelihood " << result.log_likelihood << " after "
              << result.generations << " generations"
              << (result.converged ? "" : " (not converged)") << " -> " << opt.out_path
              << "\n";
    if (!result.converged && !opt.allow_nonconverged) {
        std::cerr << "fit-motion: fit did not converge (rerun with --allow-nonconverged to "
                     "keep the result)\n";
        return exit_not_converged;
    }
    return exit_ok;
}

// ---- allan ---------------------------------------------------------------

struct AllanOptions {
    std::string events_path;
    std::string fit_path;
    std::string model_name = "linear";
    std::string binning_name = "time";
    std::string out_path = "allan.csv";
    std::string tau_csv;
    std::uint64_t seed = 1;
    std::string sliding_out;
    double sliding_tau_s = 0.0;
    double sliding_stride_s = 0.0;
};

fit::NoiseModel parse_noise_model(const std::string& name) {
    if (name == "linear") return fit::NoiseModel::linear_drift;
    return fit::noise_model_from_string(name);
}

int cmd_allan(const AllanOptions& opt) {
    Stopwatch clock;
    auto fit_json = io::load_json(opt.fit_path);
    auto fitted = io::fit_result_from_json(fit_json);
    if (!fit_json.contains("config"))
        throw std::invalid_argument(opt.fit_path + ": missing field 'config'");
    auto config = io::config_from_json(fit_json["config"]);
    auto data = io::load_events_csv(opt.events_path);
    if (data.events.empty())
        throw std::invalid_argument(opt.events_path + ": no events to analyze");

    auto kind = parse_noise_model(opt.model_name);
    auto mode = opt.binning_name == "counts" ? allan::BinningMode::equal_counts
              : opt.binning_name == "time"   ? allan::BinningMode::equal_time
              : throw std::invalid_argument("bad --binning '" + opt.binning_name +
                                            "' (expected time or counts)");

    experiment::IntensityModel model(config);
    double rate = static_cast<double>(data.events.size()) / config.run_seconds;
    auto taus = opt.tau_csv.empty() ? allan::default_tau_ladder(config.run_seconds, rate)
                                    : parse_tau_list(opt.tau_csv);

    auto series = allan::allan_curve(data, taus, fitted.motion, kind, model, mode, opt.seed);
    io::save_allan_csv(opt.out_path, series);

    if (!opt.sliding_out.empty()) {
        if (opt.sliding_tau_s <= 0.0)
            throw std::invalid_argument("--sliding-out requires --sliding-tau");
        double stride = opt.sliding_stride_s > 0.0 ? opt.sliding_stride_s
                                                   : opt.sliding_tau_s / 2.0;
        auto trace = allan::sliding_deviations(data, opt.sliding_tau_s, stride, fitted.motion,
                                               kind, model);
        io::save_sliding_csv(opt.sliding_out, trace);
    }

    io::RunManifest manifest;
    manifest.command = "allan";
    manifest.config_path = opt.fit_path;
    manifest.seed = opt.seed;
    manifest.add_input(opt.events_path);
    manifest.add_input(opt.fit_path);
    manifest.add_output(opt.out_path);
    if (!opt.sliding_out.empty()) manifest.add_output(opt.sliding_out);
    manifest.duration_s = clock.seconds();
    io::save_manifest(opt.out_path + ".manifest.json", manifest);

    std::cout << "allan: " << series.points.size() << " tau points -> " << opt.out_path
              << "\n";
    return exit_ok;
}

// ---- dipole --------------------------------------------------------------

struct DipoleOptions {
    std::string fit_path;
    std::string config_path;
    std::string case_name = "fit";
    std::string out_path = "dipole.csv";
};

int cmd_dipole(const DipoleOptions& opt) {
    Stopwatch clock;
    auto config = io::config_from_json(io::load_json(opt.config_path));
    auto fitted = io::fit_result_from_json(io::load_json(opt.fit_path));

    tls::DipoleTrace trace;
    if (opt.case_name == "none") {
        trace = fit::dipole_reference(config.target, config.grid);
    } else {
        fit::FitResult effective = fitted;
        if (opt.case_name == "SE")
            effective.motion = motion::canonical_motion(motion::CanonicalCase::stimulated_emission);
        else if (opt.case_name == "boost")
            effective.motion = motion::canonical_motion(motion::CanonicalCase::enhanced_excitation);
        else if (opt.case_name != "fit")
            throw std::invalid_argument("bad --case '" + opt.case_name +
                                        "' (expected SE, boost, none, or fit)");
        trace = fit::extract_dipole(effective, config.target, config.scu, config.grid);
    }
    io::save_dipole_csv(opt.out_path, trace);

    io::RunManifest manifest;
    manifest.command = "dipole";
    manifest.config_path = opt.config_path;
    manifest.add_input(opt.fit_path);
    manifest.add_input(opt.config_path);
    manifest.add_output(opt.out_path);
    manifest.duration_s = clock.seconds();
    io::save_manifest(opt.out_path + ".manifest.json", manifest);

    std::cout << "dipole: case " << opt.case_name << " -> " << opt.out_path << "\n";
    return exit_ok;
}

// ---- crossover -----------------------------------------------------------

struct CrossoverOptions {
    std::string config_path;
    std::string out_path = "crossover.csv";
};

int cmd_crossover(const CrossoverOptions& opt) {
    Stopwatch clock;
    auto config = io::config_from_json(io::load_json(opt.config_path));
    double b_total = 0.0;
    for (const auto& line : config.target.lines) b_total += line.b;
    if (b_total <= 0.0)
        throw std::invalid_argument("crossover undefined: target thickness must be positive");

    double analytic_ns = tls::crossover_time(b_total) * constants::lifetime_ns;

    // full-model on-resonance comparison: double pulse for the
    // stimulated-emission and enhanced-excitation motions through the target
    auto target_response = response::multiline_transmission(config.target, config.grid);
    auto se_pulse = motion::shape_double_pulse(
        config.scu, motion::canonical_motion(motion::CanonicalCase::stimulated_emission),
        config.grid);
    auto boost_pulse = motion::shape_double_pulse(
        config.scu, motion::canonical_motion(motion::CanonicalCase::enhanced_excitation),
        config.grid);
    auto se_out = signal::convolve(se_pulse.field, target_response);
    auto boost_out = signal::convolve(boost_pulse.field, target_response);

    double simulated_ns = experiment::simulated_crossover_ns(config);
    std::vector<double> diff(config.grid.n);
    for (std::size_t k = 0; k < config.grid.n; ++k)
        diff[k] = std::norm(boost_out.samples[k]) - std::norm(se_out.samples[k]);

    auto out = std::ofstream(opt.out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + opt.out_path);
    out << "# schema_version=1\n";
    char head[128];
    std::snprintf(head, sizeof(head), "# analytic_thin_ns=%.4f\n", analytic_ns);
    out << head;
    if (std::isnan(simulated_ns)) {
        out << "# simulated_ns=nan\n";
    } else {
        std::snprintf(head, sizeof(head), "# simulated_ns=%.4f\n", simulated_ns);
        out << head;
    }
    out << "t_ns,intensity_se,intensity_boost,difference\n";
    for (std::size_t k = 0; k < config.grid.n; ++k) {
        char row[160];
        std::snprintf(row, sizeof(row), "%.6f,%.9g,%.9g,%.9g\n", config.grid.time_ns(k),
                      std::norm(se_out.samples[k]), std::norm(boost_out.samples[k]), diff[k]);
        out << row;
    }
    out.close();

    io::RunManifest manifest;
    manifest.command = "crossover";
    manifest.config_path = opt.config_path;
    manifest.add_input(opt.config_path);
    manifest.add_output(opt.out_path);
    manifest.duration_s = clock.seconds();
    io::save_manifest(opt.out_path + ".manifest.json", manifest);

    std::cout << "crossover: analytic thin-limit " << analytic_ns << " ns, simulated "
              << simulated_ns << " ns -> " << opt.out_path << "\n";
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nuclear-exciton control simulator and inverse-analysis toolkit"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "cap worker threads (0 = automatic)");

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "sample a synthetic photon event list");
    simulate->add_option("config", sim.config_path, "experiment config JSON")->required();
    simulate->add_option("--seed", sim.seed, "random seed");
    simulate->add_option("--out", sim.out_path, "output events CSV");
    simulate->add_option("--dead", sim.dead_specs,
                         "detector dropout window start_s:duration_s (repeatable)");
    simulate->add_option("--drift-sigma-zs", sim.drift_sigma_zs,
                         "inject per-interval random drifts with this temporal deviation");
    simulate->add_option("--drift-interval-s", sim.drift_interval_s,
                         "drift redraw interval in lab seconds");

    FitMotionOptions fitm;
    auto* fit_motion = app.add_subcommand("fit-motion",
                                          "reconstruct the absorber motion from events");
    fit_motion->add_option("events", fitm.events_path, "events CSV")->required();
    fit_motion->add_option("config", fitm.config_path, "experiment config JSON")->required();
    fit_motion->add_option("--out", fitm.out_path, "output fit JSON");
    fit_motion->add_option("--trace", fitm.trace_path, "per-generation best-likelihood CSV");
    fit_motion->add_option("--seed", fitm.seed, "random seed");
    fit_motion->add_option("--generations", fitm.ea.generations, "generation cap");
    fit_motion->add_option("--population", fitm.ea.population, "population size");
    fit_motion->add_option("--knots", fitm.ea.knots, "free motion knots");
    fit_motion->add_flag("--allow-nonconverged", fitm.allow_nonconverged,
                         "exit 0 even when the fit did not converge");

    AllanOptions al;
    auto* allan_cmd = app.add_subcommand("allan", "temporal-deviation stability analysis");
    allan_cmd->add_option("events", al.events_path, "events CSV")->required();
    allan_cmd->add_option("fit", al.fit_path, "fit JSON from fit-motion")->required();
    allan_cmd->add_option("--model", al.model_name, "noise model: linear, scaling, or step");
    allan_cmd->add_option("--binning", al.binning_name, "sample binning: time or counts");
    allan_cmd->add_option("--out", al.out_path, "output deviation-curve CSV");
    allan_cmd->add_option("--tau", al.tau_csv, "comma-separated tau ladder in seconds");
    allan_cmd->add_option("--seed", al.seed, "error-band resampling seed");
    allan_cmd->add_option("--sliding-out", al.sliding_out, "sliding deviation trace CSV");
    allan_cmd->add_option("--sliding-tau", al.sliding_tau_s, "sliding window length seconds");
    allan_cmd->add_option("--sliding-stride", al.sliding_stride_s,
                          "sliding window stride seconds");

    DipoleOptions dip;
    auto* dipole = app.add_subcommand("dipole", "export the driven nuclear dipole trace");
    dipole->add_option("fit", dip.fit_path, "fit JSON from fit-motion")->required();
    dipole->add_option("config", dip.config_path, "experiment config JSON")->required();
    dipole->add_option("--case", dip.case_name,
                       "SE, boost, none (undriven reference), or fit (use fitted motion)");
    dipole->add_option("--out", dip.out_path, "output dipole CSV");

    CrossoverOptions cross;
    auto* crossover = app.add_subcommand("crossover",
                                         "emission/excitation crossover report");
    crossover->add_option("config", cross.config_path, "experiment config JSON")->required();
    crossover->add_option("--out", cross.out_path, "output CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_input_error;
    }

    if (threads > 0) nucx::set_thread_count(threads);

    try {
        if (simulate->parsed()) return cmd_simulate(sim);
        if (fit_motion->parsed()) return cmd_fit_motion(fitm);
        if (allan_cmd->parsed()) return cmd_allan(al);
        if (dipole->parsed()) return cmd_dipole(dip);
        if (crossover->parsed()) return cmd_crossover(cross);
    } catch (const fit::InsufficientStatisticsError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_insufficient_statistics;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_input_error;
    }
    return exit_input_error;
}
