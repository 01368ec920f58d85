#include "nucx/io.hpp"

#include "nucx/constants.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nucx::io {

namespace {

const json& require(const json& j, const char* key, const char* context) {
    auto it = j.find(key);
    if (it == j.end())
        throw std::invalid_argument(std::string(context) + ": missing field '" + key + "'");
    return *it;
}

void check_version(const json& j, const char* context) {
    int v = require(j, "schema_version", context).get<int>();
    if (v != schema_version)
        throw std::invalid_argument(std::string(context) + ": unsupported schema_version " +
                                    std::to_string(v));
}

std::string format_double(double v, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return in;
}

} // namespace

// ---- transmission model --------------------------------------------------

json to_json(const response::TransmissionModel& model) {
    json lines = json::array();
    for (const auto& line : model.lines)
        lines.push_back({{"detuning_gamma", line.detuning},
                         {"b_gamma", line.b},
                         {"width_gamma", line.width}});
    return {{"lines", lines}, {"electronic_scale", model.electronic_scale}};
}

response::TransmissionModel transmission_from_json(const json& j) {
    const char* ctx = "transmission model";
    response::TransmissionModel model;
    for (const auto& lj : require(j, "lines", ctx)) {
        response::NuclearLine line;
        line.detuning = require(lj, "detuning_gamma", ctx).get<double>();
        line.b = require(lj, "b_gamma", ctx).get<double>();
        line.width = require(lj, "width_gamma", ctx).get<double>();
        model.lines.push_back(line);
    }
    model.electronic_scale = require(j, "electronic_scale", ctx).get<double>();
    return model;
}

// ---- motion profiles -----------------------------------------------------

json to_json(const motion::MotionProfile& profile) {
    using motion::MotionKind;
    json j;
    j["kind"] = motion::to_string(profile.kind);
    json params = json::object();
    switch (profile.kind) {
    case MotionKind::step:
        params["amplitude_lambda0"] = profile.amplitude;
        params["rise_time_ns"] = profile.rise_time_ns;
        params["ramp_start_ns"] = profile.ramp_start_ns;
        break;
    case MotionKind::step_plus_drift:
        params["drift_per_ns"] = profile.drift_per_ns;
        break;
    case MotionKind::scaled_base:
        params["scale"] = profile.scale;
        break;
    case MotionKind::stepped_base:
        params["step_offset_rad"] = profile.step_offset_rad;
        break;
    case MotionKind::free_knots:
        j["knots"] = {{"t_ns", profile.knot_times_ns}, {"x_lambda0", profile.knot_values}};
        break;
    }
    j["params"] = params;
    if (profile.base) j["base"] = to_json(*profile.base);
    return j;
}

motion::MotionProfile motion_from_json(const json& j) {
    using motion::MotionKind;
    const char* ctx = "motion profile";
    motion::MotionProfile profile;
    profile.kind = motion::motion_kind_from_string(require(j, "kind", ctx).get<std::string>());
    const json& params = require(j, "params", ctx);
    switch (profile.kind) {
    case MotionKind::step:
        profile.amplitude = require(params, "amplitude_lambda0", ctx).get<double>();
        profile.rise_time_ns = require(params, "rise_time_ns", ctx).get<double>();
        profile.ramp_start_ns = require(params, "ramp_start_ns", ctx).get<double>();
        break;
    case MotionKind::step_plus_drift:
        profile.drift_per_ns = require(params, "drift_per_ns", ctx).get<double>();
        break;
    case MotionKind::scaled_base:
        profile.scale = require(params, "scale", ctx).get<double>();
        break;
    case MotionKind::stepped_base:
        profile.step_offset_rad = require(params, "step_offset_rad", ctx).get<double>();
        break;
    case MotionKind::free_knots: {
        const json& knots = require(j, "knots", ctx);
        profile.knot_times_ns = require(knots, "t_ns", ctx).get<std::vector<double>>();
        profile.knot_values = require(knots, "x_lambda0", ctx).get<std::vector<double>>();
        break;
    }
    }
    if (profile.kind == MotionKind::step_plus_drift || profile.kind == MotionKind::scaled_base ||
        profile.kind == MotionKind::stepped_base) {
        profile.base = std::make_shared<motion::MotionProfile>(
            motion_from_json(require(j, "base", ctx)));
    }
    profile.validate();
    return profile;
}

// ---- experiment config ---------------------------------------------------

json to_json(const experiment::ExperimentConfig& config) {
    return {{"schema_version", schema_version},
            {"scu", to_json(config.scu)},
            {"target", to_json(config.target)},
            {"motion", to_json(config.motion)},
            {"detunings_gamma", config.detunings},
            {"window_ns", {config.window_start_ns, config.window_end_ns}},
            {"analysis_bin_ns", config.analysis_bin_ns},
            {"grid", {{"dt_ns", config.grid.dt_ns()}, {"n", config.grid.n}}},
            {"photon_budget", config.photon_budget},
            {"run_seconds", config.run_seconds},
            {"sweep_period_s", config.sweep_period_s},
            {"bunch_period_ns", config.bunch_period_ns}};
}

experiment::ExperimentConfig config_from_json(const json& j) {
    const char* ctx = "experiment config";
    check_version(j, ctx);
    experiment::ExperimentConfig config;
    config.scu = transmission_from_json(require(j, "scu", ctx));
    config.target = transmission_from_json(require(j, "target", ctx));
    config.motion = motion_from_json(require(j, "motion", ctx));
    config.detunings = require(j, "detunings_gamma", ctx).get<std::vector<double>>();
    auto window = require(j, "window_ns", ctx).get<std::vector<double>>();
    if (window.size() != 2)
        throw std::invalid_argument(std::string(ctx) + ": window_ns must be [start, end]");
    config.window_start_ns = window[0];
    config.window_end_ns = window[1];
    config.analysis_bin_ns = require(j, "analysis_bin_ns", ctx).get<double>();
    const json& grid = require(j, "grid", ctx);
    config.grid = signal::make_grid_ns(0.0, require(grid, "dt_ns", ctx).get<double>(),
                                       require(grid, "n", ctx).get<std::size_t>());
    config.photon_budget = require(j, "photon_budget", ctx).get<double>();
    config.run_seconds = require(j, "run_seconds", ctx).get<double>();
    config.sweep_period_s = require(j, "sweep_period_s", ctx).get<double>();
    config.bunch_period_ns = require(j, "bunch_period_ns", ctx).get<double>();
    config.validate();
    return config;
}

// ---- fit results ---------------------------------------------------------

json to_json(const fit::FitResult& result) {
    return {{"schema_version", schema_version},
            {"motion", to_json(result.motion)},
            {"scale_factor", result.scale_factor},
            {"log_likelihood", result.log_likelihood},
            {"generations", result.generations},
            {"converged", result.converged},
            {"mean_mutation_sigma", result.mean_mutation_sigma},
            {"population_spread", result.population_spread}};
}

fit::FitResult fit_result_from_json(const json& j) {
    const char* ctx = "fit result";
    check_version(j, ctx);
    fit::FitResult result;
    result.motion = motion_from_json(require(j, "motion", ctx));
    result.scale_factor = require(j, "scale_factor", ctx).get<double>();
    result.log_likelihood = require(j, "log_likelihood", ctx).get<double>();
    result.generations = require(j, "generations", ctx).get<int>();
    result.converged = require(j, "converged", ctx).get<bool>();
    result.mean_mutation_sigma = require(j, "mean_mutation_sigma", ctx).get<double>();
    result.population_spread = require(j, "population_spread", ctx).get<double>();
    return result;
}

json to_json(const fit::NoiseFit& fit) {
    return {{"schema_version", schema_version},
            {"model", fit::to_string(fit.model)},
            {"parameter", fit.parameter},
            {"log_likelihood", fit.log_likelihood},
            {"ci_lo", fit.ci_lo},
            {"ci_hi", fit.ci_hi},
            {"temporal_deviation_zs", fit.y_zs},
            {"temporal_deviation_ci_zs", {fit.y_ci_lo, fit.y_ci_hi}}};
}

// ---- spectra -------------------------------------------------------------

json to_json(const experiment::Spectrum2D& spectrum) {
    return {{"schema_version", schema_version},
            {"time_edges_ns", spectrum.time_edges_ns},
            {"detuning_edges_gamma", spectrum.detuning_edges},
            {"counts", spectrum.counts},
            {"exposure_s", spectrum.exposure_s}};
}

experiment::Spectrum2D spectrum_from_json(const json& j) {
    const char* ctx = "spectrum";
    check_version(j, ctx);
    experiment::Spectrum2D spectrum;
    spectrum.time_edges_ns = require(j, "time_edges_ns", ctx).get<std::vector<double>>();
    spectrum.detuning_edges = require(j, "detuning_edges_gamma", ctx).get<std::vector<double>>();
    spectrum.counts = require(j, "counts", ctx).get<std::vector<long>>();
    spectrum.exposure_s = require(j, "exposure_s", ctx).get<std::vector<double>>();
    if (spectrum.counts.size() != spectrum.n_time() * spectrum.n_detuning())
        throw std::invalid_argument(std::string(ctx) + ": counts size mismatch");
    return spectrum;
}

void save_json(const std::string& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

json load_json(const std::string& path) {
    auto in = open_in(path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    return j;
}

// ---- CSV -----------------------------------------------------------------

void save_events_csv(const std::string& path, const experiment::EventSet& data) {
    auto out = open_out(path);
    std::string buffer;
    buffer.reserve(1 << 22);
    buffer += "# schema_version=1\n";
    for (const auto& d : data.dead) {
        buffer += "# dead ";
        buffer += format_double(d.start_s, "%.9g");
        buffer += ' ';
        buffer += format_double(d.duration_s, "%.9g");
        buffer += '\n';
    }
    buffer += "t_ns,delta_gamma,lab_time_s\n";
    char line[96];
    for (const auto& ev : data.events) {
        int len = std::snprintf(line, sizeof(line), "%.6f,%.6f,%.9f\n", ev.t_ns,
                                ev.delta_gamma, ev.lab_time_s);
        buffer.append(line, static_cast<std::size_t>(len));
        if (buffer.size() > (1 << 22) - 128) {
            out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
            buffer.clear();
        }
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
}

experiment::EventSet load_events_csv(const std::string& path) {
    auto in = open_in(path);
    experiment::EventSet data;
    std::string line;
    bool saw_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# dead ", 0) == 0) {
                experiment::DeadInterval d;
                if (std::sscanf(line.c_str(), "# dead %lf %lf", &d.start_s, &d.duration_s) != 2)
                    throw std::invalid_argument(path + ": bad dead-time comment at line " +
                                                std::to_string(line_no));
                data.dead.push_back(d);
            }
            continue;
        }
        if (!saw_header) {
            if (line != "t_ns,delta_gamma,lab_time_s")
                throw std::invalid_argument(path + ": unexpected header '" + line + "'");
            saw_header = true;
            continue;
        }
        experiment::PhotonEvent ev;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &ev.t_ns, &ev.delta_gamma,
                        &ev.lab_time_s) != 3)
            throw std::invalid_argument(path + ": bad event row at line " +
                                        std::to_string(line_no));
        data.events.push_back(ev);
    }
    if (!saw_header) throw std::invalid_argument(path + ": missing event header");
    return data;
}

void save_allan_csv(const std::string& path, const allan::AllanSeries& series) {
    auto out = open_out(path);
    out << "# schema_version=1\n";
    out << "tau_s,sigma_zs,err_lo_zs,err_hi_zs,n_samples\n";
    for (const auto& p : series.points)
        out << format_double(p.tau_s, "%.9g") << ',' << format_double(p.sigma_zs, "%.9g")
            << ',' << format_double(p.err_lo, "%.9g") << ','
            << format_double(p.err_hi, "%.9g") << ',' << p.n_samples << '\n';
}

void save_sliding_csv(const std::string& path, const std::vector<allan::SlidingPoint>& trace) {
    auto out = open_out(path);
    out << "# schema_version=1\n";
    out << "t_center_s,y_zs,ci_lo_zs,ci_hi_zs\n";
    for (const auto& p : trace)
        out << format_double(p.t_center_s, "%.9g") << ',' << format_double(p.y_zs, "%.9g")
            << ',' << format_double(p.ci_lo, "%.9g") << ',' << format_double(p.ci_hi, "%.9g")
            << '\n';
}

void save_dipole_csv(const std::string& path, const tls::DipoleTrace& trace) {
    auto out = open_out(path);
    out << "# schema_version=1\n";
    out << "t_ns,re,im,magnitude,phase_rad\n";
    auto mag = trace.magnitude();
    auto phase = trace.phase_unwrapped();
    for (std::size_t k = 0; k < trace.values.size(); ++k) {
        double ph = phase[k];
        out << format_double(trace.grid.time_ns(k), "%.6f") << ','
            << format_double(trace.values[k].real(), "%.9g") << ','
            << format_double(trace.values[k].imag(), "%.9g") << ','
            << format_double(mag[k], "%.9g") << ','
            << (std::isnan(ph) ? std::string("nan") : format_double(ph, "%.9g")) << '\n';
    }
}

void save_fit_trace_csv(const std::string& path, const std::vector<double>& best_by_generation) {
    auto out = open_out(path);
    out << "# schema_version=1\n";
    out << "generation,best_log_likelihood\n";
    for (std::size_t g = 0; g < best_by_generation.size(); ++g)
        out << g << ',' << format_double(best_by_generation[g], "%.12g") << '\n';
}

// ---- manifests -----------------------------------------------------------

std::string fnv1a64_file(const std::string& path) {
    auto in = open_in(path);
    std::uint64_t hash = 14695981039346656037ULL;
    char chunk[1 << 16];
    while (in.read(chunk, sizeof(chunk)) || in.gcount() > 0) {
        std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(chunk[i]);
            hash *= 1099511628211ULL;
        }
        if (got < static_cast<std::streamsize>(sizeof(chunk))) break;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

void RunManifest::add_input(const std::string& path) {
    inputs.emplace_back(path, fnv1a64_file(path));
}

void RunManifest::add_output(const std::string& path) {
    outputs.emplace_back(path, fnv1a64_file(path));
}

void save_manifest(const std::string& path, const RunManifest& manifest) {
    json inputs = json::object();
    for (const auto& [p, digest] : manifest.inputs) inputs[p] = digest;
    json outputs = json::object();
    for (const auto& [p, digest] : manifest.outputs) outputs[p] = digest;
    save_json(path, {{"schema_version", schema_version},
                     {"tool_version", tool_version},
                     {"command", manifest.command},
                     {"config", manifest.config_path},
                     {"seed", manifest.seed},
                     {"inputs", inputs},
                     {"outputs", outputs},
                     {"duration_s", manifest.duration_s}});
}

} // namespace nucx::io
