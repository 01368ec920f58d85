#include "nucx/experiment.hpp"

#include "nucx/constants.hpp"
#include "nucx/parallel.hpp"
#include "nucx/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nucx::experiment {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

bool nearly_integer(double x, double tol = 1e-9) {
    return std::fabs(x - std::llround(x)) < tol;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k)
        out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    return out;
}

} // namespace

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig cfg;
    cfg.scu.lines = {response::NuclearLine{0.0, 5.0, 1.0},
                     response::NuclearLine{63.0, 5.0, 1.0}};
    cfg.target.lines = {response::NuclearLine{0.0, 2.3, 1.0}};
    cfg.motion = motion::canonical_motion(motion::CanonicalCase::enhanced_excitation);
    const double edge = response::doppler_detuning(22.8);
    cfg.detunings = linspace(-edge, edge, 241);
    cfg.grid = signal::make_grid_ns(0.0, 0.1, 1761);
    return cfg;
}

ExperimentConfig ExperimentConfig::defaults_single_line() {
    ExperimentConfig cfg = defaults();
    cfg.scu.lines = {response::NuclearLine{0.0, 5.0, 1.0}};
    return cfg;
}

ExperimentConfig ExperimentConfig::reduced() {
    ExperimentConfig cfg = defaults();
    const double edge = response::doppler_detuning(22.8);
    cfg.detunings = linspace(-edge, edge, 61);
    cfg.grid = signal::make_grid_ns(0.0, 0.5, 353);
    return cfg;
}

void ExperimentConfig::validate() const {
    if (scu.lines.empty() || target.lines.empty())
        throw std::invalid_argument("config: scu and target need at least one line each");
    if (detunings.size() < 2)
        throw std::invalid_argument("config: need at least two detunings");
    for (std::size_t i = 0; i + 1 < detunings.size(); ++i)
        if (!(detunings[i] < detunings[i + 1]))
            throw std::invalid_argument("config: detunings must be strictly increasing");
    if (std::fabs(grid.t_start) > 1e-12)
        throw std::invalid_argument("config: model grid must start at t = 0");
    const double span_ns = grid.dt_ns() * static_cast<double>(grid.n - 1);
    if (window_start_ns < 0.0 || window_end_ns > span_ns + 1e-9 ||
        !(window_start_ns < window_end_ns))
        throw std::invalid_argument("config: detector window must lie inside the grid");
    if (!(analysis_bin_ns > 0.0) || !nearly_integer(analysis_bin_ns / grid.dt_ns()))
        throw std::invalid_argument("config: analysis bin must be a multiple of grid dt");
    if (!nearly_integer((window_end_ns - window_start_ns) / analysis_bin_ns))
        throw std::invalid_argument("config: window must hold a whole number of bins");
    if (!(photon_budget > 0.0)) throw std::invalid_argument("config: photon budget must be positive");
    if (!(run_seconds > 0.0) || !(sweep_period_s > 0.0))
        throw std::invalid_argument("config: run length and sweep period must be positive");
    if (!nearly_integer(run_seconds / sweep_period_s, 1e-6))
        throw std::invalid_argument("config: run length must be a whole number of sweep periods");
    motion.validate();
}

std::vector<double> ExperimentConfig::time_bin_edges_ns() const {
    const auto nb =
        static_cast<std::size_t>(std::llround((window_end_ns - window_start_ns) / analysis_bin_ns));
    std::vector<double> edges(nb + 1);
    for (std::size_t k = 0; k <= nb; ++k)
        edges[k] = window_start_ns + analysis_bin_ns * static_cast<double>(k);
    return edges;
}

std::vector<double> ExperimentConfig::detuning_bin_edges() const {
    const std::size_t n = detunings.size();
    std::vector<double> edges(n + 1);
    for (std::size_t k = 1; k < n; ++k) edges[k] = 0.5 * (detunings[k - 1] + detunings[k]);
    edges[0] = detunings.front() - 0.5 * (detunings[1] - detunings[0]);
    edges[n] = detunings.back() + 0.5 * (detunings[n - 1] - detunings[n - 2]);
    return edges;
}

long Spectrum2D::total() const {
    long sum = 0;
    for (long c : counts) sum += c;
    return sum;
}

// ---- intensity model -----------------------------------------------------

IntensityModel::IntensityModel(const ExperimentConfig& config) : config_(config) {
    config_.validate();
    const TimeGrid& grid = config_.grid;
    nfft_ = signal::next_pow2(2 * grid.n);

    const signal::SignalEnvelope scu_env =
        response::multiline_transmission(config_.scu, grid);
    scu_smooth_ = scu_env.samples;
    scu_weight_ = scu_env.singular_weight.real();

    const signal::SignalEnvelope target_env =
        response::multiline_transmission(config_.target, grid);
    target_weight_ = target_env.singular_weight.real();

    const std::size_t nd = config_.detunings.size();
    target_time_.assign(nd * grid.n, signal::cplx{});
    target_freq_.assign(nd * nfft_, signal::cplx{});
    parallel_for(nd, [&](std::size_t di) {
        const double delta = config_.detunings[di];
        std::vector<signal::cplx> padded(nfft_, signal::cplx{});
        for (std::size_t k = 0; k < grid.n; ++k) {
            // detuning the whole target by delta rotates its response
            const signal::cplx v =
                target_env.samples[k] * std::polar(1.0, -delta * grid.time(k));
            target_time_[di * grid.n + k] = v;
            padded[k] = v;
        }
        signal::fft_inplace(padded, false);
        std::copy(padded.begin(), padded.end(), target_freq_.begin() + static_cast<std::ptrdiff_t>(di * nfft_));
    });

    // map fine cells [t_k, t_k + dt) to analysis bins inside the window
    n_bins_ = static_cast<std::size_t>(
        std::llround((config_.window_end_ns - config_.window_start_ns) / config_.analysis_bin_ns));
    bin_of_cell_.assign(grid.n, npos);
    for (std::size_t k = 0; k < grid.n; ++k) {
        const double t_ns = grid.time_ns(k);
        if (t_ns < config_.window_start_ns - 1e-9) continue;
        if (t_ns + config_.grid.dt_ns() > config_.window_end_ns + 1e-9) continue;
        const auto bin = static_cast<std::size_t>(
            std::floor((t_ns - config_.window_start_ns) / config_.analysis_bin_ns + 1e-9));
        if (bin < n_bins_) bin_of_cell_[k] = bin;
    }
}

IntensityMatrix IntensityModel::expected(const motion::MotionProfile& m) const {
    const TimeGrid& grid = config_.grid;
    const std::size_t n = grid.n;
    const std::size_t nd = config_.detunings.size();
    const double dt = grid.dt;

    const std::vector<double> phi = motion::phase_from_motion(m, grid);
    std::vector<signal::cplx> control(n);
    for (std::size_t k = 0; k < n; ++k)
        control[k] = scu_smooth_[k] * std::polar(1.0, phi[k]);

    std::vector<signal::cplx> control_hat(nfft_, signal::cplx{});
    std::copy(control.begin(), control.end(), control_hat.begin());
    signal::fft_inplace(control_hat, false);

    IntensityMatrix out;
    out.grid = grid;
    out.detunings = config_.detunings;
    out.values.assign(nd * n, 0.0);
    const signal::cplx f0 = control[0];

    parallel_for(nd, [&](std::size_t di) {
        const signal::cplx* kernel_t = target_time_.data() + di * n;
        const signal::cplx* kernel_f = target_freq_.data() + di * nfft_;
        std::vector<signal::cplx> work(nfft_);
        for (std::size_t k = 0; k < nfft_; ++k) work[k] = control_hat[k] * kernel_f[k];
        signal::fft_inplace(work, true);
        const signal::cplx g0 = kernel_t[0];
        double* column = out.values.data() + di * n;
        for (std::size_t k = 0; k < n; ++k) {
            const signal::cplx trap = work[k] - 0.5 * (f0 * kernel_t[k] + control[k] * g0);
            const signal::cplx smooth = scu_weight_ * kernel_t[k] +
                                        target_weight_ * control[k] + dt * trap;
            column[k] = std::norm(smooth);
        }
    });
    return out;
}

std::vector<double> IntensityModel::bin_columns(const IntensityMatrix& lambda) const {
    const std::size_t n = config_.grid.n;
    const std::size_t nd = config_.detunings.size();
    std::vector<double> binned(n_bins_ * nd, 0.0);
    const double dt_ns = config_.grid.dt_ns();
    for (std::size_t di = 0; di < nd; ++di) {
        const double* column = lambda.values.data() + di * n;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t bin = bin_of_cell_[k];
            if (bin == npos) continue;
            binned[bin * nd + di] += column[k] * dt_ns;
        }
    }
    return binned;
}

std::vector<double> IntensityModel::expected_binned(const motion::MotionProfile& m) const {
    return bin_columns(expected(m));
}

IntensityMatrix expected_intensity(const ExperimentConfig& config) {
    return IntensityModel(config).expected(config.motion);
}

// ---- scan schedule -------------------------------------------------------

std::vector<std::pair<double, double>> ScanSchedule::segments(std::size_t index, double lo,
                                                              double hi) const {
    std::vector<std::pair<double, double>> out;
    if (!(hi > lo)) return out;
    const double dwell = dwell_s();
    const auto n = static_cast<double>(n_detunings);
    const auto p_first = static_cast<long>(std::floor(lo / period_s)) - 1;
    const auto p_last = static_cast<long>(std::floor(hi / period_s)) + 1;
    for (long p = p_first; p <= p_last; ++p) {
        const double base = static_cast<double>(p) * period_s;
        const double starts[2] = {
            base + static_cast<double>(index) * dwell,                          // ascending
            base + 0.5 * period_s + (n - 1.0 - static_cast<double>(index)) * dwell}; // descending
        for (double s : starts) {
            const double a = std::max(s, lo);
            const double b = std::min(s + dwell, hi);
            if (b > a + 1e-15) out.emplace_back(a, b);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

double ScanSchedule::live_seconds(std::size_t index, double lo, double hi,
                                  const std::vector<DeadInterval>& dead) const {
    double live = 0.0;
    for (const auto& [a, b] : segments(index, lo, hi)) {
        live += b - a;
        for (const auto& d : dead) {
            const double da = std::max(a, d.start_s);
            const double db = std::min(b, d.start_s + d.duration_s);
            if (db > da) live -= db - da;
        }
    }
    return live;
}

ScanSchedule scan_schedule(const ExperimentConfig& config) {
    return ScanSchedule{config.sweep_period_s, config.run_seconds, config.detunings.size()};
}

// ---- sampling ------------------------------------------------------------

namespace {

// expected-count normalization so that the base intensity integrates to the
// photon budget over the full run
double calibration_scale(const IntensityModel& model, const IntensityMatrix& lambda) {
    const ExperimentConfig& cfg = model.config();
    const std::vector<double> binned = model.bin_columns(lambda);
    const ScanSchedule sched = scan_schedule(cfg);
    double total = 0.0;
    for (std::size_t di = 0; di < cfg.detunings.size(); ++di) {
        const double dwell = sched.live_seconds(di, 0.0, cfg.run_seconds, {});
        double col = 0.0;
        for (std::size_t bi = 0; bi < model.n_time_bins(); ++bi)
            col += binned[bi * cfg.detunings.size() + di];
        total += col * dwell;
    }
    // zero integrated intensity: no events, regardless of the budget
    if (!(total > 0.0)) return 0.0;
    return cfg.photon_budget / total;
}

// Poisson-draw one detuning column restricted to the lab window [lo, hi).
// Draw order per cell: count, then (t offset, segment pick, in-segment
// position) per event -- frozen for reproducibility.
void sample_column(const IntensityModel& model, const IntensityMatrix& lambda,
                   std::size_t di, const ScanSchedule& sched, double scale, double lo,
                   double hi, std::uint64_t column_seed, std::vector<PhotonEvent>& out) {
    const ExperimentConfig& cfg = model.config();
    const auto segs = sched.segments(di, lo, hi);
    if (segs.empty()) return;
    double live = 0.0;
    std::vector<double> cum(segs.size());
    for (std::size_t s = 0; s < segs.size(); ++s) {
        live += segs[s].second - segs[s].first;
        cum[s] = live;
    }
    if (!(live > 0.0)) return;

    Rng rng(column_seed);
    const double dt_ns = cfg.grid.dt_ns();
    const double delta = cfg.detunings[di];
    const double* column = lambda.values.data() + di * cfg.grid.n;
    for (std::size_t k = 0; k < cfg.grid.n; ++k) {
        const double t_ns = cfg.grid.time_ns(k);
        if (t_ns < cfg.window_start_ns - 1e-9) continue;
        if (t_ns + dt_ns > cfg.window_end_ns + 1e-9) continue;
        const double mean = scale * column[k] * dt_ns * live;
        const long count = rng.poisson(mean);
        for (long e = 0; e < count; ++e) {
            PhotonEvent ev;
            ev.t_ns = t_ns + rng.uniform() * dt_ns;
            ev.delta_gamma = delta;
            const double u = rng.uniform() * live;
            const auto it = std::upper_bound(cum.begin(), cum.end(), u);
            const std::size_t s = std::min<std::size_t>(it - cum.begin(), segs.size() - 1);
            const double prev = s == 0 ? 0.0 : cum[s - 1];
            ev.lab_time_s = segs[s].first + (u - prev);
            out.push_back(ev);
        }
    }
}

void sort_events(std::vector<PhotonEvent>& events) {
    std::sort(events.begin(), events.end(), [](const PhotonEvent& a, const PhotonEvent& b) {
        if (a.lab_time_s != b.lab_time_s) return a.lab_time_s < b.lab_time_s;
        if (a.t_ns != b.t_ns) return a.t_ns < b.t_ns;
        return a.delta_gamma < b.delta_gamma;
    });
}

} // namespace

EventSet sample_events(const IntensityMatrix& lambda, const ExperimentConfig& config,
                       std::uint64_t seed) {
    const IntensityModel model(config);
    const double scale = calibration_scale(model, lambda);
    const ScanSchedule sched = scan_schedule(config);
    const std::size_t nd = config.detunings.size();
    std::vector<std::vector<PhotonEvent>> per_column(nd);
    parallel_for(nd, [&](std::size_t di) {
        sample_column(model, lambda, di, sched, scale, 0.0, config.run_seconds,
                      derive_seed(seed, di), per_column[di]);
    });
    EventSet out;
    for (auto& column : per_column)
        out.events.insert(out.events.end(), column.begin(), column.end());
    sort_events(out.events);
    return out;
}

EventSet sample_events_with_drift_schedule(const ExperimentConfig& config,
                                           double interval_s,
                                           const std::vector<double>& drifts,
                                           std::uint64_t seed) {
    if (!(interval_s > 0.0))
        throw std::invalid_argument("drift schedule: interval must be positive");
    const auto n_int = static_cast<std::size_t>(
        std::ceil(config.run_seconds / interval_s - 1e-9));
    if (drifts.size() != n_int)
        throw std::invalid_argument("drift schedule: need one drift per interval");

    const IntensityModel model(config);
    const double scale = calibration_scale(model, model.expected(config.motion));
    const ScanSchedule sched = scan_schedule(config);
    const std::size_t nd = config.detunings.size();

    EventSet out;
    for (std::size_t i = 0; i < n_int; ++i) {
        const double lo = static_cast<double>(i) * interval_s;
        const double hi = std::min(lo + interval_s, config.run_seconds);
        const motion::MotionProfile moved = motion::with_linear_drift(config.motion, drifts[i]);
        const IntensityMatrix lambda = model.expected(moved);
        const std::uint64_t interval_seed = derive_seed(seed, i + 1);
        std::vector<std::vector<PhotonEvent>> per_column(nd);
        parallel_for(nd, [&](std::size_t di) {
            sample_column(model, lambda, di, sched, scale, lo, hi,
                          derive_seed(interval_seed, di), per_column[di]);
        });
        for (auto& column : per_column)
            out.events.insert(out.events.end(), column.begin(), column.end());
    }
    sort_events(out.events);
    return out;
}

EventSet sample_events_with_interval_drifts(const ExperimentConfig& config,
                                            double interval_s, double sigma_y_zs,
                                            std::uint64_t seed,
                                            std::vector<double>* injected) {
    const auto n_int = static_cast<std::size_t>(
        std::ceil(config.run_seconds / interval_s - 1e-9));
    // dispersion in drift-rate units: a rate A sustained to the end of the
    // window shifts the arrival phase by a time A * t2 * T0
    const double sigma_rate =
        sigma_y_zs / (config.window_end_ns * constants::carrier_period_zs);
    Rng rng(derive_seed(seed, 0xD21F7ULL));
    std::vector<double> drifts(n_int);
    for (auto& a : drifts) a = rng.normal(0.0, sigma_rate);
    if (injected) *injected = drifts;
    return sample_events_with_drift_schedule(config, interval_s, drifts, seed);
}

EventSet inject_dead_time(const EventSet& input, const std::vector<DeadInterval>& schedule) {
    std::vector<DeadInterval> all = input.dead;
    all.insert(all.end(), schedule.begin(), schedule.end());
    std::sort(all.begin(), all.end(),
              [](const DeadInterval& a, const DeadInterval& b) { return a.start_s < b.start_s; });
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (!(all[i].duration_s > 0.0))
            throw std::invalid_argument("inject_dead_time: durations must be positive");
        if (i > 0 && all[i].start_s < all[i - 1].start_s + all[i - 1].duration_s)
            throw std::invalid_argument("inject_dead_time: intervals overlap");
    }
    EventSet out;
    out.dead = all;
    out.events.reserve(input.events.size());
    for (const auto& ev : input.events) {
        bool dropped = false;
        for (const auto& d : schedule) {
            if (ev.lab_time_s >= d.start_s && ev.lab_time_s < d.start_s + d.duration_s) {
                dropped = true;
                break;
            }
        }
        if (!dropped) out.events.push_back(ev);
    }
    return out;
}

// ---- binning -------------------------------------------------------------

namespace {

std::size_t edge_bin(const std::vector<double>& edges, double value) {
    if (value < edges.front() || value >= edges.back()) return npos;
    const auto it = std::upper_bound(edges.begin(), edges.end(), value);
    return static_cast<std::size_t>(it - edges.begin()) - 1;
}

void check_edges(const std::vector<double>& edges, const char* what) {
    if (edges.size() < 2) throw std::invalid_argument(std::string(what) + ": need at least one bin");
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        if (!(edges[i] < edges[i + 1]))
            throw std::invalid_argument(std::string(what) + ": edges must be strictly increasing");
}

} // namespace

Spectrum2D bin_to_spectrum(const std::vector<PhotonEvent>& events,
                           const std::vector<double>& time_edges_ns,
                           const std::vector<double>& detuning_edges) {
    check_edges(time_edges_ns, "time edges");
    check_edges(detuning_edges, "detuning edges");
    Spectrum2D spec;
    spec.time_edges_ns = time_edges_ns;
    spec.detuning_edges = detuning_edges;
    spec.counts.assign((time_edges_ns.size() - 1) * (detuning_edges.size() - 1), 0);
    spec.exposure_s.assign(detuning_edges.size() - 1, 0.0);
    for (const auto& ev : events) {
        const std::size_t ti = edge_bin(time_edges_ns, ev.t_ns);
        const std::size_t di = edge_bin(detuning_edges, ev.delta_gamma);
        if (ti == npos || di == npos) continue;
        ++spec.at(ti, di);
    }
    return spec;
}

Spectrum2D bin_to_spectrum(const std::vector<PhotonEvent>& events,
                           const std::vector<double>& time_edges_ns,
                           const std::vector<double>& detuning_edges,
                           const ExperimentConfig& config,
                           const std::vector<DeadInterval>& dead, double lab_lo,
                           double lab_hi) {
    Spectrum2D spec = bin_to_spectrum(events, time_edges_ns, detuning_edges);
    const ScanSchedule sched = scan_schedule(config);
    for (std::size_t di = 0; di < config.detunings.size(); ++di) {
        const std::size_t bin = edge_bin(detuning_edges, config.detunings[di]);
        if (bin == npos) continue;
        spec.exposure_s[bin] += sched.live_seconds(di, lab_lo, lab_hi, dead);
    }
    return spec;
}

double simulated_crossover_ns(const ExperimentConfig& config) {
    const TimeGrid& grid = config.grid;
    auto target = response::multiline_transmission(config.target, grid);
    auto se = motion::shape_double_pulse(
        config.scu, motion::canonical_motion(motion::CanonicalCase::stimulated_emission), grid);
    auto boost = motion::shape_double_pulse(
        config.scu, motion::canonical_motion(motion::CanonicalCase::enhanced_excitation), grid);
    auto se_out = signal::convolve(se.field, target);
    auto boost_out = signal::convolve(boost.field, target);

    std::vector<double> diff(grid.n);
    for (std::size_t k = 0; k < grid.n; ++k)
        diff[k] = std::norm(boost_out.samples[k]) - std::norm(se_out.samples[k]);

    double lo = config.scu.lines.front().detuning, hi = lo;
    for (const auto& line : config.scu.lines) {
        lo = std::min(lo, line.detuning);
        hi = std::max(hi, line.detuning);
    }
    double spread = hi - lo;
    if (spread > 0.0) {
        std::size_t half = static_cast<std::size_t>(
            std::lround(2.0 * std::numbers::pi / spread / grid.dt)) / 2;
        std::vector<double> smooth(grid.n);
        for (std::size_t k = 0; k < grid.n; ++k) {
            std::size_t a = k >= half ? k - half : 0;
            std::size_t b = std::min(grid.n - 1, k + half);
            double sum = 0.0;
            for (std::size_t i = a; i <= b; ++i) sum += diff[i];
            smooth[k] = sum / static_cast<double>(b - a + 1);
        }
        diff.swap(smooth);
    }

    bool have_prev = false;
    for (std::size_t k = 1; k < grid.n; ++k) {
        double t_ns = grid.time_ns(k);
        if (t_ns < config.window_start_ns || t_ns > config.window_end_ns) continue;
        if (have_prev && diff[k - 1] != 0.0 && std::signbit(diff[k]) != std::signbit(diff[k - 1])) {
            double f = diff[k - 1] / (diff[k - 1] - diff[k]);
            return grid.time_ns(k - 1) + f * grid.dt_ns();
        }
        have_prev = true;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

} // namespace nucx::experiment
