#include "nucx/allan.hpp"

#include "nucx/parallel.hpp"
#include "nucx/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace nucx::allan {

namespace {

std::size_t lower_index(const std::vector<experiment::PhotonEvent>& events, double lab) {
    const auto it = std::lower_bound(
        events.begin(), events.end(), lab,
        [](const experiment::PhotonEvent& ev, double t) { return ev.lab_time_s < t; });
    return static_cast<std::size_t>(it - events.begin());
}

} // namespace

std::vector<EventSample> bin_events(const experiment::EventSet& data, double tau,
                                    BinningMode mode, double run_seconds) {
    if (!(tau > 0.0)) throw std::invalid_argument("bin_events: tau must be positive");
    const auto& events = data.events;
    std::vector<EventSample> samples;
    if (mode == BinningMode::equal_time) {
        const auto n = static_cast<std::size_t>(std::floor(run_seconds / tau + 1e-9));
        if (n < 2)
            throw std::invalid_argument("bin_events: tau leaves fewer than two samples");
        samples.reserve(n);
        for (std::size_t k = 0; k < n; ++k) {
            EventSample s;
            s.start_s = static_cast<double>(k) * tau;
            s.end_s = s.start_s + tau;
            s.begin = lower_index(events, s.start_s);
            s.end = lower_index(events, s.end_s);
            samples.push_back(s);
        }
    } else {
        const double rate = static_cast<double>(events.size()) / run_seconds;
        const auto quota =
            static_cast<std::size_t>(std::max(1.0, std::ceil(rate * tau - 1e-9)));
        const std::size_t n = events.size() / quota;
        if (n < 2)
            throw std::invalid_argument("bin_events: tau leaves fewer than two samples");
        samples.reserve(n);
        for (std::size_t k = 0; k < n; ++k) {
            EventSample s;
            s.begin = k * quota;
            s.end = s.begin + quota;
            s.start_s = events[s.begin].lab_time_s;
            s.end_s = events[s.end - 1].lab_time_s + 1e-9;
            samples.push_back(s);
        }
    }
    return samples;
}

double allan_deviation(const std::vector<double>& y) {
    if (y.size() < 2) throw std::invalid_argument("allan_deviation: need at least two samples");
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
        const double d = y[i + 1] - y[i];
        sum += d * d;
    }
    return std::sqrt(sum / (2.0 * static_cast<double>(y.size() - 1)));
}

std::optional<std::pair<double, double>> sample_deviation(
    const experiment::EventSet& data, const EventSample& sample,
    const fit::NoiseParameterFamily& family, const experiment::ExperimentConfig& config) {
    const std::vector<experiment::PhotonEvent> slice(
        data.events.begin() + static_cast<std::ptrdiff_t>(sample.begin),
        data.events.begin() + static_cast<std::ptrdiff_t>(sample.end));
    // exposure from the nominal schedule: the analysis does not know the
    // dropout windows, mirroring how real acquisition gaps enter the fits
    const experiment::Spectrum2D spec = experiment::bin_to_spectrum(
        slice, config.time_bin_edges_ns(), config.detuning_bin_edges(), config, {},
        sample.start_s, sample.end_s);
    try {
        const fit::NoiseFit f = family.fit(spec);
        return std::make_pair(f.y_zs, 0.5 * (f.y_ci_hi - f.y_ci_lo));
    } catch (const fit::InsufficientStatisticsError&) {
        return std::nullopt;
    }
}

std::optional<std::pair<double, double>> sample_deviation(
    const experiment::EventSet& data, const EventSample& sample,
    const motion::MotionProfile& base, fit::NoiseModel kind,
    const experiment::IntensityModel& context) {
    const fit::NoiseParameterFamily family(base, kind, context);
    return sample_deviation(data, sample, family, context.config());
}

AllanSeries allan_curve(const experiment::EventSet& data, const std::vector<double>& taus,
                        const motion::MotionProfile& base, fit::NoiseModel kind,
                        const experiment::IntensityModel& context, BinningMode mode,
                        std::uint64_t seed) {
    AllanSeries series;
    const double run = context.config().run_seconds;
    const fit::NoiseParameterFamily family(base, kind, context);
    for (std::size_t ti = 0; ti < taus.size(); ++ti) {
        const double tau = taus[ti];
        std::vector<EventSample> samples;
        try {
            samples = bin_events(data, tau, mode, run);
        } catch (const std::invalid_argument& err) {
            std::cerr << "warning: tau = " << tau << " s skipped: " << err.what() << "\n";
            continue;
        }
        std::vector<std::optional<std::pair<double, double>>> fits(samples.size());
        parallel_for(samples.size(), [&](std::size_t si) {
            fits[si] = sample_deviation(data, samples[si], family, context.config());
        });
        std::vector<double> y, sig;
        std::size_t skipped = 0;
        for (const auto& f : fits) {
            if (!f) {
                ++skipped;
                continue;
            }
            y.push_back(f->first);
            sig.push_back(f->second);
        }
        if (skipped > 0)
            std::cerr << "warning: tau = " << tau << " s: " << skipped
                      << " sample(s) below the statistics floor\n";
        if (y.size() < 2) {
            std::cerr << "warning: tau = " << tau << " s skipped: fewer than two usable samples\n";
            continue;
        }
        AllanPoint point;
        point.tau_s = tau;
        point.sigma_zs = allan_deviation(y);
        point.n_samples = static_cast<long>(y.size());

        // parametric resampling of the per-sample fits
        Rng rng(derive_seed(seed, ti));
        constexpr int n_draws = 1000;
        std::vector<double> draws(n_draws);
        std::vector<double> y_star(y.size());
        for (int d = 0; d < n_draws; ++d) {
            for (std::size_t i = 0; i < y.size(); ++i)
                y_star[i] = y[i] + rng.normal(0.0, sig[i]);
            draws[d] = allan_deviation(y_star);
        }
        std::sort(draws.begin(), draws.end());
        point.err_lo = draws[static_cast<std::size_t>(std::lround(0.16 * (n_draws - 1)))];
        point.err_hi = draws[static_cast<std::size_t>(std::lround(0.84 * (n_draws - 1)))];
        series.points.push_back(point);
    }
    return series;
}

std::vector<SlidingPoint> sliding_deviations(const experiment::EventSet& data, double tau,
                                             double stride,
                                             const motion::MotionProfile& base,
                                             fit::NoiseModel kind,
                                             const experiment::IntensityModel& context) {
    if (!(stride > 0.0)) throw std::invalid_argument("sliding_deviations: stride must be positive");
    if (!(tau > 0.0)) throw std::invalid_argument("sliding_deviations: tau must be positive");
    const double run = context.config().run_seconds;
    std::vector<EventSample> windows;
    for (double start = 0.0; start + tau <= run + 1e-9; start += stride) {
        EventSample s;
        s.start_s = start;
        s.end_s = start + tau;
        s.begin = lower_index(data.events, s.start_s);
        s.end = lower_index(data.events, s.end_s);
        windows.push_back(s);
    }
    const fit::NoiseParameterFamily family(base, kind, context);
    std::vector<std::optional<fit::NoiseFit>> fits(windows.size());
    parallel_for(windows.size(), [&](std::size_t wi) {
        const experiment::ExperimentConfig& cfg = context.config();
        const std::vector<experiment::PhotonEvent> slice(
            data.events.begin() + static_cast<std::ptrdiff_t>(windows[wi].begin),
            data.events.begin() + static_cast<std::ptrdiff_t>(windows[wi].end));
        const experiment::Spectrum2D spec = experiment::bin_to_spectrum(
            slice, cfg.time_bin_edges_ns(), cfg.detuning_bin_edges(), cfg, {},
            windows[wi].start_s, windows[wi].end_s);
        try {
            fits[wi] = family.fit(spec);
        } catch (const fit::InsufficientStatisticsError&) {
            fits[wi] = std::nullopt;
        }
    });
    std::vector<SlidingPoint> out;
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
        if (!fits[wi]) continue;
        out.push_back(SlidingPoint{0.5 * (windows[wi].start_s + windows[wi].end_s),
                                   fits[wi]->y_zs, fits[wi]->y_ci_lo, fits[wi]->y_ci_hi});
    }
    return out;
}

std::vector<double> default_tau_ladder(double run_seconds, double event_rate) {
    std::vector<double> taus;
    if (!(event_rate > 0.0) || !(run_seconds > 0.0)) return taus;
    const double tau_min = 4.0 * 100.0 / event_rate;
    const double tau_max = 0.5 * run_seconds;
    for (int k = 0;; ++k) {
        const double tau = tau_min * std::pow(10.0, static_cast<double>(k) / 10.0);
        if (tau > tau_max) break;
        taus.push_back(tau);
    }
    if (taus.empty() && tau_max > 0.0) taus.push_back(tau_max);
    return taus;
}

} // namespace nucx::allan
