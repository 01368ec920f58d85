#pragma once

#include "nucx/experiment.hpp"
#include "nucx/fit.hpp"

#include <cstdint>
#include <optional>
#include <vector>

// Stability pipeline: split an event stream into interval samples, fit the
// per-sample temporal deviation y_i with a single-parameter noise model, and
// aggregate successive deviations into an Allan curve with resampled error
// ranges.  Per-sample fits use the nominal scan schedule (dead-time unaware),
// as an analysis of real data would; count-based binning is the mitigation
// for rate dropouts.

namespace nucx::allan {

enum class BinningMode { equal_time, equal_counts };

struct EventSample {
    double start_s = 0.0;
    double end_s = 0.0;
    std::size_t begin = 0; // index range into the sorted event vector
    std::size_t end = 0;
    std::size_t count() const { return end - begin; }
};

// equal_time: windows [k tau, (k+1) tau); equal_counts: runs of
// ceil(rate * tau) consecutive events.  Trailing partial samples are
// dropped; fewer than two samples is an error.
std::vector<EventSample> bin_events(const experiment::EventSet& data, double tau,
                                    BinningMode mode, double run_seconds);

// sigma_y = sqrt( sum (y_{i+1} - y_i)^2 / (2 (N-1)) ); needs N >= 2
double allan_deviation(const std::vector<double>& y);

struct AllanPoint {
    double tau_s = 0.0;
    double sigma_zs = 0.0;
    double err_lo = 0.0; // 16th percentile of the resampled deviation
    double err_hi = 0.0; // 84th percentile
    long n_samples = 0;
};

struct AllanSeries {
    std::vector<AllanPoint> points;
};

// Full pipeline for one noise model: bin, fit each sample, difference, and
// propagate per-sample confidence intervals by parametric resampling
// (1000 draws).  Samples below the statistics floor and tau values with
// fewer than two usable samples are skipped with a warning on stderr.
AllanSeries allan_curve(const experiment::EventSet& data, const std::vector<double>& taus,
                        const motion::MotionProfile& base, fit::NoiseModel kind,
                        const experiment::IntensityModel& context, BinningMode mode,
                        std::uint64_t seed);

struct SlidingPoint {
    double t_center_s = 0.0;
    double y_zs = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

// overlapping windows [k stride, k stride + tau): traces slow drifts of the
// per-sample deviation, e.g. an initialization transient
std::vector<SlidingPoint> sliding_deviations(const experiment::EventSet& data, double tau,
                                             double stride,
                                             const motion::MotionProfile& base,
                                             fit::NoiseModel kind,
                                             const experiment::IntensityModel& context);

// logarithmic ladder, 10 points per decade, from 4x the 100-count statistics
// bound up to half the run length
std::vector<double> default_tau_ladder(double run_seconds, double event_rate);

// deviation and symmetric error of one sample window; nullopt below the
// statistics floor.  The family-based overload is the fast path used by the
// curve and sliding variants; the convenience overload builds a family per
// call and is only suitable for one-off use.
std::optional<std::pair<double, double>> sample_deviation(
    const experiment::EventSet& data, const EventSample& sample,
    const fit::NoiseParameterFamily& family, const experiment::ExperimentConfig& config);
std::optional<std::pair<double, double>> sample_deviation(
    const experiment::EventSet& data, const EventSample& sample,
    const motion::MotionProfile& base, fit::NoiseModel kind,
    const experiment::IntensityModel& context);

} // namespace nucx::allan
