#pragma once

#include "nucx/experiment.hpp"
#include "nucx/likelihood.hpp"
#include "nucx/tls.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

// Inverse problems: evolutionary free-knot reconstruction of the SCU motion
// from a 2D spectrum, single-parameter noise-model fits with
// profile-likelihood confidence intervals, and dipole extraction from a
// fitted motion.

namespace nucx::fit {

class InsufficientStatisticsError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// ---- evolutionary motion reconstruction ----------------------------------

struct EaParams {
    int population = 64;
    double elite_fraction = 0.25; // truncation selection keeps this share
    int generations = 200;
    int knots = 32;               // uniform over the bunch period
    double init_sigma = 0.15;     // initial mutation scale, lambda0 units
    double sigma_floor = 1e-4;
    int polish_sweeps = 12; // refinement sweeps after the EA; stops early once stalled
};

struct FitResult {
    motion::MotionProfile motion; // free_knots
    double scale_factor = 0.0;    // global count normalization at the optimum
    double log_likelihood = 0.0;  // profiled Poisson log-likelihood (n-only terms dropped)
    int generations = 0;
    bool converged = false;
    std::vector<double> best_by_generation; // monotone non-decreasing
    double mean_mutation_sigma = 0.0;       // population diagnostic
    double population_spread = 0.0;         // best-to-median likelihood gap
};

// Maximizes the scale-profiled Poisson likelihood over free-knot motions.
// Deterministic for a fixed seed and independent of the worker count.
FitResult fit_motion_evolutionary(const experiment::Spectrum2D& observed,
                                  const experiment::IntensityModel& model,
                                  const EaParams& params, std::uint64_t seed);

// ---- single-parameter noise models ---------------------------------------

enum class NoiseModel { linear_drift, scaling, step };

std::string to_string(NoiseModel model);
NoiseModel noise_model_from_string(const std::string& name);

struct NoiseFit {
    NoiseModel model = NoiseModel::linear_drift;
    double parameter = 0.0;      // A [lambda0/ns], s [-], or d [rad]
    double log_likelihood = 0.0; // profiled, n-only terms dropped
    double ci_lo = 0.0, ci_hi = 0.0; // 68% profile-likelihood interval
    double y_zs = 0.0;               // temporal deviation
    double y_ci_lo = 0.0, y_ci_hi = 0.0;
};

// Binned model intensities precomputed on a uniform table over the noise
// parameter, interpolated linearly in between.  Building the table costs
// n_nodes forward evaluations; each fit() is then table-driven, which is
// what makes deviation curves over hundreds of samples tractable.  fit()
// runs a golden-section likelihood maximization and a profile-likelihood
// 68% interval (bisection on a half-nat drop); it throws
// InsufficientStatisticsError below 100 counts.
class NoiseParameterFamily {
  public:
    NoiseParameterFamily(const motion::MotionProfile& base, NoiseModel kind,
                         const experiment::IntensityModel& model, int n_nodes = 1201);

    NoiseFit fit(const experiment::Spectrum2D& observed) const;

    NoiseModel kind() const { return kind_; }
    double bound() const { return bound_; }

  private:
    NoiseModel kind_;
    double bound_ = 0.0;
    double window_end_ns_ = 0.0;
    std::size_t n_bins_ = 0, n_det_ = 0;
    std::vector<double> nodes_;
    std::vector<float> table_;   // [node][cell] binned intensities
    std::vector<double> colsum_; // [node][detuning]
};

// One-shot convenience wrapper: builds a NoiseParameterFamily and fits the
// spectrum.  Temporal-deviation conversions: linear y = A t2 T0 (t2 = window
// end), scaling y = s T0/2, step y = (d/pi) T0/2.
NoiseFit fit_noise_parameter(const experiment::Spectrum2D& observed,
                             const motion::MotionProfile& base, NoiseModel kind,
                             const experiment::IntensityModel& model);

double temporal_deviation_zs(NoiseModel kind, double parameter, double window_end_ns);

// ---- dipole extraction ---------------------------------------------------

// Coherence of the target driven by the fitted double pulse; the no-control
// reference is the same trace for a bare impulse drive.
tls::DipoleTrace extract_dipole(const FitResult& fit,
                                const response::TransmissionModel& target,
                                const response::TransmissionModel& scu,
                                const signal::TimeGrid& grid);

tls::DipoleTrace dipole_reference(const response::TransmissionModel& target,
                                  const signal::TimeGrid& grid);

// ---- shared objective ----------------------------------------------------

// Scale-profiled Poisson objective for one candidate motion:
// sum_nz n ln(e) - N ln(sum e), with e = binned intensity times the
// per-detuning exposure of the observed spectrum.  Used by both fitters.
class MotionObjective {
  public:
    MotionObjective(const experiment::Spectrum2D& observed,
                    const experiment::IntensityModel& model);

    double operator()(const motion::MotionProfile& m) const;
    double scale_at(const motion::MotionProfile& m) const; // profiled s*
    long total_counts() const { return n_total_; }
    const experiment::IntensityModel& model() const { return model_; }

  private:
    const experiment::IntensityModel& model_;
    std::vector<std::pair<std::size_t, long>> nonzero_;
    std::vector<double> column_weight_; // relative exposure per detuning
    long n_total_ = 0;
};

} // namespace nucx::fit
