#pragma once

#include "nucx/motion.hpp"
#include "nucx/response.hpp"
#include "nucx/signal.hpp"

#include <cstdint>
#include <vector>

// Forward model of the measurement: the SCU double pulse transmitted through
// the Doppler-detuned target gives a 2D time/detuning intensity; photons are
// Poisson-sampled on a slow triangular detuning sweep with lab timestamps,
// optionally thinned by detector dead-time windows, and histogrammed into
// 2D spectra with per-detuning live exposure.

namespace nucx::experiment {

using signal::TimeGrid;

struct ExperimentConfig {
    response::TransmissionModel scu;    // two equal lines split by 63 gamma by default
    response::TransmissionModel target; // single line, b = 2.3 gamma by default
    motion::MotionProfile motion;

    std::vector<double> detunings;  // drive detunings in gamma
    double window_start_ns = 18.0;  // detector window (prompt pulse excluded)
    double window_end_ns = 170.0;
    double analysis_bin_ns = 1.0;

    TimeGrid grid; // model grid, default 0-176 ns at 0.1 ns

    double photon_budget = 5e6;  // expected detected events per run
    double run_seconds = 600.0;  // lab duration of the run
    double sweep_period_s = 2.0; // triangular detuning sweep period
    double bunch_period_ns = 176.0;

    static ExperimentConfig defaults();
    // single-line absorbers as used for the reduced-model illustrations
    static ExperimentConfig defaults_single_line();
    // coarser grid and detuning list for desk-scale fitting
    static ExperimentConfig reduced();

    void validate() const;
    std::vector<double> time_bin_edges_ns() const;
    std::vector<double> detuning_bin_edges() const; // midpoints between detunings
};

struct PhotonEvent {
    double t_ns = 0.0;        // pulse-relative arrival
    double delta_gamma = 0.0; // drive detuning at emission
    double lab_time_s = 0.0;  // wall-clock
};

struct DeadInterval {
    double start_s = 0.0;
    double duration_s = 0.0;
};

struct EventSet {
    std::vector<PhotonEvent> events; // sorted by lab_time
    std::vector<DeadInterval> dead;  // dropout windows already applied
};

struct Spectrum2D {
    std::vector<double> time_edges_ns;  // nt + 1, strictly increasing
    std::vector<double> detuning_edges; // nd + 1, strictly increasing
    std::vector<long> counts;           // row-major [time][detuning]
    std::vector<double> exposure_s;     // live seconds per detuning bin

    std::size_t n_time() const { return time_edges_ns.size() - 1; }
    std::size_t n_detuning() const { return detuning_edges.size() - 1; }
    long& at(std::size_t ti, std::size_t di) { return counts[ti * n_detuning() + di]; }
    long at(std::size_t ti, std::size_t di) const { return counts[ti * n_detuning() + di]; }
    long total() const;
};

// lambda(t, delta) on the model grid, one column per detuning
struct IntensityMatrix {
    TimeGrid grid;
    std::vector<double> detunings;
    std::vector<double> values; // [detuning][time] flattened

    double at(std::size_t di, std::size_t ti) const { return values[di * grid.n + ti]; }
};

// Precomputes the per-detuning target kernels (frequency domain) so that
// evaluating the intensity for a new motion costs one FFT plus one inverse
// FFT per detuning column.  Thread-safe for concurrent expected() calls.
class IntensityModel {
  public:
    explicit IntensityModel(const ExperimentConfig& config);

    const ExperimentConfig& config() const { return config_; }

    IntensityMatrix expected(const motion::MotionProfile& m) const;

    // intensity integrated over the analysis time bins inside the detector
    // window: [time_bin][detuning] row-major, matching Spectrum2D layout
    std::vector<double> expected_binned(const motion::MotionProfile& m) const;
    std::vector<double> bin_columns(const IntensityMatrix& lambda) const;

    std::size_t n_time_bins() const { return n_bins_; }
    std::size_t n_detunings() const { return config_.detunings.size(); }

  private:
    ExperimentConfig config_;
    std::size_t nfft_ = 0;
    std::size_t n_bins_ = 0;
    std::vector<std::size_t> bin_of_cell_;    // fine cell -> analysis bin (or npos)
    std::vector<signal::cplx> scu_smooth_;    // stationary SCU response samples
    double scu_weight_ = 1.0;                 // SCU Dirac weight
    double target_weight_ = 1.0;              // target Dirac weight
    std::vector<signal::cplx> target_time_;   // [detuning][time] kernels
    std::vector<signal::cplx> target_freq_;   // [detuning][nfft] kernel spectra
};

IntensityMatrix expected_intensity(const ExperimentConfig& config);

// On-resonance crossover of the full model: first time inside the analysis
// window where the enhanced-excitation and no-displacement intensities swap
// order (in the thin limit the difference changes sign at t = 1/b).  The
// difference is smoothed over one shaper beat period first, because the
// split-line interference would otherwise produce spurious early crossings.
// Returns NaN when no crossing lies inside the window.
double simulated_crossover_ns(const ExperimentConfig& config);

// ---- scan schedule -------------------------------------------------------

// Triangular sweep: each half period visits every detuning index once in
// contiguous equal dwell slices (ascending, then descending).  The schedule
// is fully determined by the config and recorded implicitly with it.
struct ScanSchedule {
    double period_s = 0.0;
    double run_seconds = 0.0;
    std::size_t n_detunings = 0;

    double dwell_s() const { return period_s / (2.0 * static_cast<double>(n_detunings)); }
    // dwell intervals of one detuning index intersected with [lo, hi)
    std::vector<std::pair<double, double>> segments(std::size_t index, double lo,
                                                    double hi) const;
    double live_seconds(std::size_t index, double lo, double hi,
                        const std::vector<DeadInterval>& dead) const;
};

ScanSchedule scan_schedule(const ExperimentConfig& config);

// ---- sampling ------------------------------------------------------------

EventSet sample_events(const IntensityMatrix& lambda, const ExperimentConfig& config,
                       std::uint64_t seed);

// per-interval piecewise-constant drift added on top of config.motion;
// interval i of length interval_s gets drift rate drifts[i] (lambda0 per ns)
EventSet sample_events_with_drift_schedule(const ExperimentConfig& config,
                                           double interval_s,
                                           const std::vector<double>& drifts,
                                           std::uint64_t seed);

// draws independent Gaussian per-interval drifts whose dispersion corresponds
// to a temporal deviation sigma_y_zs; returns the draws through injected
EventSet sample_events_with_interval_drifts(const ExperimentConfig& config,
                                            double interval_s, double sigma_y_zs,
                                            std::uint64_t seed,
                                            std::vector<double>* injected = nullptr);

// removes events inside dropout windows; throws on overlapping intervals
EventSet inject_dead_time(const EventSet& input, const std::vector<DeadInterval>& schedule);

// ---- binning -------------------------------------------------------------

Spectrum2D bin_to_spectrum(const std::vector<PhotonEvent>& events,
                           const std::vector<double>& time_edges_ns,
                           const std::vector<double>& detuning_edges);

// as above, with live exposure computed from the scan schedule restricted to
// the lab-time window [lab_lo, lab_hi) minus the dead intervals
Spectrum2D bin_to_spectrum(const std::vector<PhotonEvent>& events,
                           const std::vector<double>& time_edges_ns,
                           const std::vector<double>& detuning_edges,
                           const ExperimentConfig& config,
                           const std::vector<DeadInterval>& dead, double lab_lo,
                           double lab_hi);

} // namespace nucx::experiment
