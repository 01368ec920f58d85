#include "doctest.h"

#include "nucx/constants.hpp"
#include "nucx/experiment.hpp"
#include "nucx/motion.hpp"
#include "nucx/response.hpp"
#include "nucx/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

using namespace nucx;
using experiment::DeadInterval;
using experiment::EventSet;
using experiment::ExperimentConfig;
using experiment::IntensityMatrix;
using experiment::IntensityModel;
using experiment::PhotonEvent;
using experiment::ScanSchedule;
using experiment::Spectrum2D;
using motion::CanonicalCase;

namespace {

// small configuration: coarse grid, three detuning columns
ExperimentConfig tiny_config() {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.detunings = {-10.0, 0.0, 10.0};
    cfg.grid = signal::make_grid_ns(0.0, 0.5, 353);
    cfg.sweep_period_s = 2.0;
    cfg.run_seconds = 600.0;
    return cfg;
}

// flat-intensity configuration with ~10^4 analysis cells
ExperimentConfig flat_config() {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    std::vector<double> det(101);
    for (int k = 0; k < 101; ++k) det[k] = -50.0 + k;
    cfg.detunings = det;
    cfg.grid = signal::make_grid_ns(0.0, 0.1, 1181);
    cfg.window_start_ns = 18.0;
    cfg.window_end_ns = 118.0;
    cfg.photon_budget = 2e5;
    cfg.run_seconds = 600.0;
    cfg.sweep_period_s = 2.0;
    return cfg;
}

IntensityMatrix constant_matrix(const ExperimentConfig& cfg, double value) {
    IntensityMatrix lambda;
    lambda.grid = cfg.grid;
    lambda.detunings = cfg.detunings;
    lambda.values.assign(cfg.detunings.size() * cfg.grid.n, value);
    return lambda;
}

// sweep position of a lab time: which detuning index is being driven
std::size_t schedule_index(const ScanSchedule& s, double lab_time) {
    const double phase = std::fmod(lab_time, s.period_s);
    const double dwell = s.dwell_s();
    if (phase < 0.5 * s.period_s)
        return static_cast<std::size_t>(phase / dwell);
    const auto back = static_cast<std::size_t>((phase - 0.5 * s.period_s) / dwell);
    return s.n_detunings - 1 - back;
}

} // namespace

TEST_CASE("configuration validation") {
    CHECK_NOTHROW(ExperimentConfig::defaults().validate());
    CHECK_NOTHROW(ExperimentConfig::defaults_single_line().validate());
    CHECK_NOTHROW(ExperimentConfig::reduced().validate());

    ExperimentConfig bad = tiny_config();
    bad.window_end_ns = 500.0; // outside the grid
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = tiny_config();
    bad.analysis_bin_ns = 0.3; // not a multiple of dt = 0.5
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = tiny_config();
    bad.detunings = {1.0, 1.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = tiny_config();
    bad.run_seconds = 601.0; // not a whole number of sweeps
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("default configuration mirrors the published setup") {
    const ExperimentConfig cfg = ExperimentConfig::defaults();
    CHECK(cfg.scu.lines.size() == 2);
    CHECK(cfg.scu.lines[1].detuning - cfg.scu.lines[0].detuning == doctest::Approx(63.0));
    CHECK(cfg.scu.lines[0].b == doctest::Approx(5.0));
    CHECK(cfg.target.lines.size() == 1);
    CHECK(cfg.target.lines[0].b == doctest::Approx(2.3));
    CHECK(cfg.detunings.size() == 241);
    CHECK(cfg.detunings.front() == doctest::Approx(-233.01).epsilon(1e-3));
    CHECK(cfg.detunings.back() == doctest::Approx(233.01).epsilon(1e-3));
    CHECK(cfg.window_start_ns == doctest::Approx(18.0));
    CHECK(cfg.window_end_ns == doctest::Approx(170.0));
    CHECK(cfg.bunch_period_ns == doctest::Approx(176.0));
}

TEST_CASE("a transparent target makes the intensity detuning-independent") {
    ExperimentConfig cfg = tiny_config();
    cfg.target.lines = {response::NuclearLine{0.0, 0.0, 1.0}};
    const IntensityMatrix lambda = experiment::expected_intensity(cfg);
    for (std::size_t k = 0; k < cfg.grid.n; ++k) {
        CHECK(lambda.at(0, k) == doctest::Approx(lambda.at(1, k)).epsilon(1e-12));
        CHECK(lambda.at(2, k) == doctest::Approx(lambda.at(1, k)).epsilon(1e-12));
    }
}

TEST_CASE("stationary single-line shaper and target stack their thicknesses at t=0") {
    ExperimentConfig cfg = tiny_config();
    cfg.scu.lines = {response::NuclearLine{0.0, 5.0, 1.0}};
    cfg.motion = motion::canonical_motion(CanonicalCase::stimulated_emission);
    const IntensityMatrix lambda = experiment::expected_intensity(cfg);
    // smooth amplitude at t -> 0+ is -(b_scu + b_target) on resonance
    CHECK(lambda.at(1, 0) == doctest::Approx(7.3 * 7.3).epsilon(1e-6));
    // intensity never negative
    for (const double v : lambda.values) CHECK(v >= 0.0);
}

TEST_CASE("fast intensity path agrees with the direct convolution route") {
    ExperimentConfig cfg = tiny_config();
    const IntensityModel model(cfg);
    const IntensityMatrix lambda = model.expected(cfg.motion);

    const auto pulse = motion::shape_double_pulse(cfg.scu, cfg.motion, cfg.grid);
    for (std::size_t di = 0; di < cfg.detunings.size(); ++di) {
        const auto shifted_target =
            response::multiline_transmission(response::shifted(cfg.target, cfg.detunings[di]),
                                             cfg.grid);
        const auto out = signal::convolve(pulse.field, shifted_target);
        for (std::size_t k = 0; k < cfg.grid.n; k += 7) {
            const double direct = std::norm(out.samples[k]);
            CHECK(lambda.at(di, k) == doctest::Approx(direct).epsilon(1e-9));
        }
    }
}

TEST_CASE("on-resonance intensity beats at the shaper line spread") {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.detunings = {-10.0, 0.0, 10.0};
    const IntensityModel model(cfg);
    // stationary shaper: the quantum beat alone, undisturbed by the step
    const IntensityMatrix lambda =
        model.expected(motion::canonical_motion(CanonicalCase::stimulated_emission));

    // detrend the on-resonance curve with a one-beat-period moving average,
    // crop the transient edges, then locate the dominant Fourier component
    const std::size_t n = cfg.grid.n;
    std::vector<double> curve(n);
    for (std::size_t k = 0; k < n; ++k) curve[k] = lambda.at(1, k);
    const double spread = 63.0;
    const auto half = static_cast<std::size_t>(
        std::lround(2.0 * std::numbers::pi / spread / cfg.grid.dt / 2.0));
    std::vector<double> detrended(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t a = k >= half ? k - half : 0;
        const std::size_t b = std::min(n - 1, k + half);
        double mean = 0.0;
        for (std::size_t i = a; i <= b; ++i) mean += curve[i];
        detrended[k] = curve[k] - mean / static_cast<double>(b - a + 1);
    }
    const std::size_t crop = 2 * half + 1;
    REQUIRE(n > 2 * crop);
    const std::size_t m = n - 2 * crop;
    const std::size_t nfft = signal::next_pow2(16 * n);
    std::vector<signal::cplx> work(nfft);
    for (std::size_t k = 0; k < m; ++k) work[k] = signal::cplx{detrended[crop + k], 0.0};
    signal::fft_inplace(work, false);
    std::size_t peak = 1;
    for (std::size_t k = 1; k + 1 < nfft / 2; ++k)
        if (std::abs(work[k]) > std::abs(work[peak])) peak = k;
    const double omega_peak = 2.0 * std::numbers::pi * static_cast<double>(peak) /
                              (static_cast<double>(nfft) * cfg.grid.dt);
    const double domega = 2.0 * std::numbers::pi / (static_cast<double>(m) * cfg.grid.dt);
    CHECK(std::fabs(omega_peak - spread) < domega); // within one frequency bin
    // equivalently: a beat period of 2 pi / S = 14.1 ns
    CHECK(2.0 * std::numbers::pi / omega_peak * constants::internal_to_ns ==
          doctest::Approx(14.1).epsilon(0.05));
}

TEST_CASE("no-displacement and half-wavelength intensities cross between 35 and 55 ns") {
    const double t_cross = experiment::simulated_crossover_ns(ExperimentConfig::defaults());
    CHECK(std::isfinite(t_cross));
    CHECK(t_cross > 35.0);
    CHECK(t_cross < 55.0);

    // integrated early-window counts favor no displacement, late-window the step
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.detunings = {-10.0, 0.0, 10.0};
    const IntensityModel model(cfg);
    const auto se =
        model.expected(motion::canonical_motion(CanonicalCase::stimulated_emission));
    const auto boost =
        model.expected(motion::canonical_motion(CanonicalCase::enhanced_excitation));
    double early_se = 0.0, early_boost = 0.0, late_se = 0.0, late_boost = 0.0;
    for (std::size_t k = 0; k < cfg.grid.n; ++k) {
        const double t = cfg.grid.time_ns(k);
        if (t >= 18.0 && t < 40.0) {
            early_se += se.at(1, k);
            early_boost += boost.at(1, k);
        } else if (t >= 55.0 && t < 170.0) {
            late_se += se.at(1, k);
            late_boost += boost.at(1, k);
        }
    }
    CHECK(early_se > early_boost);
    CHECK(late_boost > late_se);
}

TEST_CASE("triangular sweep schedule tiles the run") {
    ScanSchedule s{2.0, 10.0, 4};
    CHECK(s.dwell_s() == doctest::Approx(0.25));

    // one full period: every index appears exactly twice
    double covered = 0.0;
    for (std::size_t idx = 0; idx < 4; ++idx) {
        const auto segs = s.segments(idx, 0.0, 2.0);
        CHECK(segs.size() == 2);
        for (const auto& [a, b] : segs) covered += b - a;
    }
    CHECK(covered == doctest::Approx(2.0));

    // index 0 sits at the edges of the triangle, index 3 at the turning point
    const auto first = s.segments(0, 0.0, 2.0);
    CHECK(first[0].first == doctest::Approx(0.0));
    CHECK(first[0].second == doctest::Approx(0.25));
    CHECK(first[1].first == doctest::Approx(1.75));
    CHECK(first[1].second == doctest::Approx(2.0));
    const auto turning = s.segments(3, 0.0, 2.0);
    CHECK(turning[0].first == doctest::Approx(0.75));
    CHECK(turning[0].second == doctest::Approx(1.0));
    CHECK(turning[1].first == doctest::Approx(1.0)); // back-to-back at the turn
    CHECK(turning[1].second == doctest::Approx(1.25));

    // restriction clips segments
    const auto clipped = s.segments(0, 0.1, 0.2);
    CHECK(clipped.size() == 1);
    CHECK(clipped[0].first == doctest::Approx(0.1));
    CHECK(clipped[0].second == doctest::Approx(0.2));

    // live seconds over the whole run split evenly between indices
    for (std::size_t idx = 0; idx < 4; ++idx)
        CHECK(s.live_seconds(idx, 0.0, 10.0, {}) == doctest::Approx(2.5));

    // a dead window removes exactly its overlap
    const std::vector<DeadInterval> dead = {{0.0, 0.25}};
    CHECK(s.live_seconds(0, 0.0, 10.0, dead) == doctest::Approx(2.25));
    CHECK(s.live_seconds(1, 0.0, 10.0, dead) == doctest::Approx(2.5));
}

TEST_CASE("zero intensity samples no events") {
    ExperimentConfig cfg = tiny_config();
    const EventSet out = experiment::sample_events(constant_matrix(cfg, 0.0), cfg, 1);
    CHECK(out.events.empty());
}

TEST_CASE("sampling is deterministic and respects the schedule") {
    ExperimentConfig cfg = tiny_config();
    cfg.photon_budget = 2e4;
    const IntensityMatrix lambda = constant_matrix(cfg, 1.0);
    const EventSet a = experiment::sample_events(lambda, cfg, 12345);
    const EventSet b = experiment::sample_events(lambda, cfg, 12345);
    const EventSet c = experiment::sample_events(lambda, cfg, 54321);

    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t k = 0; k < a.events.size(); ++k) {
        CHECK(a.events[k].t_ns == b.events[k].t_ns);
        CHECK(a.events[k].delta_gamma == b.events[k].delta_gamma);
        CHECK(a.events[k].lab_time_s == b.events[k].lab_time_s);
    }
    bool differs = a.events.size() != c.events.size();
    for (std::size_t k = 0; !differs && k < a.events.size(); ++k)
        differs = a.events[k].t_ns != c.events[k].t_ns ||
                  a.events[k].lab_time_s != c.events[k].lab_time_s;
    CHECK(differs); // different seed, different stream

    // sorted by lab time
    CHECK(std::is_sorted(a.events.begin(), a.events.end(),
                         [](const PhotonEvent& x, const PhotonEvent& y) {
                             return x.lab_time_s < y.lab_time_s;
                         }));

    // every event lies inside the detector window and the run
    const ScanSchedule sched = experiment::scan_schedule(cfg);
    const double dwell = sched.dwell_s();
    for (const PhotonEvent& ev : a.events) {
        CHECK(ev.t_ns >= cfg.window_start_ns);
        CHECK(ev.t_ns <= cfg.window_end_ns);
        CHECK(ev.lab_time_s >= 0.0);
        CHECK(ev.lab_time_s < cfg.run_seconds);
        // the recorded detuning matches the sweep position at emission
        const double phase = std::fmod(ev.lab_time_s, sched.period_s);
        const double off = std::fmod(phase, dwell);
        if (off < 1e-9 || dwell - off < 1e-9) continue; // boundary: either side fine
        const std::size_t idx = schedule_index(sched, ev.lab_time_s);
        CHECK(ev.delta_gamma == doctest::Approx(cfg.detunings[idx]));
    }
}

TEST_CASE("sampled counts follow Poisson statistics and the budget") {
    const ExperimentConfig cfg = flat_config();
    const EventSet out = experiment::sample_events(constant_matrix(cfg, 1.0), cfg, 77);

    // total near the configured budget
    const auto total = static_cast<double>(out.events.size());
    CHECK(std::fabs(total - cfg.photon_budget) < 5.0 * std::sqrt(cfg.photon_budget));

    const Spectrum2D spec = experiment::bin_to_spectrum(out.events, cfg.time_bin_edges_ns(),
                                                        cfg.detuning_bin_edges());
    REQUIRE(spec.counts.size() >= 10000);
    double mean = 0.0;
    for (const long c : spec.counts) mean += static_cast<double>(c);
    mean /= static_cast<double>(spec.counts.size());
    double var = 0.0;
    for (const long c : spec.counts) {
        const double d = static_cast<double>(c) - mean;
        var += d * d;
    }
    var /= static_cast<double>(spec.counts.size()) - 1.0;
    CHECK(var / mean > 0.9);
    CHECK(var / mean < 1.1);
}

TEST_CASE("dead-time injection removes exactly the covered events") {
    ExperimentConfig cfg = flat_config();
    const EventSet base = experiment::sample_events(constant_matrix(cfg, 1.0), cfg, 9);

    // empty schedule: identity
    const EventSet same = experiment::inject_dead_time(base, {});
    CHECK(same.events.size() == base.events.size());

    // full cover: nothing survives
    const EventSet none = experiment::inject_dead_time(base, {{0.0, 600.0}});
    CHECK(none.events.empty());

    // a 30 s dropout in a 600 s uniform-rate run removes ~5% of the counts
    const EventSet cut = experiment::inject_dead_time(base, {{100.0, 30.0}});
    const double removed =
        static_cast<double>(base.events.size() - cut.events.size()) /
        static_cast<double>(base.events.size());
    CHECK(removed == doctest::Approx(0.05).epsilon(0.1));
    CHECK(cut.dead.size() == 1);
    for (const PhotonEvent& ev : cut.events)
        CHECK_FALSE((ev.lab_time_s >= 100.0 && ev.lab_time_s < 130.0));

    // overlapping windows are rejected, including against already-applied ones
    CHECK_THROWS_AS(experiment::inject_dead_time(base, {{10.0, 20.0}, {25.0, 10.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(experiment::inject_dead_time(cut, {{120.0, 30.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(experiment::inject_dead_time(base, {{10.0, 0.0}}), std::invalid_argument);
}

TEST_CASE("histogramming preserves in-window events") {
    std::vector<PhotonEvent> events = {
        {20.0, 0.5, 1.0},  // bin (0, 1) in the tiny edges below
        {20.9, 0.5, 2.0},  // same bin
        {25.0, -0.5, 3.0}, // later time bin, first detuning bin
        {999.0, 0.5, 4.0}, // outside time range: dropped
        {20.0, 99.0, 5.0}, // outside detuning range: dropped
    };
    const std::vector<double> tedges = {18.0, 21.0, 27.0};
    const std::vector<double> dedges = {-1.0, 0.0, 1.0};
    const Spectrum2D spec = experiment::bin_to_spectrum(events, tedges, dedges);
    CHECK(spec.n_time() == 2);
    CHECK(spec.n_detuning() == 2);
    CHECK(spec.total() == 3);
    CHECK(spec.at(0, 1) == 2);
    CHECK(spec.at(1, 0) == 1);
    CHECK(spec.at(0, 0) == 0);

    const Spectrum2D empty = experiment::bin_to_spectrum({}, tedges, dedges);
    CHECK(empty.total() == 0);

    CHECK_THROWS_AS(experiment::bin_to_spectrum(events, {18.0}, dedges),
                    std::invalid_argument);
    CHECK_THROWS_AS(experiment::bin_to_spectrum(events, {18.0, 18.0}, dedges),
                    std::invalid_argument);
}

TEST_CASE("schedule-aware binning fills per-detuning exposure") {
    ExperimentConfig cfg = tiny_config();
    cfg.run_seconds = 10.0;
    const Spectrum2D spec = experiment::bin_to_spectrum(
        {}, cfg.time_bin_edges_ns(), cfg.detuning_bin_edges(), cfg, {}, 0.0, 10.0);
    REQUIRE(spec.exposure_s.size() == 3);
    for (const double e : spec.exposure_s)
        CHECK(e == doctest::Approx(10.0 / 3.0));

    // restricting the lab window scales the exposure down
    const Spectrum2D half = experiment::bin_to_spectrum(
        {}, cfg.time_bin_edges_ns(), cfg.detuning_bin_edges(), cfg, {}, 0.0, 5.0);
    double total = 0.0;
    for (const double e : half.exposure_s) total += e;
    CHECK(total == doctest::Approx(5.0));

    // dead intervals reduce it further
    const Spectrum2D dead = experiment::bin_to_spectrum(
        {}, cfg.time_bin_edges_ns(), cfg.detuning_bin_edges(), cfg, {{0.0, 2.0}}, 0.0, 10.0);
    double dead_total = 0.0;
    for (const double e : dead.exposure_s) dead_total += e;
    CHECK(dead_total == doctest::Approx(8.0));
}

TEST_CASE("drift schedules perturb the sampled pattern deterministically") {
    ExperimentConfig cfg = tiny_config();
    cfg.photon_budget = 1e4;
    cfg.run_seconds = 40.0;

    CHECK_THROWS_AS(
        experiment::sample_events_with_drift_schedule(cfg, 10.0, {0.0, 0.0}, 3),
        std::invalid_argument); // needs 4 interval drifts

    const std::vector<double> zeros(4, 0.0);
    const EventSet a = experiment::sample_events_with_drift_schedule(cfg, 10.0, zeros, 3);
    const EventSet b = experiment::sample_events_with_drift_schedule(cfg, 10.0, zeros, 3);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t k = 0; k < a.events.size(); k += 97)
        CHECK(a.events[k].lab_time_s == b.events[k].lab_time_s);

    std::vector<double> injected;
    const EventSet c =
        experiment::sample_events_with_interval_drifts(cfg, 10.0, 25.0, 11, &injected);
    CHECK(injected.size() == 4);
    double spread = 0.0;
    for (const double d : injected) spread = std::max(spread, std::fabs(d));
    CHECK(spread > 0.0);
    CHECK_FALSE(c.events.empty());

    // zero dispersion reproduces the zero-drift stream
    std::vector<double> injected0;
    const EventSet d =
        experiment::sample_events_with_interval_drifts(cfg, 10.0, 0.0, 3, &injected0);
    REQUIRE(d.events.size() == a.events.size());
    for (std::size_t k = 0; k < d.events.size(); k += 97)
        CHECK(d.events[k].t_ns == a.events[k].t_ns);
    for (const double v : injected0) CHECK(v == 0.0);
}
