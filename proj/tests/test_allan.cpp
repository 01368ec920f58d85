#include "doctest.h"

#include "nucx/allan.hpp"
#include "nucx/experiment.hpp"
#include "nucx/rng.hpp"

#include <cmath>
#include <vector>

using namespace nucx;
using allan::BinningMode;
using allan::EventSample;
using experiment::EventSet;
using experiment::ExperimentConfig;
using experiment::PhotonEvent;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.detunings = {-10.0, 0.0, 10.0};
    cfg.grid = signal::make_grid_ns(0.0, 0.5, 353);
    cfg.run_seconds = 40.0;
    cfg.photon_budget = 4e4;
    return cfg;
}

// one event per second at k + 0.5, mid-window arrival
EventSet uniform_stream(std::size_t n) {
    EventSet data;
    data.events.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
        data.events.push_back(PhotonEvent{50.0, 0.0, static_cast<double>(k) + 0.5});
    return data;
}

} // namespace

TEST_CASE("two-sample deviation closed-form values") {
    CHECK(allan::allan_deviation({0.0, 2.0}) == doctest::Approx(std::sqrt(2.0)));
    CHECK(allan::allan_deviation({0.0, 2.0, 0.0}) == doctest::Approx(std::sqrt(2.0)));
    CHECK(allan::allan_deviation({1.0, 2.0, 3.0, 4.0}) ==
          doctest::Approx(std::sqrt(3.0 / 6.0)));
    CHECK(allan::allan_deviation({7.0, 7.0, 7.0, 7.0}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(allan::allan_deviation({1.0}), std::invalid_argument);
    CHECK_THROWS_AS(allan::allan_deviation({}), std::invalid_argument);
}

TEST_CASE("deviation invariances") {
    const std::vector<double> y = {0.3, -1.2, 0.7, 2.0, -0.4};
    const double base = allan::allan_deviation(y);

    std::vector<double> shifted(y);
    for (double& v : shifted) v += 123.0;
    CHECK(allan::allan_deviation(shifted) == doctest::Approx(base).epsilon(1e-12));

    std::vector<double> scaled(y);
    for (double& v : scaled) v *= -2.5;
    CHECK(allan::allan_deviation(scaled) == doctest::Approx(2.5 * base).epsilon(1e-12));
}

TEST_CASE("white noise gives back its own dispersion") {
    Rng rng(424242);
    std::vector<double> y(10000);
    const double sigma = 3.7;
    for (double& v : y) v = rng.normal(0.0, sigma);
    // for independent samples E[(y_{i+1} - y_i)^2] = 2 sigma^2, so the
    // two-sample deviation estimates sigma itself
    CHECK(allan::allan_deviation(y) == doctest::Approx(sigma).epsilon(0.05));
}

TEST_CASE("equal-time binning tiles the run and drops the partial tail") {
    const EventSet data = uniform_stream(600);

    const auto s100 = allan::bin_events(data, 100.0, BinningMode::equal_time, 600.0);
    REQUIRE(s100.size() == 6);
    for (std::size_t k = 0; k < 6; ++k) {
        CHECK(s100[k].start_s == doctest::Approx(100.0 * static_cast<double>(k)));
        CHECK(s100[k].end_s == doctest::Approx(100.0 * static_cast<double>(k + 1)));
        CHECK(s100[k].count() == 100);
        CHECK(s100[k].begin == 100 * k);
    }

    // 600 / 250 -> two full windows; the last 100 s of data are unused
    const auto s250 = allan::bin_events(data, 250.0, BinningMode::equal_time, 600.0);
    REQUIRE(s250.size() == 2);
    CHECK(s250[1].end_s == doctest::Approx(500.0));
    CHECK(s250[1].end == 500);

    CHECK_THROWS_AS(allan::bin_events(data, 400.0, BinningMode::equal_time, 600.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(allan::bin_events(data, 0.0, BinningMode::equal_time, 600.0),
                    std::invalid_argument);
}

TEST_CASE("equal-counts binning fixes the quota instead of the clock") {
    const EventSet data = uniform_stream(600); // rate = 1 event / s

    const auto s200 = allan::bin_events(data, 200.0, BinningMode::equal_counts, 600.0);
    REQUIRE(s200.size() == 3);
    for (const EventSample& s : s200) CHECK(s.count() == 200);
    CHECK(s200[0].start_s == doctest::Approx(0.5));
    CHECK(s200[0].end_s == doctest::Approx(199.5).epsilon(1e-6));
    CHECK(s200[1].begin == 200);

    // 250-count quota: two full runs, trailing 100 events dropped
    const auto s250 = allan::bin_events(data, 250.0, BinningMode::equal_counts, 600.0);
    REQUIRE(s250.size() == 2);
    CHECK(s250[1].end == 500);

    // quota never drops below one event
    const auto tiny = allan::bin_events(data, 0.5, BinningMode::equal_counts, 600.0);
    CHECK(tiny.size() == 600);
    CHECK(tiny[0].count() == 1);

    CHECK_THROWS_AS(allan::bin_events(data, 350.0, BinningMode::equal_counts, 600.0),
                    std::invalid_argument);
}

TEST_CASE("tau ladder spans the statistics floor to half the run") {
    const std::vector<double> taus = allan::default_tau_ladder(600.0, 1000.0);
    REQUIRE_FALSE(taus.empty());
    CHECK(taus.front() == doctest::Approx(0.4)); // 4 x 100-count bound at 1 kHz
    for (std::size_t i = 0; i + 1 < taus.size(); ++i)
        CHECK(taus[i + 1] / taus[i] == doctest::Approx(std::pow(10.0, 0.1)));
    CHECK(taus.back() <= 300.0);
    CHECK(taus.back() * std::pow(10.0, 0.1) > 300.0);

    CHECK(allan::default_tau_ladder(600.0, 0.0).empty());
    CHECK(allan::default_tau_ladder(0.0, 1000.0).empty());
}

TEST_CASE("window fits report a deviation or signal thin statistics") {
    const ExperimentConfig cfg = small_config();
    const experiment::IntensityModel model(cfg);
    const fit::NoiseParameterFamily family(cfg.motion, fit::NoiseModel::linear_drift,
                                           model, 101);

    // 50 events in the window: below the 100-count floor
    EventSet thin = uniform_stream(50);
    for (auto& ev : thin.events) ev.lab_time_s *= 0.2; // squeeze into [0, 10)
    EventSample sparse;
    sparse.start_s = 0.0;
    sparse.end_s = 10.0;
    sparse.begin = 0;
    sparse.end = thin.events.size();
    CHECK_FALSE(allan::sample_deviation(thin, sparse, family, cfg).has_value());

    // a real sample from the zero-drift model: plenty of counts, finite fit
    const EventSet data =
        experiment::sample_events(experiment::expected_intensity(cfg), cfg, 99);
    const auto windows = allan::bin_events(data, 10.0, BinningMode::equal_time, 40.0);
    REQUIRE(windows.size() == 4);
    const auto dev = allan::sample_deviation(data, windows[0], family, cfg);
    REQUIRE(dev.has_value());
    CHECK(std::isfinite(dev->first));
    CHECK(dev->second > 0.0); // resampling width from a real CI
}

TEST_CASE("deviation curve pipeline runs end to end") {
    const ExperimentConfig cfg = small_config();
    const experiment::IntensityModel model(cfg);
    const EventSet data =
        experiment::sample_events(experiment::expected_intensity(cfg), cfg, 7);

    const allan::AllanSeries series =
        allan::allan_curve(data, {10.0, 20.0, 30.0}, cfg.motion,
                           fit::NoiseModel::linear_drift, model,
                           BinningMode::equal_time, 1);
    // tau = 30 leaves a single window in 40 s and is skipped with a warning
    REQUIRE(series.points.size() == 2);
    for (const auto& p : series.points) {
        CHECK(std::isfinite(p.sigma_zs));
        CHECK(p.sigma_zs >= 0.0);
        CHECK(p.err_lo <= p.err_hi);
        CHECK(p.n_samples >= 2);
    }
    CHECK(series.points[0].tau_s == doctest::Approx(10.0));
    CHECK(series.points[0].n_samples == 4);

    // same data, same seed: deterministic
    const allan::AllanSeries again =
        allan::allan_curve(data, {10.0}, cfg.motion, fit::NoiseModel::linear_drift,
                           model, BinningMode::equal_time, 1);
    CHECK(again.points[0].sigma_zs == doctest::Approx(series.points[0].sigma_zs));
    CHECK(again.points[0].err_hi == doctest::Approx(series.points[0].err_hi));
}

TEST_CASE("sliding windows trace the run") {
    const ExperimentConfig cfg = small_config();
    const experiment::IntensityModel model(cfg);
    const EventSet data =
        experiment::sample_events(experiment::expected_intensity(cfg), cfg, 11);

    const auto trace = allan::sliding_deviations(data, 10.0, 5.0, cfg.motion,
                                                 fit::NoiseModel::scaling, model);
    REQUIRE(trace.size() == 7); // starts at 0, 5, ..., 30
    for (std::size_t i = 0; i < trace.size(); ++i) {
        CHECK(trace[i].t_center_s ==
              doctest::Approx(5.0 + 5.0 * static_cast<double>(i)));
        CHECK(std::isfinite(trace[i].y_zs));
        CHECK(trace[i].ci_lo <= trace[i].y_zs);
        CHECK(trace[i].y_zs <= trace[i].ci_hi);
    }

    CHECK_THROWS_AS(
        allan::sliding_deviations(data, 0.0, 5.0, cfg.motion,
                                  fit::NoiseModel::scaling, model),
        std::invalid_argument);
    CHECK_THROWS_AS(
        allan::sliding_deviations(data, 10.0, -1.0, cfg.motion,
                                  fit::NoiseModel::scaling, model),
        std::invalid_argument);
}
