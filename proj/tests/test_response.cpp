#include "doctest.h"

#include "nucx/constants.hpp"
#include "nucx/response.hpp"
#include "nucx/signal.hpp"

#include <cmath>
#include <complex>
#include <vector>

using namespace nucx;
using response::NuclearLine;
using response::TransmissionModel;
using signal::cplx;
using signal::SignalEnvelope;
using signal::TimeGrid;

namespace {

// independent oracle: J1(x) by its power series (converges fast for x < 10)
double j1_series(double x) {
    double sum = 0.0;
    double term = x / 2.0;
    for (int m = 0; m < 30; ++m) {
        sum += term;
        term *= -(x / 2.0) * (x / 2.0) / ((m + 1.0) * (m + 2.0));
    }
    return sum;
}

} // namespace

TEST_CASE("single line response starts at -b") {
    const TimeGrid g = signal::make_grid(0.0, 0.01, 512);
    CHECK(response::single_line_response(2.3, g).samples[0].real() == doctest::Approx(-2.3));
    CHECK(response::single_line_response(0.0, g).samples[100] == cplx{0.0, 0.0});
}

TEST_CASE("single line response matches the Bessel closed form") {
    const TimeGrid g = signal::make_grid(0.0, 0.1, 64);
    const SignalEnvelope r = response::single_line_response(5.0, g);
    // at t = 1 lifetime: -sqrt(b/t) J1(2 sqrt(b t)) e^{-t/2}
    const double expect = -std::sqrt(5.0) * j1_series(2.0 * std::sqrt(5.0)) * std::exp(-0.5);
    CHECK(r.samples[10].real() == doctest::Approx(expect).epsilon(1e-6));
    CHECK(r.samples[10].imag() == doctest::Approx(0.0));
    // another point, b t = 2.5
    const double expect05 =
        -std::sqrt(10.0) * j1_series(2.0 * std::sqrt(2.5)) * std::exp(-0.25);
    CHECK(r.samples[5].real() == doctest::Approx(expect05).epsilon(1e-6));
}

TEST_CASE("thin-limit kernel is a plain superradiant exponential") {
    const TimeGrid g = signal::make_grid(0.0, 0.02, 128);
    const SignalEnvelope r = response::thin_limit_response(0.1, g);
    CHECK(r.samples[0].real() == doctest::Approx(-0.1));
    // at t = 2/(1+b) the envelope has decayed by exactly 1/e
    const auto k = static_cast<std::size_t>(std::lround(2.0 / 1.1 / 0.02));
    const double t = g.time(k);
    CHECK(r.samples[k].real() == doctest::Approx(-0.1 * std::exp(-0.55 * t)).epsilon(1e-12));
    CHECK(-0.1 * std::exp(-1.0) == doctest::Approx(-0.0367879).epsilon(1e-5));
}

TEST_CASE("thin limit tracks the full response for small thickness") {
    // b = 0.1: pointwise relative deviation below 5% over the full window
    const TimeGrid g = signal::make_grid_ns(0.0, 0.5, 341); // 0..170 ns
    const SignalEnvelope full = response::single_line_response(0.1, g);
    const SignalEnvelope thin = response::thin_limit_response(0.1, g);
    for (std::size_t k = 0; k < g.n; ++k) {
        const double denom = std::abs(full.samples[k]);
        REQUIRE(denom > 0.0);
        CHECK(std::abs(full.samples[k] - thin.samples[k]) / denom < 0.05);
    }
}

TEST_CASE("a detuned line rotates the on-resonance kernel") {
    const TimeGrid g = signal::make_grid(0.0, 0.01, 1024);
    const SignalEnvelope base = response::line_response(NuclearLine{0.0, 2.0, 1.0}, g);
    const SignalEnvelope det = response::line_response(NuclearLine{7.5, 2.0, 1.0}, g);
    for (std::size_t k = 0; k < g.n; k += 37) {
        const cplx expect = base.samples[k] * std::polar(1.0, -7.5 * g.time(k));
        CHECK(std::abs(det.samples[k] - expect) < 1e-8);
    }
}

TEST_CASE("two equally split lines beat at the line spread") {
    // lines at +-31.5 gamma: |R| ~ |cos(31.5 t)|, minima spaced pi/31.5
    TransmissionModel model;
    model.lines = {NuclearLine{-31.5, 2.5, 1.0}, NuclearLine{31.5, 2.5, 1.0}};
    const TimeGrid g = signal::make_grid(0.0, 0.002, 1024);
    const SignalEnvelope r = response::multiline_transmission(model, g);

    std::vector<double> minima_t;
    for (std::size_t k = 1; k + 1 < g.n; ++k) {
        const double a = std::abs(r.samples[k - 1]);
        const double b = std::abs(r.samples[k]);
        const double c = std::abs(r.samples[k + 1]);
        if (b < a && b <= c) minima_t.push_back(g.time(k));
    }
    REQUIRE(minima_t.size() >= 4);
    const double spacing_gamma = minima_t[3] - minima_t[2];
    const double expect = 3.14159265358979 / 31.5;
    CHECK(spacing_gamma == doctest::Approx(expect).epsilon(0.02));
    // in nanoseconds this is the ~14 ns quantum-beat period of the intensity
    CHECK(spacing_gamma * constants::lifetime_ns == doctest::Approx(14.06).epsilon(0.02));
}

TEST_CASE("time-domain composition agrees with the analytic frequency response") {
    TransmissionModel model;
    model.lines = {NuclearLine{-5.0, 1.2, 1.0}, NuclearLine{4.0, 0.8, 1.5}};
    model.electronic_scale = 0.9;

    auto worst_at = [&](double dt) {
        const auto g =
            signal::make_grid(0.0, dt, static_cast<std::size_t>(std::lround(81.92 / dt)));
        const SignalEnvelope t_time = response::multiline_transmission(model, g);
        const signal::FrequencySpectrum spec = signal::to_frequency(t_time, 4);
        const std::vector<cplx> t_freq = response::transmission_frequency(model, spec.omega);
        double worst = 0.0;
        for (std::size_t k = 0; k < spec.omega.size(); ++k) {
            if (std::fabs(spec.omega[k]) > 25.0) continue;
            worst = std::max(worst, std::abs(spec.values[k] - t_freq[k]));
        }
        return worst;
    };
    const double coarse = worst_at(0.01);
    const double fine = worst_at(0.005);
    CHECK(fine < 2e-4);
    CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.15)); // quadrature-limited
}

TEST_CASE("transmission is passive") {
    TransmissionModel model;
    model.lines = {NuclearLine{-31.5, 5.0, 1.0}, NuclearLine{31.5, 5.0, 1.0}};
    std::vector<double> omega;
    for (double w = -300.0; w <= 300.0; w += 0.25) omega.push_back(w);
    for (const cplx& v : response::transmission_frequency(model, omega))
        CHECK(std::abs(v) <= 1.0 + 1e-12);
}

TEST_CASE("shifting a model moves every line") {
    TransmissionModel model;
    model.lines = {NuclearLine{-3.0, 1.0, 1.0}, NuclearLine{2.0, 2.0, 1.0}};
    const TransmissionModel moved = response::shifted(model, 10.0);
    CHECK(moved.lines[0].detuning == doctest::Approx(7.0));
    CHECK(moved.lines[1].detuning == doctest::Approx(12.0));
    CHECK(moved.lines[0].b == doctest::Approx(1.0));
}

TEST_CASE("grid must resolve the detuned lines") {
    TransmissionModel model;
    model.lines = {NuclearLine{30.0, 1.0, 1.0}};
    const TimeGrid coarse = signal::make_grid(0.0, 0.1, 64); // Nyquist ~31.4 < 40
    CHECK_THROWS_AS(response::multiline_transmission(model, coarse), std::invalid_argument);
    const TimeGrid fine = signal::make_grid(0.0, 0.01, 640);
    CHECK_NOTHROW(response::multiline_transmission(model, fine));
}

TEST_CASE("invalid transmission models are rejected") {
    const TimeGrid g = signal::make_grid(0.0, 0.01, 64);
    TransmissionModel empty;
    CHECK_THROWS_AS(response::multiline_transmission(empty, g), std::invalid_argument);
    TransmissionModel bad_scale;
    bad_scale.lines = {NuclearLine{0.0, 1.0, 1.0}};
    bad_scale.electronic_scale = 1.5;
    CHECK_THROWS_AS(response::multiline_transmission(bad_scale, g), std::invalid_argument);
    CHECK_THROWS_AS(response::line_response(NuclearLine{0.0, -1.0, 1.0}, g),
                    std::invalid_argument);
}

TEST_CASE("drive velocity to detuning") {
    CHECK(response::doppler_detuning(0.0) == doctest::Approx(0.0));
    CHECK(response::doppler_detuning(1.0) == doctest::Approx(10.2198).epsilon(1e-4));
    CHECK(response::doppler_detuning(22.8) == doctest::Approx(233.01).epsilon(1e-3));
    CHECK(response::doppler_detuning(-1.0) == doctest::Approx(-10.2198).epsilon(1e-4));
    CHECK_THROWS_AS(response::doppler_detuning(1500.0), std::invalid_argument);
}
