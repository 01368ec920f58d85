#pragma once

#include <complex>
#include <cstddef>
#include <vector>

// Time/frequency grids, the singular-plus-smooth field representation, and
// the convolution machinery the physics modules build on.  A field envelope
// is stored as an exact Dirac weight at t = 0 plus complex samples on a
// uniform grid; the Dirac part is carried symbolically through every
// operation so impulse interference is never smeared by discretization.
//
// Internal unit convention: time in units of the natural lifetime 1/gamma,
// frequencies and detunings in units of gamma.  Factories taking nanoseconds
// convert at the boundary.

namespace nucx::signal {

using cplx = std::complex<double>;

struct TimeGrid {
    double t_start = 0.0; // units of 1/gamma
    double dt = 0.0;      // units of 1/gamma
    std::size_t n = 0;

    double time(std::size_t k) const { return t_start + dt * static_cast<double>(k); }
    double time_ns(std::size_t k) const;
    double dt_ns() const;
    std::vector<double> times() const;
    bool operator==(const TimeGrid&) const = default;
};

// throws std::invalid_argument unless dt > 0 and n >= 2
TimeGrid make_grid(double t_start, double dt, std::size_t n);
TimeGrid make_grid_ns(double t_start_ns, double dt_ns, std::size_t n);

struct SignalEnvelope {
    TimeGrid grid;
    cplx singular_weight{0.0, 0.0}; // coefficient of the Dirac impulse at t = 0
    std::vector<cplx> samples;      // smooth part on the grid

    static SignalEnvelope impulse(const TimeGrid& grid, cplx weight = {1.0, 0.0});
    static SignalEnvelope zero(const TimeGrid& grid);
};

SignalEnvelope operator+(const SignalEnvelope& a, const SignalEnvelope& b);
SignalEnvelope operator*(cplx scale, const SignalEnvelope& env);

// (a_w*delta + f) * (b_w*delta + g); smooth-smooth part by trapezoidal
// quadrature evaluated through an FFT linear convolution.  Both inputs must
// share a grid and be causal (zero samples before t = 0).
SignalEnvelope convolve(const SignalEnvelope& a, const SignalEnvelope& b);

struct FrequencySpectrum {
    std::vector<double> omega; // units of gamma, FFT ordering (0.., then negative)
    // F(w) = singular_weight + trapezoidal sum of f(t) e^{+i w t} dt
    std::vector<cplx> values;
};

// Continuous-convention transform F(w) = Int f(t) e^{+i w t} dt of the
// envelope, Dirac part included exactly.  pad_factor >= 2 controls zero
// padding (resolution); throws std::invalid_argument below 2.
FrequencySpectrum to_frequency(const SignalEnvelope& env, std::size_t pad_factor = 4);

// Inverse of to_frequency given the original grid and Dirac weight; used by
// round-trip checks and the frequency-domain transmission route.
SignalEnvelope from_frequency(const FrequencySpectrum& spec, cplx singular_weight,
                              const TimeGrid& grid);

// In-place radix-2 FFT; size must be a power of two.  Forward convention
// X_k = sum_j x_j e^{-2 pi i j k / n}; inverse includes the 1/n factor.
void fft_inplace(std::vector<cplx>& data, bool inverse);

std::size_t next_pow2(std::size_t n);

double relative_l2_difference(const std::vector<cplx>& a, const std::vector<cplx>& b);

} // namespace nucx::signal
