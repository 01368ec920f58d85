#include "nucx/signal.hpp"

#include "nucx/constants.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nucx::signal {

double TimeGrid::time_ns(std::size_t k) const { return time(k) * constants::internal_to_ns; }
double TimeGrid::dt_ns() const { return dt * constants::internal_to_ns; }

std::vector<double> TimeGrid::times() const {
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = time(k);
    return out;
}

TimeGrid make_grid(double t_start, double dt, std::size_t n) {
    if (!(dt > 0.0)) throw std::invalid_argument("make_grid: dt must be positive");
    if (n < 2) throw std::invalid_argument("make_grid: need at least two samples");
    return TimeGrid{t_start, dt, n};
}

TimeGrid make_grid_ns(double t_start_ns, double dt_ns, std::size_t n) {
    return make_grid(t_start_ns * constants::ns_to_internal,
                     dt_ns * constants::ns_to_internal, n);
}

SignalEnvelope SignalEnvelope::impulse(const TimeGrid& grid, cplx weight) {
    return SignalEnvelope{grid, weight, std::vector<cplx>(grid.n, cplx{0.0, 0.0})};
}

SignalEnvelope SignalEnvelope::zero(const TimeGrid& grid) {
    return SignalEnvelope{grid, cplx{0.0, 0.0}, std::vector<cplx>(grid.n, cplx{0.0, 0.0})};
}

SignalEnvelope operator+(const SignalEnvelope& a, const SignalEnvelope& b) {
    if (!(a.grid == b.grid))
        throw std::invalid_argument("envelope addition: grid mismatch");
    SignalEnvelope out = a;
    out.singular_weight += b.singular_weight;
    for (std::size_t k = 0; k < out.samples.size(); ++k) out.samples[k] += b.samples[k];
    return out;
}

SignalEnvelope operator*(cplx scale, const SignalEnvelope& env) {
    SignalEnvelope out = env;
    out.singular_weight *= scale;
    for (auto& v : out.samples) v *= scale;
    return out;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft_inplace(std::vector<cplx>& data, bool inverse) {
    const std::size_t n = data.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft_inplace: size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
        const cplx wlen{std::cos(ang), std::sin(ang)};
        for (std::size_t i = 0; i < n; i += len) {
            cplx w{1.0, 0.0};
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cplx u = data[i + k];
                const cplx v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& v : data) v *= inv;
    }
}

namespace {

// index of the t = 0 sample; throws if the grid does not contain t = 0 or if
// samples before it are nonzero (the convolution assumes causal inputs)
std::size_t causal_origin(const SignalEnvelope& env) {
    const double pos = -env.grid.t_start / env.grid.dt;
    const auto i0 = static_cast<std::size_t>(std::llround(pos));
    if (pos < -1e-9 || std::fabs(pos - static_cast<double>(i0)) > 1e-9 ||
        i0 >= env.grid.n)
        throw std::invalid_argument("convolve: grid must contain the t = 0 sample");
    for (std::size_t k = 0; k < i0; ++k)
        if (env.samples[k] != cplx{0.0, 0.0})
            throw std::invalid_argument("convolve: input not causal");
    return i0;
}

} // namespace

SignalEnvelope convolve(const SignalEnvelope& a, const SignalEnvelope& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("convolve: grid mismatch");
    const std::size_t i0 = causal_origin(a);
    causal_origin(b);
    const std::size_t n = a.grid.n;
    const std::size_t m = n - i0; // causal support length
    const double dt = a.grid.dt;

    const std::size_t nfft = next_pow2(2 * m);
    std::vector<cplx> fa(nfft, cplx{}), fb(nfft, cplx{});
    for (std::size_t k = 0; k < m; ++k) {
        fa[k] = a.samples[i0 + k];
        fb[k] = b.samples[i0 + k];
    }
    fft_inplace(fa, false);
    fft_inplace(fb, false);
    for (std::size_t k = 0; k < nfft; ++k) fa[k] *= fb[k];
    fft_inplace(fa, true);

    SignalEnvelope out = SignalEnvelope::zero(a.grid);
    out.singular_weight = a.singular_weight * b.singular_weight;
    const cplx f0 = a.samples[i0];
    const cplx g0 = b.samples[i0];
    for (std::size_t k = 0; k < m; ++k) {
        // trapezoidal quadrature of the running integral: the raw discrete
        // convolution counts both endpoints with full weight
        const cplx trap = fa[k] - 0.5 * (f0 * b.samples[i0 + k] + a.samples[i0 + k] * g0);
        out.samples[i0 + k] = dt * trap + a.singular_weight * b.samples[i0 + k] +
                              b.singular_weight * a.samples[i0 + k];
    }
    return out;
}

FrequencySpectrum to_frequency(const SignalEnvelope& env, std::size_t pad_factor) {
    if (pad_factor < 2)
        throw std::invalid_argument("to_frequency: pad_factor must be at least 2");
    const std::size_t nfft = next_pow2(env.grid.n * pad_factor);
    std::vector<cplx> data(nfft, cplx{});
    for (std::size_t k = 0; k < env.grid.n; ++k) data[k] = env.samples[k];
    // trapezoidal end weights: a causal envelope jumps at the window edge and
    // full-weighting that sample would bias every F(w) by dt/2 f(0)
    data[0] *= 0.5;
    data[env.grid.n - 1] *= 0.5;
    // forward FFT uses e^{-2 pi i jk/n}; the physics convention wants
    // F(w) = Int f(t) e^{+iwt} dt, so run the inverse transform unnormalized
    fft_inplace(data, true);
    const double scale = static_cast<double>(nfft) * env.grid.dt;
    FrequencySpectrum spec;
    spec.omega.resize(nfft);
    spec.values.resize(nfft);
    const double dw = 2.0 * std::numbers::pi / (static_cast<double>(nfft) * env.grid.dt);
    for (std::size_t k = 0; k < nfft; ++k) {
        const double sign_k = k <= nfft / 2 ? static_cast<double>(k)
                                            : static_cast<double>(k) - static_cast<double>(nfft);
        spec.omega[k] = sign_k * dw;
        // account for the grid not starting at t = 0: phase shift e^{+iw t_start}
        const cplx shift = std::polar(1.0, spec.omega[k] * env.grid.t_start);
        spec.values[k] = env.singular_weight + data[k] * scale * shift;
    }
    return spec;
}

SignalEnvelope from_frequency(const FrequencySpectrum& spec, cplx singular_weight,
                              const TimeGrid& grid) {
    const std::size_t nfft = spec.values.size();
    std::vector<cplx> data(nfft);
    for (std::size_t k = 0; k < nfft; ++k) {
        const cplx shift = std::polar(1.0, -spec.omega[k] * grid.t_start);
        data[k] = (spec.values[k] - singular_weight) * shift;
    }
    fft_inplace(data, false);
    const double scale = 1.0 / (static_cast<double>(nfft) * grid.dt);
    SignalEnvelope out = SignalEnvelope::zero(grid);
    out.singular_weight = singular_weight;
    for (std::size_t k = 0; k < grid.n; ++k) out.samples[k] = data[k] * scale;
    // undo the trapezoidal end weights applied by to_frequency
    out.samples[0] *= 2.0;
    out.samples[grid.n - 1] *= 2.0;
    return out;
}

double relative_l2_difference(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("relative_l2_difference: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        num += std::norm(a[k] - b[k]);
        den += std::norm(b[k]);
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

} // namespace nucx::signal
