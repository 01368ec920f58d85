#include "nucx/tls.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nucx::tls {

std::vector<double> DipoleTrace::magnitude() const {
    std::vector<double> out(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) out[k] = std::abs(values[k]);
    return out;
}

std::vector<double> DipoleTrace::phase_unwrapped() const {
    std::vector<double> out(values.size(), std::numeric_limits<double>::quiet_NaN());
    double peak = 0.0;
    for (const auto& v : values) peak = std::max(peak, std::abs(v));
    const double floor = 1e-6 * peak;
    double offset = 0.0;
    bool have_prev = false;
    double prev = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (std::abs(values[k]) < floor) continue; // masked: phase undefined near zeros
        const double raw = std::arg(values[k]);
        if (have_prev) {
            double diff = raw + offset - prev;
            while (diff > std::numbers::pi) {
                offset -= 2.0 * std::numbers::pi;
                diff -= 2.0 * std::numbers::pi;
            }
            while (diff < -std::numbers::pi) {
                offset += 2.0 * std::numbers::pi;
                diff += 2.0 * std::numbers::pi;
            }
        }
        out[k] = raw + offset;
        prev = out[k];
        have_prev = true;
    }
    return out;
}

DipoleTrace coherence_response(const SignalEnvelope& drive, const TlsParams& params) {
    SignalEnvelope kernel = SignalEnvelope::zero(drive.grid);
    const double rate = 0.5 * params.gamma_tilde();
    for (std::size_t k = 0; k < drive.grid.n; ++k) {
        const double t = drive.grid.time(k);
        if (t < 0.0) continue;
        kernel.samples[k] = std::exp(-rate * t);
    }
    SignalEnvelope conv = convolve(drive, kernel);
    DipoleTrace trace{drive.grid, std::move(conv.samples)};
    const cplx half_i{0.0, -0.5};
    for (auto& v : trace.values) v *= half_i;
    return trace;
}

SignalEnvelope output_field(const SignalEnvelope& drive, const TlsParams& params) {
    const DipoleTrace sigma = coherence_response(drive, params);
    SignalEnvelope out = drive;
    const cplx coupling{0.0, -2.0 * params.b};
    for (std::size_t k = 0; k < out.samples.size(); ++k)
        out.samples[k] += coupling * sigma.values[k];
    return out;
}

double crossover_time(double b) {
    if (!(b > 0.0)) throw std::invalid_argument("crossover_time: b must be positive");
    return 1.0 / b;
}

double intensity_difference_analytic(double b, double t) {
    return 4.0 * b * b * std::exp(-(1.0 + b) * t) * (b * t - 1.0);
}

} // namespace nucx::tls
