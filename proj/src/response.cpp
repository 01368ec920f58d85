#include "nucx/response.hpp"

#include "nucx/constants.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nucx::response {

namespace {

// G(x) = J1(2 sqrt x)/sqrt x, analytic at x = 0 with G(0) = 1
double bessel_ratio(double x) {
    // series when 2 sqrt(x) < 1e-3; two terms leave a relative error O(x^2/12)
    if (x < 2.5e-7) return 1.0 - 0.5 * x;
    const double arg = 2.0 * std::sqrt(x);
    return std::cyl_bessel_j(1.0, arg) / std::sqrt(x);
}

} // namespace

SignalEnvelope line_response(const NuclearLine& line, const TimeGrid& grid) {
    if (line.b < 0.0) throw std::invalid_argument("line_response: negative thickness");
    if (!(line.width > 0.0)) throw std::invalid_argument("line_response: width must be positive");
    SignalEnvelope out = SignalEnvelope::zero(grid);
    if (line.b == 0.0) return out;
    for (std::size_t k = 0; k < grid.n; ++k) {
        const double t = grid.time(k);
        if (t < 0.0) continue;
        const double x = line.b * t;
        const double base = -line.b * bessel_ratio(x) * std::exp(-0.5 * line.width * t);
        out.samples[k] = base * std::polar(1.0, -line.detuning * t);
    }
    return out;
}

SignalEnvelope single_line_response(double b, const TimeGrid& grid) {
    return line_response(NuclearLine{0.0, b, 1.0}, grid);
}

SignalEnvelope thin_limit_response(double b, const TimeGrid& grid) {
    if (b < 0.0) throw std::invalid_argument("thin_limit_response: negative thickness");
    SignalEnvelope out = SignalEnvelope::zero(grid);
    for (std::size_t k = 0; k < grid.n; ++k) {
        const double t = grid.time(k);
        if (t < 0.0) continue;
        out.samples[k] = -b * std::exp(-0.5 * (1.0 + b) * t);
    }
    return out;
}

SignalEnvelope multiline_transmission(const TransmissionModel& model, const TimeGrid& grid) {
    if (model.lines.empty())
        throw std::invalid_argument("multiline_transmission: empty line list");
    if (!(model.electronic_scale > 0.0) || model.electronic_scale > 1.0)
        throw std::invalid_argument("multiline_transmission: electronic_scale outside (0, 1]");
    double needed = 0.0;
    for (const auto& line : model.lines)
        needed = std::max(needed, std::fabs(line.detuning) + 10.0 * line.width);
    if (std::numbers::pi / grid.dt < needed)
        throw std::invalid_argument("multiline_transmission: grid too coarse for the line spread");

    SignalEnvelope total = SignalEnvelope::impulse(grid) + line_response(model.lines[0], grid);
    for (std::size_t j = 1; j < model.lines.size(); ++j) {
        const SignalEnvelope t_j =
            SignalEnvelope::impulse(grid) + line_response(model.lines[j], grid);
        total = convolve(total, t_j);
    }
    return cplx{model.electronic_scale, 0.0} * total;
}

std::vector<cplx> transmission_frequency(const TransmissionModel& model,
                                         const std::vector<double>& omega) {
    std::vector<cplx> out(omega.size());
    for (std::size_t k = 0; k < omega.size(); ++k) {
        cplx exponent{0.0, 0.0};
        for (const auto& line : model.lines)
            exponent += cplx{0.0, -line.b} /
                        cplx{omega[k] - line.detuning, 0.5 * line.width};
        out[k] = model.electronic_scale * std::exp(exponent);
    }
    return out;
}

TransmissionModel shifted(const TransmissionModel& model, double shift) {
    TransmissionModel out = model;
    for (auto& line : out.lines) line.detuning += shift;
    return out;
}

double doppler_detuning(double velocity_mm_s) {
    if (std::fabs(velocity_mm_s) > 1000.0)
        throw std::invalid_argument("doppler_detuning: |v| above the 1 m/s sanity bound");
    return velocity_mm_s * constants::gamma_per_mm_s;
}

} // namespace nucx::response
