#pragma once

#include "nucx/signal.hpp"

#include <vector>

// Nuclear-resonant transmission and response functions for single- and
// multi-line absorbers, plus the drive-velocity <-> detuning mapping.
// A transmission acts on a field as T = delta(t) + R(t); R carries the
// delayed re-emission of the resonant foil.

namespace nucx::response {

using signal::cplx;
using signal::SignalEnvelope;
using signal::TimeGrid;

struct NuclearLine {
    double detuning = 0.0; // units of gamma
    double b = 0.0;        // effective resonant thickness, units of gamma
    double width = 1.0;    // linewidth, units of gamma
};

struct TransmissionModel {
    std::vector<NuclearLine> lines;
    double electronic_scale = 1.0; // constant non-resonant attenuation in (0, 1]
};

// R(t) = -theta(t) sqrt(b/t) e^{-t/2} J1(2 sqrt(b t)) for a single line at
// zero detuning and natural width; the t -> 0+ limit (-b) is taken
// analytically.  Dirac weight of the result is zero.
SignalEnvelope single_line_response(double b, const TimeGrid& grid);

// General line: width w and detuning d scale and rotate the same kernel,
// R(t) = -theta(t) b G(bt) e^{-w t/2} e^{-i d t} with G(x) = J1(2 sqrt x)/sqrt x.
SignalEnvelope line_response(const NuclearLine& line, const TimeGrid& grid);

// superradiant small-thickness approximation R(t) = -theta(t) b e^{-(1+b)t/2}
SignalEnvelope thin_limit_response(double b, const TimeGrid& grid);

// Full transmission T = electronic_scale * (delta + R_combined), built by
// composing the per-line closed forms in the time domain:
// (delta + R_1) * (delta + R_2) * ... (exact within the window; no
// frequency-sampling aliasing).  Throws std::invalid_argument if the grid
// cannot resolve max(|detuning| + 10 width).
SignalEnvelope multiline_transmission(const TransmissionModel& model, const TimeGrid& grid);

// Analytic frequency response T(w) = scale * exp(sum_j -i b_j/(w - d_j + i w_j/2))
// in the F(w) = Int f e^{+iwt} dt convention; |T| <= 1 for scale <= 1.
std::vector<cplx> transmission_frequency(const TransmissionModel& model,
                                         const std::vector<double>& omega);

// returns a copy with every line detuned by shift (units of gamma)
TransmissionModel shifted(const TransmissionModel& model, double shift);

// drive velocity in mm/s -> detuning in units of gamma; |v| capped at 1 m/s
double doppler_detuning(double velocity_mm_s);

} // namespace nucx::response
