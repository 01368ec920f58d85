#pragma once

#include "nucx/signal.hpp"

#include <vector>

// Two-level model of the target nuclei in the weak-excitation limit: the
// ground-excited coherence under an arbitrary drive envelope, the output
// field (input plus dipole re-emission), and the analytic stimulated-emission
// versus enhanced-excitation crossover.  The collective coupling makes the
// coherence decay superradiantly at gamma_tilde = gamma + b, which renders
// the model exactly equivalent to the thin-absorber response.

namespace nucx::tls {

using signal::cplx;
using signal::SignalEnvelope;
using signal::TimeGrid;

struct TlsParams {
    double b = 0.0;     // effective thickness coupling, units of gamma
    double gamma = 1.0; // spontaneous width, 1 in internal units
    double gamma_tilde() const { return gamma + b; }
};

struct DipoleTrace {
    TimeGrid grid;
    std::vector<cplx> values; // coherence in arbitrary units, causal

    std::vector<double> magnitude() const;
    // unwrapped phase in radians; samples with |value| < 1e-6 of the maximum
    // are masked as NaN instead of unwrapped
    std::vector<double> phase_unwrapped() const;
};

// sigma(t) = -(i/2) Omega(t) * theta(t) e^{-gamma_tilde t/2}; the Dirac part
// of the drive contributes -(i/2) w e^{-gamma_tilde t/2} exactly
DipoleTrace coherence_response(const SignalEnvelope& drive, const TlsParams& params);

// E_out = E_in - 2 i b sigma(t); equals E_in convolved with the thin-limit
// transmission delta - b theta e^{-(gamma+b)t/2}
SignalEnvelope output_field(const SignalEnvelope& drive, const TlsParams& params);

// time at which the enhanced-excitation intensity overtakes the
// stimulated-emission one in the thin limit: 1/b (internal units)
double crossover_time(double b);

// |E_boost|^2 - |E_se|^2 = 4 b^2 e^{-(1+b)t} (b t - 1) for thin double pulses
double intensity_difference_analytic(double b, double t);

} // namespace nucx::tls
