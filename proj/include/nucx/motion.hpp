#pragma once

#include "nucx/response.hpp"
#include "nucx/signal.hpp"

#include <memory>
#include <string>
#include <vector>

// SCU motion profiles and the double-pulse shaper: an incident impulse plus
// a moving resonant absorber yields delta(t) + e^{i phi(t)} R(t), the
// excitation pulse and a phase-controlled control pulse.  Displacements are
// stored in units of the resonant wavelength lambda0, so a half-wavelength
// step maps to a control-pulse phase of pi.

namespace nucx::motion {

using signal::SignalEnvelope;
using signal::TimeGrid;

enum class MotionKind { step, step_plus_drift, scaled_base, stepped_base, free_knots };

struct MotionProfile {
    MotionKind kind = MotionKind::step;

    // step parameters: raised-cosine ramp from 0 to amplitude over
    // [ramp_start, ramp_start + rise_time]
    double amplitude = 0.0;     // lambda0 units
    double rise_time_ns = 15.0; // movement duration
    double ramp_start_ns = 5.0; // movement begins a few ns after excitation

    double drift_per_ns = 0.0;   // step_plus_drift: A in lambda0 per ns
    double scale = 0.0;          // scaled_base: x = (1+s) x0
    double step_offset_rad = 0.0; // stepped_base: phase d added for t > 0

    std::vector<double> knot_times_ns; // free_knots: strictly increasing
    std::vector<double> knot_values;   // lambda0 units

    std::shared_ptr<const MotionProfile> base; // reference x0 for *_base kinds

    // x(t) in lambda0 units; free_knots interpolates monotone-cubically and
    // clamps outside the knot range
    double position(double t_ns) const;

    void validate() const; // throws std::invalid_argument on bad fields
};

// phi(t) = 2 pi [x(t) - x(0)] sampled on the grid; zero before t = 0
std::vector<double> phase_from_motion(const MotionProfile& motion, const TimeGrid& grid);

struct DoublePulse {
    SignalEnvelope field; // singular weight = excitation, samples = control
};

// delta(t) + e^{i phi(t)} R_scu(t); the motion phase multiplies the already
// emitted control field, the absorber response itself is the stationary one
DoublePulse shape_double_pulse(const response::TransmissionModel& scu,
                               const MotionProfile& motion, const TimeGrid& grid);

enum class CanonicalCase {
    stimulated_emission, // no displacement
    enhanced_excitation, // smooth step to +lambda0/2
    opposite_step,       // smooth step to -lambda0/2
    with_drift,          // enhanced excitation plus linear drift A
    scaled,              // (1+s) times enhanced excitation
    stepped              // enhanced excitation plus a phase step d for t > 0
};

MotionProfile canonical_motion(CanonicalCase which, double parameter = 0.0);

// apply a single-parameter error model on top of a base motion
MotionProfile with_linear_drift(const MotionProfile& base, double drift_per_ns);
MotionProfile with_scaling(const MotionProfile& base, double s);
MotionProfile with_phase_step(const MotionProfile& base, double d_rad);

// free-knot profile with the given knot values on a uniform time grid
MotionProfile free_knot_motion(std::vector<double> knot_times_ns,
                               std::vector<double> knot_values);

std::string to_string(MotionKind kind);
MotionKind motion_kind_from_string(const std::string& name);

} // namespace nucx::motion
