#include "nucx/motion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nucx::motion {

namespace {

double raised_cosine(double t_ns, double amplitude, double start_ns, double rise_ns) {
    if (t_ns <= start_ns) return 0.0;
    if (t_ns >= start_ns + rise_ns) return amplitude;
    const double u = (t_ns - start_ns) / rise_ns;
    return amplitude * 0.5 * (1.0 - std::cos(std::numbers::pi * u));
}

// Fritsch-Carlson monotone cubic interpolation; clamps outside the knots
double pchip_eval(const std::vector<double>& t, const std::vector<double>& x, double q) {
    const std::size_t n = t.size();
    if (q <= t.front()) return x.front();
    if (q >= t.back()) return x.back();
    std::vector<double> h(n - 1), slope(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = t[i + 1] - t[i];
        slope[i] = (x[i + 1] - x[i]) / h[i];
    }
    std::vector<double> d(n);
    d[0] = slope[0];
    d[n - 1] = slope[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (slope[i - 1] * slope[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / slope[i - 1] + w2 / slope[i]);
        }
    }
    const auto it = std::upper_bound(t.begin(), t.end(), q);
    const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
    const double s = (q - t[i]) / h[i];
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * x[i] + h10 * h[i] * d[i] + h01 * x[i + 1] + h11 * h[i] * d[i + 1];
}

} // namespace

void MotionProfile::validate() const {
    switch (kind) {
    case MotionKind::step:
        if (!(rise_time_ns > 0.0))
            throw std::invalid_argument("motion: rise_time must be positive");
        break;
    case MotionKind::step_plus_drift:
    case MotionKind::scaled_base:
    case MotionKind::stepped_base:
        if (!base) throw std::invalid_argument("motion: derived kind needs a base profile");
        base->validate();
        break;
    case MotionKind::free_knots: {
        if (knot_times_ns.size() < 2 || knot_times_ns.size() != knot_values.size())
            throw std::invalid_argument("motion: need at least two matching knots");
        for (std::size_t i = 0; i + 1 < knot_times_ns.size(); ++i)
            if (!(knot_times_ns[i] < knot_times_ns[i + 1]))
                throw std::invalid_argument("motion: knot times must be strictly increasing");
        break;
    }
    }
}

double MotionProfile::position(double t_ns) const {
    switch (kind) {
    case MotionKind::step:
        return raised_cosine(t_ns, amplitude, ramp_start_ns, rise_time_ns);
    case MotionKind::step_plus_drift:
        return base->position(t_ns) + drift_per_ns * t_ns;
    case MotionKind::scaled_base:
        return (1.0 + scale) * base->position(t_ns);
    case MotionKind::stepped_base:
        return base->position(t_ns) +
               (t_ns > 0.0 ? step_offset_rad / (2.0 * std::numbers::pi) : 0.0);
    case MotionKind::free_knots:
        return pchip_eval(knot_times_ns, knot_values, t_ns);
    }
    return 0.0;
}

std::vector<double> phase_from_motion(const MotionProfile& motion, const TimeGrid& grid) {
    motion.validate();
    const double x0 = motion.position(0.0);
    std::vector<double> phi(grid.n, 0.0);
    for (std::size_t k = 0; k < grid.n; ++k) {
        const double t_ns = grid.time_ns(k);
        if (t_ns < 0.0) continue;
        phi[k] = 2.0 * std::numbers::pi * (motion.position(t_ns) - x0);
    }
    return phi;
}

DoublePulse shape_double_pulse(const response::TransmissionModel& scu,
                               const MotionProfile& motion, const TimeGrid& grid) {
    SignalEnvelope field = response::multiline_transmission(scu, grid);
    const std::vector<double> phi = phase_from_motion(motion, grid);
    for (std::size_t k = 0; k < grid.n; ++k)
        field.samples[k] *= std::polar(1.0, phi[k]);
    return DoublePulse{std::move(field)};
}

MotionProfile canonical_motion(CanonicalCase which, double parameter) {
    MotionProfile step;
    step.kind = MotionKind::step;
    step.rise_time_ns = 15.0;
    step.ramp_start_ns = 5.0;
    switch (which) {
    case CanonicalCase::stimulated_emission:
        step.amplitude = 0.0;
        return step;
    case CanonicalCase::enhanced_excitation:
        step.amplitude = 0.5;
        return step;
    case CanonicalCase::opposite_step:
        step.amplitude = -0.5;
        return step;
    case CanonicalCase::with_drift:
        step.amplitude = 0.5;
        return with_linear_drift(step, parameter);
    case CanonicalCase::scaled:
        step.amplitude = 0.5;
        return with_scaling(step, parameter);
    case CanonicalCase::stepped:
        step.amplitude = 0.5;
        return with_phase_step(step, parameter);
    }
    return step;
}

MotionProfile with_linear_drift(const MotionProfile& base, double drift_per_ns) {
    MotionProfile out;
    out.kind = MotionKind::step_plus_drift;
    out.drift_per_ns = drift_per_ns;
    out.base = std::make_shared<MotionProfile>(base);
    return out;
}

MotionProfile with_scaling(const MotionProfile& base, double s) {
    MotionProfile out;
    out.kind = MotionKind::scaled_base;
    out.scale = s;
    out.base = std::make_shared<MotionProfile>(base);
    return out;
}

MotionProfile with_phase_step(const MotionProfile& base, double d_rad) {
    MotionProfile out;
    out.kind = MotionKind::stepped_base;
    out.step_offset_rad = d_rad;
    out.base = std::make_shared<MotionProfile>(base);
    return out;
}

MotionProfile free_knot_motion(std::vector<double> knot_times_ns,
                               std::vector<double> knot_values) {
    MotionProfile out;
    out.kind = MotionKind::free_knots;
    out.knot_times_ns = std::move(knot_times_ns);
    out.knot_values = std::move(knot_values);
    out.validate();
    return out;
}

std::string to_string(MotionKind kind) {
    switch (kind) {
    case MotionKind::step: return "step";
    case MotionKind::step_plus_drift: return "step_plus_drift";
    case MotionKind::scaled_base: return "scaled_base";
    case MotionKind::stepped_base: return "stepped_base";
    case MotionKind::free_knots: return "free_knots";
    }
    return "step";
}

MotionKind motion_kind_from_string(const std::string& name) {
    if (name == "step") return MotionKind::step;
    if (name == "step_plus_drift") return MotionKind::step_plus_drift;
    if (name == "scaled_base") return MotionKind::scaled_base;
    if (name == "stepped_base") return MotionKind::stepped_base;
    if (name == "free_knots") return MotionKind::free_knots;
    throw std::invalid_argument("unknown motion kind: " + name);
}

} // namespace nucx::motion
