#pragma once

// Physical constants for the 14.4 keV Mössbauer transition of 57Fe and the
// unit conventions used throughout:
//   - time is measured in units of the natural lifetime 1/gamma (gamma = 1),
//   - detunings, linewidths and effective thicknesses are in units of gamma,
//   - displacements are in units of the resonant wavelength lambda0.
// The nanosecond lifetime and the neV linewidth are kept as two independent
// calibration anchors (each is a rounded published value; they are not forced
// to be mutually consistent at the 0.1% level).

namespace nucx::constants {

// lifetime 1/gamma in nanoseconds
inline constexpr double lifetime_ns = 141.0;

// natural linewidth hbar*gamma in eV
inline constexpr double linewidth_ev = 4.7e-9;

// transition energy in eV
inline constexpr double photon_energy_ev = 14.4e3;

// CODATA: Planck constant in eV*s and speed of light in m/s
inline constexpr double planck_ev_s = 4.135667696e-15;
inline constexpr double speed_of_light_m_s = 2.99792458e8;

// resonant wavelength lambda0 = h*c/E0 in meters
inline constexpr double wavelength_m =
    planck_ev_s * speed_of_light_m_s / photon_energy_ev;

// carrier period T0 = lambda0/c in zeptoseconds (1 zs = 1e-21 s)
inline constexpr double carrier_period_zs = wavelength_m / speed_of_light_m_s * 1e21;

// temporal shift of a half-wavelength displacement (a pi phase error)
inline constexpr double half_period_zs = carrier_period_zs / 2.0;

// Doppler detuning per mm/s of drive velocity, in units of gamma:
// delta = E0*(v/c)/(hbar*gamma)
inline constexpr double gamma_per_mm_s =
    photon_energy_ev * (1.0e-3 / speed_of_light_m_s) / linewidth_ev;

// unit conversions for the internal time axis
inline constexpr double ns_to_internal = 1.0 / lifetime_ns;
inline constexpr double internal_to_ns = lifetime_ns;

} // namespace nucx::constants
