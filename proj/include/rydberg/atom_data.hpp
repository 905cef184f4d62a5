#pragma once

// Physical constants, the Rb-85 ladder parameter set and unit conversions.
//
// Everything inside the library is SI with angular frequencies (rad/s).
// Configuration files use nu = omega / 2pi in MHz, dipoles in e*a0 and
// RF fields in V/m; the helpers below are the only place those units meet.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rydberg
{

namespace constants
{
    // CODATA 2018
    inline constexpr double hbar = 1.054571817e-34;
    inline constexpr double elementary_charge = 1.602176634e-19;
    inline constexpr double bohr_radius = 5.29177210903e-11;
    inline constexpr double boltzmann = 1.380649e-23;
    inline constexpr double atomic_mass_unit = 1.66053906660e-27;
    inline constexpr double speed_of_light = 299792458.0;
    inline constexpr double vacuum_permittivity = 8.8541878128e-12;

    inline constexpr double rb85_mass_u = 84.911789738;
    inline constexpr double two_pi = 2.0 * std::numbers::pi;
}

/// Raised when a parameter block violates its invariants.
class ParameterError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// unit conversions

inline constexpr double mhz_to_angular(double nu_mhz) { return constants::two_pi * nu_mhz * 1.0e6; }
inline constexpr double angular_to_mhz(double omega) { return omega / (constants::two_pi * 1.0e6); }
inline constexpr double khz_to_angular(double nu_khz) { return constants::two_pi * nu_khz * 1.0e3; }
inline constexpr double ea0_to_si(double d) { return d * constants::elementary_charge * constants::bohr_radius; }
inline constexpr double si_to_ea0(double d) { return d / (constants::elementary_charge * constants::bohr_radius); }

/// Atomic properties of the four-level ladder |1> -> |2> -> |3> -> |4>.
struct AtomicParams
{
    double dipole_12 = 0.0;        // C m
    double dipole_23 = 0.0;        // C m
    double dipole_34 = 0.0;        // C m
    double gamma_2 = 0.0;          // population decay of |2>, rad/s
    double gamma_3 = 0.0;          // rad/s
    double gamma_4 = 0.0;          // rad/s
    double transit_rate = 0.0;     // rad/s, added to every element
    double feed_rate = 0.0;        // rad/s, repopulates |1>
    double mass = 0.0;             // kg
    double lambda_probe = 0.0;     // m
    double lambda_coupling = 0.0;  // m
    double temperature = 0.0;      // K

    double k_probe() const { return constants::two_pi / lambda_probe; }
    double k_coupling() const { return constants::two_pi / lambda_coupling; }
    double omega_probe() const { return constants::two_pi * constants::speed_of_light / lambda_probe; }

    /// Throws ParameterError if any field is out of range.
    void validate() const;
};

/// Field amplitudes and detunings. Detunings follow the ladder convention
/// Delta21 = delta_probe, Delta31 = delta_probe + delta_coupling and
/// Delta41 = Delta31 - delta_rf.
struct DriveParams
{
    double rabi_probe = 0.0;          // Omega_p at the cell input, rad/s
    double rabi_coupling = 0.0;       // unmodulated Omega_c, rad/s
    double e_rf = 0.0;                // exterior RF amplitude, V/m
    double perturbation_factor = 0.54;
    double delta_probe = 0.0;         // rad/s
    double delta_coupling = 0.0;      // rad/s
    double delta_rf = 0.0;            // rad/s

    double two_photon_detuning() const { return delta_probe + delta_coupling; }
    double rf_field_in_cell() const { return e_rf * perturbation_factor; }

    void validate() const;
};

/// Phase modulation of the coupling beam, restricted to first-order sidebands.
///
/// beta is the power fraction in one sideband. With the carrier and sideband
/// amplitudes expressed as fractions of the unmodulated field, total power is
/// conserved (a0^2 + 2 a1^2 = 1), so a1 = sqrt(beta) and a0 = sqrt(1 - 2 beta).
/// The upper sideband carries +a1 and the lower sideband -a1.
class ModulationParams
{
public:
    ModulationParams() = default;
    ModulationParams(double omega_mod, double beta);

    static ModulationParams from_amplitudes(double omega_mod, double a0, double a1);

    double omega_mod() const { return omega_mod_; }
    double beta() const { return beta_; }
    double carrier_amplitude() const { return a0_; }
    double sideband_amplitude() const { return a1_; }
    bool is_modulated() const { return a1_ != 0.0; }

private:
    double omega_mod_ = 0.0;
    double beta_ = 0.0;
    double a0_ = 1.0;
    double a1_ = 0.0;
};

/// Rb-85 5S1/2 -> 5P3/2 -> 50D5/2 -> 51P3/2 ladder at room temperature.
AtomicParams default_rb85_params();

/// Probe/coupling Rabi frequencies used for the reference spectra (1.32 and 2.38 MHz).
DriveParams default_drive();

/// Omega = 2 d E / hbar.
double rabi_from_field(double dipole, double field);

/// RF Rabi frequency inside the cell, including the perturbation factor.
double rf_rabi(const AtomicParams& atom, const DriveParams& drive);

/// Width of the 1D Maxwell distribution of longitudinal velocities, sqrt(kB T / m).
double doppler_sigma(const AtomicParams& atom);

}
