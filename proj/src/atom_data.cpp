#include "rydberg/atom_data.hpp"

namespace rydberg
{

namespace
{
    void require(bool condition, const std::string& what)
    {
        if (!condition)
            throw ParameterError(what);
    }
}

void AtomicParams::validate() const
{
    require(dipole_12 > 0 && dipole_23 > 0 && dipole_34 > 0, "dipole moments must be positive");
    require(gamma_2 > 0 && gamma_3 > 0 && gamma_4 > 0, "decay rates must be positive");
    require(transit_rate > 0, "transit rate must be positive");
    require(feed_rate > 0, "feed rate must be positive");
    require(mass > 0, "mass must be positive");
    require(lambda_probe > 0 && std::isfinite(lambda_probe), "probe wavelength must be positive");
    require(lambda_coupling > 0 && std::isfinite(lambda_coupling), "coupling wavelength must be positive");
    require(temperature > 0, "temperature must be positive");
}

void DriveParams::validate() const
{
    require(rabi_probe >= 0 && rabi_coupling >= 0, "Rabi frequencies must be non-negative");
    require(e_rf >= 0, "RF field amplitude must be non-negative");
    require(perturbation_factor > 0 && perturbation_factor <= 1, "perturbation factor must lie in (0, 1]");
    require(std::isfinite(delta_probe) && std::isfinite(delta_coupling) && std::isfinite(delta_rf),
            "detunings must be finite");
}

ModulationParams::ModulationParams(double omega_mod, double beta)
    : omega_mod_(omega_mod), beta_(beta)
{
    require(beta >= 0 && beta < 0.5, "beta must lie in [0, 0.5)");
    require(omega_mod >= 0 && std::isfinite(omega_mod), "modulation frequency must be non-negative");
    require(beta == 0 || omega_mod > 0, "a modulated coupling needs a positive modulation frequency");
    a1_ = std::sqrt(beta);
    a0_ = std::sqrt(1.0 - 2.0 * beta);
}

ModulationParams ModulationParams::from_amplitudes(double omega_mod, double a0, double a1)
{
    const double power = a0 * a0 + 2.0 * a1 * a1;
    require(power > 0, "carrier and sideband amplitudes cannot both vanish");
    return ModulationParams(omega_mod, a1 * a1 / power);
}

AtomicParams default_rb85_params()
{
    AtomicParams p;
    p.dipole_12 = ea0_to_si(1.96);
    p.dipole_23 = ea0_to_si(0.01);
    p.dipole_34 = ea0_to_si(2272.4);
    p.gamma_2 = mhz_to_angular(6.050);
    p.gamma_3 = mhz_to_angular(0.002);
    p.gamma_4 = mhz_to_angular(0.002);
    p.transit_rate = khz_to_angular(650.0);
    p.feed_rate = p.transit_rate;
    p.mass = constants::rb85_mass_u * constants::atomic_mass_unit;
    p.lambda_probe = 780.0e-9;
    p.lambda_coupling = 480.0e-9;
    p.temperature = 293.15;
    return p;
}

DriveParams default_drive()
{
    DriveParams d;
    d.rabi_probe = mhz_to_angular(1.32);
    d.rabi_coupling = mhz_to_angular(2.38);
    return d;
}

double rabi_from_field(double dipole, double field)
{
    return 2.0 * dipole * field / constants::hbar;
}

double rf_rabi(const AtomicParams& atom, const DriveParams& drive)
{
    return rabi_from_field(atom.dipole_34, drive.rf_field_in_cell());
}

double doppler_sigma(const AtomicParams& atom)
{
    if (std::isinf(atom.mass))
        return 0.0;
    return std::sqrt(constants::boltzmann * atom.temperature / atom.mass);
}

}
