#include "rydberg/medium.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/tools/roots.hpp>

namespace rydberg
{

namespace
{
    constexpr Complex I{0.0, 1.0};

    PropagationResult propagate(const CellConfig& cell, const MediumSetup& medium, const DriveParams& drive,
                                const ModulationParams& mod)
    {
        cell.validate();
        drive.validate();

        const FieldCouplings base = resolve_couplings(medium.atom, drive);
        const double rabi_in = drive.rabi_probe > 0.0 ? drive.rabi_probe : kWeakProbeRabi;
        const double dx = cell.length / cell.num_slices;
        const Complex gain = I * absorption_scale(medium.atom) * cell.density * dx / rabi_in;
        const bool modulated = mod.is_modulated();

        PropagationResult r;
        r.e_p0.reserve(cell.num_slices + 1);
        r.e_p0.push_back(1.0);
        if (modulated)
        {
            r.e_p_plus.assign(1, 0.0);
            r.e_p_minus.assign(1, 0.0);
        }

        Complex e0 = 1.0, ep = 0.0, em = 0.0;
        for (int s = 0; s < cell.num_slices; ++s)
        {
            FieldCouplings local = base;
            local.rabi_probe = rabi_in * e0;
            const CoherenceAverage rho = average_probe_coherence(medium.atom, local, mod, medium.doppler);

            const Complex e0_next = e0 + gain * rho.carrier;
            if (modulated)
            {
                const Complex carry = (cell.attenuate_sidebands && e0 != 0.0) ? e0_next / e0 : Complex(1.0);
                ep = ep * carry + gain * rho.upper;
                em = em * carry + gain * rho.lower;
                r.e_p_plus.push_back(ep);
                r.e_p_minus.push_back(em);
            }
            if (std::norm(e0) > 0.0)
                r.max_slice_absorption = std::max(r.max_slice_absorption, 1.0 - std::norm(e0_next) / std::norm(e0));
            e0 = e0_next;
            r.e_p0.push_back(e0);
        }

        r.transmission = std::norm(e0);
        r.rma = modulated ? rma(e0, ep, em) : 0.0;
        return r;
    }
}

void CellConfig::validate() const
{
    if (!(length > 0) || !std::isfinite(length))
        throw ParameterError("cell length must be positive");
    if (num_slices < 1)
        throw ParameterError("cell needs at least one slice");
    if (!(density >= 0) || !std::isfinite(density))
        throw ParameterError("atomic density must be non-negative");
}

double absorption_scale(const AtomicParams& atom)
{
    using namespace constants;
    return atom.omega_probe() * atom.dipole_12 * atom.dipole_12 / (vacuum_permittivity * speed_of_light * hbar);
}

PropagationResult propagate_cp(const CellConfig& cell, const MediumSetup& medium, const DriveParams& drive)
{
    return propagate(cell, medium, drive, ModulationParams{});
}

PropagationResult propagate_mtp(const CellConfig& cell, const MediumSetup& medium, const DriveParams& drive,
                                const ModulationParams& mod)
{
    return propagate(cell, medium, drive, mod);
}

double rma(Complex e0, Complex e_plus, Complex e_minus, Complex e_in)
{
    return 2.0 * std::abs(e0 * std::conj(e_minus) + std::conj(e0) * e_plus) / std::norm(e_in);
}

double rma(const PropagationResult& result)
{
    if (result.e_p_plus.empty())
        return 0.0;
    return rma(result.e_p0.back(), result.e_p_plus.back(), result.e_p_minus.back(), result.e_p0.front());
}

double transparency(const CellConfig& cell, const MediumSetup& medium, const DriveParams& drive)
{
    if (drive.rabi_coupling == 0.0)
        return 0.0;
    DriveParams off = drive;
    off.rabi_coupling = 0.0;
    return propagate_cp(cell, medium, drive).transmission - propagate_cp(cell, medium, off).transmission;
}

CalibrationResult calibrate_density(const CellConfig& cell, const MediumSetup& medium, double target,
                                    double tolerance)
{
    if (!(target > 0.0 && target <= 1.0))
        throw ParameterError("calibration target must lie in (0, 1]");

    DriveParams probe_only;
    probe_only.rabi_probe = kWeakProbeRabi;

    CalibrationResult out;
    auto transmission_at = [&](double density) {
        CellConfig c = cell;
        c.density = density;
        ++out.iterations;
        return propagate_cp(c, medium, probe_only);
    };

    if (target == 1.0)
    {
        out.transmission = transmission_at(0.0).transmission;
        return out;
    }

    // Bracket: the first slice fixes the small-signal absorption per atom.
    double hi = 1e12;
    while (transmission_at(hi).transmission > target)
    {
        hi *= 4.0;
        if (hi > 1e30)
            throw CalibrationError("calibrate_density: cannot reach the target transmission");
    }
    double lo = 0.0;

    auto f = [&](double density) { return transmission_at(density).transmission - target; };
    boost::math::tools::eps_tolerance<double> tol(48);
    std::uintmax_t max_iter = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, 1.0 - target, f(hi), tol, max_iter);

    out.density = 0.5 * (a + b);
    const PropagationResult r = transmission_at(out.density);
    out.transmission = r.transmission;
    out.max_slice_absorption = r.max_slice_absorption;
    if (std::abs(out.transmission - target) > tolerance)
        throw CalibrationError("calibrate_density: achieved transmission " + std::to_string(out.transmission));
    return out;
}

}
