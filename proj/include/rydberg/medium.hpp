#pragma once

// Probe propagation through the optically thick vapor cell.
//
// The cell is cut into equal slices. In every slice the Doppler-averaged
// probe coherence is evaluated with the local carrier amplitude and the
// carrier (and, for the modulated protocol, the generated sidebands) are
// advanced with the first-order slice increment
//
//     e(x + dx) = e(x) + i alpha dx <rho21> / Omega_p(0),
//     alpha = omega_p N0 d12^2 / (eps0 c hbar),
//
// where amplitudes are normalized to the input probe field.

#include <vector>

#include "rydberg/doppler.hpp"
#include "rydberg/liouvillian.hpp"

namespace rydberg
{

struct CellConfig
{
    double length = 0.075;  // m
    int num_slices = 100;
    double density = 0.0;   // atoms per m^3
    bool attenuate_sidebands = true;

    void validate() const;
};

struct PropagationResult
{
    // Amplitudes at the slice boundaries, index 0 is the cell input.
    std::vector<Complex> e_p0;
    std::vector<Complex> e_p_plus;
    std::vector<Complex> e_p_minus;
    double transmission = 1.0;
    double rma = 0.0;
    double max_slice_absorption = 0.0;  // largest fractional power loss in one slice
};

/// Everything a propagation needs besides the cell.
struct MediumSetup
{
    AtomicParams atom;
    DopplerModel doppler;
};

/// Probe Rabi frequency used when the configured probe is zero or when a
/// small-signal (linear) response is requested.
inline constexpr double kWeakProbeRabi = constants::two_pi * 10.0;

PropagationResult propagate_cp(const CellConfig& cell, const MediumSetup& medium, const DriveParams& drive);

PropagationResult propagate_mtp(const CellConfig& cell, const MediumSetup& medium, const DriveParams& drive,
                                const ModulationParams& mod);

/// 2 |e0 conj(e-) + conj(e0) e+| / |e_in|^2
double rma(Complex e0, Complex e_plus, Complex e_minus, Complex e_in = 1.0);
double rma(const PropagationResult& result);

/// Transmission with the coupling beam minus transmission without it.
double transparency(const CellConfig& cell, const MediumSetup& medium, const DriveParams& drive);

struct CalibrationResult
{
    double density = 0.0;
    double transmission = 1.0;          // achieved small-signal transmission
    double max_slice_absorption = 0.0;
    int iterations = 0;
};

class CalibrationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Finds N0 such that the small-signal, coupling-off, RF-off transmission at
/// the probe line center equals `target`.
CalibrationResult calibrate_density(const CellConfig& cell, const MediumSetup& medium,
                                    double target = 0.34, double tolerance = 1e-4);

/// alpha / N0 for the given atom (m^2 rad/s per atom).
double absorption_scale(const AtomicParams& atom);

}
