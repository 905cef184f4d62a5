#pragma once

// Vectorized master-equation generator for the four-level ladder.
//
// The density matrix is stored row-major as a 16-component vector,
// (rho11, rho12, rho13, rho14, rho21, ..., rho44). With the coupling beam
// phase modulated, the generator splits into a static part m0 and the two
// sideband parts multiplying exp(-i w t) (m_plus) and exp(+i w t) (m_minus):
//
//     d rho / dt = (m0 + m_plus e^{-iwt} + m_minus e^{+iwt} - r) rho + n

#include <complex>

#include <Eigen/Dense>

#include "rydberg/atom_data.hpp"

namespace rydberg
{

using Complex = std::complex<double>;
using Matrix4c = Eigen::Matrix<Complex, 4, 4>;
using DensityVec = Eigen::Matrix<Complex, 16, 1>;
using Superoperator = Eigen::Matrix<Complex, 16, 16>;

inline constexpr int kLevels = 4;
inline constexpr int kDensitySize = 16;

/// Position of rho_ij in a DensityVec, levels counted from 1.
constexpr int density_index(int i, int j) { return kLevels * (i - 1) + (j - 1); }

DensityVec vectorize(const Matrix4c& rho);
Matrix4c devectorize(const DensityVec& rho);

Complex trace(const DensityVec& rho);

/// Field couplings resolved to angular frequencies, as seen by an atom at rest.
/// The probe Rabi frequency is complex so that propagation can feed back the
/// local amplitude and phase of the carrier.
struct FieldCouplings
{
    Complex rabi_probe = 0.0;
    double rabi_coupling = 0.0;  // unmodulated amplitude; split by ModulationParams
    double rabi_rf = 0.0;
    double delta_21 = 0.0;
    double delta_31 = 0.0;
    double delta_41 = 0.0;
};

FieldCouplings resolve_couplings(const AtomicParams& atom, const DriveParams& drive);

/// H / hbar in the rotating frame, split by modulation harmonic.
struct Hamiltonians
{
    Matrix4c carrier;
    Matrix4c upper;  // multiplies exp(-i w t)
    Matrix4c lower;  // multiplies exp(+i w t)
};

Hamiltonians build_hamiltonian(const AtomicParams& atom, const FieldCouplings& fields,
                               const ModulationParams& mod, double velocity);

struct GeneratorSet
{
    Superoperator m0;
    Superoperator m_plus;
    Superoperator m_minus;
    Superoperator r;
    DensityVec n;
};

/// Superoperator of -i [h, .] for h given in rad/s.
Superoperator commutator_superoperator(const Matrix4c& h);

/// Relaxation matrix: radiative cascade 4 -> 3 -> 2 -> 1, coherence decay
/// (Gamma_i + Gamma_j) / 2, and the transit rate on every element.
Superoperator relaxation_matrix(const AtomicParams& atom);

/// Feed vector: gamma_in into rho11.
DensityVec feed_vector(const AtomicParams& atom);

GeneratorSet build_generators(const AtomicParams& atom, const FieldCouplings& fields,
                              const ModulationParams& mod, double velocity);

/// d m0 / dv. The Doppler shifts enter m0 only on the diagonal, so
/// m0(v) = m0(0) + v * diag(doppler_derivative(atom)).
DensityVec doppler_derivative(const AtomicParams& atom);

}
