#pragma once

#include <stdexcept>

#include "rydberg/liouvillian.hpp"

namespace rydberg
{

/// The linear system for the stationary state is (numerically) singular.
class SingularSystemError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// The time-domain integration did not settle within the allotted periods.
class NonConvergenceError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Reciprocal condition estimate below which a solve is rejected.
inline constexpr double kSingularRcond = 1e-14;

/// Harmonics of rho(t) = rho0 + rho_plus e^{-iwt} + rho_minus e^{+iwt}.
struct FloquetSolution
{
    DensityVec rho0 = DensityVec::Zero();
    DensityVec rho_plus = DensityVec::Zero();
    DensityVec rho_minus = DensityVec::Zero();
};

/// Unique solution of (r - m0) rho = n.
DensityVec solve_cp(const GeneratorSet& g);

/// Harmonic balance truncated at orders 0, +-1:
///
///   (L + i w) rho_plus  = -m_plus  rho0
///   (L - i w) rho_minus = -m_minus rho0
///   L rho0 + m_minus rho_plus + m_plus rho_minus = -n
///
/// with L = m0 - r. The sideband equations are eliminated into an effective
/// 16x16 system for rho0, then back-substituted.
FloquetSolution solve_floquet(const GeneratorSet& g, double omega_mod);

struct OracleResult
{
    FloquetSolution harmonics;
    DensityVec rho_plus2 = DensityVec::Zero();   // e^{-2iwt} component
    DensityVec rho_minus2 = DensityVec::Zero();  // e^{+2iwt} component
    int periods = 0;                              // periods integrated before projection
    double final_change = 0.0;                    // last stroboscopic max-norm change

    /// max |rho^(+-2)| / max |rho^(+-1)|; zero when the first order vanishes.
    double order2_residue() const;
};

/// Integrates the full time-dependent master equation from the ground state
/// with fixed-step RK4 until the stroboscopic change per period drops below
/// `tolerance`, then projects the Fourier components over one more period.
OracleResult time_domain_oracle(const GeneratorSet& g, double omega_mod, int max_periods,
                                int steps_per_period, double tolerance = 1e-14);

/// Largest |a - b| / max(|a|, |b|) over the 48 harmonic components whose
/// magnitude exceeds `floor` in either solution.
double max_relative_deviation(const FloquetSolution& a, const FloquetSolution& b,
                              double floor = 1e-12);

}
