#include "rydberg/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace rydberg
{

namespace
{
    constexpr Complex I{0.0, 1.0};

    Eigen::PartialPivLU<Superoperator> factorize(const Superoperator& a, const char* what)
    {
        Eigen::PartialPivLU<Superoperator> lu(a);
        const double rc = lu.rcond();
        if (!(rc >= kSingularRcond))
            throw SingularSystemError(std::string(what) + ": reciprocal condition " + std::to_string(rc));
        return lu;
    }

    double max_abs(const DensityVec& v) { return v.cwiseAbs().maxCoeff(); }
}

DensityVec solve_cp(const GeneratorSet& g)
{
    const Superoperator a = g.r - g.m0;
    return factorize(a, "steady-state system").solve(g.n);
}

FloquetSolution solve_floquet(const GeneratorSet& g, double omega_mod)
{
    FloquetSolution s;
    if (g.m_plus.isZero(0.0) && g.m_minus.isZero(0.0))
    {
        s.rho0 = solve_cp(g);
        return s;
    }

    const Superoperator l0 = g.m0 - g.r;
    const Superoperator id = Superoperator::Identity();
    const auto lu_plus = factorize(l0 + I * omega_mod * id, "upper sideband system");
    const auto lu_minus = factorize(l0 - I * omega_mod * id, "lower sideband system");

    // rho_plus = -X_plus rho0, rho_minus = -X_minus rho0
    const Superoperator x_plus = lu_plus.solve(g.m_plus);
    const Superoperator x_minus = lu_minus.solve(g.m_minus);

    const Superoperator effective = g.r - g.m0 + g.m_minus * x_plus + g.m_plus * x_minus;
    s.rho0 = factorize(effective, "effective carrier system").solve(g.n);
    s.rho_plus = -x_plus * s.rho0;
    s.rho_minus = -x_minus * s.rho0;
    return s;
}

double OracleResult::order2_residue() const
{
    const double first = std::max(max_abs(harmonics.rho_plus), max_abs(harmonics.rho_minus));
    if (first == 0.0)
        return 0.0;
    return std::max(max_abs(rho_plus2), max_abs(rho_minus2)) / first;
}

OracleResult time_domain_oracle(const GeneratorSet& g, double omega_mod, int max_periods,
                                int steps_per_period, double tolerance)
{
    if (steps_per_period < 256)
        throw std::invalid_argument("time_domain_oracle: steps_per_period must be at least 256");
    if (!(omega_mod > 0))
        throw std::invalid_argument("time_domain_oracle: modulation frequency must be positive");

    const Superoperator l0 = g.m0 - g.r;
    const double period = constants::two_pi / omega_mod;
    const double dt = period / steps_per_period;

    // Phase factors at the RK4 stage times within one period; the generator
    // is periodic, so the tables are reused every period.
    std::vector<Complex> phase(2 * steps_per_period + 1);
    for (int k = 0; k <= 2 * steps_per_period; ++k)
        phase[k] = std::exp(-I * omega_mod * (0.5 * dt * k));

    auto rhs = [&](int half_step, const DensityVec& rho) -> DensityVec {
        const Complex e = phase[half_step];
        return l0 * rho + e * (g.m_plus * rho) + std::conj(e) * (g.m_minus * rho) + g.n;
    };

    auto step = [&](int k, DensityVec& rho) {
        const DensityVec k1 = rhs(2 * k, rho);
        const DensityVec k2 = rhs(2 * k + 1, rho + 0.5 * dt * k1);
        const DensityVec k3 = rhs(2 * k + 1, rho + 0.5 * dt * k2);
        const DensityVec k4 = rhs(2 * k + 2, rho + dt * k3);
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };

    DensityVec rho = DensityVec::Zero();
    rho(density_index(1, 1)) = 1.0;

    OracleResult result;
    bool converged = false;
    for (int p = 0; p < max_periods; ++p)
    {
        const DensityVec start = rho;
        for (int k = 0; k < steps_per_period; ++k)
            step(k, rho);
        result.periods = p + 1;
        result.final_change = (rho - start).cwiseAbs().maxCoeff();
        if (!std::isfinite(result.final_change))
            break;
        if (result.final_change < tolerance)
        {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw NonConvergenceError("time_domain_oracle: stroboscopic change " +
                                  std::to_string(result.final_change) + " after " +
                                  std::to_string(result.periods) + " periods");

    // rho(t) = sum_n rho^(n) e^{-inwt}  =>  rho^(n) = <rho(t) e^{+inwt}> over a period.
    // The trapezoid rule on equispaced samples of a periodic function is exact
    // for harmonics below steps_per_period / 2.
    std::array<DensityVec, 5> acc;
    for (auto& a : acc)
        a.setZero();
    for (int k = 0; k < steps_per_period; ++k)
    {
        const Complex e1 = std::conj(phase[2 * k]);  // e^{+iwt}
        Complex en = std::pow(e1, -2);
        for (int n = -2; n <= 2; ++n)
        {
            acc[n + 2] += en * rho;
            en *= e1;
        }
        step(k, rho);
    }
    const double inv = 1.0 / steps_per_period;
    result.harmonics.rho0 = acc[2] * inv;
    result.harmonics.rho_plus = acc[3] * inv;
    result.harmonics.rho_minus = acc[1] * inv;
    result.rho_plus2 = acc[4] * inv;
    result.rho_minus2 = acc[0] * inv;
    return result;
}

double max_relative_deviation(const FloquetSolution& a, const FloquetSolution& b, double floor)
{
    double worst = 0.0;
    auto scan = [&](const DensityVec& x, const DensityVec& y) {
        for (int i = 0; i < kDensitySize; ++i)
        {
            const double scale = std::max(std::abs(x(i)), std::abs(y(i)));
            if (scale > floor)
                worst = std::max(worst, std::abs(x(i) - y(i)) / scale);
        }
    };
    scan(a.rho0, b.rho0);
    scan(a.rho_plus, b.rho_plus);
    scan(a.rho_minus, b.rho_minus);
    return worst;
}

}
