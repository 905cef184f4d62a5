#include "rydberg/doppler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <lapacke.h>

#include "rydberg/faddeeva.hpp"
#include "rydberg/steady_state.hpp"

namespace rydberg
{

namespace
{
    constexpr Complex I{0.0, 1.0};
    constexpr int kRho21 = density_index(2, 1);

    // Eigenvector bases worse than this are treated as defective and the
    // average falls back to dense trapezoid quadrature.
    constexpr double kMinBasisRcond = 1e-10;

    struct EigenPairs
    {
        Eigen::VectorXcd values;
        Eigen::MatrixXcd vectors;
    };

    // zgeev is several times faster than Eigen's ComplexEigenSolver at the
    // sizes used here (up to 30x30), which dominates the propagation cost.
    EigenPairs eigen_decompose(Eigen::MatrixXcd k)
    {
        const auto n = static_cast<lapack_int>(k.rows());
        EigenPairs out{Eigen::VectorXcd(n), Eigen::MatrixXcd(n, n)};
        const lapack_int info = LAPACKE_zgeev(
            LAPACK_COL_MAJOR, 'N', 'V', n, reinterpret_cast<lapack_complex_double*>(k.data()), n,
            reinterpret_cast<lapack_complex_double*>(out.values.data()), nullptr, n,
            reinterpret_cast<lapack_complex_double*>(out.vectors.data()), n);
        if (info != 0)
            throw SingularSystemError("velocity pencil eigendecomposition failed");
        return out;
    }

    // Components of x that can be nonzero: the closure of supp(b) under
    // j -> i whenever a(i, j) != 0. The rest vanish for every velocity.
    std::vector<Eigen::Index> reachable(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b)
    {
        const Eigen::Index n = a.rows();
        std::vector<char> seen(n, 0);
        std::vector<Eigen::Index> stack;
        for (Eigen::Index i = 0; i < n; ++i)
            if (b(i) != 0.0)
            {
                seen[i] = 1;
                stack.push_back(i);
            }
        while (!stack.empty())
        {
            const Eigen::Index j = stack.back();
            stack.pop_back();
            for (Eigen::Index i = 0; i < n; ++i)
                if (!seen[i] && a(i, j) != 0.0)
                {
                    seen[i] = 1;
                    stack.push_back(i);
                }
        }
        std::vector<Eigen::Index> out;
        for (Eigen::Index i = 0; i < n; ++i)
            if (seen[i])
                out.push_back(i);
        return out;
    }

    Eigen::VectorXcd trapezoid_average(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b,
                                       const Eigen::VectorXcd& slope, double sigma, double pole_distance)
    {
        // Error of the trapezoid rule for a function analytic in a strip of
        // half-width d decays like exp(-2 pi d / h).
        const double span = 8.0 * sigma;
        const double h = std::max(pole_distance / 4.0, 2.0 * span / 40000.0);
        const int n = 2 * static_cast<int>(std::ceil(span / h)) + 1;
        const VelocityGrid grid = uniform_maxwell_grid(sigma, n, 8.0);
        Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(b.size());
        for (std::size_t k = 0; k < grid.nodes.size(); ++k)
        {
            Eigen::MatrixXcd m = a;
            m.diagonal() += grid.nodes[k] * slope;
            acc += grid.weights[k] * m.partialPivLu().solve(b);
        }
        return acc;
    }
}

DopplerModel DopplerModel::exact(double sigma)
{
    DopplerModel m;
    m.method = DopplerMethod::exact;
    m.sigma = sigma;
    return m;
}

DopplerModel DopplerModel::quadrature(VelocityGrid grid)
{
    DopplerModel m;
    m.method = DopplerMethod::grid;
    m.grid = std::move(grid);
    return m;
}

VelocityGrid maxwell_grid(double sigma, int n_nodes)
{
    if (n_nodes < 1)
        throw std::invalid_argument("maxwell_grid: need at least one node");
    // Jacobi matrix of the probabilists' Hermite polynomials.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
    for (int k = 1; k < n_nodes; ++k)
    {
        jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
        jacobi(k - 1, k) = jacobi(k, k - 1);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);

    VelocityGrid g;
    g.nodes.resize(n_nodes);
    g.weights.resize(n_nodes);
    for (int k = 0; k < n_nodes; ++k)
    {
        g.nodes[k] = sigma * es.eigenvalues()(k);
        const double v0 = es.eigenvectors()(0, k);
        g.weights[k] = v0 * v0;
    }
    // symmetrize against round-off in the eigensolver
    for (int k = 0; k < n_nodes / 2; ++k)
    {
        const int m = n_nodes - 1 - k;
        const double x = 0.5 * (g.nodes[m] - g.nodes[k]);
        const double w = 0.5 * (g.weights[m] + g.weights[k]);
        g.nodes[k] = -x;
        g.nodes[m] = x;
        g.weights[k] = g.weights[m] = w;
    }
    if (n_nodes % 2 == 1)
        g.nodes[n_nodes / 2] = 0.0;
    return g;
}

VelocityGrid uniform_maxwell_grid(double sigma, int n_nodes, double span_sigmas)
{
    if (n_nodes < 3 || n_nodes % 2 == 0)
        throw std::invalid_argument("uniform_maxwell_grid: node count must be odd and >= 3");
    if (!(span_sigmas > 0))
        throw std::invalid_argument("uniform_maxwell_grid: span must be positive");
    VelocityGrid g;
    g.nodes.resize(n_nodes);
    g.weights.resize(n_nodes);
    const int half = n_nodes / 2;
    const double step = span_sigmas / half;
    double total = 0.0;
    for (int k = 0; k < n_nodes; ++k)
    {
        const double x = (k - half) * step;
        g.nodes[k] = sigma * x;
        g.weights[k] = std::exp(-0.5 * x * x);
        total += g.weights[k];
    }
    for (double& w : g.weights)
        w /= total;
    return g;
}

namespace
{
Eigen::VectorXcd average_pruned(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b, const Eigen::VectorXcd& slope,
                                double sigma)
{
    const Eigen::Index n = a.rows();

    std::vector<Eigen::Index> moving, fixed;
    for (Eigen::Index i = 0; i < n; ++i)
        (slope(i) != 0.0 ? moving : fixed).push_back(i);
    const auto nd = static_cast<Eigen::Index>(moving.size());
    const auto nz = static_cast<Eigen::Index>(fixed.size());

    if (nd == 0)
        return a.partialPivLu().solve(b);

    // Eliminate the velocity-independent block:
    //   x_z = azz^-1 (b_z - azd x_d),  (s + v diag(slope_d)) x_d = c
    Eigen::MatrixXcd rhs(nz, nd + 1);
    Eigen::MatrixXcd azz(nz, nz), add(nd, nd), adz(nd, nz);
    for (Eigen::Index i = 0; i < nz; ++i)
    {
        for (Eigen::Index j = 0; j < nz; ++j)
            azz(i, j) = a(fixed[i], fixed[j]);
        for (Eigen::Index j = 0; j < nd; ++j)
            rhs(i, j) = a(fixed[i], moving[j]);
        rhs(i, nd) = b(fixed[i]);
    }
    for (Eigen::Index i = 0; i < nd; ++i)
    {
        for (Eigen::Index j = 0; j < nd; ++j)
            add(i, j) = a(moving[i], moving[j]);
        for (Eigen::Index j = 0; j < nz; ++j)
            adz(i, j) = a(moving[i], fixed[j]);
    }

    Eigen::MatrixXcd x(nz, nd + 1);
    if (nz > 0)
    {
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(azz);
        if (!(lu.rcond() >= kSingularRcond))
            throw SingularSystemError("velocity-independent block is singular");
        x = lu.solve(rhs);
    }

    Eigen::VectorXcd c(nd);
    for (Eigen::Index i = 0; i < nd; ++i)
        c(i) = b(moving[i]);
    Eigen::MatrixXcd k = add;
    if (nz > 0)
    {
        c.noalias() -= adz * x.col(nd);
        k.noalias() -= adz * x.leftCols(nd);
    }
    for (Eigen::Index i = 0; i < nd; ++i)
    {
        c(i) /= slope(moving[i]);
        k.row(i) /= slope(moving[i]);
    }

    // x_d(v) = V diag(1 / (lambda + v)) V^-1 c
    const EigenPairs es = eigen_decompose(std::move(k));
    const Eigen::VectorXcd& lambda = es.values;
    const Eigen::MatrixXcd& basis = es.vectors;
    Eigen::PartialPivLU<Eigen::MatrixXcd> basis_lu(basis);

    double pole_distance = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < nd; ++i)
        pole_distance = std::min(pole_distance, std::abs(lambda(i).imag()));

    if (!(basis_lu.rcond() >= kMinBasisRcond) || !(pole_distance > 0.0))
        return trapezoid_average(a, b, slope, sigma, pole_distance > 0.0 ? pole_distance : sigma * 1e-3);

    Eigen::VectorXcd coef = basis_lu.solve(c);
    for (Eigen::Index i = 0; i < nd; ++i)
        coef(i) *= gaussian_resolvent(-lambda(i), sigma);
    const Eigen::VectorXcd mean_d = basis * coef;

    Eigen::VectorXcd mean(n);
    for (Eigen::Index i = 0; i < nd; ++i)
        mean(moving[i]) = mean_d(i);
    if (nz > 0)
    {
        const Eigen::VectorXcd mean_z = x.col(nd) - x.leftCols(nd) * mean_d;
        for (Eigen::Index i = 0; i < nz; ++i)
            mean(fixed[i]) = mean_z(i);
    }
    return mean;
}
}

Eigen::VectorXcd gaussian_average_linear_pencil(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b,
                                                const Eigen::VectorXcd& slope, double sigma)
{
    if (sigma == 0.0)
        return a.partialPivLu().solve(b);

    const std::vector<Eigen::Index> keep = reachable(a, b);
    const auto m = static_cast<Eigen::Index>(keep.size());
    Eigen::VectorXcd full = Eigen::VectorXcd::Zero(a.rows());
    if (m == 0)
        return full;
    if (m == a.rows())
        return average_pruned(a, b, slope, sigma);

    Eigen::MatrixXcd as(m, m);
    Eigen::VectorXcd bs(m), ss(m);
    for (Eigen::Index i = 0; i < m; ++i)
    {
        for (Eigen::Index j = 0; j < m; ++j)
            as(i, j) = a(keep[i], keep[j]);
        bs(i) = b(keep[i]);
        ss(i) = slope(keep[i]);
    }
    const Eigen::VectorXcd xs = average_pruned(as, bs, ss, sigma);
    for (Eigen::Index i = 0; i < m; ++i)
        full(keep[i]) = xs(i);
    return full;
}

CoherenceAverage average_probe_coherence(const AtomicParams& atom, const FieldCouplings& fields,
                                         const ModulationParams& mod, const DopplerModel& doppler)
{
    const bool modulated = mod.is_modulated();
    CoherenceAverage out;

    if (doppler.method == DopplerMethod::grid)
    {
        const auto& g = doppler.grid;
        for (std::size_t k = 0; k < g.nodes.size(); ++k)
        {
            const GeneratorSet gen = build_generators(atom, fields, mod, g.nodes[k]);
            if (modulated)
            {
                const FloquetSolution s = solve_floquet(gen, mod.omega_mod());
                out.carrier += g.weights[k] * s.rho0(kRho21);
                out.upper += g.weights[k] * s.rho_plus(kRho21);
                out.lower += g.weights[k] * s.rho_minus(kRho21);
            }
            else
            {
                out.carrier += g.weights[k] * solve_cp(gen)(kRho21);
            }
        }
        return out;
    }

    const GeneratorSet gen = build_generators(atom, fields, mod, 0.0);
    const DensityVec slope16 = doppler_derivative(atom);
    const Superoperator l0 = gen.m0 - gen.r;

    if (!modulated)
    {
        const Eigen::VectorXcd mean =
            gaussian_average_linear_pencil(l0, -gen.n, slope16, doppler.sigma);
        out.carrier = mean(kRho21);
        return out;
    }

    // Unknowns ordered (rho0, rho_plus, rho_minus).
    constexpr int n = 3 * kDensitySize;
    const double w = mod.omega_mod();
    const Superoperator id = Superoperator::Identity();
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
    a.block<16, 16>(0, 0) = l0;
    a.block<16, 16>(0, 16) = gen.m_minus;
    a.block<16, 16>(0, 32) = gen.m_plus;
    a.block<16, 16>(16, 0) = gen.m_plus;
    a.block<16, 16>(16, 16) = l0 + I * w * id;
    a.block<16, 16>(32, 0) = gen.m_minus;
    a.block<16, 16>(32, 32) = l0 - I * w * id;

    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(n);
    b.head<16>() = -gen.n;
    Eigen::VectorXcd slope(n);
    slope << slope16, slope16, slope16;

    const Eigen::VectorXcd mean = gaussian_average_linear_pencil(a, b, slope, doppler.sigma);
    out.carrier = mean(kRho21);
    out.upper = mean(kDensitySize + kRho21);
    out.lower = mean(2 * kDensitySize + kRho21);
    return out;
}

}
