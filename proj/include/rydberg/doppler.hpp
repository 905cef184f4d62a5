#pragma once

// Velocity averaging of the probe coherence over the 1D Maxwell distribution.
//
// Two routes are provided. Quadrature on a VelocityGrid solves the stationary
// problem at every node. The exact route uses the fact that velocity only
// enters the generator through a diagonal term, m0(v) = m0(0) + v diag(d):
// the stationary state is then a rational function of v whose partial
// fraction expansion follows from one eigendecomposition, and each pole is
// integrated against the Gaussian in closed form with the Faddeeva function.
// The narrow velocity-selective EIT features (~1 m/s wide against a 169 m/s
// Doppler width) are resolved exactly this way.

#include <array>
#include <vector>

#include "rydberg/liouvillian.hpp"

namespace rydberg
{

struct VelocityGrid
{
    std::vector<double> nodes;    // m/s
    std::vector<double> weights;  // sum to one
};

/// Gauss-Hermite nodes and weights for the Maxwell distribution of width
/// sigma (Golub-Welsch). Exact for polynomials up to degree 2 n_nodes - 1.
VelocityGrid maxwell_grid(double sigma, int n_nodes);

/// Equispaced nodes over +-span_sigmas * sigma with normalized Gaussian
/// weights (trapezoid rule, spectrally accurate for analytic integrands).
VelocityGrid uniform_maxwell_grid(double sigma, int n_nodes, double span_sigmas);

enum class DopplerMethod
{
    exact,
    grid,
};

struct DopplerModel
{
    DopplerMethod method = DopplerMethod::exact;
    double sigma = 0.0;  // m/s
    VelocityGrid grid;   // used by DopplerMethod::grid

    static DopplerModel exact(double sigma);
    static DopplerModel quadrature(VelocityGrid grid);
};

/// Velocity-averaged rho21 harmonics: carrier, e^{-iwt} and e^{+iwt} parts.
struct CoherenceAverage
{
    Complex carrier = 0.0;
    Complex upper = 0.0;
    Complex lower = 0.0;
};

CoherenceAverage average_probe_coherence(const AtomicParams& atom, const FieldCouplings& fields,
                                         const ModulationParams& mod, const DopplerModel& doppler);

/// Exact Gaussian average of selected components of x(v), where
/// (a + v diag(slope)) x(v) = b. Components with zero slope may be present;
/// they are eliminated before the eigendecomposition.
Eigen::VectorXcd gaussian_average_linear_pencil(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b,
                                                const Eigen::VectorXcd& slope, double sigma);

}
