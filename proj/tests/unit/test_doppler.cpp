#include <doctest.h>

#include <cmath>
#include <numeric>

#include "rydberg/doppler.hpp"
#include "rydberg/steady_state.hpp"

using namespace rydberg;

namespace
{
double moment(const VelocityGrid& g, int p)
{
    double m = 0.0;
    for (std::size_t k = 0; k < g.nodes.size(); ++k)
        m += g.weights[k] * std::pow(g.nodes[k], p);
    return m;
}
}

TEST_SUITE("doppler")
{
    TEST_CASE("Gauss-Hermite moments")
    {
        const double sigma = 169.0;
        for (int n : {1, 2, 7, 64, 65})
        {
            const VelocityGrid g = maxwell_grid(sigma, n);
            REQUIRE(g.nodes.size() == static_cast<std::size_t>(n));
            CHECK(std::abs(moment(g, 0) - 1.0) < 1e-12);
            CHECK(std::abs(moment(g, 1)) < 1e-12 * sigma);
            if (n >= 2)
                CHECK(moment(g, 2) == doctest::Approx(sigma * sigma).epsilon(1e-9));
            if (n >= 3)
                CHECK(moment(g, 4) == doctest::Approx(3.0 * std::pow(sigma, 4)).epsilon(1e-9));
            for (std::size_t k = 0; k < g.nodes.size(); ++k)
                CHECK(g.nodes[k] == doctest::Approx(-g.nodes[g.nodes.size() - 1 - k]).epsilon(1e-12));
        }
        CHECK_THROWS_AS(maxwell_grid(sigma, 0), std::invalid_argument);
    }

    TEST_CASE("uniform grid")
    {
        const double sigma = 169.0;
        const VelocityGrid g = uniform_maxwell_grid(sigma, 801, 8.0);
        CHECK(g.nodes.front() == doctest::Approx(-8.0 * sigma));
        CHECK(g.nodes[400] == 0.0);
        CHECK(std::accumulate(g.weights.begin(), g.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(moment(g, 2) == doctest::Approx(sigma * sigma).epsilon(1e-10));
        for (std::size_t k = 0; k < g.nodes.size(); ++k)
            CHECK(g.weights[k] == g.weights[g.nodes.size() - 1 - k]);
        CHECK_THROWS_AS(uniform_maxwell_grid(sigma, 800, 8.0), std::invalid_argument);
        CHECK_THROWS_AS(uniform_maxwell_grid(sigma, 1, 8.0), std::invalid_argument);
        CHECK_THROWS_AS(uniform_maxwell_grid(sigma, 801, 0.0), std::invalid_argument);
    }

    TEST_CASE("scalar pencil against quadrature")
    {
        // <b / (a + s v)> for a Lorentzian resonance narrower than the Doppler width
        const double sigma = 169.0;
        Eigen::MatrixXcd a(1, 1);
        Eigen::VectorXcd b(1), s(1);
        a(0, 0) = Complex(-3.0e6, 2.0e6);
        b(0) = Complex(1.0, 0.5);
        s(0) = Complex(0.0, 8.05e6);
        const Complex exact = gaussian_average_linear_pencil(a, b, s, sigma)(0);

        const VelocityGrid g = uniform_maxwell_grid(sigma, 400001, 12.0);
        Complex quad = 0.0;
        for (std::size_t k = 0; k < g.nodes.size(); ++k)
            quad += g.weights[k] * b(0) / (a(0, 0) + s(0) * g.nodes[k]);
        CHECK(std::abs(exact - quad) <= 1e-9 * std::abs(quad));
    }

    TEST_CASE("pencil with a velocity-independent block and unreachable components")
    {
        const double sigma = 50.0;
        Eigen::MatrixXcd a(3, 3);
        a << Complex(-2, 1), Complex(0.5, 0), Complex(0, 0),
             Complex(0.3, 0.1), Complex(-1, -0.2), Complex(0, 0),
             Complex(0, 0), Complex(0, 0), Complex(-1, 0);
        Eigen::VectorXcd b(3), s(3);
        b << 1.0, 0.0, 0.0;
        s << Complex(0, 0.05), Complex(0, 0), Complex(0, 0.02);
        const Eigen::VectorXcd exact = gaussian_average_linear_pencil(a, b, s, sigma);

        const VelocityGrid g = uniform_maxwell_grid(sigma, 40001, 12.0);
        Eigen::VectorXcd quad = Eigen::VectorXcd::Zero(3);
        for (std::size_t k = 0; k < g.nodes.size(); ++k)
        {
            Eigen::MatrixXcd m = a;
            m.diagonal() += g.nodes[k] * s;
            quad += g.weights[k] * m.partialPivLu().solve(b);
        }
        CHECK((exact - quad).norm() <= 1e-9 * quad.norm());
        CHECK(exact(2) == Complex(0.0));

        // sigma = 0 is a plain solve
        CHECK((gaussian_average_linear_pencil(a, b, s, 0.0) - a.partialPivLu().solve(b)).norm() < 1e-14);
    }

    TEST_CASE("exact average agrees with a fine velocity grid")
    {
        const AtomicParams atom = default_rb85_params();
        DriveParams d = default_drive();
        d.e_rf = 0.05;
        d.delta_probe = mhz_to_angular(0.1);
        const FieldCouplings f = resolve_couplings(atom, d);
        const double sigma = doppler_sigma(atom);
        const DopplerModel exact = DopplerModel::exact(sigma);
        const DopplerModel grid = DopplerModel::quadrature(uniform_maxwell_grid(sigma, 8001, 8.0));

        SUBCASE("unmodulated")
        {
            const Complex e = average_probe_coherence(atom, f, ModulationParams(), exact).carrier;
            const Complex q = average_probe_coherence(atom, f, ModulationParams(), grid).carrier;
            CHECK(std::abs(e - q) <= 1e-6 * std::abs(e));
        }
        SUBCASE("modulated")
        {
            const ModulationParams mod(mhz_to_angular(3.0), 0.25);
            const CoherenceAverage e = average_probe_coherence(atom, f, mod, exact);
            const CoherenceAverage q = average_probe_coherence(atom, f, mod, grid);
            CHECK(std::abs(e.carrier - q.carrier) <= 1e-6 * std::abs(e.carrier));
            CHECK(std::abs(e.upper - q.upper) <= 1e-5 * std::abs(e.upper));
            CHECK(std::abs(e.lower - q.lower) <= 1e-5 * std::abs(e.lower));
            CHECK(std::abs(e.upper) > 1e-3 * std::abs(e.carrier));
        }
    }
}
