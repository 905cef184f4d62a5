#include <doctest.h>

#include <cmath>

#include "rydberg/medium.hpp"

using namespace rydberg;

namespace
{
const Complex I{0.0, 1.0};

MediumSetup setup()
{
    const AtomicParams a = default_rb85_params();
    return {a, DopplerModel::exact(doppler_sigma(a))};
}

// <(i/2) / (gamma - i (Delta - k v))> over the Maxwell distribution by a fine
// trapezoid: the weak-probe coherence per unit Rabi frequency, coupling off.
Complex weak_probe_coherence(const AtomicParams& a, double delta)
{
    const double sigma = doppler_sigma(a);
    const double gamma = 0.5 * a.gamma_2 + a.transit_rate;
    const double h = 0.05, span = 10.0 * sigma;
    const int n = static_cast<int>(2.0 * span / h) + 1;
    Complex sum = 0.0;
    double norm = 0.0;
    for (int k = 0; k < n; ++k)
    {
        const double v = -span + k * h;
        const double p = std::exp(-0.5 * v * v / (sigma * sigma));
        sum += p * (0.5 * I) / (gamma - I * (delta - a.k_probe() * v));
        norm += p;
    }
    return sum / norm;
}
}

TEST_SUITE("medium")
{
    TEST_CASE("empty cell transmits everything")
    {
        CellConfig cell;
        cell.density = 0.0;
        const PropagationResult r = propagate_cp(cell, setup(), default_drive());
        CHECK(r.transmission == 1.0);
        CHECK(r.e_p0.size() == 101);
        CHECK(r.max_slice_absorption == 0.0);
    }

    TEST_CASE("rma of field combinations")
    {
        CHECK(rma(1.0, Complex(0, 0.3), Complex(0, 0.3)) == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(rma(0.5, 0.01, 0.0) == doctest::Approx(0.01).epsilon(1e-14));
        CHECK(rma(0.5, 0.0, 0.01) == doctest::Approx(0.01).epsilon(1e-14));
        CHECK(rma(1.0, 0.02, 0.02, 2.0) == doctest::Approx(0.02).epsilon(1e-14));
        const Complex e0(0.4, 0.1), ep(0.01, -0.03), em(-0.02, 0.005);
        const Complex ph = std::exp(I * 1.234);
        CHECK(rma(ph * e0, ph * ep, ph * em) == doctest::Approx(rma(e0, ep, em)).epsilon(1e-14));
    }

    TEST_CASE("weak-probe absorption follows the discrete Beer-Lambert law")
    {
        const MediumSetup m = setup();
        CellConfig cell;
        cell.density = 6.6e15;
        DriveParams d;  // probe only, weak
        for (double delta_mhz : {0.0, 150.0, -400.0})
        {
            d.delta_probe = mhz_to_angular(delta_mhz);
            const PropagationResult r = propagate_cp(cell, m, d);
            const double dx = cell.length / cell.num_slices;
            const Complex step = 1.0 + I * absorption_scale(m.atom) * cell.density * dx *
                                           weak_probe_coherence(m.atom, d.delta_probe);
            const double expect = std::norm(std::pow(step, cell.num_slices));
            INFO("delta_p = " << delta_mhz << " MHz");
            CHECK(r.transmission == doctest::Approx(expect).epsilon(1e-8));
        }
    }

    TEST_CASE("density calibration")
    {
        const MediumSetup m = setup();
        const CellConfig cell;
        const CalibrationResult c = calibrate_density(cell, m, 0.34);
        CHECK(c.transmission == doctest::Approx(0.34).epsilon(1e-4));
        CHECK(-std::log(c.transmission) == doctest::Approx(1.079).epsilon(1e-3));

        // continuous Beer-Lambert, T = exp(-alpha L Re<1 / (gamma - i delta)>), agrees
        // with the sliced result to within the slice discretization
        const double re = 2.0 * weak_probe_coherence(m.atom, 0.0).imag();
        const double n_cont = -std::log(0.34) / (absorption_scale(m.atom) * cell.length * re);
        CHECK(std::abs(c.density / n_cont - 1.0) < 0.01);

        CHECK(calibrate_density(cell, m, 1.0).density == 0.0);
        CHECK_THROWS_AS(calibrate_density(cell, m, 0.0), ParameterError);
        CHECK_THROWS_AS(calibrate_density(cell, m, 1.5), ParameterError);

        // transmission decreases with density
        DriveParams weak;
        double last = 1.0;
        for (double f : {0.25, 0.5, 1.0, 2.0})
        {
            CellConfig c2 = cell;
            c2.density = f * c.density;
            const double t = propagate_cp(c2, m, weak).transmission;
            CHECK(t < last);
            last = t;
        }
    }

    TEST_CASE("transparency and the unmodulated limit")
    {
        const MediumSetup m = setup();
        CellConfig cell;
        cell.density = 6.646e15;
        DriveParams d = default_drive();
        CHECK(transparency(cell, m, [&] { auto o = d; o.rabi_coupling = 0.0; return o; }()) == 0.0);
        CHECK(transparency(cell, m, d) > 0.0);

        const PropagationResult cp = propagate_cp(cell, m, d);
        const PropagationResult mtp = propagate_mtp(cell, m, d, ModulationParams(mhz_to_angular(3.0), 0.0));
        CHECK(mtp.transmission == cp.transmission);
        CHECK(mtp.rma == 0.0);
        CHECK(rma(cp) == 0.0);
    }

    TEST_CASE("slice refinement")
    {
        const MediumSetup m = setup();
        CellConfig cell;
        cell.density = 6.646e15;
        DriveParams d = default_drive();
        d.e_rf = 0.05;
        d.delta_probe = mhz_to_angular(0.1);
        const ModulationParams mod(mhz_to_angular(3.0), 0.25);
        const PropagationResult coarse = propagate_mtp(cell, m, d, mod);
        cell.num_slices = 200;
        const PropagationResult fine = propagate_mtp(cell, m, d, mod);
        CHECK(fine.rma == doctest::Approx(coarse.rma).epsilon(5e-3));
        CHECK(fine.transmission == doctest::Approx(coarse.transmission).epsilon(5e-3));
        CHECK(coarse.rma > 0.0);
    }

    TEST_CASE("cell validation")
    {
        CellConfig cell;
        cell.num_slices = 0;
        CHECK_THROWS_AS(cell.validate(), ParameterError);
        cell = CellConfig{};
        cell.length = -1.0;
        CHECK_THROWS_AS(cell.validate(), ParameterError);
        cell = CellConfig{};
        cell.density = -1.0;
        CHECK_THROWS_AS(cell.validate(), ParameterError);
    }
}
