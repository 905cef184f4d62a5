#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "rydberg/analysis.hpp"

using namespace rydberg;

namespace
{
Experiment table_experiment()
{
    Experiment ex;
    ex.medium.atom = default_rb85_params();
    ex.medium.doppler = DopplerModel::exact(doppler_sigma(ex.medium.atom));
    ex.cell.density = 6.646e15;
    ex.drive = default_drive();
    ex.mod = ModulationParams(mhz_to_angular(3.0), 0.25);
    return ex;
}

MapResult synthetic_map(const std::vector<double>& e, const std::vector<double>& d,
                        const std::function<double(double, double)>& f)
{
    MapResult m;
    m.x_axis = {"e_rf", "V/m", e};
    m.y_axis = {"delta_rf", "MHz", d};
    m.quantity = "slope";
    for (double y : d)
        for (double x : e)
            m.values.push_back(f(x, y));
    return m;
}
}

TEST_SUITE("analysis")
{
    TEST_CASE("linspace and protocol names")
    {
        const auto v = linspace(-1.0, 1.0, 5);
        REQUIRE(v.size() == 5);
        CHECK(v[1] == -0.5);
        CHECK(v.back() == 1.0);
        CHECK(linspace(3.0, 7.0, 1) == std::vector<double>{3.0});
        CHECK(linspace(0.0, 1.0, 0).empty());
        CHECK(parse_protocol("cp") == Protocol::cp);
        CHECK(parse_protocol(to_string(Protocol::mtp)) == Protocol::mtp);
        CHECK_THROWS_AS(parse_protocol("am"), std::invalid_argument);
    }

    TEST_CASE("polynomial slope")
    {
        const auto x = linspace(0.0, 1.0, 51);
        SUBCASE("exact on a cubic")
        {
            std::vector<double> y;
            for (double t : x)
                y.push_back(0.3 - 1.2 * t + 2.0 * t * t - 0.7 * t * t * t);
            SlopeFitOptions opt;
            opt.even_extension = false;
            const auto s = polynomial_slope(x, y, opt);
            for (std::size_t i = 0; i < x.size(); ++i)
                CHECK(std::abs(s[i] - (-1.2 + 4.0 * x[i] - 2.1 * x[i] * x[i])) < 1e-10);
        }
        SUBCASE("even extension keeps the origin slope at zero")
        {
            std::vector<double> y;
            for (double t : x)
                y.push_back(0.1 + 0.8 * t * t);
            const auto s = polynomial_slope(x, y);
            for (std::size_t i = 0; i < x.size(); ++i)
                CHECK(std::abs(s[i] - 1.6 * x[i]) < 1e-10);
        }
        SUBCASE("input checks")
        {
            CHECK_THROWS_AS(polynomial_slope({0.0, 1.0}, {0.0}), std::invalid_argument);
        }
    }

    TEST_CASE("threshold crossing")
    {
        // Lorentzian slope profile of half width w: -6 dB at w sqrt(10^0.6 - 1), -10 dB at 3 w
        const double w = 4.0;
        const auto x = linspace(0.0, 30.0, 301);
        std::vector<double> p;
        for (double t : x)
            p.push_back(1.0 / (1.0 + t * t / (w * w)));
        const Contour c6 = threshold_crossing(x, p, std::pow(10.0, -0.6));
        const Contour c10 = threshold_crossing(x, p, 0.1);
        REQUIRE(c6.found);
        REQUIRE(c10.found);
        CHECK(std::abs(c6.value - w * std::sqrt(std::pow(10.0, 0.6) - 1.0)) < 0.1);
        CHECK(std::abs(c10.value - 3.0 * w) < 0.1);

        const Contour never = threshold_crossing(x, std::vector<double>(x.size(), 0.0), 0.1);
        CHECK_FALSE(never.found);
        CHECK_FALSE(never.bound.has_value());

        const Contour open = threshold_crossing(x, std::vector<double>(x.size(), 1.0), 0.1);
        CHECK_FALSE(open.found);
        REQUIRE(open.bound.has_value());
        CHECK(*open.bound == 30.0);

        // search starts at the maximum, not at the first point
        std::vector<double> shifted;
        for (double t : x)
            shifted.push_back(1.0 / (1.0 + (t - 5.0) * (t - 5.0) / (w * w)));
        const Contour cs = threshold_crossing(x, shifted, 0.1);
        REQUIRE(cs.found);
        CHECK(std::abs(cs.value - (5.0 + 3.0 * w)) < 0.1);
    }

    TEST_CASE("bandwidth from slope maps")
    {
        const auto e = linspace(0.0, 0.2, 11);
        const auto d = linspace(0.0, 30.0, 301);
        // slope = g(Delta) (2 E + 3 E^3), g a Lorentzian; MTP twice as wide
        auto lorentz = [](double w) {
            return [w](double x, double y) { return (2.0 * x + 3.0 * x * x * x) / (1.0 + y * y / (w * w)); };
        };
        MapResult cp = synthetic_map(e, d, lorentz(3.0));
        MapResult mtp = synthetic_map(e, d, lorentz(6.0));
        cp.metadata["protocol"] = "cp";
        mtp.metadata["protocol"] = "mtp";

        const auto g = vanishing_field_profile(cp);
        CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-12));

        const BandwidthReport lim = bandwidth(mtp, cp);
        CHECK(lim.protocol == "mtp");
        CHECK(lim.reference_slope == doctest::Approx(2.0).epsilon(1e-12));
        REQUIRE(lim.minus10.found);
        CHECK(std::abs(lim.minus10.value - 18.0) < 0.1);

        BandwidthOptions same;
        same.field = 0.1;
        const BandwidthReport at = bandwidth(cp, cp, same);
        CHECK(at.field == doctest::Approx(0.1));
        CHECK(std::abs(at.minus6.value - 3.0 * std::sqrt(std::pow(10.0, 0.6) - 1.0)) < 0.1);

        BandwidthOptions absolute;
        absolute.field = 0.1;
        absolute.reference = BandwidthOptions::Reference::map_maximum;
        CHECK(bandwidth(cp, cp, absolute).reference_e_rf == doctest::Approx(0.2));

        BandwidthOptions bad;
        bad.reference = BandwidthOptions::Reference::map_maximum;
        CHECK_THROWS_AS(bandwidth(mtp, cp, bad), std::invalid_argument);
        const MapResult shifted = synthetic_map(e, linspace(1.0, 30.0, 30), lorentz(3.0));
        CHECK_THROWS_AS(bandwidth(mtp, shifted), std::invalid_argument);
    }

    TEST_CASE("sensitivity")
    {
        const SensitivityReport s = sensitivity(0.5, 1e-6, 4.0);
        CHECK(s.sensitivity == doctest::Approx(1e-6 / (0.5 * 2.0)));
        CHECK_FALSE(s.infinite);
        CHECK(sensitivity(-0.5, 1e-6, 4.0).sensitivity == s.sensitivity);
        const SensitivityReport z = sensitivity(0.0, 1e-6, 1.0);
        CHECK(z.infinite);
        CHECK(std::isinf(z.sensitivity));
        CHECK_THROWS_AS(sensitivity(0.5, 1e-6, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(sensitivity(0.5, -1.0, 1.0), std::invalid_argument);
    }

    TEST_CASE("ratio maps")
    {
        const auto e = linspace(0.0, 0.2, 3);
        const auto d = linspace(0.0, 2.0, 3);
        const MapResult a = synthetic_map(e, d, [](double x, double y) { return x + y + 1.0; });
        const MapResult r = ratio_map(a, a);
        for (double v : r.values)
            CHECK(v == 1.0);
        CHECK(r.metadata.at("capped_points") == "0");

        const MapResult zero_cp = synthetic_map(e, d, [](double x, double) { return x; });
        const MapResult capped = ratio_map(a, zero_cp, 1e-3);
        CHECK(capped.metadata.at("capped_points") == "3");
        for (double v : capped.values)
            CHECK(std::isfinite(v));
        CHECK(capped.at(0, 0) == doctest::Approx(1.0 / (1e-3 * 0.2)));

        const MapResult other = synthetic_map(e, linspace(0.0, 3.0, 3), [](double, double) { return 1.0; });
        CHECK_THROWS_AS(ratio_map(a, other), std::invalid_argument);
    }

    TEST_CASE("parallel_for")
    {
        std::vector<int> out(1000, 0);
        parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i % 97); });
        for (std::size_t i = 0; i < out.size(); ++i)
            CHECK(out[i] == static_cast<int>(i * i % 97));

        std::atomic<int> calls{0};
        parallel_for(0, 4, [&](std::size_t) { ++calls; });
        CHECK(calls == 0);

        for (int threads : {1, 3, 8})
        {
            try
            {
                parallel_for(50, threads, [](std::size_t i) {
                    if (i == 41 || i == 7 || i == 23)
                        throw std::runtime_error("index " + std::to_string(i));
                });
                FAIL("expected an exception");
            }
            catch (const std::runtime_error& e)
            {
                CHECK(std::string(e.what()) == "index 7");
            }
        }
        CHECK(default_thread_count() >= 1);
    }

    TEST_CASE("sweeps are independent of the thread count")
    {
        const Experiment ex = table_experiment();
        const auto dp = linspace(-2.0, 2.0, 5);
        const SpectrumResult one = spectrum(Protocol::mtp, ex, dp, 1);
        const SpectrumResult three = spectrum(Protocol::mtp, ex, dp, 3);
        CHECK(one.values == three.values);
        CHECK(one.quantity == "rma");
        // symmetric in the probe detuning when the coupling is resonant
        CHECK(one.values[0] == doctest::Approx(one.values[4]).epsilon(1e-9));

        const MapResult rm = response_map(Protocol::cp, ex, {0.0, 0.1}, {0.0, 10.0}, {}, 2);
        CHECK_NOTHROW(rm.check());
        const SpectrumResult row1 = response_curve(Protocol::cp, ex, 10.0, {0.0, 0.1}, {}, 1);
        CHECK(rm.at(1, 0) == row1.values[0]);
        CHECK(rm.at(1, 1) == row1.values[1]);
    }

    TEST_CASE("signals vanish without the coupling beam")
    {
        Experiment ex = table_experiment();
        ex.drive.rabi_coupling = 0.0;
        CHECK(detector_signal(Protocol::cp, ex) == 0.0);
        CHECK(detector_signal(Protocol::mtp, ex) == 0.0);
    }

    TEST_CASE("modulation map on a small grid")
    {
        const Experiment ex = table_experiment();
        ModulationMapOptions opt;
        opt.omega_mhz = {2.0, 3.5};
        opt.beta = {0.25};
        const ModulationMaps m = modulation_map(ex, opt, 2);
        CHECK_NOTHROW(m.amplitude.check());
        CHECK(m.amplitude.at(0, 1) == doctest::Approx(0.0335).epsilon(0.02));
        CHECK(std::abs(m.peak_position.at(0, 1)) > 1.0);
        CHECK(m.slope.at(0, 0) > m.slope.at(0, 1));
    }
}
