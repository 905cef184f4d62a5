#include "rydberg/faddeeva.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rydberg
{

namespace
{
    constexpr int kTerms = 40;

    struct WeidemanTable
    {
        double scale = 0.0;
        std::array<double, kTerms> coeff{};  // coeff[m - 1] multiplies Z^(m - 1)
    };

    WeidemanTable make_table()
    {
        constexpr int m = 2 * kTerms;
        constexpr int m2 = 2 * m;
        const double pi = std::numbers::pi;

        WeidemanTable t;
        t.scale = std::sqrt(kTerms / std::sqrt(2.0));

        // f sampled on theta_k = k pi / M, k = -M+1 .. M-1, with a leading zero,
        // then rotated by half a period before the DFT.
        std::array<double, m2> f{};
        for (int k = -m + 1; k <= m - 1; ++k)
        {
            const double x = t.scale * std::tan(0.5 * k * pi / m);
            f[k + m] = std::exp(-x * x) * (t.scale * t.scale + x * x);
        }
        std::array<double, m2> shifted{};
        for (int j = 0; j < m2; ++j)
            shifted[j] = f[(j + m) % m2];

        for (int n = 1; n <= kTerms; ++n)
        {
            double re = 0.0;
            for (int j = 0; j < m2; ++j)
                re += shifted[j] * std::cos(2.0 * pi * j * n / m2);
            t.coeff[n - 1] = re / m2;
        }
        return t;
    }

    const WeidemanTable& table()
    {
        static const WeidemanTable t = make_table();
        return t;
    }

    std::complex<double> faddeeva_upper(std::complex<double> z)
    {
        const auto& t = table();
        constexpr std::complex<double> I{0.0, 1.0};
        const std::complex<double> denom = t.scale - I * z;
        const std::complex<double> zz = (t.scale + I * z) / denom;
        std::complex<double> p = 0.0;
        for (int n = kTerms - 1; n >= 0; --n)
            p = p * zz + t.coeff[n];
        return 2.0 * p / (denom * denom) + (1.0 / std::sqrt(std::numbers::pi)) / denom;
    }
}

std::complex<double> faddeeva(std::complex<double> z)
{
    if (z.imag() >= 0.0)
        return faddeeva_upper(z);
    return 2.0 * std::exp(-z * z) - faddeeva_upper(-z);
}

std::complex<double> gaussian_resolvent(std::complex<double> a, double sigma)
{
    if (a.imag() == 0.0)
        throw std::domain_error("gaussian_resolvent: pole on the real axis");
    constexpr std::complex<double> I{0.0, 1.0};
    const double scale = sigma * std::numbers::sqrt2;
    const std::complex<double> zeta = a / scale;
    const double root_pi = std::sqrt(std::numbers::pi);
    // (1/sqrt(pi)) int exp(-t^2) / (t - zeta) dt is odd in zeta
    const std::complex<double> integral =
        zeta.imag() > 0.0 ? I * root_pi * faddeeva_upper(zeta) : -I * root_pi * faddeeva_upper(-zeta);
    return integral / scale;
}

}
