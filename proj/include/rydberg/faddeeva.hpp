#pragma once

#include <complex>

namespace rydberg
{

/// Faddeeva function w(z) = exp(-z^2) erfc(-iz).
///
/// Weideman's rational approximation (SIAM J. Numer. Anal. 31, 1994) with 40
/// terms in the upper half plane, reflected with w(z) = 2 exp(-z^2) - w(-z)
/// below the real axis. Relative accuracy is ~1e-13 or better for Im z >= 0.
std::complex<double> faddeeva(std::complex<double> z);

/// Integral of P(v) / (v - a) over the real line, P the zero-mean Gaussian
/// of width sigma. Requires Im a != 0.
std::complex<double> gaussian_resolvent(std::complex<double> a, double sigma);

}
