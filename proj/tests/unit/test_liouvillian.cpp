#include <doctest.h>

#include <random>

#include "rydberg/liouvillian.hpp"

using namespace rydberg;

namespace
{
const Complex I{0.0, 1.0};

Matrix4c random_matrix(std::mt19937_64& rng)
{
    std::normal_distribution<double> n;
    Matrix4c m;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            m(i, j) = Complex(n(rng), n(rng));
    return m;
}

Matrix4c ket_bra(int i, int j)
{
    Matrix4c m = Matrix4c::Zero();
    m(i - 1, j - 1) = 1.0;
    return m;
}

// Lindblad dissipator plus transit loss and ground-state feed, written out
// with matrix products rather than component rates.
Matrix4c lindblad_rhs(const AtomicParams& a, const Matrix4c& rho)
{
    const Matrix4c jumps[3] = {std::sqrt(a.gamma_2) * ket_bra(1, 2), std::sqrt(a.gamma_3) * ket_bra(2, 3),
                               std::sqrt(a.gamma_4) * ket_bra(3, 4)};
    Matrix4c out = Matrix4c::Zero();
    for (const auto& l : jumps)
    {
        const Matrix4c ldl = l.adjoint() * l;
        out += l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl);
    }
    out -= a.transit_rate * rho;
    out += a.feed_rate * ket_bra(1, 1);
    return out;
}

FieldCouplings some_fields()
{
    FieldCouplings f;
    f.rabi_probe = Complex(mhz_to_angular(1.1), mhz_to_angular(-0.4));
    f.rabi_coupling = mhz_to_angular(2.38);
    f.rabi_rf = mhz_to_angular(5.0);
    f.delta_21 = mhz_to_angular(0.7);
    f.delta_31 = mhz_to_angular(-1.3);
    f.delta_41 = mhz_to_angular(2.2);
    return f;
}
}

TEST_SUITE("liouvillian")
{
    TEST_CASE("vectorization is row-major")
    {
        std::mt19937_64 rng(3);
        const Matrix4c m = random_matrix(rng);
        const DensityVec v = vectorize(m);
        for (int i = 1; i <= 4; ++i)
            for (int j = 1; j <= 4; ++j)
                CHECK(v(density_index(i, j)) == m(i - 1, j - 1));
        CHECK(density_index(1, 2) == 1);
        CHECK(density_index(2, 1) == 4);
        CHECK(devectorize(v) == m);
        CHECK(std::abs(trace(v) - m.trace()) < 1e-15);
    }

    TEST_CASE("commutator superoperator matches -i[h, rho]")
    {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 5; ++trial)
        {
            const Matrix4c h = random_matrix(rng);
            const Matrix4c rho = random_matrix(rng);
            const Matrix4c direct = -I * (h * rho - rho * h);
            const DensityVec via = commutator_superoperator(h) * vectorize(rho);
            CHECK((via - vectorize(direct)).norm() < 1e-13 * (1.0 + direct.norm()));
        }
    }

    TEST_CASE("relaxation and feed reproduce the Lindblad form")
    {
        const AtomicParams a = default_rb85_params();
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 5; ++trial)
        {
            const Matrix4c rho = random_matrix(rng);
            const DensityVec expect = vectorize(lindblad_rhs(a, rho));
            const DensityVec got = -relaxation_matrix(a) * vectorize(rho) + feed_vector(a);
            CHECK((got - expect).norm() <= 1e-12 * expect.norm());
        }
    }

    TEST_CASE("hamiltonian structure")
    {
        const AtomicParams a = default_rb85_params();
        const FieldCouplings f = some_fields();
        const ModulationParams mod(mhz_to_angular(3.0), 0.25);
        const Hamiltonians h = build_hamiltonian(a, f, mod, 42.0);

        CHECK((h.carrier - h.carrier.adjoint()).norm() < 1e-15 * h.carrier.norm());
        CHECK((h.lower - h.upper.adjoint()).norm() == 0.0);
        // carrier + sidebands is Hermitian at every instant
        for (double t : {0.0, 0.1e-6, 0.37e-6})
        {
            const Complex ph = std::exp(-I * mod.omega_mod() * t);
            const Matrix4c total = h.carrier + h.upper * ph + h.lower * std::conj(ph);
            CHECK((total - total.adjoint()).norm() < 1e-15 * total.norm());
        }

        CHECK(h.carrier(1, 0) == -0.5 * f.rabi_probe);
        CHECK(h.carrier(0, 1) == -0.5 * std::conj(f.rabi_probe));
        CHECK(h.carrier(1, 2).real() == doctest::Approx(-0.5 * mod.carrier_amplitude() * f.rabi_coupling));
        CHECK(h.carrier(2, 3).real() == doctest::Approx(-0.5 * f.rabi_rf));
        CHECK(std::abs(h.upper(2, 1)) == doctest::Approx(0.5 * mod.sideband_amplitude() * f.rabi_coupling));

        // the modulated coupling field keeps its total power: |a0|^2 + 2|a1|^2 = 1
        const Hamiltonians h0 = build_hamiltonian(a, f, ModulationParams(), 42.0);
        const double p = std::norm(h.carrier(2, 1)) + std::norm(h.upper(2, 1)) + std::norm(h.lower(2, 1));
        CHECK(p == doctest::Approx(std::norm(h0.carrier(2, 1))).epsilon(1e-12));
    }

    TEST_CASE("velocity enters m0 only through the diagonal")
    {
        const AtomicParams a = default_rb85_params();
        const FieldCouplings f = some_fields();
        const ModulationParams mod(mhz_to_angular(3.0), 0.2);
        const GeneratorSet g0 = build_generators(a, f, mod, 0.0);
        const DensityVec d = doppler_derivative(a);
        for (double v : {-300.0, -1.0, 17.5, 250.0})
        {
            const GeneratorSet gv = build_generators(a, f, mod, v);
            const Superoperator expect = g0.m0 + Superoperator(v * d.asDiagonal());
            CHECK((gv.m0 - expect).norm() <= 1e-12 * gv.m0.norm());
            CHECK((gv.m_plus - g0.m_plus).norm() == 0.0);
            CHECK((gv.r - g0.r).norm() == 0.0);
        }
        // probe coherence sees -k_p v, two-photon coherence (k_c - k_p) v
        CHECK(d(density_index(2, 1)).imag() == doctest::Approx(-a.k_probe()));
        CHECK(d(density_index(3, 1)).imag() == doctest::Approx(a.k_coupling() - a.k_probe()));
        CHECK(d(density_index(4, 3)) == Complex(0.0));
    }

    TEST_CASE("generator preserves trace")
    {
        const AtomicParams a = default_rb85_params();
        const GeneratorSet g = build_generators(a, some_fields(), ModulationParams(mhz_to_angular(2.0), 0.3), 10.0);
        // sum over populations of each column of m0, m_pm vanishes
        for (int c = 0; c < 16; ++c)
        {
            Complex s0 = 0.0, sp = 0.0, sm = 0.0, sr = 0.0;
            for (int i = 1; i <= 4; ++i)
            {
                const int row = density_index(i, i);
                s0 += g.m0(row, c);
                sp += g.m_plus(row, c);
                sm += g.m_minus(row, c);
                sr += g.r(row, c);
            }
            CHECK(std::abs(s0) < 1e-6);
            CHECK(std::abs(sp) < 1e-6);
            CHECK(std::abs(sm) < 1e-6);
            // r loses only the transit rate from populations
            const bool pop = c % 5 == 0;
            CHECK(std::abs(sr - (pop ? a.transit_rate : 0.0)) < 1e-6);
        }
    }

    TEST_CASE("unmodulated generators have no sideband parts")
    {
        const GeneratorSet g = build_generators(default_rb85_params(), some_fields(), ModulationParams(), 0.0);
        CHECK(g.m_plus.norm() == 0.0);
        CHECK(g.m_minus.norm() == 0.0);
    }
}
