#include "rydberg/liouvillian.hpp"

namespace rydberg
{

namespace
{
    constexpr Complex I{0.0, 1.0};

    // Doppler shift of the rotating-frame energy of each level: probe
    // photon absorbed with -k_p v, counter-propagating coupling photon with +k_c v.
    // The RF shift is neglected (orthogonal beam, k_rf << k_p).
    std::array<double, kLevels> level_shift_per_velocity(const AtomicParams& atom)
    {
        const double kp = atom.k_probe();
        const double kc = atom.k_coupling();
        return {0.0, -kp, -kp + kc, -kp + kc};
    }
}

DensityVec vectorize(const Matrix4c& rho)
{
    DensityVec v;
    for (int i = 0; i < kLevels; ++i)
        for (int j = 0; j < kLevels; ++j)
            v(kLevels * i + j) = rho(i, j);
    return v;
}

Matrix4c devectorize(const DensityVec& rho)
{
    Matrix4c m;
    for (int i = 0; i < kLevels; ++i)
        for (int j = 0; j < kLevels; ++j)
            m(i, j) = rho(kLevels * i + j);
    return m;
}

Complex trace(const DensityVec& rho)
{
    Complex t = 0.0;
    for (int i = 1; i <= kLevels; ++i)
        t += rho(density_index(i, i));
    return t;
}

FieldCouplings resolve_couplings(const AtomicParams& atom, const DriveParams& drive)
{
    FieldCouplings f;
    f.rabi_probe = drive.rabi_probe;
    f.rabi_coupling = drive.rabi_coupling;
    f.rabi_rf = rf_rabi(atom, drive);
    f.delta_21 = drive.delta_probe;
    f.delta_31 = drive.two_photon_detuning();
    f.delta_41 = f.delta_31 - drive.delta_rf;
    return f;
}

Hamiltonians build_hamiltonian(const AtomicParams& atom, const FieldCouplings& fields,
                               const ModulationParams& mod, double velocity)
{
    const auto shift = level_shift_per_velocity(atom);
    const double d21 = fields.delta_21 + shift[1] * velocity;
    const double d31 = fields.delta_31 + shift[2] * velocity;
    const double d41 = fields.delta_41 + shift[3] * velocity;

    const double oc0 = mod.carrier_amplitude() * fields.rabi_coupling;
    const double oc1 = mod.sideband_amplitude() * fields.rabi_coupling;

    Hamiltonians h;
    h.carrier.setZero();
    h.carrier(0, 1) = -0.5 * std::conj(fields.rabi_probe);
    h.carrier(1, 0) = -0.5 * fields.rabi_probe;
    h.carrier(1, 1) = -d21;
    h.carrier(1, 2) = -0.5 * oc0;
    h.carrier(2, 1) = -0.5 * oc0;
    h.carrier(2, 2) = -d31;
    h.carrier(2, 3) = -0.5 * fields.rabi_rf;
    h.carrier(3, 2) = -0.5 * fields.rabi_rf;
    h.carrier(3, 3) = -d41;

    // Upper sideband field +a1 Omega_c e^{-iwt}, lower sideband -a1 Omega_c e^{+iwt}.
    // Omega_c(t) sits at (3,2) and its conjugate at (2,3).
    h.upper.setZero();
    h.upper(2, 1) = -0.5 * oc1;
    h.upper(1, 2) = +0.5 * oc1;
    h.lower = h.upper.adjoint();
    return h;
}

Superoperator commutator_superoperator(const Matrix4c& h)
{
    Superoperator m = Superoperator::Zero();
    for (int i = 0; i < kLevels; ++i)
        for (int j = 0; j < kLevels; ++j)
        {
            const int row = kLevels * i + j;
            for (int k = 0; k < kLevels; ++k)
            {
                m(row, kLevels * k + j) += -I * h(i, k);  // h rho
                m(row, kLevels * i + k) += +I * h(k, j);  // rho h
            }
        }
    return m;
}

Superoperator relaxation_matrix(const AtomicParams& atom)
{
    const std::array<double, kLevels> gamma{0.0, atom.gamma_2, atom.gamma_3, atom.gamma_4};
    Superoperator r = Superoperator::Zero();
    for (int i = 0; i < kLevels; ++i)
        for (int j = 0; j < kLevels; ++j)
        {
            const int idx = kLevels * i + j;
            r(idx, idx) = (i == j ? gamma[i] : 0.5 * (gamma[i] + gamma[j])) + atom.transit_rate;
        }
    // cascade |i> -> |i-1|
    for (int i = 2; i <= kLevels; ++i)
        r(density_index(i - 1, i - 1), density_index(i, i)) = -gamma[i - 1];
    return r;
}

DensityVec feed_vector(const AtomicParams& atom)
{
    DensityVec n = DensityVec::Zero();
    n(density_index(1, 1)) = atom.feed_rate;
    return n;
}

GeneratorSet build_generators(const AtomicParams& atom, const FieldCouplings& fields,
                              const ModulationParams& mod, double velocity)
{
    const Hamiltonians h = build_hamiltonian(atom, fields, mod, velocity);
    GeneratorSet g;
    g.m0 = commutator_superoperator(h.carrier);
    if (mod.is_modulated())
    {
        g.m_plus = commutator_superoperator(h.upper);
        g.m_minus = commutator_superoperator(h.lower);
    }
    else
    {
        g.m_plus.setZero();
        g.m_minus.setZero();
    }
    g.r = relaxation_matrix(atom);
    g.n = feed_vector(atom);
    return g;
}

DensityVec doppler_derivative(const AtomicParams& atom)
{
    // h_ii carries -Delta_i(v) = -Delta_i(0) - shift_i v, and the diagonal of
    // -i [h, .] at (i, j) is -i (h_ii - h_jj).
    const auto shift = level_shift_per_velocity(atom);
    DensityVec d;
    for (int i = 0; i < kLevels; ++i)
        for (int j = 0; j < kLevels; ++j)
            d(kLevels * i + j) = I * (shift[i] - shift[j]);
    return d;
}

}
