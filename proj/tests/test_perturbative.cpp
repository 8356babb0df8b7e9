#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <cohsynth/perturbative.hpp>

#include "test_util.hpp"

using namespace cohsynth;
using cohsynth::test::rel_diff;

namespace {

const SpectralDensity weak_bath = PowerLawDensity{0.05, 1, 10};

}  // namespace

TEST(Kernels, PhiEndpointsAreCoth) {
    for (double xi : {0.3, 1.0, 4.0}) {
        EXPECT_REL(kernel_phi(xi, 0.0, 1.7), coth(0.5 * 1.7 * xi), 1e-14);
        EXPECT_REL(kernel_phi(xi, 1.7, 1.7), coth(0.5 * 1.7 * xi), 1e-14);
    }
}

TEST(Kernels, PhiReferenceValue) {
    EXPECT_REL(kernel_phi(1.0, 0.5, 1.0), 1.9190347513349437, 1e-14);
}

TEST(Kernels, PhiLargeArgumentStaysFinite) {
    const double v = kernel_phi(2.0, 1.0, 800.0);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_REL(v, std::exp(-2.0), 1e-14);
}

TEST(Kernels, GreenBranchesAndIdentity) {
    const double xi = 2.0, beta = 1.0;
    EXPECT_REL(kernel_green(xi, 0.0, beta), 1.0 / std::expm1(beta * xi), 1e-14);
    EXPECT_REL(kernel_green(xi, -0.0, beta), 1.0 / (-std::expm1(-beta * xi)), 1e-14);
    const double t = 0.3 * beta;
    EXPECT_REL(kernel_green(xi, t, beta) + kernel_green(xi, -t, beta), kernel_phi(xi, t, beta), 1e-14);
    EXPECT_THROW(kernel_phi(-1.0, 0.1, 1.0), DomainError);
}

TEST(SelfInduced, VanishesWithoutCoupling) {
    EXPECT_EQ(self_induced_coherence({1, 0.0, 0.1, 2}, weak_bath).value, 0.0);
    EXPECT_EQ(self_induced_coherence({1, 0.1, 0.0, 2}, weak_bath).value, 0.0);
}

TEST(SelfInduced, ReferenceValue) {
    const auto r = self_induced_coherence({1, 0.1, 0.1, 2}, weak_bath);
    EXPECT_REL(r.value, -0.0021869772667035942, 1e-9);
    EXPECT_EQ(r.method, Method::quadrature);
}

TEST(SelfInduced, KernelFiniteAtResonance) {
    for (double beta : {0.2, 1.0, 6.0}) {
        const double lim = self_induced_kernel_limit(1.3, beta);
        EXPECT_REL(self_induced_kernel(1.3, 1.3, beta), lim, 1e-9);
        EXPECT_REL(self_induced_kernel_raw(1.3 * (1 + 1e-4), 1.3, beta), lim, 1e-3);
    }
}

TEST(TwoSpin, ClosedFormExamples) {
    EXPECT_EQ(two_spin_coherence({1, 1, 0.0, 0.1, 2}, weak_bath).value, 0.0);
    const auto t0 = two_spin_coherence({1, 1, 0.1, 0.1, 1e4}, weak_bath);
    EXPECT_REL(t0.value, -0.02, 1e-12);
    const auto r = two_spin_coherence({1, 1, 0.1, 0.1, 2}, PowerLawDensity{1, 2, 1});
    EXPECT_REL(r.value, -0.04 * std::pow(std::tanh(1.0), 2), 1e-13);
}

TEST(TwoSpin, ZeroTemperatureSentinel) {
    const auto r = two_spin_coherence({1, 1, 0.1, 0.1, infinite_beta}, weak_bath);
    EXPECT_REL(r.value, -0.02, 1e-15);
}

TEST(TwoSpin, RegimeFlag) {
    EXPECT_TRUE(two_spin_coherence({1, 1, 0.1, 0.1, 2}, weak_bath).regime_valid);
    EXPECT_FALSE(two_spin_coherence({1, 1, 0.5, 0.5, 2}, PowerLawDensity{1, 1, 10}).regime_valid);
}

TEST(TwoSpin, QuadratureRouteMatchesClosedForm) {
    for (double s : {0.5, 1.0, 2.0}) {
        const TwoSpinSystem sys{1, 2, 0.1, 0.1, 1};
        const SpectralDensity bath = PowerLawDensity{0.3, s, 10};
        EXPECT_REL(two_spin_coherence(sys, bath, {}, OmegaRoute::quadrature).value,
                   two_spin_coherence(sys, bath).value, 1e-8);
    }
}

TEST(TwoSpin, SignLaw) {
    for (double f1 : {-0.1, 0.1})
        for (double f2 : {-0.05, 0.05}) {
            const double v = two_spin_coherence({1, 1.5, f1, f2, 2}, weak_bath).value;
            EXPECT_EQ(std::signbit(v), f1 * f2 > 0) << f1 << " " << f2;
            const double s = self_induced_coherence({1, f1, f2, 2}, weak_bath).value;
            EXPECT_EQ(std::signbit(s), f1 * f2 > 0);
        }
}

TEST(Resonant, TransferDominates) {
    const auto z = resonant_pair(1, 0.0, 0.05, 1, PowerLawDensity{1, 1, 10});
    EXPECT_EQ(z.self.value, 0.0);
    EXPECT_EQ(z.transfer.value, 0.0);
    const auto p = resonant_pair(1, 0.05, 0.05, 1, PowerLawDensity{1, 1, 10});
    EXPECT_GT(std::abs(p.transfer.value), std::abs(p.self.value));
}

TEST(Ratio, ReferenceValueAndConsistency) {
    const double r = coherence_ratio(1.0, 2.0, 1.0, 0.1);
    EXPECT_REL(r, 5.3043592836265734, 1e-9);
    EXPECT_GT(r, 1.0);
    const auto p = resonant_pair(1.0, 0.1, 0.1, 2.0, PowerLawDensity{0.4, 1, 10});
    EXPECT_REL(p.ratio(), r, 1e-9);
}

TEST(Ratio, GridMatchesCellsAndDecreasesInFrequency) {
    const std::vector<double> w{0.2, 0.5, 1.0, 2.0, 4.0, 8.0};
    const std::vector<double> b{0.0, 1.0, 5.0};
    const Matrix m = coherence_ratio_grid(w, b, 1.0, 0.1);
    for (std::size_t i = 0; i < w.size(); ++i) {
        EXPECT_EQ(m(i, 0), 3.0);
        for (std::size_t j = 1; j < b.size(); ++j) EXPECT_REL(m(i, j), coherence_ratio(w[i], b[j], 1.0, 0.1), 1e-14);
        if (i > 0) {
            EXPECT_LT(m(i, 2), m(i - 1, 2));
        }
    }
    const Matrix m2 = coherence_ratio_grid(w, b, 2.0, 0.1);
    EXPECT_GT(rel_diff(m(2, 1) / gamma_fn(1.0), m2(2, 1) / gamma_fn(2.0)), 1e-3);
}

TEST(Synth, ReducesToTwoSpinAndAddsUp) {
    const MultiDriveSystem one{{{1.0, 0.1}}, {{1.5, 0.1}}, 2.0};
    EXPECT_REL(synthesized_coherence(one, weak_bath).value, two_spin_coherence({1, 1.5, 0.1, 0.1, 2}, weak_bath).value,
               1e-15);
    const MultiDriveSystem three{{{1.0, 0.1}, {1.0, 0.1}, {1.0, 0.1}}, {{1.5, 0.1}}, 2.0};
    EXPECT_REL(synthesized_coherence(three, weak_bath).value, 3.0 * synthesized_coherence(one, weak_bath).value, 1e-14);
}

TEST(Synth, HeterogeneousDriveSum) {
    const MultiDriveSystem sys{{{1.0, 0.1}, {2.0, -0.1}}, {{1.0, 0.1}}, 1.0};
    const double omega = reorganization_energy(weak_bath).value;
    const double expected = -4.0 * 0.1 * 0.1 * (std::tanh(0.5) - std::tanh(1.0)) * std::tanh(0.5) * omega;
    EXPECT_REL(synthesized_coherence(sys, weak_bath).value, expected, 1e-14);
    EXPECT_GT(synthesized_coherence(sys, weak_bath).value, 0.0);
}

TEST(Synth, DensityAtomsReproduceDiscreteSum) {
    const std::vector<DriveSpin> d{{1.0, 0.1}, {2.0, -0.05}, {0.5, 0.2}};
    const MultiDriveSystem sys{d, {{1.2, 0.1}}, 1.5};
    const auto a = synthesized_coherence_density(CouplingDensity::atoms(d), 1.2, 0.1, 1.5, weak_bath,
                                                 DensityMode::exact);
    EXPECT_REL(a.value, synthesized_coherence(sys, weak_bath).value, 1e-15);
}

TEST(Synth, HighFrequencyModeAgreesWhenDrivesAreFast) {
    const double beta = 1.0;
    const auto table = CouplingDensity::tabulated({12.0, 15.0, 20.0}, {0.0, 0.1, 0.0});
    const auto e = synthesized_coherence_density(table, 1.0, 0.1, beta, weak_bath, DensityMode::exact);
    const auto h = synthesized_coherence_density(table, 1.0, 0.1, beta, weak_bath, DensityMode::high_frequency);
    EXPECT_REL(e.value, h.value, 1e-4);

    const auto slow = CouplingDensity::atoms({{0.1 / beta, 0.1}});
    const auto es = synthesized_coherence_density(slow, 1.0, 0.1, beta, weak_bath, DensityMode::exact);
    const auto hs = synthesized_coherence_density(slow, 1.0, 0.1, beta, weak_bath, DensityMode::high_frequency);
    EXPECT_EQ(hs.value, 0.0);
    const double scale = -4.0 * 0.1 * std::tanh(0.5) * reorganization_energy(weak_bath).value;
    EXPECT_REL(es.value, scale * 0.1 * std::tanh(0.05), 1e-14);
}

TEST(SigmaZ, ReferenceValueAndLimits) {
    EXPECT_EQ(sigma_z_correction(1, 0.0, 1, PowerLawDensity{1, 1, 10}).correction, 0.0);
    const auto r = sigma_z_correction(1, 0.1, 1, PowerLawDensity{1, 1, 10});
    EXPECT_REL(r.correction, 0.017056821144661457, 1e-8);
    EXPECT_REL(r.baseline, -std::tanh(0.5), 1e-15);
    const double c3 = sigma_z_correction(1, 0.1, 1e3, PowerLawDensity{1, 1, 10}).correction;
    const double c4 = sigma_z_correction(1, 0.1, 1e4, PowerLawDensity{1, 1, 10}).correction;
    EXPECT_LT(rel_diff(c3, c4), 1e-3);
    EXPECT_REL(sigma_z_kernel(1.0, 1.0, 2.0), sigma_z_kernel_limit(1.0, 2.0), 1e-7);
}

TEST(Multiplex, VanishesWithoutOutputCoupling) {
    EXPECT_EQ(multiplex_correlation(1, 2, 0.0, 1, weak_bath).value, 0.0);
}

TEST(Multiplex, SnrVanishesWithoutDriveCoupling) {
    EXPECT_EQ(signal_to_noise(1, 1.0, 1.0, 0.0, 1.0, weak_bath).snr, 0.0);
    EXPECT_GT(multiplex_correlation(1.0, 1.0, 0.1, 1.0, weak_bath).value, 0.0);
}

TEST(Multiplex, HighTemperatureUniversal) {
    const double beta = 1e-3;
    const SpectralDensity bath = PowerLawDensity{0.2, 1, 5};
    const double omega = reorganization_energy(bath).value;
    const double s2 = multiplex_correlation(1.0, 1.0, 0.1, beta, bath).value;
    EXPECT_NEAR(s2 / (2.0 * beta * 0.01 * omega), 1.0, 5e-3);
}

TEST(Multiplex, LowTemperatureClosedIntegral) {
    const double x = 1.0, y = 2.0, beta = 1e3;
    const SpectralDensity bath = PowerLawDensity{0.2, 1, 5};
    auto k = [=](double xi) { return (xi + x + y) / ((xi + x) * (xi + y)); };
    const double closed = 4.0 * 0.01 / (x + y) * weighted_integral(bath, k, {}, {}).value;
    EXPECT_REL(multiplex_correlation(x, y, 0.1, beta, bath).value, closed, 1e-3);
}

TEST(Multiplex, DegenerateLimitIsContinuous) {
    const SpectralDensity bath = PowerLawDensity{0.2, 1, 5};
    const double a = multiplex_correlation(1.0, 1.0, 0.1, 2.0, bath).value;
    const double b = multiplex_correlation(1.0, 1.0 + 1e-4, 0.1, 2.0, bath).value;
    EXPECT_REL(a, b, 1e-4);
}

TEST(Bounds, ReferenceValuesAndSymmetry) {
    const auto g = correlation_bounds(1, 2, 1);
    EXPECT_REL(g.g_min, 0.3519457263361146, 1e-14);
    EXPECT_REL(g.g_max, 0.35369038488384001, 1e-14);
    const auto h = correlation_bounds(2, 1, 1);
    EXPECT_REL(h.g_min, g.g_min, 1e-15);
    EXPECT_REL(h.g_max, g.g_max, 1e-15);
    const auto t = correlation_bounds(1, 1.5, 1e-3);
    EXPECT_NEAR(t.g_min / 5e-4, 1.0, 1e-3);
    EXPECT_NEAR(t.g_max / 5e-4, 1.0, 1e-3);
}

TEST(Bounds, SandwichSampledKernel) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.05, 4.0), ub(0.1, 5.0);
    for (int k = 0; k < 500; ++k) {
        const double xi = u(rng), x = u(rng), y = u(rng), beta = ub(rng);
        const auto g = correlation_bounds(x, y, beta);
        const double G = correlation_kernel(xi, x, y, beta);
        EXPECT_GE(G, 0.0);
        EXPECT_LE(g.g_min, G * (1 + 1e-12));
        EXPECT_LE(G, g.g_max * (1 + 1e-12));
    }
}

TEST(Bounds, RawAndSimplifiedNumeratorAgree) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ub(0.1, 3.0), ux(0.2, 2.2), uxi(0.05, 4.0);
    for (int k = 0; k < 200; ++k) {
        const double b = ub(rng), x = ux(rng), y = ux(rng), xi = uxi(rng);
        if (std::abs(x - y) < 0.05) continue;
        EXPECT_REL(correlation_numerator_raw(xi, x, y, b), correlation_numerator(xi, x, y, b), 1e-9);
    }
}

TEST(Snr, ReferenceValue) {
    EXPECT_REL(normalized_snr(2.0, 1.0, 1.0, 0.1), 1.19683813786122, 1e-9);
    EXPECT_REL(normalized_snr_reduced(2.0, 1.0, 1.0, 0.1), 1.19683813786122, 1e-9);
    EXPECT_EQ(normalized_snr(0.0, 1.0, 1.0, 0.1), 0.0);
}

TEST(Snr, LinearInDriveCount) {
    const SpectralDensity bath = PowerLawDensity{0.1, 1, 10};
    const double one = signal_to_noise(1, 1.0, 1.2, 0.05, 2.0, bath).snr;
    for (int M : {2, 5, 9}) EXPECT_REL(signal_to_noise(M, 1.0, 1.2, 0.05, 2.0, bath).snr, M * one, 1e-14);
}

TEST(Snr, NormalizedMatchesDimensionfulRoute) {
    const double wc = 10.0, lambda = 0.3, f1 = 0.05;
    const SpectralDensity bath = PowerLawDensity{lambda, 1.5, wc};
    const auto r = signal_to_noise(3, 1.0, 1.4, f1, 2.0, bath);
    EXPECT_REL(r.eta, 4.0 * f1 * 3 * std::sqrt(lambda), 1e-15);
    EXPECT_REL(r.snr / r.eta, normalized_snr(2.0, 1.4, 1.5, 1.0 / wc), 1e-9);
    EXPECT_REL(r.normalized, normalized_snr(2.0, 1.4, 1.5, 1.0 / wc), 1e-9);
}

TEST(Normalized, TwoSpinGammaDegeneracy) {
    for (double w : {0.0, 0.5, 3.0})
        for (double b : {0.0, 0.7, 5.0})
            EXPECT_REL(normalized_two_spin(w, b, 1.0, 0.1), normalized_two_spin(w, b, 2.0, 0.1), 1e-15);
    const double v = normalized_two_spin(1.5, 2.0, 1.0, 0.1);
    const double direct = two_spin_coherence({1, 1.5, 0.1, 0.1, 2}, PowerLawDensity{1, 1, 10}).value / (-0.04);
    EXPECT_REL(v, direct, 1e-14);
}

TEST(Validation, BetaNamed) {
    try {
        two_spin_coherence({1, 1, 0.1, 0.1, -1}, weak_bath);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "beta");
    }
}
