#include <gtest/gtest.h>

#include <complex>
#include <random>

#include "pat/propagation.hpp"
#include "test_util.hpp"

using namespace pat;
using cd = std::complex<double>;

namespace {

const MediumParams kWater{1500.0, 1e-9, 0.0, 0.0};
// coarse critical wavenumber (kc = 1000) so grids resolve both branches
const MediumParams kCoarse{2.0, 1e-3, 0.0, 0.0};

GridSpec coarse_grid() { return GridSpec{2, 64, 2e-3}; }

} // namespace

TEST(ForwardHat, StartsAtRestForTau2Zero) {
    const SymbolTable s = build_symbols(coarse_grid(), kCoarse);
    const auto m0 = forward_hat(s, 0.0, Tau2Mode::zero, kCoarse);
    for (double v : m0) EXPECT_EQ(v, 0.0);
}

TEST(ForwardHat, LosslessLimitIsSphericalMeanPropagator) {
    MediumParams m{1500.0, 0.0, 0.0, 0.0};
    GridSpec g{2, 32, 0.01};
    const SymbolTable s = build_symbols(g, m);
    const double t = 1e-4;
    const auto mult = forward_hat(s, t, Tau2Mode::zero, m);
    const double norm = 1.0 / (2.0 * M_PI); // (2 pi)^{-dim/2}, dim 2
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double k = s.k[i];
        const double want = norm * (k == 0.0 ? t : std::sin(m.c0 * k * t) / (m.c0 * k));
        EXPECT_NEAR(mult[i], want, 1e-12 * std::abs(want) + 1e-18);
    }
}

TEST(ForwardHat, EvanescentBranchBoundedAndDecaying) {
    // theta0 < mu for k > kc, so |M+| <= (1 + tau2 mu) t e^{(theta0 - mu) t}
    const SymbolTable s = build_symbols(coarse_grid(), kCoarse);
    const double t = 2e-3;
    const auto mult = forward_hat(s, t, Tau2Mode::equal_tau1, kCoarse);
    const double norm = 1.0 / (2.0 * M_PI);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s.evanescent[i]) continue;
        EXPECT_LT(s.theta0[i], s.mu[i]); // sign oracle behind the boundedness claim
        const double bound =
            norm * (1.0 + kCoarse.tau1 * s.mu[i]) * t * std::exp((s.theta0[i] - s.mu[i]) * t);
        EXPECT_LE(std::abs(mult[i]), bound * (1.0 + 1e-9));
    }
}

TEST(BackwardHat, LosslessLimit) {
    MediumParams m{1500.0, 0.0, 0.0, 0.0};
    GridSpec g{2, 32, 0.01};
    const SymbolTable s = build_symbols(g, m);
    const double t = 1e-4;
    const auto mult = backward_hat(s, t, Tau2Mode::zero, m);
    const double norm = 1.0 / (2.0 * M_PI);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double k = s.k[i];
        const double want = -norm * (k == 0.0 ? t : std::sin(m.c0 * k * t) / (m.c0 * k));
        EXPECT_NEAR(mult[i], want, 1e-12 * std::abs(want) + 1e-18);
    }
}

TEST(BackwardHat, SubstitutionRule) {
    // M-(mu, tau2) = -M+(-mu, -tau2), the flipped side built independently
    const SymbolTable s = build_symbols(coarse_grid(), kCoarse);
    const double t = 1.5e-3;
    const double tau2 = kCoarse.tau1;
    const auto bwd = backward_hat(s, t, Tau2Mode::equal_tau1, kCoarse);
    const double norm = 1.0 / (2.0 * M_PI);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double mu_flip = -s.mu[i];
        const cd theta = s.evanescent[i] ? cd(0.0, s.theta0[i]) : cd(s.theta[i], 0.0);
        const cd sc = sinct(theta, t);
        const cd cosv = std::cos(theta * t);
        const cd mplus_flipped =
            norm * std::exp(-mu_flip * t) * ((1.0 - (-tau2) * mu_flip) * sc + (-tau2) * cosv);
        EXPECT_NEAR(bwd[i], -mplus_flipped.real(), 1e-10 * std::abs(mplus_flipped) + 1e-16);
    }
}

TEST(BackwardHat, EvanescentGrowthMatchesComplexArithmetic) {
    // growth ~ e^{(mu + theta0) t}; cross-check against plain complex trig
    const SymbolTable s = build_symbols(coarse_grid(), kCoarse);
    const double t = 2e-3;
    const double tau2 = kCoarse.tau1;
    const auto bwd = backward_hat(s, t, Tau2Mode::equal_tau1, kCoarse);
    const double norm = 1.0 / (2.0 * M_PI);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s.evanescent[i] || s.k[i] < 1.2 * s.kc) continue;
        const cd theta(0.0, s.theta0[i]);
        const cd ref = -norm * std::exp(s.mu[i] * t) *
                       ((1.0 - tau2 * s.mu[i]) * std::sin(theta * t) / theta -
                        tau2 * std::cos(theta * t));
        EXPECT_NEAR(bwd[i], ref.real(), 1e-10 * std::abs(ref));
    }
}

TEST(PatMultipliers, UnitAtTimeZero) {
    const SymbolTable s = build_symbols(coarse_grid(), kCoarse);
    const double norm = 1.0 / (2.0 * M_PI);
    const auto fwd0 = pat_forward_hat(s, 0.0, Tau2Mode::zero, kCoarse);
    const auto bwd0 = pat_backward_hat(s, 0.0, Tau2Mode::zero, kCoarse);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(fwd0[i], norm, 1e-15);
        EXPECT_NEAR(bwd0[i], norm, 1e-15);
    }
    // tau2 = tau1: the delta'-source field starts at (1 - 2 tau2 mu) phi^
    const auto fwd0e = pat_forward_hat(s, 0.0, Tau2Mode::equal_tau1, kCoarse);
    for (std::size_t i = 0; i < s.size(); ++i)
        EXPECT_NEAR(fwd0e[i], norm * (1.0 - 2.0 * kCoarse.tau1 * s.mu[i]), 1e-12);
}

TEST(PatMultipliers, ProductIdentityBothModes) {
    // (2 pi)^dim dtM- dtM+ = (1 - tau2^2 c0^2 k^2)^2 - c0^2 k^2 sin^2(theta t)/theta^2
    // (Lemma 4.1 form at tau2 = 0, Theorem 4.2 form at tau2 = tau1).
    const SymbolTable s = build_symbols(coarse_grid(), kCoarse);
    const double t = 1.5e-3;
    for (Tau2Mode mode : {Tau2Mode::zero, Tau2Mode::equal_tau1}) {
        const double tau2 = tau2_value(kCoarse, mode);
        const auto fwd = pat_forward_hat(s, t, mode, kCoarse);
        const auto bwd = pat_backward_hat(s, t, mode, kCoarse);
        const double twopi_d = std::pow(2.0 * M_PI, s.grid.dim);
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double k2 = s.k[i] * s.k[i];
            const double J = s.evanescent[i]
                                 ? std::pow(detail::sinct_evan(s.theta0[i], t), 2)
                                 : std::pow(detail::sinct_osc(s.theta[i], t), 2);
            const double b = 1.0 - tau2 * tau2 * kCoarse.c0 * kCoarse.c0 * k2;
            const double want = b * b - kCoarse.c0 * kCoarse.c0 * k2 * J;
            const double got = twopi_d * fwd[i] * bwd[i];
            EXPECT_NEAR(got, want, 1e-10 * (std::abs(want) + 1.0));
        }
    }
}

TEST(PatForward, RecoversInitialPressureAtTimeZero) {
    GridSpec g{2, 64, 2.0 / 64};
    const RealField phi = pat_test::random_smooth_field(g, 71u, 5, {1.0, 1.0}, 0.2, 0.15);
    const RealField phi0 = pat_forward(phi, kWater, 0.0, Tau2Mode::zero);
    EXPECT_LT(rel_l2_error(phi0, phi), 1e-12);
}

TEST(PatForward, EnergyDecaysWithDissipation) {
    GridSpec g{2, 64, 2.0 / 64};
    const RealField phi = pat_test::random_smooth_field(g, 73u, 5, {1.0, 1.0}, 0.2, 0.12);
    const double T = 0.5 / 1500.0;
    // stronger dissipation leaves less energy at time T
    double prev = 0.0;
    for (double tau1 : {1e-7, 1e-8, 1e-9}) {
        MediumParams m = kWater;
        m.tau1 = tau1;
        const double e = norm_l2(pat_forward(phi, m, T, Tau2Mode::equal_tau1));
        EXPECT_GT(e, prev) << "tau1 = " << tau1;
        prev = e;
    }
    MediumParams m0 = kWater;
    m0.tau1 = 0.0;
    EXPECT_GT(norm_l2(pat_forward(phi, m0, T, Tau2Mode::zero)), prev);
}

TEST(PatForward, RejectsEdgeTouchingSupport) {
    GridSpec g{2, 32, 0.0625};
    RealField phi(g);
    phi.at(0, 5) = 1.0;
    EXPECT_THROW(pat_forward(phi, kWater, 1e-4), std::invalid_argument);
}

TEST(TimeReverseF, ZeroInZeroOut) {
    GridSpec g{2, 32, 0.0625};
    const RealField zero(g);
    const ReversalConfig cfg = make_reversal_config(kWater, 1e-4, Tau2Mode::zero);
    const RealField out = time_reverse_F(zero, kWater, cfg);
    for (double v : out.values) EXPECT_EQ(v, 0.0);
}

TEST(TimeReverseF, Linearity) {
    GridSpec g{2, 32, 2.0 / 32};
    const RealField a = pat_test::random_smooth_field(g, 79u, 3, {1.0, 1.0}, 0.15, 0.12);
    const RealField b = pat_test::random_smooth_field(g, 83u, 3, {1.0, 1.0}, 0.15, 0.12);
    RealField lin(g);
    for (std::size_t i = 0; i < lin.values.size(); ++i)
        lin.values[i] = 1.7 * a.values[i] - 0.4 * b.values[i];
    const ReversalConfig cfg = make_reversal_config(kWater, 2e-4, Tau2Mode::equal_tau1);
    const RealField fa = time_reverse_F(a, kWater, cfg);
    const RealField fb = time_reverse_F(b, kWater, cfg);
    const RealField flin = time_reverse_F(lin, kWater, cfg);
    RealField combo(g);
    for (std::size_t i = 0; i < combo.values.size(); ++i)
        combo.values[i] = 1.7 * fa.values[i] - 0.4 * fb.values[i];
    EXPECT_LT(rel_l2_error(flin, combo), 1e-12);
}

TEST(ImagingF1, FusedMatchesStagedComposition) {
    // With the wave contained in the box the staged composition differs from
    // the fused pipeline only by the input's Nyquist-level ring content, which
    // shrinks spectrally under refinement.
    const double T = 0.5 / 1500.0; // c0 T = 0.5 m, contained
    double prev = std::numeric_limits<double>::infinity();
    for (int n : {64, 128}) {
        GridSpec g{2, n, 2.0 / n};
        const RealField phi = pat_test::random_smooth_field(g, 89u, 4, {1.0, 1.0}, 0.1, 0.22);
        const ReversalConfig cfg = make_reversal_config(kWater, T, Tau2Mode::equal_tau1);
        const RealField fused = imaging_F1(phi, kWater, cfg);
        RealField staged =
            time_reverse_F(pat_forward(phi, kWater, T, cfg.tau2_mode), kWater, cfg);
        for (double& v : staged.values) v *= 2.0;
        const double err = rel_l2_error(staged, fused);
        EXPECT_LT(err, n == 64 ? 2e-3 : 2e-4);
        EXPECT_LT(err, prev / 3.0); // spectral-order improvement
        prev = err;
    }
}

TEST(TimeReverseF, OverflowGuardBelowThreshold) {
    // tau1 = 1e-6 resolves kc = 1333 on a 0.5 m box at 256^2; D at half the
    // resolution limit lets the evanescent band outgrow 1e300
    MediumParams m{1500.0, 1e-6, 0.0, 0.0};
    GridSpec g{2, 256, 0.5 / 256};
    RealField phi_T = pat_test::noise_field(g, 97u);
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i)
            if (i == 0 || j == 0 || i == g.n - 1 || j == g.n - 1) phi_T.at(i, j) = 0.0;
    const double T = 2.0 * 0.5 / 1500.0;
    ReversalConfig cfg;
    cfg.T = T;
    cfg.eps = default_eps(m);
    cfg.D = 0.5 * m.tau1 * m.c0 * m.c0 * T; // half the existence threshold
    cfg.tau2_mode = Tau2Mode::equal_tau1;
    EXPECT_FALSE(cfg.meets_existence_condition(m));
    EXPECT_THROW(time_reverse_F(phi_T, m, cfg), overflow_error);
    // with D above the threshold the same data reverses fine
    cfg.D = required_D(m, T, cfg.eps);
    EXPECT_TRUE(cfg.meets_existence_condition(m));
    EXPECT_NO_THROW(time_reverse_F(phi_T, m, cfg));
}

TEST(ReversalConfig, Validation) {
    ReversalConfig cfg;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg.T = 1e-4;
    cfg.D = 1e-6;
    EXPECT_NO_THROW(cfg.validate());
    const ReversalConfig made = make_reversal_config(kWater, 1e-4, Tau2Mode::zero);
    EXPECT_TRUE(made.meets_existence_condition(kWater));
    EXPECT_NEAR(made.D, required_D(kWater, 1e-4, default_eps(kWater)), 1e-20);
}

TEST(AssT, BoxDistanceCheck) {
    OmegaRect omega{{1.0, 1.0, 0.0}, 0.25};
    const std::array<double, 3> lo{0.9, 0.9, 0.0}, hi{1.1, 1.1, 0.0};
    // max corner distance: |(0.75,0.75) - (1.1,1.1)| = 0.35 sqrt(2) ~ 0.495
    EXPECT_TRUE(assT_satisfied(omega, lo, hi, kWater, 0.25 / 1500.0, 2));
    EXPECT_FALSE(assT_satisfied(omega, lo, hi, kWater, 0.16 / 1500.0, 2));
}
