#include <gtest/gtest.h>

#include <random>

#include "pat/spectral_core.hpp"
#include "test_util.hpp"

using namespace pat;
using cd = std::complex<double>;

namespace {
const MediumParams kWater{1500.0, 1e-9, 0.0, 0.0};
}

TEST(SymbolTable, WaterCriticalWavenumber) {
    GridSpec g{2, 32, 0.01};
    const SymbolTable t = build_symbols(g, kWater);
    EXPECT_NEAR(t.kc, 1.3333333333333333e6, 1e-6);
}

TEST(SymbolTable, BranchValuesAtAndBelowKc) {
    // coarse kc so the grid resolves both branches: tau1 = 1e-3, c0 = 2 -> kc = 1000
    MediumParams m{2.0, 1e-3, 0.0, 0.0};
    GridSpec g{2, 64, 2e-3}; // kmax ~ 1571
    const SymbolTable t = build_symbols(g, m);
    EXPECT_NEAR(t.kc, 1000.0, 1e-9);
    bool saw_osc = false, saw_evan = false;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double k = t.k[i];
        EXPECT_GE(t.mu[i], 0.0);
        if (t.evanescent[i]) {
            saw_evan = true;
            EXPECT_GT(k, t.kc);
            EXPECT_GT(t.theta0[i], 0.0);
            EXPECT_NEAR(t.theta0[i], m.c0 * k * std::sqrt(k * k / 1e6 - 1.0),
                        1e-12 * t.theta0[i]);
        } else {
            saw_osc = true;
            EXPECT_LE(k, t.kc * (1.0 + 1e-12));
        }
    }
    EXPECT_TRUE(saw_osc);
    EXPECT_TRUE(saw_evan);
}

TEST(SymbolTable, ThetaMuPythagoreanIdentity) {
    // theta^2 + mu^2 = c0^2 k^2 below kc; mu^2 - theta0^2 = c0^2 k^2 above.
    MediumParams m{2.0, 1e-3, 0.0, 0.0};
    GridSpec g{2, 64, 2e-3};
    const SymbolTable t = build_symbols(g, m);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double want = m.c0 * m.c0 * t.k[i] * t.k[i];
        const double got = t.evanescent[i] ? t.mu[i] * t.mu[i] - t.theta0[i] * t.theta0[i]
                                           : t.theta[i] * t.theta[i] + t.mu[i] * t.mu[i];
        EXPECT_NEAR(got, want, 1e-12 * (want + 1.0));
    }
}

TEST(SymbolTable, SmallKLeadingOrder) {
    GridSpec g{2, 16, 0.05};
    const SymbolTable t = build_symbols(g, kWater);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t.k[i] == 0.0) continue;
        EXPECT_NEAR(t.theta[i] / t.k[i], kWater.c0, 1e-6 * kWater.c0);
        EXPECT_NEAR(t.mu[i] / (t.k[i] * t.k[i]), kWater.c0 / t.kc, 1e-12 * kWater.c0 / t.kc);
    }
}

TEST(SymbolTable, Tau1ZeroDegenerates) {
    MediumParams m{1500.0, 0.0, 0.0, 0.0};
    GridSpec g{1, 16, 0.01};
    const SymbolTable t = build_symbols(g, m);
    EXPECT_TRUE(std::isinf(t.kc));
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_EQ(t.mu[i], 0.0);
        EXPECT_EQ(t.evanescent[i], 0);
        EXPECT_NEAR(t.theta[i], m.c0 * t.k[i], 1e-9);
    }
}

TEST(SymbolTable, AtKcThetaVanishes) {
    MediumParams m{2.0, 1e-3, 0.0, 0.0};
    // place a node exactly at kc = 1000: dk = 125 -> node 8
    GridSpec g{1, 64, 2.0 * M_PI / (64.0 * 125.0)};
    const SymbolTable t = build_symbols(g, m);
    EXPECT_NEAR(t.k[8], 1000.0, 1e-9);
    EXPECT_NEAR(t.theta[8], 0.0, 1e-3);
    EXPECT_NEAR(t.mu[8], m.c0 * 1000.0, 1e-6); // mu(kc) = c0 kc = 2/tau1
}

TEST(Sinct, LimitsAndFrozenValues) {
    EXPECT_DOUBLE_EQ(sinct(cd(0.0, 0.0), 0.5).real(), 0.5);
    EXPECT_NEAR(sinct(cd(M_PI / 0.25, 0.0), 0.25).real(), 0.0, 1e-12);
    // sinct(i, 1) = sinh(1)
    const cd v = sinct(cd(0.0, 1.0), 1.0);
    EXPECT_NEAR(v.real(), 1.1752011936438014, 1e-13);
    EXPECT_EQ(v.imag(), 0.0);
}

TEST(Sinct, MatchesTaylorOracle) {
    std::mt19937 rng(23u);
    std::uniform_real_distribution<double> u(1e-3, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double t = u(rng);
        const double th = u(rng) / t; // |theta t| <= 1
        const cd rg = sinct(cd(th, 0.0), t);
        const cd rw = pat_test::taylor_sinct(cd(th, 0.0), t);
        EXPECT_NEAR(std::abs(rg - rw), 0.0, 1e-10 * std::abs(rw));
        const cd ig = sinct(cd(0.0, th), t);
        const cd iw = pat_test::taylor_sinct(cd(0.0, th), t);
        EXPECT_NEAR(std::abs(ig - iw), 0.0, 1e-10 * std::abs(iw));
    }
}

TEST(GaussHat, ValuesAndMonotonicity) {
    EXPECT_NEAR(gauss_hat(0.0, 1e-4, 3), 0.06349363593424097, 1e-15);
    EXPECT_NEAR(gauss_hat(0.0, 1e-9, 2), 1.0 / (2.0 * M_PI), 1e-15);
    double prev = gauss_hat(0.0, 2e-4, 2);
    for (double k = 5.0; k < 200.0; k += 5.0) {
        const double v = gauss_hat(k, 2e-4, 2);
        EXPECT_LT(v, prev);
        prev = v;
    }
    EXPECT_THROW(gauss_hat(1.0, 0.0, 2), std::invalid_argument);
}

TEST(RequiredD, PaperThresholds) {
    const double T = 0.5 / 1500.0;
    const double limit = kWater.tau1 * kWater.c0 * kWater.c0 * T; // resolution limit
    EXPECT_NEAR(limit, 7.5e-7, 1e-18);
    EXPECT_GT(required_D(kWater, T, default_eps(kWater)), 7.5e-7);
    EXPECT_NEAR(required_D(kWater, T, default_eps(kWater)), 1.1 * 7.5e-7, 1e-16);
    EXPECT_GT(required_D(kWater, 4.0 * T, default_eps(kWater)), 3e-6);
    EXPECT_THROW(required_D(kWater, T, 0.0), std::invalid_argument);
    EXPECT_THROW(required_D(kWater, 0.0, 1.0), std::invalid_argument);
}

TEST(ApplyRD, NearIdentityForTinyD) {
    GridSpec g{2, 64, 0.01};
    const RealField f = pat_test::centered_bump(g, 0.12);
    const RealField out = apply_RD(f, 1e-8 * g.dx * g.dx);
    EXPECT_LT(rel_l2_error(out, f), 1e-8);
}

TEST(ApplyRD, MassPreservation) {
    GridSpec g{2, 64, 0.01};
    const RealField f = pat_test::random_smooth_field(g, 41u, 6, {0.32, 0.32}, 0.1, 0.05);
    const RealField out = apply_RD(f, 4e-4);
    double min = 0.0, mout = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        min += f.values[i];
        mout += out.values[i];
    }
    EXPECT_NEAR(mout, min, 1e-12 * std::abs(min));
}

TEST(ApplyRD, Semigroup) {
    GridSpec g{2, 64, 0.01};
    const RealField f = pat_test::random_smooth_field(g, 43u, 6, {0.32, 0.32}, 0.08, 0.05);
    const double d1 = 1.5e-4, d2 = 2.5e-4;
    const RealField twice = apply_RD(apply_RD(f, d1), d2);
    const RealField once = apply_RD(f, d1 + d2);
    EXPECT_LT(rel_l2_error(twice, once), 1e-10);
}

TEST(ApplyRD, CommutesWithWholeCellTranslation) {
    GridSpec g{2, 32, 0.02};
    const RealField f = pat_test::random_smooth_field(g, 47u, 4, {0.32, 0.32}, 0.06, 0.04);
    auto roll = [&](const RealField& in, int sx, int sy) {
        RealField out(in.grid);
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i)
                out.at((i + sx) % g.n, (j + sy) % g.n) = in.at(i, j);
        return out;
    };
    // translation commutation is a statement about the periodic operator
    const double D = 2e-4;
    auto rd = [&](const RealField& in) {
        return detail::apply_radial_multiplier(in, [D](double k2) { return std::exp(-D * k2); }, 1);
    };
    const RealField a = roll(rd(f), 3, 5);
    const RealField b = rd(roll(f, 3, 5));
    EXPECT_LT(rel_l2_error(a, b), 1e-12);
}

TEST(ApplyRD, NoSpectralAmplification) {
    GridSpec g{2, 32, 0.02};
    const RealField f = pat_test::noise_field(g, 53u);
    const SpectralField before = forward_fft(pad_embed(f, 2));
    const SpectralField after = forward_fft(pad_embed(apply_RD(f, 1e-4), 2));
    double eb = 0.0, ea = 0.0;
    for (std::size_t i = 0; i < before.values.size(); ++i) {
        eb += std::norm(before.values[i]);
        ea += std::norm(after.values[i]);
    }
    EXPECT_LE(ea, eb * (1.0 + 1e-12));
}

TEST(InGdMargin, ZeroFieldAndRegularizedField) {
    GridSpec g{2, 32, 0.02};
    SpectralField zero(g);
    const GdMarginReport rep0 = in_GD_margin(zero, 1e-4);
    for (double v : rep0.shell_max) EXPECT_EQ(v, 0.0);

    // phi = R_D psi: |phi^| e^{D k^2} = |psi^| is bounded by max |psi^|
    const RealField psi = pat_test::random_smooth_field(g, 59u, 4, {0.32, 0.32}, 0.06, 0.05);
    SpectralField reg = forward_fft(psi);
    double psi_max = 0.0;
    for (const auto& v : reg.values) psi_max = std::max(psi_max, std::abs(v));
    const double D = 2e-4;
    detail::for_each_k2(g, [&](std::size_t idx, double k2) { reg.values[idx] *= std::exp(-D * k2); });
    const GdMarginReport rep = in_GD_margin(reg, D);
    for (double v : rep.shell_max) EXPECT_LE(v, psi_max * (1.0 + 1e-9));
}

TEST(InGdMargin, WhiteNoiseGrowsLikeGaussianWeight) {
    GridSpec g{2, 64, 0.02};
    const RealField noise = pat_test::noise_field(g, 61u);
    const double D = 1e-3;
    const GdMarginReport rep = in_GD_margin(forward_fft(noise), D);
    const double kmax = g.kmax();
    const std::size_t hi = static_cast<std::size_t>(kmax / rep.dk) - 1;
    EXPECT_GT(rep.shell_max[hi], rep.shell_max[1] * std::exp(0.5 * D * kmax * kmax));
}

TEST(Laplacian, SpectralOnPlaneWave) {
    GridSpec g{2, 32, 0.02};
    RealField f(g);
    const double kx = g.wavenumber(3), ky = g.wavenumber(5);
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i)
            f.at(i, j) = std::cos(kx * g.coord(0, i) + ky * g.coord(1, j));
    // periodic mode (pad factor 1) keeps the plane wave an exact eigenvector
    const RealField lap = detail::apply_radial_multiplier(f, [](double k2) { return -k2; }, 1);
    const double want = -(kx * kx + ky * ky);
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i)
            EXPECT_NEAR(lap.at(i, j), want * f.at(i, j), 1e-9 * std::abs(want));
}
