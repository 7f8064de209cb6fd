#include <gtest/gtest.h>

#include <random>

#include "mincouple/coupling_law.hpp"
#include "test_support.hpp"

using namespace mincouple;
using namespace mincouple::testkit;

TEST(RatePair, CatalogPointValues)
{
    RatePair rp = rate_pair(half_pi, half_pi, 0, 0, -1);
    EXPECT_NEAR(rp.qv_rate, 4.0, 1e-12);
    EXPECT_NEAR(rp.drift_num, 0.0, 1e-12);
    rp = rate_pair(pi / 4, pi / 4, 0, 0, -1);
    EXPECT_NEAR(rp.qv_rate, 2.0, 1e-12);
    EXPECT_NEAR(rp.drift_num, 2.0, 1e-12);
    rp = rate_pair(0, 0, 0, 0, 1);
    EXPECT_NEAR(rp.qv_rate, 0.0, 1e-12);
    EXPECT_NEAR(rp.drift_num, 0.0, 1e-12);
    for (double t : {0.1, 0.3, 0.6, pi / 4}) {
        rp = rate_pair(t, t, 0, 0, 1);
        EXPECT_NEAR(rp.qv_rate, 0.0, 1e-12);
        EXPECT_NEAR(rp.drift_num, 0.0, 1e-12);
    }
}

TEST(RatePair, BoundsAndNonnegativity)
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100000; ++i) {
        const RatePair rp = rate_pair(half_pi * u(rng), half_pi * u(rng), pi * u(rng), two_pi * u(rng),
                                      u(rng) < 0.5 ? 1 : -1, u(rng) < 0.5 ? 1.0 : u(rng));
        ASSERT_GE(rp.qv_rate, -1e-12);
        ASSERT_GE(rp.drift_num, -1e-12);
        ASSERT_LE(rp.qv_rate, 4.0 + 1e-12);
        ASSERT_LE(rp.drift_num, 8.0 + 1e-12);
    }
}

TEST(OptimalSigma, Examples)
{
    EXPECT_DOUBLE_EQ(optimal_sigma(half_pi, half_pi, 0, -1), 0.0);
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.0, half_pi);
    for (int i = 0; i < 1000; ++i) {
        for (int A : {1, -1}) {
            const double s = optimal_sigma(u(rng), u(rng), 0.0, A);
            EXPECT_TRUE(s == 0.0 || std::abs(s - pi) < 1e-15) << s;
        }
    }
    // both coefficients vanish: theta = phi = pi/3, psi = pi, A = -1
    const auto [c1, c2] = sigma_coefficients(pi / 3, pi / 3, pi, -1);
    EXPECT_NEAR(c1, 0.0, 1e-15);
    EXPECT_NEAR(c2, 0.0, 1e-15);
    EXPECT_EQ(optimal_sigma(pi / 3, pi / 3, pi, -1), 0.0);
    // the configuration (pi/2, pi/2, pi/2), A = +1 has c1 = -1, c2 = 0
    EXPECT_NEAR(optimal_sigma(half_pi, half_pi, half_pi, 1), pi, 1e-15);
}

TEST(GapMax, Examples)
{
    GapMax g = gap_max(half_pi, half_pi, 0);
    EXPECT_NEAR(g.value, 4.0, 1e-12);
    EXPECT_EQ(g.A_star, -1);
    EXPECT_EQ(g.sigma_star, 0.0);
    g = gap_max(pi / 4, pi / 4, 0);
    EXPECT_NEAR(g.value, 0.0, 1e-12);
    EXPECT_EQ(g.A_star, -1);
    g = gap_max(half_pi, half_pi, half_pi);
    EXPECT_NEAR(g.value, 2.0, 1e-12);
    EXPECT_EQ(g.A_star, -1);
    EXPECT_EQ(gap_max(0, 0, 0).A_star, 1);
    EXPECT_NEAR(gap_max(0, 0, 0).value, 0.0, 1e-15);
}

TEST(GapMax, RealizedByChosenCouplingAndSwapSymmetric)
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200000; ++i) {
        const double th = half_pi * u(rng), ph = half_pi * u(rng), ps = pi * u(rng);
        const GapMax g = gap_max(th, ph, ps);
        ASSERT_GE(g.value, -1e-12);
        const double swapped = gap_max(ph, th, ps).value;
        ASSERT_NEAR(g.value, swapped, 1e-12);
        const RatePair rp = rate_pair(th, ph, ps, g.sigma_star, g.A_star);
        const double h = std::cos(th) * std::cos(ph) - std::cos(ps) * std::sin(th) * std::sin(ph);
        if (std::abs(h) > Constants{}.tol_sigma) {
            ASSERT_NEAR(rp.qv_rate - rp.drift_num, g.value, 1e-10);
        } else {
            // tie band: the A = -1 branch is within 4 tol_sigma of the maximum
            ASSERT_NEAR(rp.qv_rate - rp.drift_num, g.value, 4.0 * Constants{}.tol_sigma);
        }
        ASSERT_NEAR(std::max(branch_max(th, ph, ps, 1), branch_max(th, ph, ps, -1)), g.value, 1e-10);
    }
}

TEST(GapMax, BruteForceSpotCheck)
{
    // full 200^3 grid is in the acceptance suite; the grid step bounds the error
    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double bound_scale = 2.0 * (1.0 - std::cos(pi / 4096));
    for (int i = 0; i < 2000; ++i) {
        const double th = half_pi * u(rng), ph = half_pi * u(rng), ps = pi * u(rng);
        const double closed = gap_max(th, ph, ps).value;
        const double brute = brute_force_gap(th, ph, ps, 4096);
        const double R = (closed + 2 * std::cos(th) * std::cos(th) + 2 * std::cos(ph) * std::cos(ph)) / 2;
        ASSERT_GE(closed - brute, -1e-12);
        ASSERT_LE(closed - brute, R * bound_scale + 1e-12);
    }
}

TEST(Procrustes, Examples)
{
    // same plane, two points: mirror configuration
    const Configuration mirror = compute_configuration(Vec3(0, 0, 0), Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 0, 1));
    ProcrustesResult p = procrustes_optimal(mirror);
    EXPECT_NEAR(p.value, 4.0, 1e-12);
    EXPECT_EQ(p.choice.A, -1);
    EXPECT_NEAR(p.value, gap_max(mirror).value, 1e-12);
    RatePair rp = realized_rate_pair(mirror, p.choice);
    EXPECT_NEAR(rp.qv_rate, 4.0, 1e-12);
    EXPECT_NEAR(rp.drift_num, 0.0, 1e-12);

    const Configuration stacked = compute_configuration(Vec3(0, 0, 1), Vec3(0, 0, 1), Vec3(0, 0, 0), Vec3(0, 0, 1));
    p = procrustes_optimal(stacked);
    EXPECT_NEAR(p.value, 0.0, 1e-12);
    EXPECT_EQ(p.choice.A, 1);
    EXPECT_NEAR(p.choice.sigma, 0.0, 1e-12);
}

TEST(Procrustes, MatchesGapMaxOnCatalogConfigurations)
{
    std::mt19937_64 rng(25);
    std::uniform_int_distribution<int> pick(0, 3);
    for (int i = 0; i < 5000; ++i) {
        const SurfaceKind km = catalog_kinds[pick(rng)], kn = catalog_kinds[pick(rng)];
        const SurfaceModel M = make_surface(km, {std::nullopt, std::nullopt, random_motion(rng)});
        const SurfaceModel N = make_surface(kn, {std::nullopt, std::nullopt, random_motion(rng)});
        const Configuration c = compute_configuration(M.state_at(random_chart_point(km, rng)),
                                                      N.state_at(random_chart_point(kn, rng)));
        const ProcrustesResult p = procrustes_optimal(c);
        ASSERT_NEAR(p.value, gap_max(c).value, 1e-8);
        const RatePair rp = realized_rate_pair(c, p.choice);
        ASSERT_NEAR(rp.qv_rate - rp.drift_num, p.value, 1e-8);
    }
}

TEST(EpsHat, Properties)
{
    EXPECT_EQ(eps_hat(classify_region(0, 0, 0).h, gap_max(0, 0, 0).value), 0.0);
    EXPECT_NEAR(eps_hat(classify_region(half_pi, half_pi, half_pi).h, gap_max(half_pi, half_pi, half_pi).value), 0.25,
                1e-12);
    // exactly zero on Sigma_e and on {psi = 0, theta = phi <= pi/4}
    for (double t = 0.0; t <= pi / 4; t += 0.01) {
        EXPECT_LE(eps_hat(classify_region(t, half_pi - t, 0).h, gap_max(t, half_pi - t, 0).value), 1e-10);
        EXPECT_LE(eps_hat(classify_region(t, t, 0).h, gap_max(t, t, 0).value), 1e-10);
    }
    std::mt19937_64 rng(26);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Constants c;
    for (int i = 0; i < 100000; ++i) {
        const double th = half_pi * u(rng), ph = half_pi * u(rng), ps = pi * u(rng);
        const double h = classify_region(th, ph, ps).h;
        const double gap = gap_max(th, ph, ps).value;
        const double e = eps_hat(h, gap, c);
        ASSERT_GE(e, 0.0);
        ASSERT_LE(e, 0.25);
        if (std::abs(h) >= c.eps_delta) {
            ASSERT_EQ(e, 0.0);
        }
        if (std::abs(h) < 1e-3 && gap > 1e-3) {
            ASSERT_GT(e, 0.0);
        }
    }
}

TEST(EpsHat, PerturbedCouplingStaysAdequate)
{
    // the realized pair with eps_hat always satisfies g <= f + 1e-9
    std::mt19937_64 rng(27);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 400000; ++i) {
        const double th = half_pi * u(rng), ph = half_pi * u(rng), ps = (i % 4 == 0) ? 0.0 : pi * u(rng);
        Configuration cfg;
        cfg.theta = th;
        cfg.phi = ph;
        cfg.psi = ps;
        const RegionInfo ri = classify_region(th, ph, ps);
        cfg.h = ri.h;
        cfg.region = ri.region;
        const CouplingChoice ch = choose_coupling(cfg);
        const RatePair rp = realized_rate_pair(cfg, ch);
        ASSERT_LE(rp.drift_num, rp.qv_rate + 1e-9) << th << " " << ph << " " << ps;
    }
}

TEST(Dispersion, Structure)
{
    std::mt19937_64 rng(28);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const CouplingChoice ch{u(rng) < 0.5 ? 1 : -1, two_pi * u(rng), 0.499 * u(rng)};
        const Dispersion d = dispersion(ch);
        EXPECT_LE((d.a - d.a.transpose()).norm(), 0.0);
        EXPECT_LE((d.B * d.B.transpose() - d.a).norm(), 1e-12);
        EXPECT_LE((d.a.topLeftCorner<2, 2>() - Mat2::Identity()).norm(), 0.0);
        EXPECT_LE((d.a.bottomRightCorner<2, 2>() - Mat2::Identity()).norm(), 0.0);
        Eigen::SelfAdjointEigenSolver<Mat4> es(d.a);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
        // Gamma form equals v^T a v at eps_hat = 0
        const CouplingChoice c0{ch.A, ch.sigma, 0.0};
        const Mat4 a0 = dispersion(c0).a;
        const Vec4 v = Vec4::Random();
        EXPECT_NEAR(gamma_form(c0, v), v.dot(a0 * v), 1e-12);
    }
    const Dispersion d0 = dispersion({-1, 0.3, 0.0});
    Eigen::FullPivLU<Mat4> lu(d0.a);
    lu.setThreshold(1e-10);
    EXPECT_EQ(lu.rank(), 2);
    const Dispersion d1 = dispersion({1, 1.1, 1.0});
    EXPECT_LE((d1.a - Mat4::Identity()).norm(), 1e-15);
    EXPECT_THROW(dispersion({1, 0.0, 1.5}), Error);
}

TEST(GammaForm, MatchesRatePairs)
{
    const Configuration mirror = compute_configuration(Vec3(0, 0, 0), Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 0, 1));
    const CouplingChoice ch = choose_coupling(mirror);
    EXPECT_NEAR(gamma_form(ch, coordinate_gradient(mirror, mirror.axes.e3)), 4.0, 1e-12);
    // v orthogonal to both defining vectors
    const Vec4 abar(1, 0, ch.A * std::cos(ch.sigma), -std::sin(ch.sigma));
    const Vec4 bbar(0, 1, ch.A * std::sin(ch.sigma), std::cos(ch.sigma));
    Vec4 v(0.3, -0.2, 0.5, 0.9);
    v -= v.dot(abar) / abar.squaredNorm() * abar;
    v -= v.dot(bbar) / bbar.squaredNorm() * bbar;
    EXPECT_NEAR(gamma_form(ch, v), 0.0, 1e-14);

    std::mt19937_64 rng(29);
    std::uniform_int_distribution<int> pick(0, 3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 3000; ++i) {
        const SurfaceKind km = catalog_kinds[pick(rng)], kn = catalog_kinds[pick(rng)];
        const SurfaceModel M = make_surface(km, {std::nullopt, std::nullopt, random_motion(rng)});
        const SurfaceModel N = make_surface(kn, {std::nullopt, std::nullopt, random_motion(rng)});
        const Configuration c = compute_configuration(M.state_at(random_chart_point(km, rng)),
                                                      N.state_at(random_chart_point(kn, rng)));
        const CouplingChoice any{u(rng) < 0.5 ? 1 : -1, two_pi * u(rng), 0.0};
        const RatePair rp = realized_rate_pair(c, any);
        const double f = gamma_form(any, coordinate_gradient(c, c.axes.e3));
        const double g = gamma_form(any, coordinate_gradient(c, c.axes.e1))
                         + gamma_form(any, coordinate_gradient(c, c.axes.e2));
        ASSERT_NEAR(f, rp.qv_rate, 1e-9);
        ASSERT_NEAR(g, rp.drift_num, 1e-9);
    }
}

TEST(SelectOnSigma0, Rule)
{
    Configuration c;
    c.theta = c.phi = pi / 4;
    c.psi = 0.0;
    c.region = Region::SigmaE;
    EXPECT_EQ(select_on_sigma0(c), -1);
    const GapMax g = gap_max(c);
    const RatePair rp = rate_pair(c.theta, c.phi, c.psi, g.sigma_star, g.A_star);
    EXPECT_NEAR(rp.qv_rate, 2.0, 1e-12);
    EXPECT_NEAR(rp.drift_num, 2.0, 1e-12);
    c.theta = c.phi = c.psi = half_pi;
    c.region = Region::Sigma0;
    EXPECT_EQ(gap_max(c).A_star, -1);
    // off Sigma_0 the sign of h decides
    const double th = 0.5, ph = 0.7;
    const double ps = std::acos((std::cos(th) * std::cos(ph) - 0.5) / (std::sin(th) * std::sin(ph)));
    ASSERT_NEAR(classify_region(th, ph, ps).h, 0.5, 1e-12);
    EXPECT_EQ(gap_max(th, ph, ps).A_star, 1);
}
