#include <gtest/gtest.h>

#include <random>

#include "mincouple/configuration.hpp"
#include "mincouple/coupling_law.hpp"
#include "test_support.hpp"

using namespace mincouple;
using namespace mincouple::testkit;

namespace {

/// Random point pair on two randomly placed catalog surfaces.
std::pair<SurfaceState, SurfaceState> random_pair(std::mt19937_64& rng, SurfaceModel* Mout = nullptr,
                                                  SurfaceModel* Nout = nullptr)
{
    std::uniform_int_distribution<int> pick(0, 3);
    const SurfaceKind km = catalog_kinds[pick(rng)], kn = catalog_kinds[pick(rng)];
    const SurfaceModel M = make_surface(km, {std::nullopt, std::nullopt, random_motion(rng)});
    const SurfaceModel N = make_surface(kn, {std::nullopt, std::nullopt, random_motion(rng)});
    if (Mout) *Mout = M;
    if (Nout) *Nout = N;
    return {M.state_at(random_chart_point(km, rng)), N.state_at(random_chart_point(kn, rng))};
}

Configuration cfg_of(const Vec3& X, const Vec3& m, const Vec3& Y, const Vec3& n)
{
    return compute_configuration(X, m, Y, n);
}

} // namespace

TEST(Configuration, ParallelPlanes)
{
    const Configuration c = cfg_of(Vec3(0, 0, 0), Vec3(0, 0, 1), Vec3(0, 0, -1), Vec3(0, 0, 1));
    EXPECT_EQ(c.theta, 0.0);
    EXPECT_EQ(c.phi, 0.0);
    EXPECT_EQ(c.psi, 0.0);
    EXPECT_TRUE(c.theta_degenerate && c.phi_degenerate);
    EXPECT_DOUBLE_EQ(c.h, 1.0);
    EXPECT_EQ(c.region, Region::SigmaPlus);
    EXPECT_LE(reconstruction_error(c), 1e-12);
}

TEST(Configuration, SamePlane)
{
    const Configuration c = cfg_of(Vec3(0, 0, 0), Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 0, 1));
    EXPECT_NEAR(c.theta, half_pi, 1e-15);
    EXPECT_NEAR(c.phi, half_pi, 1e-15);
    EXPECT_NEAR(c.psi, 0.0, 1e-15);
    EXPECT_NEAR(c.h, -1.0, 1e-15);
    EXPECT_EQ(c.region, Region::SigmaMinus);
    EXPECT_LE(reconstruction_error(c), 1e-12);
}

TEST(Configuration, DegenerateThetaTiltedPlane)
{
    const Configuration c = cfg_of(Vec3(0, 0, 0), Vec3(0, 0, 1), Vec3(0, 0, -1), Vec3(1, 0, 1).normalized());
    EXPECT_TRUE(c.theta_degenerate);
    EXPECT_FALSE(c.phi_degenerate);
    EXPECT_EQ(c.theta, 0.0);
    EXPECT_NEAR(c.phi, pi / 4, 1e-15);
    EXPECT_EQ(c.psi, 0.0);
    // q = e3 - (e3.n) n = (-1/2, 0, 1/2)
    EXPECT_LE((c.a_dir - Vec3(-1, 0, 1).normalized()).norm(), 1e-15);
    EXPECT_LE(reconstruction_error(c), 1e-12);
}

TEST(Configuration, Coincident)
{
    try {
        cfg_of(Vec3(1, 2, 3), Vec3(0, 0, 1), Vec3(1, 2, 3) + Vec3(1e-13, 0, 0), Vec3(0, 0, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ParticlesCoincident);
    }
}

TEST(ClassifyRegion, Examples)
{
    RegionInfo ri = classify_region(pi / 4, pi / 4, 0.0);
    EXPECT_NEAR(ri.h, 0.0, 1e-15);
    EXPECT_EQ(ri.region, Region::SigmaE);
    ri = classify_region(0, 0, 0);
    EXPECT_EQ(ri.h, 1.0);
    EXPECT_EQ(ri.region, Region::SigmaPlus);
    ri = classify_region(half_pi, half_pi, half_pi);
    EXPECT_NEAR(ri.h, 0.0, 1e-15);
    EXPECT_EQ(ri.region, Region::Sigma0);
    EXPECT_EQ(classify_region(half_pi, half_pi, 0.0).region, Region::SigmaMinus);
}

TEST(Configuration, ReconstructionOnRandomCatalogPairs)
{
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const auto [x, y] = random_pair(rng);
        const Configuration c = compute_configuration(x, y);
        worst = std::max(worst, reconstruction_error(c));
        ASSERT_GE(c.theta, 0.0);
        ASSERT_LE(c.theta, half_pi);
        ASSERT_GE(c.phi, 0.0);
        ASSERT_LE(c.phi, half_pi);
        ASSERT_GE(c.psi, 0.0);
        ASSERT_LE(c.psi, pi);
        ASSERT_NEAR(c.axes.e3.dot(c.axes.e1), 0.0, 1e-10);
        ASSERT_NEAR(c.axes.e3.dot(c.axes.e2), 0.0, 1e-10);
        ASSERT_NEAR(c.axes.e1.dot(c.axes.e2), 0.0, 1e-10);
        ASSERT_NEAR(c.alpha_dir.dot(c.beta_dir), 0.0, 1e-10);
        ASSERT_NEAR(c.a_dir.dot(c.b_dir), 0.0, 1e-10);
        ASSERT_NEAR(c.alpha_dir.dot(x.m), 0.0, 1e-10);
        ASSERT_NEAR(c.b_dir.dot(y.m), 0.0, 1e-10);
        ASSERT_LE((c.axes.e3 - (x.X - y.X) / c.r).norm(), 0.0);
    }
    EXPECT_LE(worst, 1e-8);
}

TEST(Configuration, ReconstructionNearDegenerateAngles)
{
    // hand-built normals near the tolerance edges
    std::mt19937_64 rng(12);
    const std::vector<double> eps = {0.0, 1e-13, 1e-10, 1e-9, 2e-9, 1e-7, 1e-6, 1e-4};
    double worst = 0.0;
    for (double em : eps) {
        for (double en : eps) {
            for (int rep = 0; rep < 20; ++rep) {
                const Vec3 e3 = random_unit(rng);
                const Vec3 w1 = e3.cross(random_unit(rng)).normalized();
                const Vec3 w2 = e3.cross(random_unit(rng)).normalized();
                const double sm = (rep % 2) ? 1.0 : -1.0;
                // nearly along e3 (theta ~ em) and nearly perpendicular (theta ~ pi/2 - em)
                for (int mode = 0; mode < 4; ++mode) {
                    const Vec3 m = (mode & 1) ? Vec3((sm * e3 + em * w1).normalized()) : Vec3((w1 + em * e3).normalized());
                    const Vec3 n = (mode & 2) ? Vec3((e3 + en * w2).normalized()) : Vec3((w2 - en * e3).normalized());
                    const Configuration c = compute_configuration(Vec3(e3 * 0.7), m, Vec3::Zero(), n);
                    worst = std::max(worst, reconstruction_error(c));
                    if (c.theta_degenerate || c.phi_degenerate) {
                        EXPECT_EQ(c.psi, 0.0);
                    }
                }
            }
        }
    }
    EXPECT_LE(worst, 1e-8);
}

TEST(Configuration, RigidMotionInvariance)
{
    std::mt19937_64 rng(13);
    for (int i = 0; i < 2000; ++i) {
        SurfaceModel M = make_surface(SurfaceKind::Plane), N = M;
        const auto [x, y] = random_pair(rng, &M, &N);
        const RigidMotion rm = random_motion(rng);
        const Configuration a = compute_configuration(x, y);
        const Configuration b = compute_configuration(rm.apply(x.X), rm.rotate(x.m), rm.apply(y.X), rm.rotate(y.m));
        EXPECT_NEAR(a.theta, b.theta, 1e-9);
        EXPECT_NEAR(a.phi, b.phi, 1e-9);
        EXPECT_NEAR(a.r, b.r, 1e-9);
        EXPECT_NEAR(a.h, b.h, 1e-9);
        if (!a.theta_degenerate && !a.phi_degenerate) {
            EXPECT_NEAR(a.psi, b.psi, 1e-9);
        }
    }
}

TEST(Configuration, SwapSymmetry)
{
    std::mt19937_64 rng(14);
    for (int i = 0; i < 5000; ++i) {
        const auto [x, y] = random_pair(rng);
        const Configuration a = compute_configuration(x, y);
        const Configuration b = compute_configuration(y, x);
        EXPECT_NEAR(a.theta, b.phi, 1e-10);
        EXPECT_NEAR(a.phi, b.theta, 1e-10);
        EXPECT_NEAR(a.r, b.r, 1e-12);
        EXPECT_NEAR(a.h, b.h, 1e-10);
        EXPECT_NEAR(gap_max(a).value, gap_max(b).value, 1e-10);
    }
}

TEST(Configuration, NormalFlipLeavesAnglesAndGapUnchanged)
{
    std::mt19937_64 rng(15);
    for (int i = 0; i < 2000; ++i) {
        const auto [x, y] = random_pair(rng);
        const Configuration a = compute_configuration(x.X, x.m, y.X, y.m);
        const Configuration b = compute_configuration(x.X, -x.m, y.X, -y.m);
        EXPECT_NEAR(a.theta, b.theta, 1e-12);
        EXPECT_NEAR(a.phi, b.phi, 1e-12);
        EXPECT_NEAR(a.h, b.h, 1e-10);
        EXPECT_NEAR(gap_max(a).value, gap_max(b).value, 1e-10);
        EXPECT_NEAR(procrustes_optimal(a).value, procrustes_optimal(b).value, 1e-9);
    }
}

TEST(ShapeData, Examples)
{
    const SurfaceModel plane = make_surface(SurfaceKind::Plane);
    const SurfaceState p = plane.state_at(cplx(0.3, 0.4));
    ShapeData sd = shape_data(plane, p, p.frame_u.normalized(), p.frame_v.normalized());
    EXPECT_EQ(sd.k, 0.0);
    EXPECT_EQ(sd.s, 0.0);

    const SurfaceModel enn = make_surface(SurfaceKind::Enneper);
    const SurfaceState e = enn.state_at(0.0);
    sd = shape_data(enn, e, e.frame_u.normalized(), e.frame_v.normalized());
    EXPECT_DOUBLE_EQ(sd.k, 2.0);

    const SurfaceModel cat = make_surface(SurfaceKind::Catenoid);
    const SurfaceState c = cat.state_at(1.0);
    sd = shape_data(cat, c, c.frame_u.normalized(), c.frame_v.normalized());
    EXPECT_DOUBLE_EQ(sd.k, 0.5);
}

TEST(ShapeData, MatchesFiniteDifferencesOfTheNormal)
{
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> u(0.0, two_pi);
    for (SurfaceKind kind : catalog_kinds) {
        if (kind == SurfaceKind::Plane) continue;
        const SurfaceModel model = make_surface(kind, {std::nullopt, std::nullopt, random_motion(rng)});
        for (int i = 0; i < 200; ++i) {
            const SurfaceState s = model.state_at(random_chart_point(kind, rng));
            const double ang = u(rng);
            const double flip = (i % 2) ? 1.0 : -1.0;
            const Vec3 d1 = (std::cos(ang) * s.frame_u + std::sin(ang) * s.frame_v).normalized();
            const Vec3 d2 = flip * s.m.cross(d1);
            const ShapeData sd = shape_data(model, s, d1, d2);
            ASSERT_GE(sd.s, 0.0);
            ASSERT_LT(sd.s, two_pi);
            const double h = 1e-5;
            auto dm = [&](const Vec3& dir) {
                const SurfaceState p = model.advance_state(s, chart_increment(s, h * dir));
                const SurfaceState q = model.advance_state(s, chart_increment(s, -h * dir));
                return Vec3((p.m - q.m) / (2 * h));
            };
            const Vec3 want1 = sd.k * (std::cos(sd.s) * d1 + std::sin(sd.s) * d2);
            const Vec3 want2 = sd.k * (std::sin(sd.s) * d1 - std::cos(sd.s) * d2);
            EXPECT_LE((dm(d1) - want1).norm(), 1e-4 * sd.k) << to_string(kind);
            EXPECT_LE((dm(d2) - want2).norm(), 1e-4 * sd.k) << to_string(kind);
        }
    }
}

TEST(ConfigDerivatives, FlatExamples)
{
    // same-plane style pair on Sigma_e: theta = phi = pi/4, r = 1
    Configuration c = cfg_of(Vec3(0, 0, 0), Vec3(1, 0, 1).normalized(), Vec3(0, 0, -1), Vec3(1, 0, -1).normalized());
    ASSERT_EQ(c.region, Region::SigmaE);
    ASSERT_NEAR(c.theta, pi / 4, 1e-15);
    ASSERT_NEAR(c.r, 1.0, 1e-15);
    const ShapeData flat{};
    ConfigDerivatives d = config_derivatives(c, flat, flat, 1);
    EXPECT_NEAR(d.d_alpha_sum, 0.0, 1e-15);
    EXPECT_EQ(d.d_beta_sum, 0.0);
    EXPECT_EQ(d.d_alpha_psi, 0.0);
    EXPECT_EQ(d.d_beta_psi, 0.0);
    d = config_derivatives(c, flat, flat, -1);
    EXPECT_NEAR(d.d_alpha_sum, 2.0 * std::sqrt(2.0), 1e-14);
    EXPECT_EQ(d.d_beta_sum, 0.0);
    EXPECT_EQ(d.d_alpha_psi, 0.0);
    EXPECT_EQ(d.d_beta_psi, 0.0);

    const Configuration off = cfg_of(Vec3(0, 0, 0), Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 0, 1));
    try {
        config_derivatives(off, flat, flat, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotOnSigmaE);
    }
}

TEST(ConfigDerivatives, MatchFiniteDifferencesOnCatalogSurfaces)
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    for (SurfaceKind km : catalog_kinds) {
        for (SurfaceKind kn : catalog_kinds) {
            for (int rep = 0; rep < 25; ++rep) {
                const double theta = 0.05 + (pi / 4 - 0.05) * u(rng);
                const double r = 0.2 + 1.5 * u(rng);
                const PlacedPair pp = sigma_e_pair(km, kn, theta, r, rng);
                const Configuration cfg = compute_configuration(pp.x, pp.y);
                ASSERT_EQ(cfg.region, Region::SigmaE);
                const ShapeData sm = shape_data(pp.M, pp.x, cfg.alpha_dir, cfg.beta_dir);
                const ShapeData sn = shape_data(pp.N, pp.y, cfg.a_dir, cfg.b_dir);
                for (int A : {1, -1}) {
                    const ConfigDerivatives an = config_derivatives(cfg, sm, sn, A);
                    const ConfigDerivatives fd = fd_config_derivatives(pp, cfg, A, 1e-5);
                    EXPECT_LE(rel_err(an.d_alpha_sum, fd.d_alpha_sum), 1e-3) << to_string(km) << "/" << to_string(kn);
                    EXPECT_LE(rel_err(an.d_beta_sum, fd.d_beta_sum), 1e-3) << to_string(km) << "/" << to_string(kn);
                    EXPECT_LE(rel_err(an.d_alpha_psi, fd.d_alpha_psi), 1e-3) << to_string(km) << "/" << to_string(kn);
                    EXPECT_LE(rel_err(an.d_beta_psi, fd.d_beta_psi), 1e-3) << to_string(km) << "/" << to_string(kn);
                    ++checked;
                }
            }
        }
    }
    EXPECT_EQ(checked, 800);
}
