#include <gtest/gtest.h>

#include "mincouple/reference_processes.hpp"

using namespace mincouple;

TEST(BesselStep, Basics)
{
    // dim 1: no drift
    EXPECT_DOUBLE_EQ(bessel_step(1.0, 0.5, 0.01, 0.0), 0.5);
    EXPECT_DOUBLE_EQ(bessel_step(1.0, 0.5, 0.01, 1.0), 0.6);
    EXPECT_DOUBLE_EQ(bessel_step(3.0, 0.5, 0.01, 0.0), 0.52);
    EXPECT_EQ(bessel_step(1.0, 0.05, 0.01, -1.0), 0.0);
    EXPECT_EQ(bessel_step(1.0, 0.0, 0.01, 5.0), 0.0);
    EXPECT_THROW(BesselParams({-1.0, 1.0}).validate(), Error);
    EXPECT_THROW(BesselParams({1.0, 0.0}).validate(), Error);
}

TEST(FirstPassage, Values)
{
    EXPECT_NEAR(bm_first_passage_prob(1.0, 1.0), 0.6170750774519738, 1e-15);
    EXPECT_LT(bm_first_passage_prob(1.0, 1e-6), 1e-100);
    EXPECT_NEAR(bm_first_passage_prob(1.0, 1e12), 1.0, 1e-6);
    EXPECT_NEAR(bm_first_passage_prob(1.0, 0.01), 2 * standard_normal_cdf(-5.0), 1e-18);
    EXPECT_THROW(bm_first_passage_prob(0.0, 1.0), Error);
    EXPECT_THROW(bm_first_passage_prob(1.0, 0.0), Error);
    for (double d = 0.1; d < 3.0; d += 0.1) {
        for (double t = 0.1; t < 3.0; t += 0.1) {
            EXPECT_LT(bm_first_passage_prob(d, t), bm_first_passage_prob(d, t + 0.1));
            EXPECT_GT(bm_first_passage_prob(d, t), bm_first_passage_prob(d + 0.1, t));
        }
    }
}

TEST(BesselHitProb, Values)
{
    EXPECT_DOUBLE_EQ(bessel_hit_prob(1.0, 1.0, 2.0), 0.5);
    EXPECT_DOUBLE_EQ(bessel_hit_prob(1.0, 3.0, 6.0), 0.5);
    EXPECT_NEAR(bessel_hit_prob(1.0, 1e-12, 1.0), 1.0, 1e-11);
    EXPECT_NEAR(bessel_hit_prob(0.5, 1e-12, 1.0), 1.0, 1e-11);
    EXPECT_EQ(bessel_hit_prob(2.0, 1.0, 2.0), 0.0);
    EXPECT_NEAR(bessel_hit_prob(1.5, 1.0, 4.0), 0.5, 1e-15);
    try {
        bessel_hit_prob(2.5, 1.0, 2.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::BadDimension);
    }
    EXPECT_THROW(bessel_hit_prob(1.0, 2.0, 1.0), Error);
}

TEST(BesselSimulation, TransientDimensionRarelyAbsorbed)
{
    const BesselParams p{3.0, 1.0};
    int absorbed = 0;
    const int N = 10000;
    for (int i = 0; i < N; ++i) {
        NoiseSource ns(101, i);
        absorbed += run_bessel(p, std::numeric_limits<double>::infinity(), 1e-4, 1.0, ns).outcome
                    == BesselOutcome::Absorbed;
    }
    EXPECT_LE(static_cast<double>(absorbed) / N, 1e-3);
}

TEST(BesselSimulation, CriticalDimensionAbsorptionVanishesWithDt)
{
    const BesselParams p{2.0, 1.0};
    std::vector<double> frac;
    for (double dt : {1e-1, 1e-2, 1e-3, 1e-4}) {
        int absorbed = 0;
        const int N = 10000;
        for (int i = 0; i < N; ++i) {
            NoiseSource ns(202, i);
            absorbed += run_bessel(p, std::numeric_limits<double>::infinity(), dt, 1.0, ns).outcome
                        == BesselOutcome::Absorbed;
        }
        frac.push_back(static_cast<double>(absorbed) / N);
    }
    EXPECT_GT(frac[0], frac[1]);
    EXPECT_GT(frac[1], frac[2]);
    EXPECT_GT(frac[2], frac[3]);
    // the decay is only logarithmic in dt
    EXPECT_LT(frac[3], 0.75 * frac[0]);
}

TEST(BesselSimulation, OneDimensionalHitBeforeDouble)
{
    const BesselParams p{1.0, 1.0};
    const int N = 20000;
    int hit = 0;
    for (int i = 0; i < N; ++i) {
        NoiseSource ns(303, i);
        const BesselPath path = run_bessel(p, 2.0, 1e-3, 1e3, ns);
        ASSERT_NE(path.outcome, BesselOutcome::TimedOut);
        hit += path.outcome == BesselOutcome::Absorbed;
    }
    const double phat = static_cast<double>(hit) / N;
    EXPECT_NEAR(phat, 0.5, 3 * std::sqrt(0.25 / N));
}

namespace {

CoupledResult plane_run(const Vec3& offset, double t_max, std::uint64_t stream)
{
    const SurfaceModel M = make_surface(SurfaceKind::Plane);
    RigidMotion rm;
    rm.translation = offset;
    const SurfaceModel N = make_surface(SurfaceKind::Plane, {std::nullopt, std::nullopt, rm});
    StepControl ctl;
    ctl.t_max = t_max;
    ctl.dt_base = 1e-3;
    ctl.sample_stride = 1;
    NoiseSource ns(5, stream);
    return run_coupled(M, N, 0.0, 0.0, ctl, ns);
}

} // namespace

TEST(DominationReport, MirrorRunHasZeroDrift)
{
    const CoupledResult run = plane_run(Vec3(1.0, 0.0, 0.0), 0.2, 0);
    const DominationReport rep = domination_report(run);
    EXPECT_TRUE(rep.clean());
    EXPECT_GT(rep.samples, 10);
    EXPECT_EQ(rep.ratio_samples, rep.samples);
    EXPECT_LE(rep.max_drift_ratio, 1e-12);
    EXPECT_LE(rep.max_drift_excess, 0.0);
}

TEST(DominationReport, SynchronousRunIsEqualityCase)
{
    const CoupledResult run = plane_run(Vec3(0.0, 0.0, -1.0), 0.2, 1);
    const DominationReport rep = domination_report(run);
    EXPECT_TRUE(rep.clean());
    EXPECT_EQ(rep.ledger.equality_steps, rep.ledger.steps);
    EXPECT_EQ(rep.ratio_samples, 0);
    EXPECT_EQ(run.stop, StopReason::TimedOut);
}
