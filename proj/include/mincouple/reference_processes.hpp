#pragma once

// Comparison processes: Euler-stepped Bessel processes and closed-form hitting
// probabilities used as oracles by the coupling experiments.

#include <cmath>
#include <limits>

#include "mincouple/errors.hpp"
#include "mincouple/noise.hpp"
#include "mincouple/sde_engine.hpp"

namespace mincouple {

struct BesselParams {
    double dim = 2.0;
    double start = 1.0;

    void validate() const
    {
        if (!(dim > 0.0) || !(start > 0.0)) {
            throw Error(ErrorKind::BadParams, "Bessel dimension and start must be positive");
        }
    }
};

/// Euler step of d rho = dW + (dim - 1) / (2 rho) dt. Returns 0 (absorbed)
/// when the step ends at or below zero.
inline double bessel_step(double dim, double rho, double dt, double xi)
{
    if (!(rho > 0.0)) {
        return 0.0;
    }
    const double next = rho + std::sqrt(dt) * xi + (dim - 1.0) / (2.0 * rho) * dt;
    return next > 0.0 ? next : 0.0;
}

inline double bessel_step(const BesselParams& p, double rho, double dt, NoiseSource& noise)
{
    return bessel_step(p.dim, rho, dt, noise.normal());
}

enum class BesselOutcome { Absorbed, HitUpper, TimedOut };

struct BesselPath {
    BesselOutcome outcome = BesselOutcome::TimedOut;
    double t = 0.0;
    double min_rho = 0.0;
};

/// Run until absorption, the upper barrier (if finite), or t_max.
inline BesselPath run_bessel(const BesselParams& p, double upper, double dt, double t_max, NoiseSource& noise)
{
    p.validate();
    BesselPath out;
    double rho = p.start;
    out.min_rho = rho;
    const long n_max = static_cast<long>(std::ceil(t_max / dt - 1e-9));
    for (long i = 0; i < n_max; ++i) {
        rho = bessel_step(p, rho, dt, noise);
        out.t = static_cast<double>(i + 1) * dt;
        out.min_rho = std::min(out.min_rho, rho);
        if (rho <= 0.0) {
            out.outcome = BesselOutcome::Absorbed;
            return out;
        }
        if (rho >= upper) {
            out.outcome = BesselOutcome::HitUpper;
            return out;
        }
    }
    return out;
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// P(d + 2 W_s hits 0 for some s <= t) = 2 Phi(-d / (2 sqrt t)).
inline double bm_first_passage_prob(double d, double t)
{
    if (!(d > 0.0) || !(t > 0.0)) {
        throw Error(ErrorKind::BadParams, "first passage needs d > 0 and t > 0");
    }
    return std::erfc(d / (2.0 * std::sqrt(t)) / std::sqrt(2.0));
}

/// P(hit 0 before b | start a) for a Bessel process of dimension dim < 2.
/// dim = 2 returns the limit 0.
inline double bessel_hit_prob(double dim, double a, double b)
{
    if (!(a > 0.0 && a < b)) {
        throw Error(ErrorKind::BadParams, "bessel_hit_prob needs 0 < a < b");
    }
    if (dim == 2.0) {
        return 0.0;
    }
    if (!(dim > 0.0 && dim < 2.0)) {
        throw Error(ErrorKind::BadDimension, "bessel_hit_prob needs 0 < dim < 2");
    }
    return 1.0 - std::pow(a / b, 2.0 - dim);
}

struct DominationReport {
    DominationLedger ledger;   // every step of the run
    long samples = 0;          // series samples inspected
    long sample_violations = 0;
    double max_sample_violation = -std::numeric_limits<double>::infinity();
    long ratio_samples = 0;    // samples with f > tol
    double max_drift_ratio = 0.0;  // max g / f; the 2D Bessel benchmark is 1
    double mean_drift_ratio = 0.0;
    // max of (g/f)/(2r) - 1/(2r), the time-changed drift above the Bessel drift
    double max_drift_excess = -std::numeric_limits<double>::infinity();

    bool clean() const { return ledger.violations == 0 && sample_violations == 0; }
};

inline DominationReport domination_report(const CoupledResult& run, double tol = Constants{}.domination_tol)
{
    DominationReport rep;
    rep.ledger = run.summary.ledger;
    double sum_ratio = 0.0;
    for (const auto& rec : run.series) {
        if (!std::isfinite(rec.f) || !std::isfinite(rec.g)) continue;
        ++rep.samples;
        const double v = rec.g - rec.f;
        rep.max_sample_violation = std::max(rep.max_sample_violation, v);
        if (v > tol) ++rep.sample_violations;
        if (rec.f > tol) {
            ++rep.ratio_samples;
            const double ratio = rec.g / rec.f;
            sum_ratio += ratio;
            rep.max_drift_ratio = std::max(rep.max_drift_ratio, ratio);
            rep.max_drift_excess = std::max(rep.max_drift_excess, (ratio - 1.0) / (2.0 * rec.r));
        }
    }
    if (rep.ratio_samples > 0) {
        rep.mean_drift_ratio = sum_ratio / static_cast<double>(rep.ratio_samples);
    }
    return rep;
}

} // namespace mincouple
