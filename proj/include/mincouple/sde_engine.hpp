#pragma once

// Euler-Maruyama in conformal charts.  A single step moves the chart point by
// sqrt(dt / lambda) (xi1 + i xi2); a coupled step drives both surfaces from one
// four-dimensional normal draw through the dispersion of the chosen coupling.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mincouple/configuration.hpp"
#include "mincouple/constants.hpp"
#include "mincouple/coupling_law.hpp"
#include "mincouple/errors.hpp"
#include "mincouple/noise.hpp"
#include "mincouple/surface_geometry.hpp"

namespace mincouple {

struct StepControl {
    double dt_base = 1e-4;
    double r_couple = 1e-3;
    double t_max = 1.0;
    double lambda_guard = 0.1;
    int sample_stride = 100;

    bool proximity_refinement = true;
    double refine_band = 10.0;   // refine when r < refine_band * r_couple
    double max_refinement = 1e4;
    int max_halvings = 20;
    // Also declare Coupled when the straight segment between consecutive
    // separation vectors passes within r_couple of 0.  Without it a discrete
    // path steps over the coupling ball far more often than it lands in it.
    bool segment_detection = true;

    void validate() const
    {
        if (!(dt_base > 0.0) || !(r_couple > 0.0) || !(t_max > 0.0) || !(lambda_guard > 0.0) || sample_stride < 1) {
            throw Error(ErrorKind::BadParams, "step control needs dt, r_couple, t_max, lambda_guard > 0 and stride >= 1");
        }
    }
};

enum class StopReason { Coupled, Boundary, TimedOut, NumericalGuard };

inline const char* to_string(StopReason s)
{
    switch (s) {
    case StopReason::Coupled: return "Coupled";
    case StopReason::Boundary: return "Boundary";
    case StopReason::TimedOut: return "TimedOut";
    case StopReason::NumericalGuard: return "NumericalGuard";
    }
    return "?";
}

/// Largest dt' = dt / 2^j (j <= max_halvings) passing the lambda guard
/// 4 sqrt(2 dt' / lambda) |grad log lambda| <= guard.  The check uses the
/// typical step length rather than the drawn one, so it does not bias the noise.
/// Returns a negative value when no admissible step exists.
inline double guarded_dt(const SurfaceModel& model, const SurfaceState& s, double dt, const StepControl& ctl)
{
    if (model.is_flat()) {
        return dt;
    }
    const double grad = model.log_lambda_gradient(s.z);
    for (int j = 0; j <= ctl.max_halvings; ++j) {
        if (4.0 * std::sqrt(2.0 * dt / s.lambda) * grad <= ctl.lambda_guard) {
            return dt;
        }
        dt *= 0.5;
    }
    return -1.0;
}

//---------------------------------------------------------------------------//
// Single motion
//---------------------------------------------------------------------------//

inline SurfaceState step_single(const SurfaceModel& model, const SurfaceState& state, double dt, double xi1, double xi2)
{
    const double scale = std::sqrt(dt / state.lambda);
    return model.advance_state(state, cplx(scale * xi1, scale * xi2));
}

inline SurfaceState step_single(const SurfaceModel& model, const SurfaceState& state, double dt, NoiseSource& noise)
{
    if (!(dt > 0.0)) {
        throw Error(ErrorKind::BadParams, "dt must be positive");
    }
    const double xi1 = noise.normal();
    const double xi2 = noise.normal();
    return step_single(model, state, dt, xi1, xi2);
}

struct SingleRecord {
    double t;
    cplx z;
    Vec3 X;
    Vec3 m;
    double tau_gauss;
};

struct SingleSummary {
    SurfaceState final_state;
    double t = 0.0;
    long n_steps = 0;
    double tau_gauss = 0.0; // int |K| ds
    double gauss_qv = 0.0;  // sum of squared spherical increments of m
    bool boundary_is_genuine = false;
};

struct SingleResult {
    StopReason stop = StopReason::TimedOut;
    std::vector<SingleRecord> series;
    SingleSummary summary;
};

struct NoSingleObserver {
    void operator()(const SurfaceState&, const SurfaceState&, double, double) const {}
};

inline double spherical_distance(const Vec3& a, const Vec3& b)
{
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

/// Observer signature: obs(prev_state, next_state, dt, t_after).
template <class Observer = NoSingleObserver>
SingleResult run_single(const SurfaceModel& model, cplx z0, const StepControl& ctl, NoiseSource& noise,
                        Observer&& obs = Observer{})
{
    ctl.validate();
    SingleResult res;
    SurfaceState s = model.state_at(z0);
    double t = 0.0;
    long n = 0;
    double tau = 0.0, gqv = 0.0;
    res.series.push_back({t, s.z, s.X, s.m, tau});
    const double t_end = ctl.t_max * (1.0 - 1e-12);
    bool recorded = true;
    while (true) {
        if (t >= t_end) {
            res.stop = StopReason::TimedOut;
            break;
        }
        double dt = guarded_dt(model, s, ctl.dt_base, ctl);
        if (dt < 0.0) {
            res.stop = StopReason::NumericalGuard;
            break;
        }
        dt = std::min(dt, ctl.t_max - t);
        SurfaceState next;
        try {
            next = step_single(model, s, dt, noise);
        } catch (const DomainExit& e) {
            res.stop = StopReason::Boundary;
            res.summary.boundary_is_genuine = e.hit_boundary();
            break;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::DegenerateMetric) throw;
            res.stop = StopReason::NumericalGuard;
            break;
        }
        tau += std::abs(s.K) * dt;
        const double ds = spherical_distance(s.m, next.m);
        gqv += ds * ds;
        t += dt;
        ++n;
        obs(s, next, dt, t);
        s = next;
        recorded = false;
        if (n % ctl.sample_stride == 0) {
            res.series.push_back({t, s.z, s.X, s.m, tau});
            recorded = true;
        }
    }
    if (!recorded) {
        res.series.push_back({t, s.z, s.X, s.m, tau});
    }
    res.summary.final_state = s;
    res.summary.t = t;
    res.summary.n_steps = n;
    res.summary.tau_gauss = tau;
    res.summary.gauss_qv = gqv;
    return res;
}

//---------------------------------------------------------------------------//
// Coupled motion
//---------------------------------------------------------------------------//

struct CoupledState {
    SurfaceState x, y;
    double t = 0.0;
    double r = 0.0;
    double r_qv = 0.0;
    double tau_gauss_x = 0.0;
    double tau_gauss_y = 0.0;

    const Vec3& gauss_x() const { return x.m; }
    const Vec3& gauss_y() const { return y.m; }
};

inline CoupledState make_coupled_state(const SurfaceModel& M, const SurfaceModel& N, cplx zx, cplx zy)
{
    CoupledState cs;
    cs.x = M.state_at(zx);
    cs.y = N.state_at(zy);
    cs.r = (cs.x.X - cs.y.X).norm();
    return cs;
}

struct CoupledStepInfo {
    Configuration config;
    CouplingChoice choice;
    RatePair rates;
    double dt = 0.0;
    Vec3 delta_x; // tangent increments in R^3
    Vec3 delta_y;
};

/// One coupled step from a given standard normal vector xi.
inline CoupledState step_coupled(const SurfaceModel& M, const SurfaceModel& N, const CoupledState& cs, double dt,
                                 const std::array<double, 4>& xi, const Constants& c = {},
                                 CoupledStepInfo* info = nullptr)
{
    if (!(dt > 0.0)) {
        throw Error(ErrorKind::BadParams, "dt must be positive");
    }
    const Configuration cfg = compute_configuration(cs.x, cs.y, c);
    const CouplingChoice ch = choose_coupling(cfg, c);
    const double cc = std::sqrt(1.0 - ch.eps_hat * ch.eps_hat);
    const Mat2 O = isometry(ch);
    const Eigen::Vector2d eta = cc * O * Eigen::Vector2d(xi[0], xi[1]) + ch.eps_hat * Eigen::Vector2d(xi[2], xi[3]);
    const double sdt = std::sqrt(dt);
    const Vec3 dX = sdt * (xi[0] * cfg.alpha_dir + xi[1] * cfg.beta_dir);
    const Vec3 dY = sdt * (eta(0) * cfg.a_dir + eta(1) * cfg.b_dir);

    CoupledState out = cs;
    out.x = M.advance_state(cs.x, chart_increment(cs.x, dX));
    out.y = N.advance_state(cs.y, chart_increment(cs.y, dY));
    out.r = (out.x.X - out.y.X).norm();
    out.t = cs.t + dt;
    out.r_qv += (out.r - cs.r) * (out.r - cs.r);
    out.tau_gauss_x += std::abs(cs.x.K) * dt;
    out.tau_gauss_y += std::abs(cs.y.K) * dt;
    if (info) {
        info->config = cfg;
        info->choice = ch;
        info->rates = rate_pair(cfg.theta, cfg.phi, cfg.psi, ch.sigma, ch.A, cc);
        info->dt = dt;
        info->delta_x = dX;
        info->delta_y = dY;
    }
    return out;
}

inline CoupledState step_coupled(const SurfaceModel& M, const SurfaceModel& N, const CoupledState& cs, double dt,
                                 NoiseSource& noise, const Constants& c = {}, CoupledStepInfo* info = nullptr)
{
    return step_coupled(M, N, cs, dt, noise.normals<4>(), c, info);
}

/// Per-step adequacy bookkeeping: g <= f + tol and, where f > tol, g / f <= 1 + 2 tol.
struct DominationLedger {
    long steps = 0;
    long violations = 0;
    double max_violation = 0.0; // max(g - f), may be negative
    long ratio_checked = 0;
    long ratio_violations = 0;
    double max_ratio = 0.0;     // max(g / f) over f > tol
    long equality_steps = 0;    // |f - g| <= tol

    void record(const RatePair& rp, double tol)
    {
        const double f = rp.qv_rate, g = rp.drift_num;
        if (steps == 0 || g - f > max_violation) {
            max_violation = g - f;
        }
        ++steps;
        if (g > f + tol) ++violations;
        if (std::abs(f - g) <= tol) ++equality_steps;
        if (f > tol) {
            ++ratio_checked;
            const double ratio = g / f;
            max_ratio = std::max(max_ratio, ratio);
            if (ratio > 1.0 + 2.0 * tol) ++ratio_violations;
        }
    }

    void merge(const DominationLedger& o)
    {
        if (o.steps == 0) return;
        max_violation = steps == 0 ? o.max_violation : std::max(max_violation, o.max_violation);
        steps += o.steps;
        violations += o.violations;
        ratio_checked += o.ratio_checked;
        ratio_violations += o.ratio_violations;
        max_ratio = std::max(max_ratio, o.max_ratio);
        equality_steps += o.equality_steps;
    }
};

struct CoupledRecord {
    double t, r, theta, phi, psi, f, g, eps_hat;
    cplx zx, zy;
    Vec3 Xx, Xy;
};

struct CoupledSummary {
    CoupledState final_state;
    long n_steps = 0;
    double min_r = 0.0;
    double t_min_r = 0.0;
    bool boundary_is_genuine = false;
    DominationLedger ledger;
};

struct CoupledResult {
    StopReason stop = StopReason::TimedOut;
    std::vector<CoupledRecord> series;
    CoupledSummary summary;
};

struct NoCoupledObserver {
    void operator()(const CoupledState&, const CoupledState&, const CoupledStepInfo&) const {}
};

inline CoupledRecord make_record(const CoupledState& cs, const Constants& c)
{
    CoupledRecord rec{};
    rec.t = cs.t;
    rec.r = cs.r;
    rec.zx = cs.x.z;
    rec.zy = cs.y.z;
    rec.Xx = cs.x.X;
    rec.Xy = cs.y.X;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.theta = rec.phi = rec.psi = rec.f = rec.g = rec.eps_hat = nan;
    if (cs.r > c.r_min) {
        const Configuration cfg = compute_configuration(cs.x, cs.y, c);
        const CouplingChoice ch = choose_coupling(cfg, c);
        const RatePair rp = realized_rate_pair(cfg, ch);
        rec.theta = cfg.theta;
        rec.phi = cfg.phi;
        rec.psi = cfg.psi;
        rec.f = rp.qv_rate;
        rec.g = rp.drift_num;
        rec.eps_hat = ch.eps_hat;
    }
    return rec;
}

/// Step size for the next coupled step, or a negative value if the lambda
/// guard cannot be met.
inline double coupled_dt(const SurfaceModel& M, const SurfaceModel& N, const CoupledState& cs, const StepControl& ctl)
{
    double dt = ctl.dt_base;
    if (ctl.proximity_refinement && cs.r < ctl.refine_band * ctl.r_couple) {
        const double q = ctl.refine_band * ctl.r_couple / cs.r;
        dt /= std::min(std::max(1.0, q * q), ctl.max_refinement);
    }
    const double dx = guarded_dt(M, cs.x, dt, ctl);
    const double dy = guarded_dt(N, cs.y, dt, ctl);
    if (dx < 0.0 || dy < 0.0) {
        return -1.0;
    }
    return std::min({dx, dy, ctl.t_max - cs.t});
}

/// Smallest |X - Y| along the linear interpolation between two coupled states.
inline double segment_min_distance(const CoupledState& a, const CoupledState& b)
{
    const Vec3 d0 = a.x.X - a.y.X;
    const Vec3 dd = (b.x.X - b.y.X) - d0;
    const double len2 = dd.squaredNorm();
    if (!(len2 > 0.0)) {
        return std::min(a.r, b.r);
    }
    const double s = std::clamp(-d0.dot(dd) / len2, 0.0, 1.0);
    return (d0 + s * dd).norm();
}

/// Observer signature: obs(prev, next, step_info), called after every step.
template <class Observer = NoCoupledObserver>
CoupledResult run_coupled(const SurfaceModel& M, const SurfaceModel& N, cplx zx0, cplx zy0, const StepControl& ctl,
                          NoiseSource& noise, const Constants& c = {}, Observer&& obs = Observer{})
{
    ctl.validate();
    CoupledState cs = make_coupled_state(M, N, zx0, zy0);
    if (!(cs.r > ctl.r_couple)) {
        throw Error(ErrorKind::BadParams, "initial distance must exceed r_couple");
    }
    CoupledResult res;
    res.summary.min_r = cs.r;
    res.series.push_back(make_record(cs, c));
    const double t_end = ctl.t_max * (1.0 - 1e-12);
    long n = 0;
    bool recorded = true;
    CoupledStepInfo info;
    while (true) {
        if (cs.t >= t_end) {
            res.stop = StopReason::TimedOut;
            break;
        }
        const double dt = coupled_dt(M, N, cs, ctl);
        if (dt < 0.0) {
            res.stop = StopReason::NumericalGuard;
            break;
        }
        CoupledState next;
        try {
            next = step_coupled(M, N, cs, dt, noise, c, &info);
        } catch (const DomainExit& e) {
            res.stop = StopReason::Boundary;
            res.summary.boundary_is_genuine = e.hit_boundary();
            break;
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::ParticlesCoincident) {
                res.stop = StopReason::Coupled;
                break;
            }
            if (e.kind() == ErrorKind::DegenerateMetric) {
                res.stop = StopReason::NumericalGuard;
                break;
            }
            throw;
        }
        res.summary.ledger.record(info.rates, c.domination_tol);
        ++n;
        obs(cs, next, info);
        const double r_path = ctl.segment_detection ? segment_min_distance(cs, next) : next.r;
        cs = next;
        recorded = false;
        if (r_path < res.summary.min_r) {
            res.summary.min_r = r_path;
            res.summary.t_min_r = cs.t;
        }
        if (r_path <= ctl.r_couple) {
            res.stop = StopReason::Coupled;
            break;
        }
        if (n % ctl.sample_stride == 0) {
            res.series.push_back(make_record(cs, c));
            recorded = true;
        }
    }
    if (!recorded) {
        res.series.push_back(make_record(cs, c));
    }
    res.summary.final_state = cs;
    res.summary.n_steps = n;
    return res;
}

/// Sum of squared successive increments.
inline double estimate_qv(const std::vector<double>& xs)
{
    if (xs.size() < 2) {
        throw Error(ErrorKind::TooFewSamples, "estimate_qv needs at least two samples");
    }
    double s = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const double d = xs[i] - xs[i - 1];
        s += d * d;
    }
    return s;
}

} // namespace mincouple
