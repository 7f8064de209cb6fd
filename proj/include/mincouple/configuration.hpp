#pragma once

// Adapted frame and canonical angles (theta, phi, psi) for a pair of points,
// one on each surface.  z3 points along x - y; the tangent frames satisfy
//
//   P_M e3 = sin(theta) alpha          P_N e3 = sin(phi) a
//   P_M e1 = cos(theta) alpha          P_N e1 = cos(phi)cos(psi) a + sin(psi) b
//   P_M e2 = beta                      P_N e2 = -cos(phi)sin(psi) a + cos(psi) b
//
// The canonical ranges are reached by reflecting e1 and/or e2 when needed, so
// (e1, e2, e3) is orthonormal but not always right-handed.

#include <algorithm>
#include <cmath>

#include "mincouple/constants.hpp"
#include "mincouple/errors.hpp"
#include "mincouple/surface_geometry.hpp"

namespace mincouple {

struct AdaptedAxes {
    Vec3 e1, e2, e3;
};

enum class Region { SigmaPlus, SigmaMinus, Sigma0, SigmaE };

inline const char* to_string(Region r)
{
    switch (r) {
    case Region::SigmaPlus: return "SigmaPlus";
    case Region::SigmaMinus: return "SigmaMinus";
    case Region::Sigma0: return "Sigma0";
    case Region::SigmaE: return "SigmaE";
    }
    return "?";
}

struct Configuration {
    double r = 0.0;
    double theta = 0.0, phi = 0.0, psi = 0.0;
    AdaptedAxes axes;
    Vec3 alpha_dir, beta_dir; // T_x M
    Vec3 a_dir, b_dir;        // T_y N
    Vec3 normal_x, normal_y;
    bool theta_degenerate = false;
    bool phi_degenerate = false;
    double h = 0.0;
    Region region = Region::SigmaPlus;
};

struct RegionInfo {
    double h;
    Region region;
};

inline RegionInfo classify_region(double theta, double phi, double psi,
                                  double tol_sigma = Constants{}.tol_sigma)
{
    const double h = std::cos(theta) * std::cos(phi) - std::cos(psi) * std::sin(theta) * std::sin(phi);
    Region region;
    if (std::abs(psi) <= tol_sigma && std::abs(theta + phi - half_pi) <= tol_sigma) {
        region = Region::SigmaE;
    } else if (std::abs(h) <= tol_sigma) {
        region = Region::Sigma0;
    } else {
        region = h > 0.0 ? Region::SigmaPlus : Region::SigmaMinus;
    }
    return {h, region};
}

namespace detail {

// Applied twice to q / |q|: for small |q| the quotient drifts off the tangent
// plane by ~1e-16 / |q|.
inline Vec3 tangential(const Vec3& v, const Vec3& normal) { return v - v.dot(normal) * normal; }

inline Vec3 deterministic_perp(const Vec3& e3)
{
    const Vec3 ex(1.0, 0.0, 0.0), ey(0.0, 1.0, 0.0);
    Vec3 c = e3.cross(ex);
    if (c.norm() < 1e-6) {
        c = e3.cross(ey);
    }
    return c.normalized();
}

/// Unit horizontal (perpendicular to e3) direction of a = q / |q|.  Near
/// phi = pi/2 the horizontal part of a is tiny and is recovered from the
/// horizontal part of n instead: horiz(a) = -(e3.n) horiz(n) / |q|.
inline Vec3 horizontal_dir_of_a(const Vec3& e3, const Vec3& n, const Vec3& a)
{
    const double en = e3.dot(n);
    const Vec3 ha = a - a.dot(e3) * e3;
    const Vec3 hn = n - en * e3;
    if (ha.norm() >= hn.norm()) {
        return ha.normalized();
    }
    return (en > 0.0 ? -1.0 : 1.0) * hn.normalized();
}

/// Unit vector along +-(normal x first), signed so that its dot with `ref` is >= 0.
inline Vec3 complete_frame(const Vec3& normal, const Vec3& first, const Vec3& ref)
{
    Vec3 second = normal.cross(first).normalized();
    if (second.dot(ref) < 0.0) {
        second = -second;
    }
    return second;
}

} // namespace detail

inline Configuration compute_configuration(const Vec3& X_x, const Vec3& m, const Vec3& X_y, const Vec3& n,
                                           const Constants& c = {})
{
    Configuration cfg;
    const Vec3 d = X_x - X_y;
    cfg.r = d.norm();
    if (!(cfg.r > c.r_min)) {
        throw Error(ErrorKind::ParticlesCoincident, "particles closer than r_min");
    }
    cfg.normal_x = m;
    cfg.normal_y = n;
    const Vec3 e3 = d / cfg.r;
    Vec3 e1, e2;

    // M side
    const Vec3 p = detail::tangential(e3, m);
    const Vec3 q = detail::tangential(e3, n);
    const double np = p.norm(), nq = q.norm();
    cfg.theta_degenerate = !(np > c.tol_deg);
    cfg.phi_degenerate = !(nq > c.tol_deg);

    if (!cfg.theta_degenerate) {
        cfg.theta = std::atan2(np, std::abs(e3.dot(m)));
        cfg.alpha_dir = detail::tangential(p / np, m).normalized();
        cfg.beta_dir = m.cross(cfg.alpha_dir);
        e2 = cfg.beta_dir;
        e1 = e2.cross(e3);
        if (e1.dot(cfg.alpha_dir) < 0.0) {
            e1 = -e1;
        }
    } else {
        cfg.theta = 0.0;
        if (!cfg.phi_degenerate) {
            // frame read off the N side
            const Vec3 a = detail::tangential(q / nq, n).normalized();
            if (std::abs(e3.dot(n)) >= c.tol_cos) {
                e1 = detail::horizontal_dir_of_a(e3, n, a);
                e2 = e3.cross(e1);
            } else {
                e2 = n.cross(a).normalized();
                e1 = e2.cross(e3);
            }
        } else {
            e2 = detail::deterministic_perp(e3);
            e1 = e2.cross(e3);
        }
        cfg.alpha_dir = detail::tangential(e1, m).normalized();
        cfg.beta_dir = detail::complete_frame(m, cfg.alpha_dir, e2);
    }

    // N side
    if (cfg.theta_degenerate || cfg.phi_degenerate) {
        cfg.psi = 0.0;
        if (cfg.phi_degenerate) {
            cfg.phi = 0.0;
            cfg.a_dir = detail::tangential(e1, n).normalized();
        } else {
            cfg.phi = std::atan2(nq, std::abs(e3.dot(n)));
            cfg.a_dir = detail::tangential(q / nq, n).normalized();
        }
        cfg.b_dir = detail::complete_frame(n, cfg.a_dir, e2);
    } else {
        cfg.phi = std::atan2(nq, std::abs(e3.dot(n)));
        cfg.a_dir = detail::tangential(q / nq, n).normalized();
        if (std::abs(e3.dot(n)) >= c.tol_cos) {
            const Vec3 u = detail::horizontal_dir_of_a(e3, n, cfg.a_dir);
            if (u.dot(e2) > 0.0) {
                // reflect z2 so that sin(psi) >= 0
                e2 = -e2;
                cfg.beta_dir = -cfg.beta_dir;
            }
            const double u1 = u.dot(e1), u2 = u.dot(e2);
            cfg.psi = std::atan2(-u2, u1);
            // the horizontal unit vector perpendicular to u is +-(n x a)
            cfg.b_dir = (-u2 * e1 + u1 * e2).normalized();
        } else {
            // a is (nearly) e3: read psi from the z1 row
            const Vec3 nxa = n.cross(cfg.a_dir).normalized();
            cfg.b_dir = nxa.dot(e1) >= 0.0 ? nxa : Vec3(-nxa);
            cfg.psi = std::atan2(cfg.b_dir.dot(e1), cfg.b_dir.dot(e2));
        }
        cfg.psi = std::clamp(cfg.psi, 0.0, pi);
    }

    cfg.axes = {e1, e2, e3};
    const RegionInfo ri = classify_region(cfg.theta, cfg.phi, cfg.psi, c.tol_sigma);
    cfg.h = ri.h;
    cfg.region = ri.region;
    return cfg;
}

inline Configuration compute_configuration(const SurfaceState& xs, const SurfaceState& ys, const Constants& c = {})
{
    return compute_configuration(xs.X, xs.m, ys.X, ys.m, c);
}

/// Largest violation of the frame reconstruction identities (0 when exact).
inline double reconstruction_error(const Configuration& cfg)
{
    const auto& [e1, e2, e3] = cfg.axes;
    auto proj = [](const Vec3& v, const Vec3& d1, const Vec3& d2) { return Vec3(v.dot(d1) * d1 + v.dot(d2) * d2); };
    const double ct = std::cos(cfg.theta), st = std::sin(cfg.theta);
    const double cp = std::cos(cfg.phi), sp = std::sin(cfg.phi);
    const double cs = std::cos(cfg.psi), ss = std::sin(cfg.psi);
    double err = 0.0;
    err = std::max(err, (proj(e3, cfg.alpha_dir, cfg.beta_dir) - st * cfg.alpha_dir).norm());
    err = std::max(err, (proj(e1, cfg.alpha_dir, cfg.beta_dir) - ct * cfg.alpha_dir).norm());
    err = std::max(err, (proj(e2, cfg.alpha_dir, cfg.beta_dir) - cfg.beta_dir).norm());
    err = std::max(err, (proj(e3, cfg.a_dir, cfg.b_dir) - sp * cfg.a_dir).norm());
    err = std::max(err, (proj(e1, cfg.a_dir, cfg.b_dir) - (cp * cs * cfg.a_dir + ss * cfg.b_dir)).norm());
    err = std::max(err, (proj(e2, cfg.a_dir, cfg.b_dir) - (-cp * ss * cfg.a_dir + cs * cfg.b_dir)).norm());
    return err;
}

//---------------------------------------------------------------------------//
// Second fundamental form data in a tangent frame
//---------------------------------------------------------------------------//

struct ShapeData {
    double k = 0.0; // sqrt(-K)
    double s = 0.0; // phase in [0, 2 pi)
};

/// Derivative of the inverse stereographic projection at w in the direction dw.
inline Vec3 gauss_normal_derivative(cplx w, cplx dw)
{
    const double x = w.real(), y = w.imag();
    const double d = 1.0 + x * x + y * y;
    const double d2 = d * d;
    const Vec3 mx(2.0 / d - 4.0 * x * x / d2, -4.0 * x * y / d2, 4.0 * x / d2);
    const Vec3 my(-4.0 * x * y / d2, 2.0 / d - 4.0 * y * y / d2, 4.0 * y / d2);
    return dw.real() * mx + dw.imag() * my;
}

/// Directional derivative of the unit normal along a unit tangent vector.
inline Vec3 normal_derivative(const SurfaceModel& model, const SurfaceState& st, const Vec3& dir)
{
    const double sl = std::sqrt(st.lambda);
    const double c1 = dir.dot(st.frame_u) / sl;
    const double c2 = dir.dot(st.frame_v) / sl;
    const Vec3 m_u = gauss_normal_derivative(st.wg, st.wg_deriv);
    const Vec3 m_v = gauss_normal_derivative(st.wg, I_unit * st.wg_deriv);
    return model.placement().rotate(c1 * m_u + c2 * m_v) / sl;
}

inline ShapeData shape_data(const SurfaceModel& model, const SurfaceState& st, const Vec3& dir1, const Vec3& dir2)
{
    ShapeData sd;
    sd.k = std::sqrt(std::max(0.0, -st.K));
    if (sd.k == 0.0) {
        return sd;
    }
    const Vec3 dm = normal_derivative(model, st, dir1);
    double s = std::atan2(dm.dot(dir2), dm.dot(dir1));
    if (s < 0.0) s += two_pi;
    if (s >= two_pi) s -= two_pi;
    sd.s = s;
    return sd;
}

//---------------------------------------------------------------------------//
// First derivatives of the angles on Sigma_e
//---------------------------------------------------------------------------//

struct ConfigDerivatives {
    double d_alpha_sum; // D_alphabar (theta + phi)
    double d_beta_sum;  // D_betabar (theta + phi)
    double d_alpha_psi; // D_alphabar psi (signed psi, see below)
    double d_beta_psi;  // D_betabar psi
};

/// Derivatives along the coupled directions alphabar = alpha + A a,
/// betabar = beta + b (sigma = 0).  psi is differentiated as a signed angle,
/// since it sits at the edge of its range on Sigma_e.  The sign factors fold
/// the orientation of the returned frames into the formulas.
inline ConfigDerivatives config_derivatives(const Configuration& cfg, const ShapeData& sm, const ShapeData& sn,
                                            int A)
{
    if (cfg.region != Region::SigmaE || !(cfg.theta > 0.0) || cfg.theta_degenerate || cfg.phi_degenerate) {
        throw Error(ErrorKind::NotOnSigmaE, "config_derivatives needs a Sigma_e configuration with theta > 0");
    }
    if (A != 1 && A != -1) {
        throw Error(ErrorKind::BadParams, "A must be +1 or -1");
    }
    const auto& [e1, e2, e3] = cfg.axes;
    const double s_m = cfg.normal_x.dot(e3) >= 0.0 ? 1.0 : -1.0;
    const double s_n = cfg.normal_y.dot(e3) >= 0.0 ? 1.0 : -1.0;
    const double s_b = cfg.beta_dir.dot(e3.cross(e1)) >= 0.0 ? 1.0 : -1.0;
    const double k1c = s_m * sm.k * std::cos(sm.s), k1s = s_m * sm.k * std::sin(sm.s);
    const double k2c = s_n * sn.k * std::cos(sn.s), k2s = s_n * sn.k * std::sin(sn.s);
    const double st = std::sin(cfg.theta), ct = std::cos(cfg.theta);
    const double sp = std::sin(cfg.phi);
    const double a = static_cast<double>(A);

    ConfigDerivatives out;
    out.d_alpha_sum = (2.0 / cfg.r) * (ct - a * st) - k1c - a * k2c;
    out.d_beta_sum = -k1s - k2s;
    out.d_alpha_psi = s_b * (-k1s / st + a * k2s / sp);
    out.d_beta_psi = s_b * (k1c / st - k2c / sp);
    return out;
}

} // namespace mincouple
