#pragma once

// Pointwise coupling algebra.  A coupling at (x, y) is an isometry
//   O = [[A cos s, A sin s], [-sin s, cos s]],  (da, db) = O (dalpha, dbeta),
// optionally mixed with independent noise on N at level eps_hat.  The distance
// r = |x - y| then has  d<r> = f dt  and drift  g / (2 r).

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "mincouple/configuration.hpp"
#include "mincouple/constants.hpp"
#include "mincouple/errors.hpp"

namespace mincouple {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;

struct CouplingChoice {
    int A = -1;
    double sigma = 0.0;
    double eps_hat = 0.0;
};

struct RatePair {
    double qv_rate = 0.0;   // f
    double drift_num = 0.0; // g
};

inline double wrap_two_pi(double s)
{
    double w = std::fmod(s, two_pi);
    if (w < 0.0) w += two_pi;
    if (w >= two_pi) w -= two_pi;
    return w;
}

/// f and g for the isometry (A, sigma), cross-variations scaled by `c`
/// (c = sqrt(1 - eps_hat^2); c = 1 is the unperturbed coupling).
inline RatePair rate_pair(double theta, double phi, double psi, double sigma, int A, double c = 1.0)
{
    const double st = std::sin(theta), ct = std::cos(theta);
    const double sp = std::sin(phi), cp = std::cos(phi);
    const double ss = std::sin(psi), cs = std::cos(psi);
    const double sg = std::sin(sigma), cg = std::cos(sigma);
    const double a = static_cast<double>(A);
    RatePair rp;
    rp.qv_rate = st * st + sp * sp - 2.0 * c * a * st * sp * cg;
    rp.drift_num = 2.0 + ct * ct + cp * cp - 2.0 * c * cg * (a * ct * cp * cs + cs)
                   + 2.0 * c * sg * (a * cp * ss + ct * ss);
    return rp;
}

struct SigmaCoefficients {
    double c1, c2;
};

inline SigmaCoefficients sigma_coefficients(double theta, double phi, double psi, int A)
{
    const double st = std::sin(theta), ct = std::cos(theta);
    const double sp = std::sin(phi), cp = std::cos(phi);
    const double ss = std::sin(psi), cs = std::cos(psi);
    const double a = static_cast<double>(A);
    return {a * ct * cp * cs + cs - a * st * sp, -(a * cp * ss + ct * ss)};
}

/// f - g = -2cos^2(theta) - 2cos^2(phi) + 2 (c1 cos(sigma) + c2 sin(sigma)) for fixed A.
inline double optimal_sigma(double theta, double phi, double psi, int A)
{
    const auto [c1, c2] = sigma_coefficients(theta, phi, psi, A);
    if (std::hypot(c1, c2) <= 1e-14) {
        return 0.0;
    }
    return wrap_two_pi(std::atan2(c2, c1));
}

/// Maximum of f - g over sigma for a fixed branch A.
inline double branch_max(double theta, double phi, double psi, int A)
{
    const auto [c1, c2] = sigma_coefficients(theta, phi, psi, A);
    const double ct = std::cos(theta), cp = std::cos(phi);
    return -2.0 * ct * ct - 2.0 * cp * cp + 2.0 * std::hypot(c1, c2);
}

/// Tie-break on Sigma_0: the orientation-reversing branch.
inline int select_on_sigma0(const Configuration&) { return -1; }

struct GapMax {
    double value;
    int A_star;
    double sigma_star;
};

inline GapMax gap_max(double theta, double phi, double psi, double tol_sigma = Constants{}.tol_sigma)
{
    const double st = std::sin(theta), ct = std::cos(theta);
    const double sp = std::sin(phi), cp = std::cos(phi);
    const double ss = std::sin(psi), cs = std::cos(psi);
    const double h = ct * cp - cs * st * sp;
    const double S = cs * cs * (1.0 + ct * ct * cp * cp) + ss * ss * (ct * ct + cp * cp) + st * st * sp * sp
                     - 2.0 * ct * cp * cs * st * sp;
    GapMax out;
    out.value = -2.0 * ct * ct - 2.0 * cp * cp + 2.0 * std::sqrt(std::max(0.0, S + 2.0 * std::abs(h)));
    out.A_star = std::abs(h) <= tol_sigma ? -1 : (h > 0.0 ? 1 : -1);
    out.sigma_star = optimal_sigma(theta, phi, psi, out.A_star);
    return out;
}

inline GapMax gap_max(const Configuration& cfg, double tol_sigma = Constants{}.tol_sigma)
{
    GapMax g = gap_max(cfg.theta, cfg.phi, cfg.psi, tol_sigma);
    if (cfg.region == Region::Sigma0 || cfg.region == Region::SigmaE) {
        g.A_star = select_on_sigma0(cfg);
        g.sigma_star = optimal_sigma(cfg.theta, cfg.phi, cfg.psi, g.A_star);
    }
    return g;
}

/// Brute-force maximum of f - g over an n-point sigma grid and both A.
inline double brute_force_gap(double theta, double phi, double psi, int n_sigma = 4096)
{
    double best = -std::numeric_limits<double>::infinity();
    for (int A : {1, -1}) {
        for (int i = 0; i < n_sigma; ++i) {
            const double sigma = two_pi * static_cast<double>(i) / static_cast<double>(n_sigma);
            const RatePair rp = rate_pair(theta, phi, psi, sigma, A);
            best = std::max(best, rp.qv_rate - rp.drift_num);
        }
    }
    return best;
}

//---------------------------------------------------------------------------//
// Frame-based optimum (orthogonal Procrustes over both components of O(2))
//---------------------------------------------------------------------------//

struct ProcrustesResult {
    double value;
    CouplingChoice choice;
};

inline ProcrustesResult procrustes_optimal(const Configuration& cfg, double tol_tie = Constants{}.tol_sigma)
{
    Eigen::Matrix<double, 2, 3> Mm, Nm;
    Mm.row(0) = cfg.alpha_dir.transpose();
    Mm.row(1) = cfg.beta_dir.transpose();
    Nm.row(0) = cfg.a_dir.transpose();
    Nm.row(1) = cfg.b_dir.transpose();
    const Vec3& e3 = cfg.axes.e3;
    const Mat3 refl = Mat3::Identity() - 2.0 * e3 * e3.transpose();
    const Mat2 C = Nm * refl * Mm.transpose();
    const double constant = 2.0 * (Mm * e3).squaredNorm() + 2.0 * (Nm * e3).squaredNorm() - 4.0;

    const double rot = std::hypot(C(0, 0) + C(1, 1), C(1, 0) - C(0, 1));
    const double ref = std::hypot(C(0, 0) - C(1, 1), C(0, 1) + C(1, 0));

    ProcrustesResult out;
    const bool use_reflection = ref >= rot - tol_tie;
    if (use_reflection) {
        const double t = std::atan2(C(0, 1) + C(1, 0), C(0, 0) - C(1, 1));
        out.choice.A = -1;
        out.choice.sigma = ref <= 1e-14 ? 0.0 : wrap_two_pi(t + pi);
    } else {
        const double t = std::atan2(C(1, 0) - C(0, 1), C(0, 0) + C(1, 1));
        out.choice.A = 1;
        out.choice.sigma = rot <= 1e-14 ? 0.0 : wrap_two_pi(-t);
    }
    out.value = constant + 2.0 * std::max(rot, ref);
    return out;
}

//---------------------------------------------------------------------------//
// Perturbation and dispersion
//---------------------------------------------------------------------------//

inline double bump(double s) { return std::abs(s) < 1.0 ? (1.0 - s * s) * (1.0 - s * s) : 0.0; }

inline double eps_hat(double h, double gap, const Constants& c = {})
{
    return c.eps_max * bump(h / c.eps_delta) * std::clamp(gap / c.eps_kappa, 0.0, 1.0);
}

inline double eps_hat(const Configuration& cfg, const Constants& c = {})
{
    return eps_hat(cfg.h, gap_max(cfg.theta, cfg.phi, cfg.psi, c.tol_sigma).value, c);
}

/// The coupling used by the engine: optimal branch and angle, plus eps_hat.
inline CouplingChoice choose_coupling(const Configuration& cfg, const Constants& c = {})
{
    const GapMax g = gap_max(cfg, c.tol_sigma);
    return {g.A_star, g.sigma_star, eps_hat(cfg.h, g.value, c)};
}

inline RatePair realized_rate_pair(const Configuration& cfg, const CouplingChoice& ch)
{
    const double c = std::sqrt(std::max(0.0, 1.0 - ch.eps_hat * ch.eps_hat));
    return rate_pair(cfg.theta, cfg.phi, cfg.psi, ch.sigma, ch.A, c);
}

inline Mat2 isometry(const CouplingChoice& ch)
{
    const double a = static_cast<double>(ch.A);
    Mat2 O;
    O << a * std::cos(ch.sigma), a * std::sin(ch.sigma), -std::sin(ch.sigma), std::cos(ch.sigma);
    return O;
}

struct Dispersion {
    Mat4 a; // diffusion matrix in (alpha, beta, a, b)
    Mat4 B; // B B^T = a
};

/// Valid for eps_hat in [0, 1]; the closed interval is admitted for tests.
inline Dispersion dispersion(const CouplingChoice& ch)
{
    if (!(ch.eps_hat >= 0.0 && ch.eps_hat <= 1.0) || (ch.A != 1 && ch.A != -1)) {
        throw Error(ErrorKind::BadParams, "coupling choice out of range");
    }
    const double c = std::sqrt(1.0 - ch.eps_hat * ch.eps_hat);
    const Mat2 O = isometry(ch);
    Dispersion d;
    d.a.setZero();
    d.a.topLeftCorner<2, 2>().setIdentity();
    d.a.bottomRightCorner<2, 2>().setIdentity();
    d.a.topRightCorner<2, 2>() = c * O.transpose();
    d.a.bottomLeftCorner<2, 2>() = c * O;
    d.B.setZero();
    d.B.topLeftCorner<2, 2>().setIdentity();
    d.B.bottomLeftCorner<2, 2>() = c * O;
    d.B.bottomRightCorner<2, 2>() = ch.eps_hat * Mat2::Identity();
    return d;
}

/// Gamma(v, v) for the unperturbed coupling; v in the (alpha, beta, a, b) basis.
inline double gamma_form(const CouplingChoice& ch, const Vec4& v)
{
    const double a = static_cast<double>(ch.A);
    const double cg = std::cos(ch.sigma), sg = std::sin(ch.sigma);
    const double p = v(0) + a * cg * v(2) - sg * v(3);
    const double q = v(1) + a * sg * v(2) + cg * v(3);
    return p * p + q * q;
}

/// Gradient of z_i(x - y) in the (alpha, beta, a, b) basis.
inline Vec4 coordinate_gradient(const Configuration& cfg, const Vec3& e)
{
    return Vec4(e.dot(cfg.alpha_dir), e.dot(cfg.beta_dir), -e.dot(cfg.a_dir), -e.dot(cfg.b_dir));
}

} // namespace mincouple
