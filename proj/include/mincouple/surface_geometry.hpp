#pragma once

// Minimal surfaces in R^3 given by Weierstrass data (wf, wg) on a planar chart.
//
// Conventions:
//   Phi(z)  = ( wf (1 - wg^2) / 2,  i wf (1 + wg^2) / 2,  wf wg )
//   X_u     = Re Phi,  X_v = -Im Phi        (so X = Re \int Phi dz)
//   lambda  = ( |wf| (1 + |wg|^2) / 2 )^2   (|X_u|^2 = |X_v|^2 = lambda)
//   K       = -( 4 |wg'| / (|wf| (1 + |wg|^2)^2) )^2
//   m       = inverse stereographic projection of wg, which equals
//             X_u x X_v / |X_u x X_v| with the conventions above.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "mincouple/constants.hpp"
#include "mincouple/errors.hpp"

namespace mincouple {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr cplx I_unit{0.0, 1.0};

//---------------------------------------------------------------------------//
// Pointwise formulas
//---------------------------------------------------------------------------//

/// Inverse stereographic projection: the unit normal with Gauss-map value w.
inline Vec3 gauss_normal(cplx w)
{
    const double n2 = std::norm(w);
    if (!std::isfinite(n2)) {
        return Vec3(0.0, 0.0, 1.0);
    }
    const double d = 1.0 + n2;
    return Vec3(2.0 * w.real() / d, 2.0 * w.imag() / d, (n2 - 1.0) / d);
}

inline void check_metric(cplx wf_val, double guard)
{
    if (!(std::abs(wf_val) >= guard)) {
        throw Error(ErrorKind::DegenerateMetric, "|wf| below metric guard");
    }
}

inline double conformal_factor(cplx wf_val, cplx wg_val, double guard = Constants{}.metric_guard)
{
    check_metric(wf_val, guard);
    const double s = std::abs(wf_val) * (1.0 + std::norm(wg_val)) / 2.0;
    return s * s;
}

inline double curvature(cplx wf_val, cplx wg_val, cplx wg_deriv_val,
                        double guard = Constants{}.metric_guard)
{
    check_metric(wf_val, guard);
    const double d = 1.0 + std::norm(wg_val);
    const double s = 4.0 * std::abs(wg_deriv_val) / (std::abs(wf_val) * d * d);
    return -(s * s);
}

struct Frame {
    Vec3 u;
    Vec3 v;
};

/// Coordinate frame (X_u, X_v) of the immersion.
inline Frame immersion_differential(cplx wf_val, cplx wg_val,
                                    double guard = Constants{}.metric_guard)
{
    check_metric(wf_val, guard);
    const cplx g2 = wg_val * wg_val;
    const cplx p1 = wf_val * (1.0 - g2) / 2.0;
    const cplx p2 = I_unit * wf_val * (1.0 + g2) / 2.0;
    const cplx p3 = wf_val * wg_val;
    return {Vec3(p1.real(), p2.real(), p3.real()), Vec3(-p1.imag(), -p2.imag(), -p3.imag())};
}

/// Re( Phi(z) dz ) for Weierstrass values taken at the point where Phi is evaluated.
inline Vec3 immersion_increment(cplx wf_val, cplx wg_val, cplx dz)
{
    const cplx g2 = wg_val * wg_val;
    const cplx p1 = wf_val * (1.0 - g2) / 2.0 * dz;
    const cplx p2 = I_unit * wf_val * (1.0 + g2) / 2.0 * dz;
    const cplx p3 = wf_val * wg_val * dz;
    return Vec3(p1.real(), p2.real(), p3.real());
}

//---------------------------------------------------------------------------//
// Chart domains
//---------------------------------------------------------------------------//

struct ChartDomain {
    enum class Kind { Disk, Annulus, Rectangle, Sector };

    Kind kind = Kind::Disk;
    double r_in = 0.0;   // Annulus, Sector
    double r_out = std::numeric_limits<double>::infinity(); // Disk radius, Annulus, Sector
    double u_min = 0.0, u_max = 0.0, v_min = 0.0, v_max = 0.0; // Rectangle
    double arg_min = -pi, arg_max = pi; // Sector, principal arguments
    bool has_boundary = false;          // domain edge is a boundary of the surface

    static ChartDomain disk(double radius, bool boundary = false)
    {
        ChartDomain d;
        d.kind = Kind::Disk;
        d.r_out = radius;
        d.has_boundary = boundary;
        return d;
    }

    static ChartDomain annulus(double r_in, double r_out, bool boundary = false)
    {
        ChartDomain d;
        d.kind = Kind::Annulus;
        d.r_in = r_in;
        d.r_out = r_out;
        d.has_boundary = boundary;
        return d;
    }

    static ChartDomain rectangle(double u_min, double u_max, double v_min, double v_max,
                                 bool boundary = false)
    {
        ChartDomain d;
        d.kind = Kind::Rectangle;
        d.u_min = u_min;
        d.u_max = u_max;
        d.v_min = v_min;
        d.v_max = v_max;
        d.has_boundary = boundary;
        return d;
    }

    static ChartDomain sector(double r_in, double r_out, double arg_min, double arg_max,
                              bool boundary = false)
    {
        ChartDomain d;
        d.kind = Kind::Sector;
        d.r_in = r_in;
        d.r_out = r_out;
        d.arg_min = arg_min;
        d.arg_max = arg_max;
        d.has_boundary = boundary;
        return d;
    }

    bool contains(cplx z) const
    {
        switch (kind) {
        case Kind::Disk: return std::abs(z) < r_out;
        case Kind::Annulus: {
            const double a = std::abs(z);
            return a > r_in && a < r_out;
        }
        case Kind::Rectangle:
            return z.real() > u_min && z.real() < u_max && z.imag() > v_min && z.imag() < v_max;
        case Kind::Sector: {
            const double a = std::abs(z);
            const double t = std::arg(z);
            return a > r_in && a < r_out && t > arg_min && t < arg_max;
        }
        }
        return false;
    }

    /// A representative interior point.
    cplx center() const
    {
        switch (kind) {
        case Kind::Disk: return {0.0, 0.0};
        case Kind::Annulus: return {std::isfinite(r_out) ? 0.5 * (r_in + r_out) : r_in + 1.0, 0.0};
        case Kind::Rectangle: return {0.5 * (u_min + u_max), 0.5 * (v_min + v_max)};
        case Kind::Sector:
            return std::polar(std::isfinite(r_out) ? 0.5 * (r_in + r_out) : r_in + 1.0, 0.5 * (arg_min + arg_max));
        }
        return {};
    }

    bool contains_origin() const { return contains(cplx(0.0, 0.0)); }

    void validate() const
    {
        auto bad = [](const char* msg) { throw Error(ErrorKind::BadParams, msg); };
        switch (kind) {
        case Kind::Disk:
            if (!(r_out > 0.0)) bad("disk radius must be positive");
            break;
        case Kind::Annulus:
            if (!(r_in >= 0.0 && r_in < r_out)) bad("annulus radii must satisfy 0 <= r_in < r_out");
            break;
        case Kind::Rectangle:
            if (!(u_min < u_max && v_min < v_max)) bad("rectangle bounds must be ordered");
            break;
        case Kind::Sector:
            if (!(r_in >= 0.0 && r_in < r_out)) bad("sector radii must satisfy 0 <= r_in < r_out");
            if (!(arg_min < arg_max && arg_min >= -pi && arg_max <= pi)) {
                bad("sector arguments must be ordered within [-pi, pi]");
            }
            break;
        }
    }

    /// Uniform-ish random interior point; unbounded disks are sampled within `cap`.
    template <class Rng>
    cplx sample(Rng& rng, double cap = 4.0) const
    {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        switch (kind) {
        case Kind::Disk: {
            const double R = std::min(r_out, cap);
            return std::polar(R * std::sqrt(unit(rng)) * (1.0 - 1e-9), two_pi * unit(rng));
        }
        case Kind::Annulus:
        case Kind::Sector: {
            const double lo = r_in, hi = std::min(r_out, std::max(cap, 2.0 * r_in + 1.0));
            const double a = lo + (hi - lo) * (1e-6 + (1.0 - 2e-6) * unit(rng));
            const double t0 = kind == Kind::Sector ? arg_min : -pi;
            const double t1 = kind == Kind::Sector ? arg_max : pi;
            return std::polar(a, t0 + (t1 - t0) * (1e-6 + (1.0 - 2e-6) * unit(rng)));
        }
        case Kind::Rectangle:
            return {u_min + (u_max - u_min) * (1e-6 + (1.0 - 2e-6) * unit(rng)),
                    v_min + (v_max - v_min) * (1e-6 + (1.0 - 2e-6) * unit(rng))};
        }
        return {};
    }
};

//---------------------------------------------------------------------------//
// Weierstrass data, rigid placement, surface state
//---------------------------------------------------------------------------//

struct WeierstrassPair {
    std::function<cplx(cplx)> wf;
    std::function<cplx(cplx)> wg;
    std::function<cplx(cplx)> wg_deriv;
    ChartDomain domain;
};

/// Proper rigid motion X -> R X + T applied to a surface.
struct RigidMotion {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
    Vec3 rotate(const Vec3& v) const { return rotation * v; }

    RigidMotion then(const RigidMotion& outer) const
    {
        return {outer.rotation * rotation, outer.rotation * translation + outer.translation};
    }

    static RigidMotion axis_angle(const Vec3& axis, double angle, const Vec3& translation = Vec3::Zero())
    {
        RigidMotion r;
        r.rotation = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
        r.translation = translation;
        return r;
    }

    void validate() const
    {
        const double orth = (rotation * rotation.transpose() - Mat3::Identity()).norm();
        if (!(orth < 1e-9) || !(rotation.determinant() > 0.0) || !translation.allFinite()) {
            throw Error(ErrorKind::BadParams, "placement must be a proper rotation plus translation");
        }
    }
};

struct SurfaceState {
    cplx z;
    Vec3 X;         // world position
    Vec3 m;         // unit normal, gauss_normal(wg) rotated by the placement
    double lambda = 1.0;
    double K = 0.0;
    Vec3 frame_u;   // X_u
    Vec3 frame_v;   // X_v

    // Weierstrass values at z and the unplaced position (for exact immersions)
    cplx wf, wg, wg_deriv;
    Vec3 x_local;
};

enum class SurfaceKind { Plane, Enneper, Catenoid, Helicoid, GenericWeierstrass };

inline const char* to_string(SurfaceKind k)
{
    switch (k) {
    case SurfaceKind::Plane: return "plane";
    case SurfaceKind::Enneper: return "enneper";
    case SurfaceKind::Catenoid: return "catenoid";
    case SurfaceKind::Helicoid: return "helicoid";
    case SurfaceKind::GenericWeierstrass: return "generic";
    }
    return "unknown";
}

struct SurfaceParams {
    std::optional<ChartDomain> domain; // default depends on the kind
    std::optional<bool> boundary;      // overrides domain.has_boundary
    RigidMotion placement{};
};

class SurfaceModel {
public:
    struct PointData {
        cplx wf, wg, wg_deriv;
    };

    SurfaceModel(SurfaceKind kind, WeierstrassPair pair, cplx base_z, Vec3 base_x,
                 RigidMotion placement, double metric_guard = Constants{}.metric_guard)
        : kind_(kind), pair_(std::move(pair)), base_z_(base_z), base_x_(std::move(base_x)),
          placement_(std::move(placement)), guard_(metric_guard)
    {
    }

    SurfaceKind kind() const { return kind_; }
    const WeierstrassPair& pair() const { return pair_; }
    const ChartDomain& domain() const { return pair_.domain; }
    const RigidMotion& placement() const { return placement_; }
    cplx basepoint() const { return base_z_; }
    bool has_closed_form() const { return kind_ != SurfaceKind::GenericWeierstrass; }
    bool is_flat() const { return kind_ == SurfaceKind::Plane; }

    PointData point_data(cplx z) const
    {
        switch (kind_) {
        case SurfaceKind::Plane: return {cplx(2.0, 0.0), cplx(0.0, 0.0), cplx(0.0, 0.0)};
        case SurfaceKind::Enneper: return {cplx(2.0, 0.0), z, cplx(1.0, 0.0)};
        case SurfaceKind::Catenoid: return {2.0 / (z * z), z, cplx(1.0, 0.0)};
        case SurfaceKind::Helicoid: return {2.0 * I_unit / (z * z), z, cplx(1.0, 0.0)};
        case SurfaceKind::GenericWeierstrass: break;
        }
        return {pair_.wf(z), pair_.wg(z), pair_.wg_deriv(z)};
    }

    double lambda_at(cplx z) const
    {
        const PointData p = point_data(z);
        return conformal_factor(p.wf, p.wg, guard_);
    }

    /// |grad log lambda| in chart units.
    double log_lambda_gradient(cplx z) const
    {
        const PointData p = point_data(z);
        check_metric(p.wf, guard_);
        cplx wf_log_deriv;
        switch (kind_) {
        case SurfaceKind::Plane:
        case SurfaceKind::Enneper: wf_log_deriv = 0.0; break;
        case SurfaceKind::Catenoid:
        case SurfaceKind::Helicoid: wf_log_deriv = -2.0 / z; break;
        case SurfaceKind::GenericWeierstrass: {
            const double h = 1e-6 * std::max(1.0, std::abs(z));
            wf_log_deriv = (pair_.wf(z + h) - pair_.wf(z - h)) / (2.0 * h) / p.wf;
            break;
        }
        }
        const cplx grad = std::conj(wf_log_deriv) + 2.0 * p.wg * std::conj(p.wg_deriv) / (1.0 + std::norm(p.wg));
        return 2.0 * std::abs(grad);
    }

    /// Full state at a chart point. Generic surfaces integrate from the basepoint
    /// along the straight chart segment with the midpoint rule.
    SurfaceState state_at(cplx z) const
    {
        if (!pair_.domain.contains(z)) {
            throw DomainExit(pair_.domain.has_boundary, "state_at: point outside chart domain");
        }
        Vec3 local;
        if (has_closed_form()) {
            local = closed_form_local(z, std::arg(z));
        } else {
            constexpr int n_sub = 4096;
            local = base_x_;
            const cplx dz = (z - base_z_) / static_cast<double>(n_sub);
            for (int i = 0; i < n_sub; ++i) {
                const cplx mid = base_z_ + (static_cast<double>(i) + 0.5) * dz;
                if (!pair_.domain.contains(mid)) {
                    throw Error(ErrorKind::BadParams, "basepoint segment leaves the chart domain");
                }
                const PointData p = point_data(mid);
                local += immersion_increment(p.wf, p.wg, dz);
            }
        }
        return evaluate(z, local);
    }

    /// Move the chart point by dz. X is exact on catalog surfaces and
    /// midpoint-integrated otherwise.
    SurfaceState advance_state(const SurfaceState& s, cplx dz) const
    {
        if (dz == cplx(0.0, 0.0)) {
            return s;
        }
        const cplx z1 = s.z + dz;
        if (!pair_.domain.contains(z1)) {
            throw DomainExit(pair_.domain.has_boundary, "advance_state: step leaves chart domain");
        }
        Vec3 local;
        if (has_closed_form()) {
            // continuous argument for the helicoid's multivalued height
            const double arg1 = helicoid_arg(s) + std::arg(z1 / s.z);
            local = closed_form_local(z1, arg1);
        } else {
            local = incremental_local(s, dz);
        }
        return evaluate(z1, local);
    }

    /// Midpoint-rule position update, available for every kind (cross-check of
    /// the exact immersions).
    Vec3 incremental_local(const SurfaceState& s, cplx dz) const
    {
        const cplx mid = s.z + 0.5 * dz;
        const PointData p = point_data(mid);
        return s.x_local + immersion_increment(p.wf, p.wg, dz);
    }

    /// Exact unplaced immersion; `arg` is the continuous argument of z (used by
    /// the helicoid only).
    Vec3 closed_form_local(cplx z, double arg) const
    {
        switch (kind_) {
        case SurfaceKind::Plane: return Vec3(z.real(), -z.imag(), 0.0);
        case SurfaceKind::Enneper: {
            const cplx z3 = z * z * z;
            const cplx a = z - z3 / 3.0;
            const cplx b = I_unit * (z + z3 / 3.0);
            const cplx c = z * z;
            return Vec3(a.real(), b.real(), c.real());
        }
        case SurfaceKind::Catenoid: {
            const cplx iz = 1.0 / z;
            const cplx a = -iz - z;
            const cplx b = I_unit * (z - iz);
            return Vec3(a.real(), b.real(), 2.0 * std::log(std::abs(z)));
        }
        case SurfaceKind::Helicoid: {
            const cplx iz = 1.0 / z;
            return Vec3(iz.imag() + z.imag(), -(z.real() - iz.real()), -2.0 * arg);
        }
        case SurfaceKind::GenericWeierstrass: break;
        }
        throw Error(ErrorKind::BadParams, "no closed-form immersion for generic Weierstrass data");
    }

    /// Copy of this surface with the same Weierstrass data but no closed-form
    /// immersion (positions are then integrated incrementally), anchored at
    /// `anchor` with the exact position there.
    SurfaceModel as_generic(std::optional<cplx> anchor = std::nullopt) const
    {
        const cplx a = anchor.value_or(has_closed_form() ? pair_.domain.center() : base_z_);
        WeierstrassPair p = pair_;
        if (kind_ != SurfaceKind::GenericWeierstrass) {
            const SurfaceModel self = *this;
            p.wf = [self](cplx z) { return self.point_data(z).wf; };
            p.wg = [self](cplx z) { return self.point_data(z).wg; };
            p.wg_deriv = [self](cplx z) { return self.point_data(z).wg_deriv; };
        }
        Vec3 bx;
        if (has_closed_form()) {
            bx = closed_form_local(a, std::arg(a));
        } else {
            bx = placement_.rotation.transpose() * (state_at(a).X - placement_.translation);
        }
        return SurfaceModel(SurfaceKind::GenericWeierstrass, std::move(p), a, bx, placement_, guard_);
    }

    SurfaceModel placed(const RigidMotion& outer) const
    {
        SurfaceModel copy = *this;
        copy.placement_ = placement_.then(outer);
        return copy;
    }

private:
    double helicoid_arg(const SurfaceState& s) const
    {
        if (kind_ != SurfaceKind::Helicoid) {
            return std::arg(s.z);
        }
        return -s.x_local.z() / 2.0;
    }

    SurfaceState evaluate(cplx z, const Vec3& local) const
    {
        const PointData p = point_data(z);
        const Frame fr = immersion_differential(p.wf, p.wg, guard_);
        SurfaceState s;
        s.z = z;
        s.wf = p.wf;
        s.wg = p.wg;
        s.wg_deriv = p.wg_deriv;
        s.lambda = conformal_factor(p.wf, p.wg, guard_);
        s.K = curvature(p.wf, p.wg, p.wg_deriv, guard_);
        s.x_local = local;
        s.X = placement_.apply(local);
        s.m = placement_.rotate(gauss_normal(p.wg));
        s.frame_u = placement_.rotate(fr.u);
        s.frame_v = placement_.rotate(fr.v);
        return s;
    }

    SurfaceKind kind_;
    WeierstrassPair pair_;
    cplx base_z_;
    Vec3 base_x_;
    RigidMotion placement_;
    double guard_;
};

inline SurfaceState advance_state(const SurfaceModel& model, const SurfaceState& state, cplx dz)
{
    return model.advance_state(state, dz);
}

/// Tangent vector T at a surface point -> chart displacement.
inline cplx chart_increment(const SurfaceState& s, const Vec3& T)
{
    return cplx(T.dot(s.frame_u), T.dot(s.frame_v)) / s.lambda;
}

//---------------------------------------------------------------------------//
// Catalog
//---------------------------------------------------------------------------//

/// Build a catalog surface. Defaults: plane and Enneper on the whole chart
/// plane (Enneper: disk of radius 1e3), catenoid on 0.5 < |z| < 2, helicoid on
/// the sector 0.5 < |z| < 2, |arg z| < pi/2.
inline SurfaceModel make_surface(SurfaceKind kind, const SurfaceParams& params = {})
{
    params.placement.validate();
    ChartDomain domain;
    switch (kind) {
    case SurfaceKind::Plane:
        domain = params.domain.value_or(ChartDomain::disk(std::numeric_limits<double>::infinity()));
        break;
    case SurfaceKind::Enneper:
        domain = params.domain.value_or(ChartDomain::disk(1e3));
        break;
    case SurfaceKind::Catenoid:
        domain = params.domain.value_or(ChartDomain::annulus(0.5, 2.0));
        break;
    case SurfaceKind::Helicoid:
        domain = params.domain.value_or(ChartDomain::sector(0.5, 2.0, -half_pi, half_pi));
        break;
    case SurfaceKind::GenericWeierstrass:
        throw Error(ErrorKind::BadParams, "use make_generic_surface for generic Weierstrass data");
    }
    if (params.boundary) {
        domain.has_boundary = *params.boundary;
    }
    domain.validate();
    if ((kind == SurfaceKind::Catenoid || kind == SurfaceKind::Helicoid) && domain.contains_origin()) {
        throw Error(ErrorKind::BadParams, "chart domain must exclude the pole at z = 0");
    }
    if (kind == SurfaceKind::Catenoid || kind == SurfaceKind::Helicoid) {
        bool bad = false;
        switch (domain.kind) {
        case ChartDomain::Kind::Disk: bad = true; break;
        case ChartDomain::Kind::Annulus:
        case ChartDomain::Kind::Sector: bad = !(domain.r_in > 0.0); break;
        case ChartDomain::Kind::Rectangle:
            bad = domain.u_min <= 0.0 && domain.u_max >= 0.0 && domain.v_min <= 0.0 && domain.v_max >= 0.0;
            break;
        }
        if (bad) {
            throw Error(ErrorKind::BadParams, "chart domain must stay away from the pole at z = 0");
        }
    }
    if (kind == SurfaceKind::Helicoid && domain.kind == ChartDomain::Kind::Annulus) {
        // accepted: x3 is then the universal-cover height, tracked continuously
    }

    WeierstrassPair pair;
    pair.domain = domain;
    SurfaceModel model(kind, pair, cplx(0.0, 0.0), Vec3::Zero(), params.placement);
    return model;
}

/// Generic Weierstrass data anchored at (base_z, base_x). The caller's domain
/// must exclude poles of wg and zeros of wf; this is checked on probe points.
inline SurfaceModel make_generic_surface(WeierstrassPair pair, cplx base_z, const Vec3& base_x,
                                         const RigidMotion& placement = {}, int n_probes = 256)
{
    placement.validate();
    pair.domain.validate();
    if (!pair.wf || !pair.wg || !pair.wg_deriv) {
        throw Error(ErrorKind::BadParams, "generic Weierstrass data needs wf, wg and wg'");
    }
    if (!pair.domain.contains(base_z)) {
        throw Error(ErrorKind::BadParams, "basepoint outside chart domain");
    }
    const Constants c;
    std::mt19937_64 rng(0x5eed);
    for (int i = 0; i < n_probes; ++i) {
        const cplx z = pair.domain.sample(rng);
        const cplx f = pair.wf(z);
        const cplx g = pair.wg(z);
        if (!(std::abs(f) > c.metric_guard) || !std::isfinite(std::abs(g))) {
            throw Error(ErrorKind::BadParams, "wf vanishes or wg has a pole inside the domain");
        }
    }
    return SurfaceModel(SurfaceKind::GenericWeierstrass, std::move(pair), base_z, base_x, placement);
}

inline std::optional<SurfaceKind> surface_kind_from_string(const std::string& name)
{
    if (name == "plane") return SurfaceKind::Plane;
    if (name == "enneper") return SurfaceKind::Enneper;
    if (name == "catenoid") return SurfaceKind::Catenoid;
    if (name == "helicoid") return SurfaceKind::Helicoid;
    return std::nullopt;
}

/// Checks the SurfaceState invariants; returns the worst violation found
/// (0 when every relation holds to its tolerance scale).
inline double state_invariant_error(const SurfaceState& s)
{
    const double lam = s.lambda;
    double err = 0.0;
    err = std::max(err, std::abs(s.m.norm() - 1.0));
    err = std::max(err, std::abs(s.m.dot(s.frame_u)) / std::sqrt(lam));
    err = std::max(err, std::abs(s.m.dot(s.frame_v)) / std::sqrt(lam));
    err = std::max(err, std::abs(s.frame_u.squaredNorm() - lam) / lam);
    err = std::max(err, std::abs(s.frame_v.squaredNorm() - lam) / lam);
    err = std::max(err, std::abs(s.frame_u.dot(s.frame_v)) / lam);
    if (s.K > 0.0) err = std::max(err, s.K);
    return err;
}

} // namespace mincouple
