#pragma once

// The eight desk-scale scenarios.  Each runs its trajectories through
// parallel_map, folds the per-trajectory results in index order and returns a
// SummaryReport plus the CSV text for the first csv_trajectories paths.

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mincouple/experiments/report.hpp"
#include "mincouple/experiments/scenario.hpp"
#include "mincouple/reference_processes.hpp"
#include "mincouple/sde_engine.hpp"

namespace mincouple::experiments {

struct RunOptions {
    int workers = 1;
    bool write_files = true;
};

struct ScenarioOutput {
    SummaryReport report;
    std::string csv;
};

namespace detail {

inline const char* kSingleHeader = "traj,t,xu,xv,x1,x2,x3,m1,m2,m3,tau_gauss,stop_reason\n";
inline const char* kCoupledHeader = "traj,t,r,theta,phi,psi,f,g,eps_hat,xu,xv,yu,yv,stop_reason\n";

inline std::string single_rows(long traj, const SingleResult& res)
{
    std::string out;
    const std::string id = std::to_string(traj);
    for (std::size_t k = 0; k < res.series.size(); ++k) {
        const SingleRecord& r = res.series[k];
        const bool last = k + 1 == res.series.size();
        append_row(out, {id, fmt17(r.t), fmt17(r.z.real()), fmt17(r.z.imag()), fmt17(r.X(0)), fmt17(r.X(1)),
                         fmt17(r.X(2)), fmt17(r.m(0)), fmt17(r.m(1)), fmt17(r.m(2)), fmt17(r.tau_gauss),
                         last ? to_string(res.stop) : ""});
    }
    return out;
}

inline std::string coupled_rows(long traj, const CoupledResult& res)
{
    std::string out;
    const std::string id = std::to_string(traj);
    for (std::size_t k = 0; k < res.series.size(); ++k) {
        const CoupledRecord& r = res.series[k];
        const bool last = k + 1 == res.series.size();
        append_row(out, {id, fmt17(r.t), fmt17(r.r), fmt17(r.theta), fmt17(r.phi), fmt17(r.psi), fmt17(r.f),
                         fmt17(r.g), fmt17(r.eps_hat), fmt17(r.zx.real()), fmt17(r.zx.imag()), fmt17(r.zy.real()),
                         fmt17(r.zy.imag()), last ? to_string(res.stop) : ""});
    }
    return out;
}

/// Trajectories past csv_trajectories keep only their endpoints.
inline StepControl control_for(const ScenarioSpec& s, long traj)
{
    StepControl c = s.control;
    if (traj >= s.csv_trajectories) c.sample_stride = INT_MAX;
    return c;
}

inline double param_number(const ScenarioSpec& s, const char* key) { return s.params.at(key).get<double>(); }

inline std::vector<double> param_grid(const ScenarioSpec& s, const char* key)
{
    std::vector<double> g;
    for (const auto& v : s.params.at(key)) {
        if (!v.is_number() || !(v.get<double>() > 0.0)) config_error(std::string("params.") + key + " must hold positive numbers");
        g.push_back(v.get<double>());
    }
    if (g.empty() || !std::is_sorted(g.begin(), g.end())) config_error(std::string("params.") + key + " must be sorted and nonempty");
    return g;
}

/// Snapshot helper: value of a running quantity at the first step ending at or
/// after each grid time; stopped paths carry their final value forward.
struct GridSnapshots {
    std::vector<double> times;
    std::vector<double> values;
    std::size_t next = 0;

    explicit GridSnapshots(std::vector<double> t = {}) : times(std::move(t)), values(times.size(), 0.0) {}

    void observe(double t_after, double value)
    {
        while (next < times.size() && t_after >= times[next] * (1.0 - 1e-12)) values[next++] = value;
    }

    void finish(double value)
    {
        while (next < times.size()) values[next++] = value;
    }
};

inline double lower_quantile(std::vector<double> v, double q)
{
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t k = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
    return v[k];
}

/// Vertices of an icosahedron with one vertex at each pole.
inline std::array<Vec3, 12> icosahedral_centers()
{
    std::array<Vec3, 12> c;
    c[0] = Vec3(0, 0, 1);
    c[1] = Vec3(0, 0, -1);
    const double z = 1.0 / std::sqrt(5.0), rho = 2.0 / std::sqrt(5.0);
    for (int k = 0; k < 5; ++k) {
        const double a = two_pi * k / 5.0, b = a + pi / 5.0;
        c[2 + k] = Vec3(rho * std::cos(a), rho * std::sin(a), z);
        c[7 + k] = Vec3(rho * std::cos(b), rho * std::sin(b), -z);
    }
    return c;
}

/// Whether the cap meets the Gauss image of the chart domain.  Catalog Gauss
/// maps are wg(z) = z (or constant for the plane), so cap points are pulled
/// back by inverse stereographic projection and tested against the domain.
inline bool cap_reachable(const SurfaceModel& model, const Vec3& center, double radius)
{
    const Mat3 Rt = model.placement().rotation.transpose();
    if (model.is_flat()) {
        const Vec3 m = model.placement().rotate(gauss_normal(0.0));
        return m.dot(center) > std::cos(radius);
    }
    std::mt19937_64 rng(0xca95);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Vec3 c = Rt * center;
    const Vec3 t1 = (std::abs(c(0)) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0)).cross(c).normalized();
    const Vec3 t2 = c.cross(t1);
    for (int i = 0; i < 4000; ++i) {
        const double cz = std::cos(radius) + (1.0 - std::cos(radius)) * u(rng);
        const double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
        const double a = two_pi * u(rng);
        const Vec3 m = cz * c + sz * (std::cos(a) * t1 + std::sin(a) * t2);
        if (m(2) > 1.0 - 1e-12) continue;
        const cplx w(m(0) / (1.0 - m(2)), m(1) / (1.0 - m(2)));
        if (model.domain().contains(w)) return true;
    }
    return false;
}

inline void check_param_range(bool ok, const std::string& what)
{
    if (!ok) config_error("params: " + what);
}

} // namespace detail

//---------------------------------------------------------------------------//
// Single-surface scenarios
//---------------------------------------------------------------------------//

inline ScenarioOutput run_sto_comp(const ScenarioSpec& s, const RunOptions& opt)
{
    const SurfaceModel M = s.surfaces[0].build();
    const cplx z0 = s.starts[0];
    const double rho0_sq = M.state_at(z0).X.squaredNorm();
    struct Out {
        double excess = 0.0, t = 0.0;
        StopReason stop = StopReason::TimedOut;
        std::string csv;
    };
    const auto runs = parallel_map<Out>(s.n_traj, opt.workers, [&](long i) {
        NoiseSource ns(s.effective_seed(), stream_id(i));
        const SingleResult r = run_single(M, z0, detail::control_for(s, i), ns);
        Out o;
        o.t = r.summary.t;
        o.excess = r.summary.final_state.X.squaredNorm() - rho0_sq - 2.0 * r.summary.t;
        o.stop = r.stop;
        if (i < s.csv_trajectories) o.csv = detail::single_rows(i, r);
        return o;
    });
    ScenarioOutput out;
    out.csv = detail::kSingleHeader;
    MeanAccumulator acc, tacc;
    for (const Out& o : runs) {
        acc.add(o.excess);
        tacc.add(o.t);
        out.report.count_stop(o.stop);
        out.csv += o.csv;
    }
    const double n_se = detail::param_number(s, "n_se");
    const double allowance = M.is_flat() ? 0.0 : detail::param_number(s, "allowance");
    const double se = acc.std_error();
    const double tol = std::max(n_se * se, allowance * (rho0_sq + 2.0 * s.control.t_max));
    out.report.add(make_stat("mean_rho2_minus_rho0_2_minus_2t", acc.mean, se, 0.0, std::isfinite(se) ? tol : se));
    out.report.info["rho0_sq"] = rho0_sq;
    out.report.info["mean_stopped_time"] = tacc.mean;
    return out;
}

inline ScenarioOutput run_coordinate_qv(const ScenarioSpec& s, const RunOptions& opt)
{
    const SurfaceModel M = s.surfaces[0].build();
    const long ii = s.params.at("i").get<long>(), jj = s.params.at("j").get<long>();
    detail::check_param_range(ii >= 1 && ii <= 3 && jj >= 1 && jj <= 3, "i and j must be in 1..3");
    const int i = static_cast<int>(ii - 1), j = static_cast<int>(jj - 1);
    const double delta = i == j ? 1.0 : 0.0;
    struct Out {
        double realized = 0.0, predicted = 0.0, scale = 0.0;
        StopReason stop = StopReason::TimedOut;
        std::string csv;
    };
    const auto runs = parallel_map<Out>(s.n_traj, opt.workers, [&](long k) {
        NoiseSource ns(s.effective_seed(), stream_id(k));
        Out o;
        auto obs = [&](const SurfaceState& a, const SurfaceState& b, double dt, double) {
            const Vec3 d = b.X - a.X;
            o.realized += d(i) * d(j);
            o.predicted += (delta - a.m(i) * a.m(j)) * dt;
            o.scale += std::sqrt(std::max(0.0, (1.0 - a.m(i) * a.m(i)) * (1.0 - a.m(j) * a.m(j)))) * dt;
        };
        const SingleResult r = run_single(M, s.starts[0], detail::control_for(s, k), ns, obs);
        o.stop = r.stop;
        if (k < s.csv_trajectories) o.csv = detail::single_rows(k, r);
        return o;
    });
    ScenarioOutput out;
    out.csv = detail::kSingleHeader;
    double realized = 0, predicted = 0, scale = 0, max_rel = 0;
    long within = 0;
    MeanAccumulator diff;
    const double tol = detail::param_number(s, "tolerance");
    for (const Out& o : runs) {
        realized += o.realized;
        predicted += o.predicted;
        scale += o.scale;
        diff.add(o.realized - o.predicted);
        const double denom = i == j ? o.predicted : o.scale;
        if (denom > 1e-12) {
            const double rel = std::abs(o.realized - o.predicted) / denom;
            max_rel = std::max(max_rel, rel);
            within += rel <= tol;
        } else {
            within += std::abs(o.realized - o.predicted) <= 1e-12;
        }
        out.report.count_stop(o.stop);
        out.csv += o.csv;
    }
    const double n = static_cast<double>(s.n_traj);
    const double denom = i == j ? predicted : scale;
    if (denom > 1e-12 * n) {
        // pooled relative error: sum of realized QV over sum of integrated rates
        const double mean_denom = denom / n;
        if (i == j) {
            out.report.add(make_stat("pooled_qv_ratio", realized / predicted, diff.std_error() / mean_denom, 1.0, tol));
        } else {
            out.report.add(make_stat("pooled_cross_qv_error", (realized - predicted) / scale,
                                     diff.std_error() / mean_denom, 0.0, tol));
        }
    } else {
        out.report.add(make_stat("pooled_qv_absolute", realized - predicted, diff.std_error(), 0.0, 1e-12));
    }
    out.report.add(make_stat("fraction_of_paths_within_tolerance", within / n, fraction_std_error(within / n, s.n_traj),
                             1.0, 0.0, Comparison::AtLeast, false));
    out.report.info["realized_total"] = realized;
    out.report.info["predicted_total"] = predicted;
    out.report.info["max_path_relative_error"] = max_rel;
    return out;
}

inline ScenarioOutput run_gauss_occupation(const ScenarioSpec& s, const RunOptions& opt)
{
    const SurfaceModel M = s.surfaces[0].build();
    const double radius = detail::param_number(s, "cap_radius");
    detail::check_param_range(radius > 0.0 && radius < 0.5, "cap_radius must lie in (0, 0.5) so caps stay disjoint");
    const double frac_target = detail::param_number(s, "increase_fraction");
    const auto centers = detail::icosahedral_centers();
    const double cos_r = std::cos(radius);
    const double T = s.control.t_max;
    const std::vector<double> grid = {T / 4, T / 2, 3 * T / 4, T};
    std::array<bool, 12> reachable{};
    for (int c = 0; c < 12; ++c) reachable[c] = detail::cap_reachable(M, centers[c], radius);

    struct Out {
        std::array<std::array<double, 4>, 12> occ{};
        StopReason stop = StopReason::TimedOut;
        std::string csv;
    };
    const auto runs = parallel_map<Out>(s.n_traj, opt.workers, [&](long k) {
        NoiseSource ns(s.effective_seed(), stream_id(k));
        std::array<double, 12> acc{};
        std::vector<detail::GridSnapshots> snaps(12, detail::GridSnapshots(grid));
        auto obs = [&](const SurfaceState& a, const SurfaceState&, double dt, double t_after) {
            for (int c = 0; c < 12; ++c) {
                if (a.m.dot(centers[c]) > cos_r) acc[c] += dt;
                snaps[c].observe(t_after, acc[c]);
            }
        };
        const SingleResult r = run_single(M, s.starts[0], detail::control_for(s, k), ns, obs);
        Out o;
        for (int c = 0; c < 12; ++c) {
            snaps[c].finish(acc[c]);
            for (int g = 0; g < 4; ++g) o.occ[c][g] = snaps[c].values[g];
        }
        o.stop = r.stop;
        if (k < s.csv_trajectories) o.csv = detail::single_rows(k, r);
        return o;
    });

    ScenarioOutput out;
    out.csv = detail::kSingleHeader;
    std::array<std::array<double, 4>, 12> total{};
    std::array<long, 12> increased{};
    long decreases = 0;
    for (const Out& o : runs) {
        for (int c = 0; c < 12; ++c) {
            for (int g = 0; g < 4; ++g) {
                total[c][g] += o.occ[c][g];
                if (g > 0 && o.occ[c][g] < o.occ[c][g - 1]) ++decreases;
            }
            increased[c] += o.occ[c][3] > o.occ[c][1];
        }
        out.report.count_stop(o.stop);
        out.csv += o.csv;
    }
    out.report.add(make_stat("occupation_decreases", static_cast<double>(decreases), 0.0, 0.0, 0.0, Comparison::AtMost));
    double unreachable = 0.0;
    int n_reachable = 0;
    json caps = json::array();
    const double n = static_cast<double>(s.n_traj);
    for (int c = 0; c < 12; ++c) {
        caps.push_back({{"center", {centers[c](0), centers[c](1), centers[c](2)}},
                        {"reachable", reachable[c]},
                        {"mean_occupation", {total[c][0] / n, total[c][1] / n, total[c][2] / n, total[c][3] / n}},
                        {"fraction_increasing", increased[c] / n}});
        if (!reachable[c]) {
            unreachable += total[c][3];
            continue;
        }
        ++n_reachable;
        const std::string tag = "cap" + std::to_string(c);
        out.report.add(make_stat(tag + "_ensemble_increase_second_half", (total[c][3] - total[c][1]) / n, 0.0, 0.0, 0.0,
                                 Comparison::Above));
        const double f = increased[c] / n;
        out.report.add(make_stat(tag + "_fraction_increasing", f, fraction_std_error(f, s.n_traj), frac_target, 0.0,
                                 Comparison::AtLeast, false));
    }
    out.report.add(make_stat("unreachable_cap_occupation", unreachable / n, 0.0, 0.0, 0.0, Comparison::AtMost));
    out.report.add(make_stat("reachable_caps", n_reachable, 0.0, 0.0, 0.0, Comparison::Above));
    out.report.info["grid"] = grid;
    out.report.info["caps"] = caps;
    return out;
}

inline ScenarioOutput run_gauss_timechange(const ScenarioSpec& s, const RunOptions& opt)
{
    const SurfaceModel M = s.surfaces[0].build();
    struct Out {
        double qv = 0.0, tau = 0.0;
        StopReason stop = StopReason::TimedOut;
        std::string csv;
    };
    const auto runs = parallel_map<Out>(s.n_traj, opt.workers, [&](long k) {
        NoiseSource ns(s.effective_seed(), stream_id(k));
        const SingleResult r = run_single(M, s.starts[0], detail::control_for(s, k), ns);
        Out o{r.summary.gauss_qv, r.summary.tau_gauss, r.stop, {}};
        if (k < s.csv_trajectories) o.csv = detail::single_rows(k, r);
        return o;
    });
    ScenarioOutput out;
    out.csv = detail::kSingleHeader;
    double qv = 0, tau = 0;
    MeanAccumulator diff;
    for (const Out& o : runs) {
        qv += o.qv;
        tau += o.tau;
        diff.add(o.qv - 2.0 * o.tau);
        out.report.count_stop(o.stop);
        out.csv += o.csv;
    }
    const double n = static_cast<double>(s.n_traj);
    const double tol = detail::param_number(s, "tolerance");
    if (tau > 1e-12 * n) {
        out.report.add(make_stat("pooled_sphere_qv_over_2tau", qv / (2.0 * tau), diff.std_error() / (2.0 * tau / n), 1.0, tol));
    } else {
        out.report.add(make_stat("pooled_sphere_qv_absolute", qv - 2.0 * tau, diff.std_error(), 0.0, 1e-12));
    }
    out.report.info["sphere_qv_total"] = qv;
    out.report.info["tau_total"] = tau;
    return out;
}

//---------------------------------------------------------------------------//
// Coupled scenarios
//---------------------------------------------------------------------------//

namespace detail {

inline std::pair<SurfaceModel, SurfaceModel> coupled_models(const ScenarioSpec& s)
{
    const SurfaceModel M = s.surfaces[0].build();
    const SurfaceModel N = s.surfaces.size() > 1 ? s.surfaces[1].build() : M;
    return {M, N};
}

inline double start_distance(const SurfaceModel& M, const SurfaceModel& N, const ScenarioSpec& s)
{
    return (M.state_at(s.starts[0]).X - N.state_at(s.starts[1]).X).norm();
}

/// Coupling-time CDF at grid points, as fractions of trajectories.
inline std::vector<double> coupling_cdf(const std::vector<double>& tau, const std::vector<double>& grid)
{
    std::vector<double> cdf;
    for (double t : grid) {
        long c = 0;
        for (double x : tau) c += x <= t * (1.0 + 1e-12);
        cdf.push_back(static_cast<double>(c) / static_cast<double>(tau.size()));
    }
    return cdf;
}

struct CouplingRun {
    StopReason stop = StopReason::TimedOut;
    double tau = std::numeric_limits<double>::infinity(); // coupling time
    double r_final = 0.0;
    double min_r = 0.0;
    DominationLedger ledger;
    std::string csv;
};

template <class Obs = NoCoupledObserver>
CouplingRun couple_once(const SurfaceModel& M, const SurfaceModel& N, const ScenarioSpec& s, const StepControl& ctl,
                        long k, unsigned sub, Obs&& obs = Obs{})
{
    NoiseSource ns(s.effective_seed(), stream_id(k, sub));
    const CoupledResult r = run_coupled(M, N, s.starts[0], s.starts[1], ctl, ns, s.overrides, obs);
    CouplingRun o;
    o.stop = r.stop;
    if (r.stop == StopReason::Coupled) o.tau = r.summary.final_state.t;
    o.r_final = r.summary.final_state.r;
    o.min_r = r.summary.min_r;
    o.ledger = r.summary.ledger;
    if (sub == 0 && k < s.csv_trajectories) o.csv = coupled_rows(k, r);
    return o;
}

inline void add_ledger(SummaryReport& rep, const DominationLedger& l)
{
    rep.has_ledger = true;
    rep.ledger.merge(l);
}

inline void finish_ledger_stats(SummaryReport& rep)
{
    rep.add(make_stat("domination_violations", static_cast<double>(rep.ledger.violations), 0.0, 0.0, 0.0,
                      Comparison::AtMost));
}

} // namespace detail

inline ScenarioOutput run_halfspace(const ScenarioSpec& s, const RunOptions& opt)
{
    const auto [M, N] = detail::coupled_models(s);
    const double q = detail::param_number(s, "quantile");
    detail::check_param_range(q > 0.0 && q < 1.0, "quantile must lie in (0, 1)");
    const double T = s.control.t_max;
    const std::vector<double> grid = {T / 4, T / 2, T};
    const double r0 = detail::start_distance(M, N, s);

    std::string mode = s.params.at("control").get<std::string>();
    if (mode == "auto") {
        mode = "property";
        if (M.is_flat() && N.is_flat()) {
            const Vec3 nm = M.state_at(s.starts[0]).m, nn = N.state_at(s.starts[1]).m;
            const double gap = std::abs(nm.dot(N.state_at(s.starts[1]).X - M.state_at(s.starts[0]).X));
            if (nm.cross(nn).norm() < 1e-12) mode = gap < 1e-12 ? "positive" : "negative";
        }
    }
    detail::check_param_range(mode == "property" || mode == "negative" || mode == "positive",
                              "control must be auto, property, negative or positive");

    struct Out {
        detail::CouplingRun run;
        std::vector<double> inf_r;
    };
    const auto runs = parallel_map<Out>(s.n_traj, opt.workers, [&](long k) {
        double running = r0;
        detail::GridSnapshots snaps(grid);
        auto obs = [&](const CoupledState& a, const CoupledState& b, const CoupledStepInfo&) {
            running = std::min(running, s.control.segment_detection ? segment_min_distance(a, b) : b.r);
            snaps.observe(b.t, running);
        };
        Out o;
        o.run = detail::couple_once(M, N, s, detail::control_for(s, k), k, 0, obs);
        snaps.finish(running);
        o.inf_r = snaps.values;
        return o;
    });

    ScenarioOutput out;
    out.csv = detail::kCoupledHeader;
    std::vector<std::vector<double>> inf_at(grid.size());
    long coupled = 0;
    double max_dev = 0.0;
    for (const Out& o : runs) {
        for (std::size_t g = 0; g < grid.size(); ++g) inf_at[g].push_back(o.inf_r[g]);
        coupled += o.run.stop == StopReason::Coupled;
        max_dev = std::max(max_dev, std::abs(o.inf_r.back() - r0));
        out.report.count_stop(o.run.stop);
        detail::add_ledger(out.report, o.run.ledger);
        out.csv += o.run.csv;
    }
    std::vector<double> quant;
    for (auto& v : inf_at) quant.push_back(detail::lower_quantile(v, q));
    const double n = static_cast<double>(s.n_traj);
    const double fc = coupled / n;
    if (mode == "property") {
        out.report.add(make_stat("quantile_drop_quarter_to_half", quant[0] - quant[1], 0.0, 0.0, 0.0, Comparison::Above));
        out.report.add(make_stat("quantile_drop_half_to_full", quant[1] - quant[2], 0.0, 0.0, 0.0, Comparison::Above));
    } else if (mode == "negative") {
        out.report.add(make_stat("coupled_fraction", fc, fraction_std_error(fc, s.n_traj), 0.0, 0.0, Comparison::AtMost));
        out.report.add(make_stat("max_inf_r_deviation", max_dev, 0.0, 0.0, 1e-9, Comparison::AtMost));
    } else {
        out.report.add(make_stat("coupled_fraction", fc, fraction_std_error(fc, s.n_traj), 0.0, 0.0, Comparison::Above));
    }
    detail::finish_ledger_stats(out.report);
    out.report.info["mode"] = mode;
    out.report.info["r0"] = r0;
    out.report.info["grid"] = grid;
    out.report.info["inf_r_quantiles"] = quant;
    out.report.info["coupled_fraction"] = fc;
    return out;
}

inline ScenarioOutput run_mirror_coupling_plane(const ScenarioSpec& s, const RunOptions& opt)
{
    if (s.surfaces.size() != 1 || s.surfaces[0].kind != SurfaceKind::Plane) {
        config_error("mirror-coupling-plane needs a single plane carrying both particles");
    }
    const auto [M, N] = detail::coupled_models(s);
    const double d = detail::start_distance(M, N, s);
    std::vector<double> grid;
    for (double t : detail::param_grid(s, "grid")) {
        if (t <= s.control.t_max * (1.0 + 1e-12)) grid.push_back(t);
    }
    if (grid.empty() || std::abs(grid.back() - s.control.t_max) > 1e-12 * s.control.t_max) grid.push_back(s.control.t_max);
    const double n_se = detail::param_number(s, "n_se");
    const double allowance = detail::param_number(s, "allowance");
    const double early = detail::param_number(s, "early_bound");

    auto sweep = [&](const StepControl& base, unsigned sub) {
        return parallel_map<detail::CouplingRun>(s.n_traj, opt.workers, [&](long k) {
            StepControl c = base;
            if (k >= s.csv_trajectories) c.sample_stride = INT_MAX;
            return detail::couple_once(M, N, s, c, k, sub);
        });
    };
    const auto runs = sweep(s.control, 0);
    ScenarioOutput out;
    out.csv = detail::kCoupledHeader;
    std::vector<double> tau;
    for (const auto& o : runs) {
        tau.push_back(o.tau);
        out.report.count_stop(o.stop);
        detail::add_ledger(out.report, o.ledger);
        out.csv += o.csv;
    }
    const std::vector<double> cdf = detail::coupling_cdf(tau, grid);
    double max_gap = 0.0, max_se = 0.0;
    std::vector<double> oracle;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double target = bm_first_passage_prob(d, grid[g]);
        oracle.push_back(target);
        max_gap = std::max(max_gap, std::abs(cdf[g] - target));
        max_se = std::max(max_se, fraction_std_error(cdf[g], s.n_traj));
        if (target < early) {
            out.report.add(make_stat("p_couple_by_" + fmt17(grid[g]), cdf[g], fraction_std_error(cdf[g], s.n_traj), early,
                                     0.0, Comparison::AtMost));
        }
    }
    const double p = cdf.back(), se = fraction_std_error(p, s.n_traj);
    out.report.add(make_stat("p_couple_by_tmax", p, se, oracle.back(), n_se * se + allowance));
    out.report.add(make_stat("max_cdf_gap", max_gap, max_se, 0.0, n_se * max_se + allowance, Comparison::AtMost));
    if (s.params.at("sensitivity").get<bool>()) {
        StepControl half = s.control;
        half.r_couple *= 0.5;
        // same streams as the main sweep: common random numbers
        const auto runs_half = sweep(half, 0);
        std::vector<double> tau_half;
        for (const auto& o : runs_half) {
            tau_half.push_back(o.tau);
            detail::add_ledger(out.report, o.ledger);
        }
        const double p_half = detail::coupling_cdf(tau_half, {s.control.t_max}).front();
        out.report.add(make_stat("r_couple_halving_shift", std::abs(p_half - p), 0.0, 0.0,
                                 detail::param_number(s, "sensitivity_tolerance"), Comparison::AtMost));
        out.report.info["p_couple_half_r_couple"] = p_half;
    }
    detail::finish_ledger_stats(out.report);
    out.report.info["distance"] = d;
    out.report.info["grid"] = grid;
    out.report.info["empirical_cdf"] = cdf;
    out.report.info["oracle_cdf"] = oracle;
    return out;
}

inline ScenarioOutput run_liouville_embedded(const ScenarioSpec& s, const RunOptions& opt)
{
    if (s.surfaces.size() != 1) config_error("liouville-embedded takes one surface with two start points");
    const auto [M, N] = detail::coupled_models(s);
    const double r0 = detail::start_distance(M, N, s);
    std::vector<double> grid;
    for (double f : detail::param_grid(s, "grid")) grid.push_back(f * s.control.t_max);
    const double a = detail::param_number(s, "excursion_level");
    detail::check_param_range(a >= 0.0, "excursion_level must be nonnegative");
    detail::check_param_range(a == 0.0 || a > s.control.r_couple, "excursion_level must exceed r_couple");

    struct Out {
        detail::CouplingRun run;
        long trials = 0, successes = 0;
    };
    const auto runs = parallel_map<Out>(s.n_traj, opt.workers, [&](long k) {
        Out o;
        // excursion bookkeeping: an excursion starts when r reaches a,
        // succeeds on coupling and fails when r climbs back to 2a
        bool active = a > 0.0 && r0 <= a, armed = a > 0.0 && r0 > a;
        if (active) ++o.trials;
        auto obs = [&](const CoupledState& p, const CoupledState& q, const CoupledStepInfo&) {
            if (a == 0.0) return;
            const double r_path = s.control.segment_detection ? segment_min_distance(p, q) : q.r;
            if (armed && r_path <= a) {
                armed = false;
                active = true;
                ++o.trials;
            }
            if (active && r_path > s.control.r_couple && q.r >= 2.0 * a) {
                active = false;
                armed = true;
            }
        };
        o.run = detail::couple_once(M, N, s, detail::control_for(s, k), k, 0, obs);
        if (active && o.run.stop == StopReason::Coupled) ++o.successes;
        if (active && o.run.stop != StopReason::Coupled) --o.trials; // censored
        return o;
    });
    ScenarioOutput out;
    out.csv = detail::kCoupledHeader;
    std::vector<double> tau;
    long trials = 0, successes = 0;
    for (const auto& o : runs) {
        tau.push_back(o.run.tau);
        trials += o.trials;
        successes += o.successes;
        out.report.count_stop(o.run.stop);
        detail::add_ledger(out.report, o.run.ledger);
        out.csv += o.run.csv;
    }
    const std::vector<double> cdf = detail::coupling_cdf(tau, grid);
    long decreases = 0;
    for (std::size_t g = 1; g < cdf.size(); ++g) decreases += cdf[g] < cdf[g - 1];
    const double p = cdf.back(), se = fraction_std_error(p, s.n_traj);
    const double bench = bm_first_passage_prob(r0, s.control.t_max);
    out.report.add(make_stat("coupled_fraction_decreases", decreases, 0.0, 0.0, 0.0, Comparison::AtMost));
    out.report.add(make_stat("coupled_fraction", p, se, 0.0, 0.0, Comparison::Above));
    out.report.add(make_stat("coupled_fraction_vs_plane", p, se, bench, detail::param_number(s, "benchmark_slack"),
                             Comparison::AtLeast));
    if (a > 0.0) {
        const double ps = trials > 0 ? static_cast<double>(successes) / trials : std::numeric_limits<double>::quiet_NaN();
        out.report.add(make_stat("excursion_success", ps, fraction_std_error(ps, trials),
                                 detail::param_number(s, "excursion_floor"), 0.0, Comparison::AtLeast));
        out.report.info["excursions"] = trials;
    }
    detail::finish_ledger_stats(out.report);
    out.report.info["r0"] = r0;
    out.report.info["grid"] = grid;
    out.report.info["coupled_cdf"] = cdf;
    out.report.info["plane_benchmark"] = bench;
    return out;
}

inline ScenarioOutput run_max_principle_boundary(const ScenarioSpec& s, const RunOptions& opt)
{
    const auto [M, N] = detail::coupled_models(s);
    if (!M.domain().has_boundary && !N.domain().has_boundary) {
        throw Error(ErrorKind::MissingBoundary, "max-principle-boundary needs a surface whose chart edge is a boundary");
    }
    const double r0 = detail::start_distance(M, N, s);
    const double tol = detail::param_number(s, "tolerance");
    const auto runs = parallel_map<detail::CouplingRun>(s.n_traj, opt.workers, [&](long k) {
        return detail::couple_once(M, N, s, detail::control_for(s, k), k, 0);
    });
    ScenarioOutput out;
    out.csv = detail::kCoupledHeader;
    long at_boundary = 0;
    double min_terminal = std::numeric_limits<double>::infinity();
    double min_running = std::numeric_limits<double>::infinity();
    for (const auto& o : runs) {
        if (o.stop == StopReason::Boundary) {
            ++at_boundary;
            min_terminal = std::min(min_terminal, o.r_final);
            min_running = std::min(min_running, o.min_r);
        }
        out.report.count_stop(o.stop);
        detail::add_ledger(out.report, o.ledger);
        out.csv += o.csv;
    }
    out.report.add(make_stat("boundary_stops", at_boundary, 0.0, 0.0, 0.0, Comparison::Above));
    out.report.add(make_stat("min_terminal_r_minus_r0", min_terminal - r0, 0.0, 0.0, tol, Comparison::AtMost));
    detail::finish_ledger_stats(out.report);
    out.report.info["r0"] = r0;
    out.report.info["min_terminal_r"] = finite_or_null(min_terminal);
    out.report.info["min_running_r"] = finite_or_null(min_running);
    return out;
}

//---------------------------------------------------------------------------//
// Dispatch
//---------------------------------------------------------------------------//

inline ScenarioOutput run_scenario(const ScenarioSpec& s, const RunOptions& opt = {})
{
    check_spec(s);
    ScenarioOutput out;
    if (s.name == "sto-comp") out = run_sto_comp(s, opt);
    else if (s.name == "coordinate-qv") out = run_coordinate_qv(s, opt);
    else if (s.name == "gauss-occupation") out = run_gauss_occupation(s, opt);
    else if (s.name == "gauss-timechange") out = run_gauss_timechange(s, opt);
    else if (s.name == "halfspace") out = run_halfspace(s, opt);
    else if (s.name == "mirror-coupling-plane") out = run_mirror_coupling_plane(s, opt);
    else if (s.name == "liouville-embedded") out = run_liouville_embedded(s, opt);
    else if (s.name == "max-principle-boundary") out = run_max_principle_boundary(s, opt);
    else config_error("unknown scenario '" + s.name + "'");
    out.report.scenario = spec_to_json(s);
    if (opt.write_files) {
        const std::filesystem::path dir(s.outputs);
        write_text(dir / "series.csv", out.csv);
        write_text(dir / "report.json", report_to_json(out.report).dump(2) + "\n");
    }
    return out;
}

} // namespace mincouple::experiments
