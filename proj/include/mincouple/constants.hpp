#pragma once

namespace mincouple {

/// Every tolerance and tuning constant used by the geometry, configuration
/// and coupling code. Scenario files may override the coupling entries.
struct Constants {
    // surface geometry
    double metric_guard = 1e-12;   // minimum |wf| before the metric counts as degenerate

    // configuration
    double r_min = 1e-12;          // particles closer than this are coincident
    double tol_deg = 1e-9;         // |P e3| below this => theta (phi) := 0
    double tol_cos = 1e-12;        // cos(phi) below this => psi read from the z1 row
    double tol_sigma = 1e-6;       // region classification tolerance

    // perturbation eps_hat = eps_max * bump(h / eps_delta) * clamp(gap / eps_kappa, 0, 1)
    double eps_max = 0.25;
    double eps_delta = 0.1;
    double eps_kappa = 0.1;

    // domination ledger: g <= f + domination_tol
    double domination_tol = 1e-9;
};

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double half_pi = pi / 2.0;
inline constexpr double two_pi = 2.0 * pi;

} // namespace mincouple
