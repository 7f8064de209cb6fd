#pragma once

// Scenario documents: JSON with a fixed key set per section.  Unknown keys,
// wrong types and out-of-range values are ConfigError.  Every scenario has a
// built-in default document that a config file or CLI flags override.

#include <complex>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mincouple/constants.hpp"
#include "mincouple/errors.hpp"
#include "mincouple/sde_engine.hpp"
#include "mincouple/surface_geometry.hpp"

namespace mincouple::experiments {

using json = nlohmann::ordered_json;

inline const std::vector<std::string>& scenario_names()
{
    static const std::vector<std::string> names = {
        "sto-comp",  "coordinate-qv",         "gauss-occupation",   "gauss-timechange",
        "halfspace", "mirror-coupling-plane", "liouville-embedded", "max-principle-boundary",
    };
    return names;
}

inline bool is_coupled_scenario(const std::string& name)
{
    return name == "halfspace" || name == "mirror-coupling-plane" || name == "liouville-embedded"
           || name == "max-principle-boundary";
}

[[noreturn]] inline void config_error(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

namespace detail {

inline void require_object(const json& j, const std::string& where)
{
    if (!j.is_object()) config_error(where + " must be an object");
}

inline void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys)
{
    require_object(j, where);
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) config_error("unknown key '" + it.key() + "' in " + where);
    }
}

inline double get_number(const json& j, const std::string& key, const std::string& where)
{
    const json& v = j.at(key);
    if (!v.is_number()) config_error(where + "." + key + " must be a number");
    return v.get<double>();
}

inline bool get_bool(const json& j, const std::string& key, const std::string& where)
{
    const json& v = j.at(key);
    if (!v.is_boolean()) config_error(where + "." + key + " must be a boolean");
    return v.get<bool>();
}

inline long get_integer(const json& j, const std::string& key, const std::string& where)
{
    const json& v = j.at(key);
    if (!v.is_number_integer()) config_error(where + "." + key + " must be an integer");
    return v.get<long>();
}

inline Vec3 get_vec3(const json& j, const std::string& key, const std::string& where)
{
    const json& v = j.at(key);
    if (!v.is_array() || v.size() != 3) config_error(where + "." + key + " must be [x, y, z]");
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
        if (!v[i].is_number()) config_error(where + "." + key + " must hold numbers");
        out(i) = v[i].get<double>();
    }
    return out;
}

inline cplx get_point(const json& v, const std::string& where)
{
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        config_error(where + " must be [re, im]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
}

} // namespace detail

struct SurfaceSpec {
    SurfaceKind kind = SurfaceKind::Plane;
    std::optional<ChartDomain> domain;
    std::optional<bool> boundary;
    Vec3 axis = Vec3(0.0, 0.0, 1.0);
    double angle = 0.0;
    Vec3 translation = Vec3::Zero();

    RigidMotion placement() const { return RigidMotion::axis_angle(axis, angle, translation); }

    SurfaceModel build() const { return make_surface(kind, {domain, boundary, placement()}); }

    /// The domain the model will actually use.
    ChartDomain effective_domain() const { return build().domain(); }
};

struct ScenarioSpec {
    std::string name;
    std::vector<SurfaceSpec> surfaces;
    std::vector<cplx> starts;
    StepControl control;
    long n_traj = 1000;
    std::uint64_t seed = 1;
    std::string outputs;
    int csv_trajectories = 8;
    Constants overrides;
    json params = json::object();

    /// Scenario seed: the user seed mixed with the scenario name.
    std::uint64_t effective_seed() const { return seed ^ fnv1a64(name.c_str()); }
};

inline ChartDomain parse_domain(const json& j, const std::string& where)
{
    detail::require_object(j, where);
    if (!j.contains("type") || !j.at("type").is_string()) config_error(where + ".type must be a string");
    const std::string type = j.at("type").get<std::string>();
    auto num = [&](const char* k, double dflt) { return j.contains(k) ? detail::get_number(j, k, where) : dflt; };
    const double inf = std::numeric_limits<double>::infinity();
    ChartDomain d;
    if (type == "disk") {
        detail::allow_keys(j, where, {"type", "radius"});
        d = ChartDomain::disk(num("radius", inf));
    } else if (type == "annulus") {
        detail::allow_keys(j, where, {"type", "r_in", "r_out"});
        d = ChartDomain::annulus(num("r_in", 0.0), num("r_out", inf));
    } else if (type == "rectangle") {
        detail::allow_keys(j, where, {"type", "u_min", "u_max", "v_min", "v_max"});
        for (const char* k : {"u_min", "u_max", "v_min", "v_max"}) {
            if (!j.contains(k)) config_error(where + " needs " + k);
        }
        d = ChartDomain::rectangle(num("u_min", 0), num("u_max", 0), num("v_min", 0), num("v_max", 0));
    } else if (type == "sector") {
        detail::allow_keys(j, where, {"type", "r_in", "r_out", "arg_min", "arg_max"});
        d = ChartDomain::sector(num("r_in", 0.0), num("r_out", inf), num("arg_min", -pi), num("arg_max", pi));
    } else {
        config_error(where + ".type must be disk, annulus, rectangle or sector");
    }
    try {
        d.validate();
    } catch (const Error& e) {
        config_error(where + ": " + e.what());
    }
    return d;
}

inline json domain_to_json(const ChartDomain& d)
{
    // infinities become null in JSON, so they are left out instead
    auto put = [](json& j, const char* k, double v) {
        if (std::isfinite(v)) j[k] = v;
    };
    json j;
    switch (d.kind) {
    case ChartDomain::Kind::Disk:
        j["type"] = "disk";
        put(j, "radius", d.r_out);
        break;
    case ChartDomain::Kind::Annulus:
        j["type"] = "annulus";
        put(j, "r_in", d.r_in);
        put(j, "r_out", d.r_out);
        break;
    case ChartDomain::Kind::Rectangle:
        j["type"] = "rectangle";
        put(j, "u_min", d.u_min);
        put(j, "u_max", d.u_max);
        put(j, "v_min", d.v_min);
        put(j, "v_max", d.v_max);
        break;
    case ChartDomain::Kind::Sector:
        j["type"] = "sector";
        put(j, "r_in", d.r_in);
        put(j, "r_out", d.r_out);
        put(j, "arg_min", d.arg_min);
        put(j, "arg_max", d.arg_max);
        break;
    }
    return j;
}

inline SurfaceSpec parse_surface(const json& j, const std::string& where)
{
    detail::allow_keys(j, where, {"kind", "domain", "boundary", "placement"});
    if (!j.contains("kind") || !j.at("kind").is_string()) config_error(where + ".kind must be a string");
    SurfaceSpec s;
    const auto kind = surface_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) config_error(where + ".kind must be plane, enneper, catenoid or helicoid");
    s.kind = *kind;
    if (j.contains("domain")) s.domain = parse_domain(j.at("domain"), where + ".domain");
    if (j.contains("boundary")) s.boundary = detail::get_bool(j, "boundary", where);
    if (j.contains("placement")) {
        const json& p = j.at("placement");
        const std::string pw = where + ".placement";
        detail::allow_keys(p, pw, {"axis", "angle", "translation"});
        if (p.contains("axis")) s.axis = detail::get_vec3(p, "axis", pw);
        if (p.contains("angle")) s.angle = detail::get_number(p, "angle", pw);
        if (p.contains("translation")) s.translation = detail::get_vec3(p, "translation", pw);
        if (!(s.axis.norm() > 0.0)) config_error(pw + ".axis must be nonzero");
    }
    try {
        s.build();
    } catch (const Error& e) {
        config_error(where + ": " + e.what());
    }
    return s;
}

inline json surface_to_json(const SurfaceSpec& s)
{
    json j;
    j["kind"] = to_string(s.kind);
    const ChartDomain d = s.effective_domain();
    j["domain"] = domain_to_json(d);
    j["boundary"] = d.has_boundary;
    j["placement"] = {{"axis", {s.axis(0), s.axis(1), s.axis(2)}},
                      {"angle", s.angle},
                      {"translation", {s.translation(0), s.translation(1), s.translation(2)}}};
    return j;
}

/// Scenario-specific parameter keys and their defaults.
inline json default_params(const std::string& name)
{
    if (name == "sto-comp") return {{"n_se", 4.0}, {"allowance", 0.02}};
    if (name == "coordinate-qv") return {{"i", 3}, {"j", 3}, {"tolerance", 0.02}};
    if (name == "gauss-occupation") return {{"cap_radius", pi / 8.0}, {"increase_fraction", 0.95}};
    if (name == "gauss-timechange") return {{"tolerance", 0.05}};
    if (name == "halfspace") return {{"quantile", 0.1}, {"control", "auto"}};
    if (name == "mirror-coupling-plane") {
        return {{"grid", {0.01, 0.1, 0.25, 0.5, 0.75, 1.0}},
                {"n_se", 3.0},
                {"allowance", 0.01},
                {"early_bound", 0.001},
                {"sensitivity", true},
                {"sensitivity_tolerance", 0.005}};
    }
    if (name == "liouville-embedded") {
        return {{"grid", {0.25, 0.5, 0.75, 1.0}},
                {"benchmark_slack", 0.1},
                {"excursion_level", 0.0},
                {"excursion_floor", 0.3}};
    }
    if (name == "max-principle-boundary") return {{"tolerance", 1e-9}};
    config_error("unknown scenario '" + name + "'");
}

inline SurfaceSpec catalog_surface(SurfaceKind kind, std::optional<ChartDomain> domain = std::nullopt,
                                   std::optional<bool> boundary = std::nullopt, Vec3 translation = Vec3::Zero())
{
    SurfaceSpec s;
    s.kind = kind;
    s.domain = domain;
    s.boundary = boundary;
    s.translation = translation;
    return s;
}

/// Built-in desk-scale setup for each scenario.
inline ScenarioSpec default_spec(const std::string& name)
{
    ScenarioSpec s;
    s.name = name;
    s.params = default_params(name);
    s.outputs = "out/" + name;
    const auto wide = ChartDomain::annulus(1e-3, 1e3);
    if (name == "sto-comp") {
        s.surfaces = {catalog_surface(SurfaceKind::Plane)};
        s.starts = {0.0};
        s.n_traj = 10000;
    } else if (name == "coordinate-qv") {
        s.surfaces = {catalog_surface(SurfaceKind::Catenoid, wide)};
        s.starts = {1.0};
        s.n_traj = 200;
    } else if (name == "gauss-occupation") {
        s.surfaces = {catalog_surface(SurfaceKind::Catenoid, ChartDomain::annulus(1e-4, 1e4))};
        s.starts = {1.0};
        s.n_traj = 100;
        s.control.dt_base = 1e-3;
        s.control.t_max = 50.0;
    } else if (name == "gauss-timechange") {
        s.surfaces = {catalog_surface(SurfaceKind::Catenoid, wide)};
        s.starts = {1.0};
        s.n_traj = 100;
    } else if (name == "halfspace") {
        s.surfaces = {catalog_surface(SurfaceKind::Catenoid, wide),
                      catalog_surface(SurfaceKind::Plane, std::nullopt, std::nullopt, Vec3(0.0, 0.0, 3.0))};
        s.starts = {1.0, 0.0};
        s.n_traj = 400;
        s.control.dt_base = 1e-3;
        s.control.t_max = 4.0;
    } else if (name == "mirror-coupling-plane") {
        s.surfaces = {catalog_surface(SurfaceKind::Plane)};
        s.starts = {0.0, 1.0};
        s.n_traj = 10000;
        s.control.sample_stride = 1000;
    } else if (name == "liouville-embedded") {
        s.surfaces = {catalog_surface(SurfaceKind::Catenoid, wide)};
        s.starts = {1.0, -1.0};
        s.n_traj = 200;
        s.control.dt_base = 1e-3;
        s.control.t_max = 20.0;
    } else if (name == "max-principle-boundary") {
        s.surfaces = {catalog_surface(SurfaceKind::Catenoid, std::nullopt, true),
                      catalog_surface(SurfaceKind::Plane, std::nullopt, std::nullopt, Vec3(0.0, 0.0, 3.0))};
        s.starts = {1.0, 0.0};
        s.n_traj = 200;
        s.control.dt_base = 1e-3;
        s.control.t_max = 10.0;
    } else {
        config_error("unknown scenario '" + name + "'");
    }
    return s;
}

inline void check_spec(const ScenarioSpec& s)
{
    if (s.n_traj < 1) config_error("n_traj must be at least 1");
    if (s.csv_trajectories < 0) config_error("csv_trajectories must be nonnegative");
    if (s.surfaces.empty() || s.surfaces.size() > 2) config_error("surfaces must list one or two surfaces");
    const bool coupled = is_coupled_scenario(s.name);
    if (!coupled && s.surfaces.size() != 1) config_error(s.name + " takes exactly one surface");
    if (coupled && s.starts.size() != 2) config_error(s.name + " needs two start points");
    if (!coupled && s.starts.size() != 1) config_error(s.name + " needs one start point");
    try {
        s.control.validate();
    } catch (const Error& e) {
        config_error(std::string("control: ") + e.what());
    }
    for (std::size_t i = 0; i < s.starts.size(); ++i) {
        const SurfaceSpec& surf = s.surfaces[std::min(i, s.surfaces.size() - 1)];
        if (!surf.effective_domain().contains(s.starts[i])) {
            config_error("start " + std::to_string(i) + " lies outside its chart domain");
        }
    }
}

/// Apply a JSON document on top of the scenario defaults.
inline ScenarioSpec parse_scenario(const json& j, const std::string& expected_name = "")
{
    detail::allow_keys(j, "scenario",
                       {"name", "surfaces", "starts", "control", "n_traj", "seed", "outputs", "csv_trajectories",
                        "overrides", "params"});
    std::string name = expected_name;
    if (j.contains("name")) {
        if (!j.at("name").is_string()) config_error("name must be a string");
        name = j.at("name").get<std::string>();
        if (!expected_name.empty() && name != expected_name) {
            config_error("config is for scenario '" + name + "', not '" + expected_name + "'");
        }
    }
    if (name.empty()) config_error("scenario name missing");
    ScenarioSpec s = default_spec(name);

    if (j.contains("surfaces")) {
        const json& a = j.at("surfaces");
        if (!a.is_array()) config_error("surfaces must be an array");
        s.surfaces.clear();
        for (std::size_t i = 0; i < a.size(); ++i) {
            s.surfaces.push_back(parse_surface(a[i], "surfaces[" + std::to_string(i) + "]"));
        }
    }
    if (j.contains("starts")) {
        const json& a = j.at("starts");
        if (!a.is_array()) config_error("starts must be an array");
        s.starts.clear();
        for (std::size_t i = 0; i < a.size(); ++i) {
            s.starts.push_back(detail::get_point(a[i], "starts[" + std::to_string(i) + "]"));
        }
    }
    if (j.contains("control")) {
        const json& c = j.at("control");
        detail::allow_keys(c, "control",
                           {"dt", "r_couple", "t_max", "lambda_guard", "sample_stride", "proximity_refinement",
                            "refine_band", "max_refinement", "max_halvings", "segment_detection"});
        StepControl& k = s.control;
        if (c.contains("dt")) k.dt_base = detail::get_number(c, "dt", "control");
        if (c.contains("r_couple")) k.r_couple = detail::get_number(c, "r_couple", "control");
        if (c.contains("t_max")) k.t_max = detail::get_number(c, "t_max", "control");
        if (c.contains("lambda_guard")) k.lambda_guard = detail::get_number(c, "lambda_guard", "control");
        if (c.contains("sample_stride")) k.sample_stride = static_cast<int>(detail::get_integer(c, "sample_stride", "control"));
        if (c.contains("proximity_refinement")) k.proximity_refinement = detail::get_bool(c, "proximity_refinement", "control");
        if (c.contains("refine_band")) k.refine_band = detail::get_number(c, "refine_band", "control");
        if (c.contains("max_refinement")) k.max_refinement = detail::get_number(c, "max_refinement", "control");
        if (c.contains("max_halvings")) k.max_halvings = static_cast<int>(detail::get_integer(c, "max_halvings", "control"));
        if (c.contains("segment_detection")) k.segment_detection = detail::get_bool(c, "segment_detection", "control");
    }
    if (j.contains("n_traj")) s.n_traj = detail::get_integer(j, "n_traj", "scenario");
    if (j.contains("seed")) {
        const json& v = j.at("seed");
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            config_error("seed must be a nonnegative integer");
        }
        s.seed = v.get<std::uint64_t>();
    }
    if (j.contains("outputs")) {
        if (!j.at("outputs").is_string()) config_error("outputs must be a string");
        s.outputs = j.at("outputs").get<std::string>();
    }
    if (j.contains("csv_trajectories")) {
        s.csv_trajectories = static_cast<int>(detail::get_integer(j, "csv_trajectories", "scenario"));
    }
    if (j.contains("overrides")) {
        const json& o = j.at("overrides");
        detail::allow_keys(o, "overrides",
                           {"eps_max", "eps_delta", "eps_kappa", "tol_sigma", "tol_deg", "tol_cos", "r_min",
                            "domination_tol"});
        Constants& c = s.overrides;
        auto set = [&](const char* k, double& v) {
            if (o.contains(k)) v = detail::get_number(o, k, "overrides");
        };
        set("eps_max", c.eps_max);
        set("eps_delta", c.eps_delta);
        set("eps_kappa", c.eps_kappa);
        set("tol_sigma", c.tol_sigma);
        set("tol_deg", c.tol_deg);
        set("tol_cos", c.tol_cos);
        set("r_min", c.r_min);
        set("domination_tol", c.domination_tol);
        if (!(c.eps_max >= 0.0 && c.eps_max <= 0.5) || !(c.eps_delta > 0.0) || !(c.eps_kappa > 0.0)) {
            config_error("overrides: need 0 <= eps_max <= 0.5 and positive eps_delta, eps_kappa");
        }
    }
    if (j.contains("params")) {
        const json& p = j.at("params");
        detail::require_object(p, "params");
        for (auto it = p.begin(); it != p.end(); ++it) {
            if (!s.params.contains(it.key())) config_error("unknown key '" + it.key() + "' in params");
            const json& dflt = s.params.at(it.key());
            const bool ok = (dflt.is_number() && it.value().is_number()) || (dflt.is_boolean() && it.value().is_boolean())
                            || (dflt.is_string() && it.value().is_string()) || (dflt.is_array() && it.value().is_array());
            if (!ok) config_error("params." + it.key() + " has the wrong type");
            s.params[it.key()] = it.value();
        }
    }
    check_spec(s);
    return s;
}

inline ScenarioSpec load_scenario(const std::string& path, const std::string& expected_name = "")
{
    std::ifstream in(path);
    if (!in) config_error("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        config_error(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_scenario(j, expected_name);
}

/// Normalized echo of a spec, with every default filled in.
inline json spec_to_json(const ScenarioSpec& s)
{
    json j;
    j["name"] = s.name;
    j["surfaces"] = json::array();
    for (const auto& surf : s.surfaces) j["surfaces"].push_back(surface_to_json(surf));
    j["starts"] = json::array();
    for (const cplx& z : s.starts) j["starts"].push_back({z.real(), z.imag()});
    const StepControl& k = s.control;
    j["control"] = {{"dt", k.dt_base},
                    {"r_couple", k.r_couple},
                    {"t_max", k.t_max},
                    {"lambda_guard", k.lambda_guard},
                    {"sample_stride", k.sample_stride},
                    {"proximity_refinement", k.proximity_refinement},
                    {"refine_band", k.refine_band},
                    {"max_refinement", k.max_refinement},
                    {"max_halvings", k.max_halvings},
                    {"segment_detection", k.segment_detection}};
    j["n_traj"] = s.n_traj;
    j["seed"] = s.seed;
    j["outputs"] = s.outputs;
    j["csv_trajectories"] = s.csv_trajectories;
    const Constants& c = s.overrides;
    j["overrides"] = {{"eps_max", c.eps_max},     {"eps_delta", c.eps_delta}, {"eps_kappa", c.eps_kappa},
                      {"tol_sigma", c.tol_sigma}, {"tol_deg", c.tol_deg},     {"tol_cos", c.tol_cos},
                      {"r_min", c.r_min},         {"domination_tol", c.domination_tol}};
    j["params"] = s.params;
    return j;
}

} // namespace mincouple::experiments
