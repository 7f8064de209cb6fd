// mincouple: run one scenario and write series.csv and report.json.
//
//   mincouple <scenario> [--config PATH] [--seed U64] [--traj N] [--dt F]
//             [--tmax F] [--out DIR] [--workers N]
//
// Exit status is 0 when the report passes, 1 when it fails and 2 on a bad
// configuration.

#include <cstdio>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "mincouple/experiments/scenarios.hpp"

using namespace mincouple;
using namespace mincouple::experiments;

namespace {

void print_summary(const ScenarioSpec& spec, const SummaryReport& rep)
{
    std::printf("%s: %s (n_traj=%ld, seed=%llu)\n", spec.name.c_str(), rep.pass() ? "PASS" : "FAIL", spec.n_traj,
                static_cast<unsigned long long>(spec.seed));
    for (const auto& s : rep.stats) {
        std::printf("  %-40s %s  %.6g (se %.3g) %s %.6g tol %.3g%s\n", s.name.c_str(), s.pass ? "ok  " : "FAIL",
                    s.estimate, s.std_error, to_string(s.cmp), s.target, s.tolerance, s.gating ? "" : "  [info]");
    }
    std::printf("  stops:");
    for (const auto& [k, v] : rep.stop_counts) std::printf(" %s=%ld", k.c_str(), v);
    std::printf("\n");
    if (rep.has_ledger) {
        std::printf("  domination: %ld steps, %ld violations, %ld equality steps\n", rep.ledger.steps,
                    rep.ledger.violations, rep.ledger.equality_steps);
    }
    std::printf("  outputs: %s\n", spec.outputs.c_str());
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Run a coupling experiment on catalog minimal surfaces"};
    std::string scenario, config;
    std::optional<std::uint64_t> seed;
    std::optional<long> traj;
    std::optional<double> dt, tmax;
    std::optional<std::string> out_dir;
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    app.add_option("scenario", scenario, "Scenario name")->required()->check(CLI::IsMember(scenario_names()));
    app.add_option("--config", config, "JSON scenario file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--traj", traj, "Number of trajectories")->check(CLI::PositiveNumber);
    app.add_option("--dt", dt, "Base step size")->check(CLI::PositiveNumber);
    app.add_option("--tmax", tmax, "Time horizon")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--workers", workers, "Worker threads (does not affect results)")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        ScenarioSpec spec = config.empty() ? default_spec(scenario) : load_scenario(config, scenario);
        if (seed) spec.seed = *seed;
        if (traj) spec.n_traj = *traj;
        if (dt) spec.control.dt_base = *dt;
        if (tmax) spec.control.t_max = *tmax;
        if (out_dir) spec.outputs = *out_dir;
        check_spec(spec);
        const ScenarioOutput out = run_scenario(spec, {workers, true});
        print_summary(spec, out.report);
        return out.report.pass() ? 0 : 1;
    } catch (const Error& e) {
        std::cerr << "mincouple: " << e.what() << "\n";
        const bool config_problem = e.kind() == ErrorKind::ConfigError || e.kind() == ErrorKind::BadParams
                                    || e.kind() == ErrorKind::MissingBoundary;
        return config_problem ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "mincouple: " << e.what() << "\n";
        return 1;
    }
}
