#pragma once

// Statistics with explicit pass rules, scenario reports, CSV formatting and
// the index-ordered parallel map used by every scenario.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "mincouple/experiments/scenario.hpp"
#include "mincouple/sde_engine.hpp"

namespace mincouple::experiments {

enum class Comparison {
    Within,  // |estimate - target| <= tolerance
    AtMost,  // estimate <= target + tolerance
    AtLeast, // estimate >= target - tolerance
    Above,   // estimate > target (tolerance unused)
};

inline const char* to_string(Comparison c)
{
    switch (c) {
    case Comparison::Within: return "within";
    case Comparison::AtMost: return "at_most";
    case Comparison::AtLeast: return "at_least";
    case Comparison::Above: return "above";
    }
    return "?";
}

struct Statistic {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    Comparison cmp = Comparison::Within;
    bool gating = true; // informational statistics never fail a report
    bool pass = false;
};

/// Non-finite estimates or tolerances never pass.
inline bool evaluate(double estimate, double target, double tolerance, Comparison cmp)
{
    if (!std::isfinite(estimate) || !std::isfinite(target)) return false;
    if (cmp == Comparison::Above) return estimate > target;
    if (!std::isfinite(tolerance)) return false;
    switch (cmp) {
    case Comparison::Within: return std::abs(estimate - target) <= tolerance;
    case Comparison::AtMost: return estimate <= target + tolerance;
    case Comparison::AtLeast: return estimate >= target - tolerance;
    case Comparison::Above: break;
    }
    return false;
}

inline Statistic make_stat(std::string name, double estimate, double std_error, double target, double tolerance,
                           Comparison cmp = Comparison::Within, bool gating = true)
{
    Statistic s{std::move(name), estimate, std_error, target, tolerance, cmp, gating, false};
    s.pass = evaluate(estimate, target, tolerance, cmp);
    return s;
}

/// Running mean and standard error; fewer than two samples give an infinite error.
struct MeanAccumulator {
    long n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x)
    {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }

    double std_error() const
    {
        if (n < 2) return std::numeric_limits<double>::infinity();
        return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
    }
};

/// Binomial standard error of a fraction; infinite below two trials.
inline double fraction_std_error(double p, long n)
{
    if (n < 2) return std::numeric_limits<double>::infinity();
    return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

struct SummaryReport {
    json scenario;
    std::vector<Statistic> stats;
    std::map<std::string, long> stop_counts;
    bool has_ledger = false;
    DominationLedger ledger;
    json info = json::object();

    bool pass() const
    {
        for (const auto& s : stats) {
            if (s.gating && !s.pass) return false;
        }
        return !has_ledger || ledger.violations == 0;
    }

    const Statistic* find(const std::string& name) const
    {
        for (const auto& s : stats) {
            if (s.name == name) return &s;
        }
        return nullptr;
    }

    void add(Statistic s) { stats.push_back(std::move(s)); }

    void count_stop(StopReason r) { ++stop_counts[to_string(r)]; }
};

inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json report_to_json(const SummaryReport& r)
{
    json j;
    j["scenario"] = r.scenario;
    j["pass"] = r.pass();
    j["statistics"] = json::array();
    for (const auto& s : r.stats) {
        j["statistics"].push_back({{"name", s.name},
                                   {"estimate", finite_or_null(s.estimate)},
                                   {"std_error", finite_or_null(s.std_error)},
                                   {"target", finite_or_null(s.target)},
                                   {"tolerance", finite_or_null(s.tolerance)},
                                   {"comparison", to_string(s.cmp)},
                                   {"gating", s.gating},
                                   {"pass", s.pass}});
    }
    j["stop_counts"] = json::object();
    for (const auto& [k, v] : r.stop_counts) j["stop_counts"][k] = v;
    if (r.has_ledger) {
        const DominationLedger& l = r.ledger;
        j["domination"] = {{"steps", l.steps},
                           {"violations", l.violations},
                           {"max_g_minus_f", l.steps ? json(l.max_violation) : json(nullptr)},
                           {"ratio_checked", l.ratio_checked},
                           {"ratio_violations", l.ratio_violations},
                           {"max_g_over_f", l.max_ratio},
                           {"equality_steps", l.equality_steps}};
    }
    j["info"] = r.info;
    return j;
}

/// 17 significant digits, enough to round-trip any double.
inline std::string fmt17(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void append_row(std::string& out, std::initializer_list<std::string> cols)
{
    bool first = true;
    for (const auto& c : cols) {
        if (!first) out += ',';
        out += c;
        first = false;
    }
    out += '\n';
}

inline void write_text(const std::filesystem::path& p, const std::string& text)
{
    std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorKind::ConfigError, "cannot write '" + p.string() + "'");
    f << text;
}

/// f(i) for i in [0, n), spread over `workers` threads; results land at their
/// index so the output never depends on scheduling.
template <class R, class F>
std::vector<R> parallel_map(long n, int workers, F&& f)
{
    std::vector<R> out(static_cast<std::size_t>(n));
    const int w = std::max(1, std::min<int>(workers, static_cast<int>(std::min<long>(n, 1 << 20))));
    if (w == 1) {
        for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = f(i);
        return out;
    }
    std::atomic<long> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto body = [&] {
        while (true) {
            const long i = next.fetch_add(1);
            if (i >= n) return;
            try {
                out[static_cast<std::size_t>(i)] = f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int k = 0; k < w; ++k) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
    return out;
}

/// Stream id for trajectory `index` in sub-run `sub` of a scenario.
inline std::uint64_t stream_id(long index, unsigned sub = 0)
{
    return (static_cast<std::uint64_t>(sub) << 40) | static_cast<std::uint64_t>(index);
}

} // namespace mincouple::experiments
