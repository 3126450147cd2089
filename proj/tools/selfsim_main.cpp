// Command-line surface of the self-similar chain library.  Every subcommand
// is a thin orchestration layer: validate flags, call the library, write one
// CSV or JSON file.  JSON outputs are full run records (tool, version,
// command, config, data) and can be replayed with `rerun`.  Output is
// deterministic by default; `--timestamp` opts into a generation-time field.
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure,
// 4 invariant failure (from `check`).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <selfsim/selfsim.hpp>

namespace {

using namespace selfsim;
using nlohmann::json;

// ---------------------------------------------------------------------------
// small utilities

// Engine output mapped to [0, 1) directly: std::mt19937_64 is
// bit-reproducible everywhere, the standard distributions are not.
struct Rng {
    std::mt19937_64 eng;
    explicit Rng(std::uint64_t seed) : eng(seed) {}
    double unit() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
};

std::string iso_now() {
    const std::time_t tt = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Shortest decimal form that parses back to the same double; used for header
// comments where fixed 17-digit output would be needlessly noisy.
std::string fmt_shortest(double v) {
    char buf[40];
    if (v == std::rint(v) && std::abs(v) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return buf;
    }
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return fmt17(v);
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("failed while writing output file: " + path);
}

struct OutputOpts {
    std::string out;            // empty: derive from the command name
    std::string format = "csv"; // csv | json
    bool timestamp = false;
};

json make_record(const std::string& command, json config, json data, bool timestamp) {
    json rec;
    rec["tool"] = "selfsim";
    rec["version"] = version;
    rec["command"] = command;
    rec["config"] = std::move(config);
    rec["data"] = std::move(data);
    if (timestamp) rec["generated_at"] = iso_now();
    return rec;
}

std::vector<std::string> base_comments(const std::string& command, const ChainParams& p,
                                       double tol) {
    std::vector<std::string> c;
    c.push_back(std::string("tool: selfsim ") + version);
    c.push_back("command: " + command);
    c.push_back("N = " + fmt_shortest(p.N));
    c.push_back("delta = " + fmt_shortest(p.delta));
    c.push_back("h = " + fmt_shortest(p.h));
    c.push_back("tol = " + fmt_shortest(tol));
    return c;
}

int emit(const OutputOpts& oo, const std::string& command, json config,
         std::vector<std::string> comments, const std::vector<std::string>& names,
         const std::vector<std::vector<double>>& columns, json data) {
    const std::string path =
        !oo.out.empty() ? oo.out : command + (oo.format == "csv" ? ".csv" : ".json");
    if (oo.format == "csv") {
        if (oo.timestamp) comments.push_back("generated: " + iso_now());
        std::ostringstream os;
        write_csv(os, comments, names, columns);
        write_file(path, os.str());
    } else {
        write_file(path, make_record(command, std::move(config), std::move(data),
                                     oo.timestamp)
                             .dump(2) +
                       "\n");
    }
    std::cout << "wrote " << path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// subcommand configs; each serializes completely so run records replay

struct DispersionCfg {
    double N = 1.5, delta = 1.0, h = 1.0;
    double kh_min = 0.0, kh_max = 20.0;
    std::size_t n = 2000;
    double tol = 1e-9;
    std::string preset;
    bool point = false;
    double kh = 1.0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DispersionCfg, N, delta, h, kh_min, kh_max, n, tol, preset,
                                   point, kh)

struct DensityCfg {
    double N = 1.01, delta = 1.0, h = 1.0;
    double kh_min = 1e-4, kh_max = 1e-2;
    std::size_t points = 48;
    double tol = 1e-12;
    double quad_tol = 1e-10;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DensityCfg, N, delta, h, kh_min, kh_max, points, tol,
                                   quad_tol)

struct KernelCfg {
    double N = 1.5, delta = 0.5, h = 1.0;
    double x_min = 0.01, x_max = 100.0;
    std::size_t n = 512;
    bool linear = false; // default grid is log-spaced
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(KernelCfg, N, delta, h, x_min, x_max, n, linear)

struct DimensionCfg {
    double N = 1.5, delta = 0.5, h = 1.0;
    double kh_min = 0.01, kh_max = 100.0;
    std::size_t samples = 80001;
    double tol = 1e-8;
    double discard = 0.2;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DimensionCfg, N, delta, h, kh_min, kh_max, samples, tol,
                                   discard)

struct SimulateCfg {
    double N = 1.5, delta = 0.5, h = 1.0;
    std::string preset = "mode";   // mode | pulse | random
    std::string method = "verlet"; // verlet | spectral
    std::size_t n = 64;
    double length = 64.0;
    double dt = 0.0;        // 0: quarter of the stability limit
    long steps = 1000;
    std::size_t snapshots = 129;
    double tol = 1e-10;
    double amplitude = 0.0; // 0: preset default
    long mode_index = 1;
    std::uint64_t seed = 12345;
    bool allow_unstable_dt = false;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SimulateCfg, N, delta, h, preset, method, n, length, dt,
                                   steps, snapshots, tol, amplitude, mode_index, seed,
                                   allow_unstable_dt)

// ---------------------------------------------------------------------------
// dispersion

double preset_delta(const std::string& preset) {
    if (preset == "fig1") return 1.2;
    if (preset == "fig2") return 0.7;
    if (preset == "fig3") return 0.5;
    if (preset == "fig4") return 0.1;
    throw std::invalid_argument("dispersion: unknown preset: " + preset);
}

int run_dispersion(const DispersionCfg& cfg, const OutputOpts& oo) {
    const ChainParams p(cfg.N, cfg.delta, cfg.h);
    if (cfg.point) {
        const auto r = omega2(cfg.kh, p, cfg.tol);
        std::cout << "omega2,err\n" << fmt17(r.value) << ',' << fmt17(r.err) << '\n';
        return 0;
    }

    const auto curve = sample_curve(p, cfg.kh_min, cfg.kh_max, cfg.n, cfg.tol);
    std::vector<double> omega_col(curve.kh.size());
    for (std::size_t j = 0; j < curve.kh.size(); ++j) omega_col[j] = std::sqrt(curve.omega2[j]);
    const double max_err = *std::max_element(curve.err.begin(), curve.err.end());

    auto comments = base_comments("dispersion", p, cfg.tol);
    if (!cfg.preset.empty()) comments.push_back("preset = " + cfg.preset);
    comments.push_back("kh window = [" + fmt_shortest(cfg.kh_min) + ", " +
                       fmt_shortest(cfg.kh_max) + "], n = " + std::to_string(cfg.n));
    comments.push_back("max certified error = " + fmt_shortest(max_err));

    json data;
    data["kh"] = curve.kh;
    data["omega2"] = curve.omega2;
    data["omega"] = omega_col;
    data["err"] = curve.err;
    data["max_err"] = max_err;

    return emit(oo, "dispersion", json(cfg), std::move(comments),
                {"kh", "omega2", "omega", "err"},
                {curve.kh, curve.omega2, omega_col, curve.err}, std::move(data));
}

// ---------------------------------------------------------------------------
// density

int run_density(const DensityCfg& cfg, const OutputOpts& oo) {
    const ChainParams p(cfg.N, cfg.delta, cfg.h);
    const DensityModel model = make_density_model(p, cfg.quad_tol);
    const auto grid = long_wave_omega_grid(p, cfg.kh_min, cfg.kh_max, cfg.points, cfg.tol);
    const DensityFit fit = density_empirical_check(p, grid, cfg.tol);

    std::vector<double> rho_model(fit.omega.size());
    for (std::size_t j = 0; j < fit.omega.size(); ++j)
        rho_model[j] = oscillator_density(model, fit.omega[j]);
    const std::vector<double> slope_col(fit.omega.size(), fit.fit.slope);

    auto comments = base_comments("density", p, cfg.tol);
    comments.push_back("C = " + fmt_shortest(model.C));
    comments.push_back("fitted slope = " + fmt_shortest(fit.fit.slope));
    comments.push_back("expected slope = " + fmt_shortest(fit.expected));
    comments.push_back("slope stderr = " + fmt_shortest(fit.fit.slope_stderr));

    json data;
    data["omega"] = fit.omega;
    data["kh"] = fit.kh;
    data["rho_model"] = rho_model;
    data["rho_empirical"] = fit.rho;
    data["fitted_slope"] = fit.fit.slope;
    data["expected_slope"] = fit.expected;
    data["slope_stderr"] = fit.fit.slope_stderr;
    data["C"] = model.C;

    return emit(oo, "density", json(cfg), std::move(comments),
                {"omega", "kh", "rho_model", "rho_empirical", "fitted_slope"},
                {fit.omega, fit.kh, rho_model, fit.rho, slope_col}, std::move(data));
}

// ---------------------------------------------------------------------------
// kernel

int run_kernel(const KernelCfg& cfg, const OutputOpts& oo) {
    const ChainParams p(cfg.N, cfg.delta, cfg.h);
    const KernelModel m = make_kernel(p);
    if (!(cfg.x_min > 0.0) || !(cfg.x_max > cfg.x_min))
        throw std::invalid_argument("kernel: need 0 < x_min < x_max");
    if (cfg.n < 2) throw std::invalid_argument("kernel: need at least 2 grid points");

    std::vector<double> xs(cfg.n), gs(cfg.n);
    for (std::size_t j = 0; j < cfg.n; ++j) {
        const double f = static_cast<double>(j) / static_cast<double>(cfg.n - 1);
        xs[j] = cfg.linear ? cfg.x_min + f * (cfg.x_max - cfg.x_min)
                           : cfg.x_min * std::exp(f * std::log(cfg.x_max / cfg.x_min));
        gs[j] = kernel_eval(m, xs[j]);
    }

    auto comments = base_comments("kernel", p, 0.0);
    comments.pop_back(); // the kernel is closed-form; no tolerance applies
    comments.push_back(std::string("branch = ") + (m.log_branch ? "log" : "power"));
    if (m.conditioning_warning)
        comments.push_back("warning: log branch substituted away from delta = 1");

    json data;
    data["x"] = xs;
    data["g"] = gs;
    data["log_branch"] = m.log_branch;
    data["conditioning_warning"] = m.conditioning_warning;

    return emit(oo, "kernel", json(cfg), std::move(comments), {"x", "g"}, {xs, gs},
                std::move(data));
}

// ---------------------------------------------------------------------------
// dimension

int run_dimension(const DimensionCfg& cfg, const OutputOpts& oo) {
    const ChainParams p(cfg.N, cfg.delta, cfg.h);
    const auto curve = sample_curve(p, cfg.kh_min, cfg.kh_max, cfg.samples, cfg.tol);
    DimensionOptions opts;
    opts.discard_fraction = cfg.discard;
    const DimensionReport rep = estimate_dimension(curve, opts);

    std::vector<double> count_col(rep.counts.size());
    for (std::size_t j = 0; j < rep.counts.size(); ++j)
        count_col[j] = static_cast<double>(rep.counts[j]);

    auto comments = base_comments("dimension", p, cfg.tol);
    comments.push_back("D_estimated = " + fmt_shortest(rep.D_estimated));
    comments.push_back("raw slope = " + fmt_shortest(rep.raw_slope) +
                       (rep.clipped ? " (clipped)" : ""));
    comments.push_back("slope stderr = " + fmt_shortest(rep.ci));
    comments.push_back("D_expected = " +
                       (rep.D_expected ? fmt_shortest(*rep.D_expected) : std::string("none")));
    comments.push_back("kh window = [" + fmt_shortest(rep.kh_min) + ", " +
                       fmt_shortest(rep.kh_max) + "], samples = " +
                       std::to_string(rep.samples));

    json data;
    data["delta"] = rep.delta;
    data["D_estimated"] = rep.D_estimated;
    data["raw_slope"] = rep.raw_slope;
    data["clipped"] = rep.clipped;
    data["ci"] = rep.ci;
    if (rep.D_expected)
        data["D_expected"] = *rep.D_expected;
    else
        data["D_expected"] = nullptr;
    data["scales"] = rep.scales;
    data["counts"] = rep.counts;
    data["kh_min"] = rep.kh_min;
    data["kh_max"] = rep.kh_max;
    data["samples"] = rep.samples;

    return emit(oo, "dimension", json(cfg), std::move(comments), {"scale", "boxes"},
                {rep.scales, count_col}, std::move(data));
}

// ---------------------------------------------------------------------------
// simulate

Field build_initial(const SimulateCfg& cfg) {
    const double dxg = cfg.length / static_cast<double>(cfg.n);
    const double amp =
        cfg.amplitude > 0.0 ? cfg.amplitude : (cfg.preset == "random" ? 1e-3 : 1.0);
    std::vector<double> u(cfg.n, 0.0);
    if (cfg.preset == "mode") {
        const double k = 2.0 * std::numbers::pi * static_cast<double>(cfg.mode_index) /
                         static_cast<double>(cfg.n);
        for (std::size_t j = 0; j < cfg.n; ++j)
            u[j] = amp * std::cos(k * static_cast<double>(j));
    } else if (cfg.preset == "pulse") {
        const double w = cfg.length / 16.0, c = cfg.length / 2.0;
        for (std::size_t j = 0; j < cfg.n; ++j) {
            const double r = (dxg * static_cast<double>(j) - c) / w;
            u[j] = amp * std::exp(-0.5 * r * r);
        }
    } else if (cfg.preset == "random") {
        Rng rng(cfg.seed);
        for (std::size_t j = 0; j < cfg.n; ++j) u[j] = amp * (2.0 * rng.unit() - 1.0);
    } else {
        throw std::invalid_argument("simulate: unknown preset: " + cfg.preset +
                                    " (expected mode, pulse, or random)");
    }
    return Field(std::move(u), dxg);
}

int run_simulate(SimulateCfg cfg, const OutputOpts& oo) {
    const ChainParams p(cfg.N, cfg.delta, cfg.h);
    if (cfg.n < 2) throw std::invalid_argument("simulate: need at least 2 grid points");
    if (!(cfg.length > 0.0)) throw std::invalid_argument("simulate: length must be positive");
    if (cfg.preset == "mode" &&
        (cfg.mode_index < 1 || cfg.mode_index > static_cast<long>(cfg.n / 2)))
        throw std::invalid_argument("simulate: mode index must lie in [1, n/2]");

    if (!(cfg.dt > 0.0)) cfg.dt = 0.25 * stability_limit_dt(cfg.n, cfg.length, p, cfg.tol);
    if (cfg.amplitude <= 0.0) cfg.amplitude = cfg.preset == "random" ? 1e-3 : 1.0;

    const Field u0 = build_initial(cfg);
    const Field v0(std::vector<double>(cfg.n, 0.0), u0.dx);
    SimRun run(u0, v0, cfg.dt, cfg.steps);
    run.max_snapshots = cfg.snapshots;
    run.tol = cfg.tol;
    run.allow_unstable_dt = cfg.allow_unstable_dt;

    if (cfg.method != "verlet" && cfg.method != "spectral")
        throw std::invalid_argument("simulate: unknown method: " + cfg.method +
                                    " (expected verlet or spectral)");
    const Trajectory traj =
        cfg.method == "verlet" ? evolve_realspace(run, p) : spectral_trajectory(run, p);

    const std::size_t ns = traj.snaps.size();
    std::vector<double> t(ns), energy(ns), invariant(ns), drift(ns), momentum(ns);
    const double e0 = traj.snaps[0].energy_invariant;
    for (std::size_t j = 0; j < ns; ++j) {
        const Snapshot& s = traj.snaps[j];
        t[j] = s.t;
        energy[j] = s.energy;
        invariant[j] = s.energy_invariant;
        drift[j] = e0 != 0.0 ? std::abs(s.energy_invariant / e0 - 1.0)
                             : std::abs(s.energy_invariant);
        momentum[j] = s.momentum;
    }
    const double max_drift = *std::max_element(drift.begin(), drift.end());

    std::vector<double> residuals;
    try {
        residuals = dalembert_residual_series(traj, cfg.tol);
    } catch (const std::invalid_argument&) {
        // fewer than 3 uniformly spaced snapshots: nothing to difference
    }

    auto comments = base_comments("simulate", p, cfg.tol);
    comments.push_back("preset = " + cfg.preset + ", method = " + cfg.method);
    comments.push_back("n = " + std::to_string(cfg.n) + ", length = " +
                       fmt_shortest(cfg.length) + ", amplitude = " +
                       fmt_shortest(cfg.amplitude));
    if (cfg.preset == "mode")
        comments.push_back("mode index = " + std::to_string(cfg.mode_index));
    if (cfg.preset == "random")
        comments.push_back("seed = " + std::to_string(cfg.seed));
    comments.push_back("dt = " + fmt_shortest(cfg.dt) + ", steps = " +
                       std::to_string(cfg.steps) + ", snapshot stride = " +
                       std::to_string(traj.snapshot_stride));
    comments.push_back("force truncation bound = " + fmt_shortest(traj.force_err));
    comments.push_back("max energy drift = " + fmt_shortest(max_drift));
    if (traj.conditioning_warning)
        comments.push_back("warning: scale ratio nearly indistinguishable from 1");

    json data;
    data["t"] = t;
    data["energy"] = energy;
    data["energy_invariant"] = invariant;
    data["energy_drift"] = drift;
    data["momentum"] = momentum;
    data["residuals"] = residuals;
    data["max_energy_drift"] = max_drift;
    data["force_err"] = traj.force_err;
    data["conditioning_warning"] = traj.conditioning_warning;
    data["snapshot_stride"] = traj.snapshot_stride;
    data["final_u"] = traj.snaps.back().u.u;
    data["final_v"] = traj.snaps.back().v.u;

    return emit(oo, "simulate", json(cfg), std::move(comments),
                {"t", "energy", "energy_invariant", "energy_drift", "momentum"},
                {t, energy, invariant, drift, momentum}, std::move(data));
}

// ---------------------------------------------------------------------------
// check: the invariant battery.  Each entry returns a detail string and
// throws on violation; the harness prints one PASS/FAIL line per entry.

void expect(bool cond, const std::string& msg) {
    if (!cond) throw std::runtime_error(msg);
}

template <class Fn>
void expect_rejected(Fn&& fn, const std::string& label) {
    try {
        fn();
    } catch (const std::invalid_argument&) {
        return;
    }
    throw std::runtime_error(label + ": expected rejection did not happen");
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

AnalyticProbe gaussian_probe() {
    AnalyticProbe probe([](double t) { return std::exp(-t * t); });
    probe.with_derivatives(
        [](double t) { return (4.0 * t * t - 2.0) * std::exp(-t * t); },
        [](double t) { return (16.0 * t * t * t * t - 48.0 * t * t + 12.0) * std::exp(-t * t); });
    probe.with_limit(0.0).with_scale(1.0).with_bounds(1.0, 2.0);
    return probe;
}

AnalyticProbe cosine_probe(double k) {
    AnalyticProbe probe([k](double t) { return std::cos(k * t); });
    probe.with_derivatives([k](double t) { return -k * k * std::cos(k * t); },
                           [k](double t) { return k * k * k * k * std::cos(k * t); });
    probe.with_scale(1.0 / k).with_bounds(1.0, k * k);
    return probe;
}

Field check_random_field(std::size_t n, double L, double amp, std::uint64_t seed,
                         double offset = 0.0) {
    Rng rng(seed);
    std::vector<double> u(n);
    for (std::size_t j = 0; j < n; ++j) u[j] = offset + amp * (2.0 * rng.unit() - 1.0);
    return Field(std::move(u), L / static_cast<double>(n));
}

std::string check_dispersion_scaling(bool quick) {
    Rng rng(1001);
    const int draws = quick ? 8 : 40;
    double worst = 0.0;
    for (int i = 0; i < draws; ++i) {
        const ChainParams p(rng.uniform(1.1, 3.0), rng.uniform(0.1, 1.9), 1.0);
        const double kh = std::exp(rng.uniform(std::log(1e-2), std::log(10.0)));
        const double lam = p.lambda();
        const double lhs = omega2(p.N * kh, p, 1e-10).value;
        const double rhs = lam * omega2(kh, p, 1e-10).value;
        const double r = std::abs(lhs - rhs) / (1.0 + lam);
        worst = std::max(worst, r);
        expect(r <= 1e-10, "scaled residual " + num(r) + " at delta = " + num(p.delta) +
                               ", N = " + num(p.N) + ", kh = " + num(kh));
    }
    return "max scaled residual " + num(worst) + " over " + std::to_string(draws) + " draws";
}

std::string check_dispersion_evenness(bool) {
    const ChainParams p(1.5, 0.7, 1.0);
    expect(omega2(0.0, p, 1e-10).value == 0.0, "omega2(0) must vanish exactly");
    for (double kh : {1e-6, 0.3, 2.0, 37.0}) {
        const double plus = omega2(kh, p, 1e-10).value;
        const double minus = omega2(-kh, p, 1e-10).value;
        expect(plus == minus, "evenness broken at kh = " + num(kh));
        expect(plus >= 0.0, "negative omega2 at kh = " + num(kh));
    }
    return "even, nonnegative, zero at the origin";
}

std::string check_dispersion_tails(bool) {
    double worst = 0.0;
    for (auto [delta, kh] : {std::pair{0.3, 0.7}, {1.0, 3.0}, {1.7, 0.05}}) {
        const ChainParams p(1.5, delta, 1.0);
        const auto coarse = omega2(kh, p, 1e-4);
        const auto fine = omega2(kh, p, 1e-13);
        expect(coarse.err <= 1e-4, "certified bound exceeds the requested tolerance");
        const double gap = std::abs(coarse.value - fine.value);
        expect(gap <= coarse.err + 1e-12,
               "windowed value differs from the refined one by " + num(gap) +
                   " > certified " + num(coarse.err));
        worst = std::max(worst, coarse.err > 0.0 ? gap / coarse.err : 0.0);
    }
    return "refinement stays within certified bounds (worst use " + num(worst) + ")";
}

std::string check_laplacian_eigenrelation(bool quick) {
    // Grid path: a commensurate cosine is an exact eigenvector of the spectral
    // operator, valid across the whole band.
    Rng rng(1004);
    const int grid_draws = quick ? 6 : 20;
    double worst_grid = 0.0;
    for (int i = 0; i < grid_draws; ++i) {
        const ChainParams p(rng.uniform(1.1, 3.0), rng.uniform(0.05, 1.95), 1.0);
        const std::size_t n = 32u << (i % 3);
        const double L = rng.uniform(10.0, 60.0);
        const auto m = 1 + static_cast<std::size_t>(rng.uniform(0.0, 0.999) *
                                                    static_cast<double>(n / 2));
        const double k = std::abs(bin_wavenumber(m, n, L));
        std::vector<double> u(n);
        for (std::size_t j = 0; j < n; ++j)
            u[j] = std::cos(k * L * static_cast<double>(j) / static_cast<double>(n));
        const Field f(std::move(u), L / static_cast<double>(n));
        const auto lap = laplacian_apply_field(f, p, 1e-12);
        const double w2 = omega2(k * p.h, p, 1e-12).value;
        double r = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            r = std::max(r, std::abs(lap.lap.u[j] + w2 * f.u[j]));
        r /= w2;
        worst_grid = std::max(worst_grid, r);
        expect(r < 1e-8, "grid eigenrelation residual " + num(r) + " at mode " +
                             std::to_string(m) + ", delta = " + num(p.delta));
    }

    // Analytic path: pointwise probe evaluation.  Displacements beyond ~1e16/k
    // scramble the probe's phase at full term weight, so this route only holds
    // tight tolerances where the weights decay fast enough to bury that range;
    // parameters are drawn from such a region.
    const int probe_draws = quick ? 3 : 10;
    double worst_probe = 0.0;
    for (int i = 0; i < probe_draws; ++i) {
        const ChainParams p(rng.uniform(1.35, 2.8), rng.uniform(0.7, 1.8), 1.0);
        const double k = rng.uniform(0.6, 3.0);
        const double x = rng.uniform(-2.0, 2.0);
        const auto probe = cosine_probe(k);
        const double lap = laplacian_apply_analytic(probe, p, x, 1e-12).value;
        const double w2 = omega2(k * p.h, p, 1e-12).value;
        const double r = std::abs(lap + w2 * std::cos(k * x)) / w2;
        worst_probe = std::max(worst_probe, r);
        expect(r < 1e-8, "probe eigenrelation residual " + num(r) + " at k = " + num(k) +
                             ", delta = " + num(p.delta));
    }
    return "max relative residual " + num(worst_grid) + " (grid), " + num(worst_probe) +
           " (probe)";
}

std::string check_laplacian_scaling(bool quick) {
    Rng rng(1005);
    const int draws = quick ? 2 : 6;
    const auto probe = gaussian_probe();
    double worst = 0.0;
    for (int i = 0; i < draws; ++i) {
        const ChainParams p(rng.uniform(1.2, 2.2), rng.uniform(0.3, 1.7),
                            rng.uniform(0.3, 1.5));
        const double x = rng.uniform(-1.5, 1.5);
        const double res = laplacian_scaling_check(probe, p, x, 1e-10);
        const double bound = (1.0 + p.lambda()) * 1e-9;
        worst = std::max(worst, res / bound);
        expect(res <= bound, "scaling residual " + num(res) + " exceeds " + num(bound));
    }
    return "residuals within certified budget (worst use " + num(worst) + ")";
}

std::string check_laplacian_quadratic_form(bool) {
    const ChainParams p(1.5, 0.7, 1.0);
    const Field u = check_random_field(32, 16.0, 1.0, 1106);
    const Field v = check_random_field(32, 16.0, 1.0, 2106);
    const auto lu = laplacian_apply_field(u, p, 1e-10);
    const auto lv = laplacian_apply_field(v, p, 1e-10);
    const double quad = grid_inner(u, lu.lap);
    expect(quad <= 1e-8, "quadratic form came out positive: " + num(quad));
    const double sym = std::abs(grid_inner(v, lu.lap) - grid_inner(u, lv.lap));
    expect(sym <= 1e-8, "operator asymmetry " + num(sym));
    return "<u,Lu> = " + num(quad) + ", asymmetry " + num(sym);
}

std::string check_elastic_energy(bool) {
    const ChainParams p(1.5, 0.5, 1.0);
    const Field u = check_random_field(32, 16.0, 1.0, 1107);
    const auto lap = laplacian_apply_field(u, p, 1e-10);
    const double quad = grid_inner(u, lap.lap);
    const double total = total_elastic_energy(u, p, 1e-10);
    const double mismatch = std::abs(2.0 * total + quad);
    expect(mismatch <= 1e-9 * std::abs(quad), "energy identity broken by " + num(mismatch));

    // With the Nyquist mode removed, the density's grid sum has no folded beat
    // content and must integrate to the same total.
    {
        const FieldSpectrum sp(u);
        auto uh = sp.uhat;
        uh[u.n() / 2] = 0.0;
        const Field uf(idft_real(uh), u.dx);
        const double tf = total_elastic_energy(uf, p, 1e-10);
        const auto ve = elastic_energy_density(uf, p, 1e-10);
        NeumaierSum s;
        for (double vj : ve.density.u) s.add(vj);
        const double tg = 0.5 * s.value() * uf.dx;
        expect(rel_diff(tf, tg) <= 1e-9,
               "density grid sum disagrees with the spectral total by " + num(rel_diff(tf, tg)));
    }

    const std::size_t n = 64;
    const double L = 64.0, A = 0.7;
    std::vector<double> mode(n);
    for (std::size_t j = 0; j < n; ++j)
        mode[j] = A * std::cos(2.0 * std::numbers::pi * 3.0 * static_cast<double>(j) /
                               static_cast<double>(n));
    const Field um(std::move(mode), L / static_cast<double>(n));
    const double kh = 2.0 * std::numbers::pi * 3.0 / L * p.h;
    const double expected = A * A * omega2(kh, p, 1e-12).value * L / 4.0;
    const double got = total_elastic_energy(um, p, 1e-12);
    expect(rel_diff(got, expected) <= 1e-9,
           "single-mode energy off by " + num(rel_diff(got, expected)));
    return "identity mismatch " + num(mismatch) + ", single-mode exact to " +
           num(rel_diff(got, expected));
}

std::string check_gamma(bool) {
    expect(std::abs(gamma_fn(1.0) - 1.0) <= 1e-14, "gamma(1) != 1");
    expect(std::abs(gamma_fn(5.0) - 24.0) <= 24.0 * 1e-13, "gamma(5) != 24");
    expect(std::abs(gamma_fn(0.5) - std::sqrt(std::numbers::pi)) <= 1e-13,
           "gamma(1/2) != sqrt(pi)");
    double worst = 0.0;
    for (double D : {0.17, 0.9, 1.3, 2.6, 4.1, 7.7}) {
        const double r = std::abs(gamma_fn(D + 1.0) - D * gamma_fn(D)) / gamma_fn(D + 1.0);
        worst = std::max(worst, r);
        expect(r <= 1e-12, "recurrence broken at D = " + num(D));
    }
    return "pins and recurrence hold (worst rel " + num(worst) + ")";
}

std::string check_continuum_constant(bool quick) {
    const double c1 = c_constant(1.0, 1e-10);
    expect(std::abs(c1 - std::numbers::pi) <= 1e-8,
           "C(1) = " + fmt_shortest(c1) + " != pi");
    const double c_half = c_constant(0.5, 1e-10);
    expect(std::abs(c_half - 5.013256549262001) <= 1e-9,
           "C(1/2) moved to " + fmt_shortest(c_half));
    // independent closed form of the same integral
    double worst = 0.0;
    for (double delta : quick ? std::vector<double>{0.3} : std::vector<double>{0.3, 1.3, 1.7}) {
        const double exact = std::numbers::pi / (gamma_fn(1.0 + delta) *
                                                 std::sin(std::numbers::pi * delta / 2.0));
        const double r = rel_diff(c_constant(delta, 1e-10), exact);
        worst = std::max(worst, r);
        expect(r <= 1e-8, "C(" + num(delta) + ") off the closed form by " + num(r));
    }
    return "C(1) - pi = " + num(c1 - std::numbers::pi) + ", closed-form worst rel " +
           num(worst);
}

std::string check_representation_equivalence(bool quick) {
    const auto probe = gaussian_probe();
    const double x = 0.25;
    double worst = 0.0;
    for (double delta : quick ? std::vector<double>{0.5} : std::vector<double>{0.5, 1.0, 1.5}) {
        const ChainParams p(1.001, delta, 1.0);
        const double series = laplacian_apply_analytic(probe, p, x, 1e-10).value;
        const double integral = fractional_laplacian_integral(probe, p, x, 1e-8);
        const double convolution = kernel_laplacian_convolution(probe, p, x, 1e-8);
        const double r = std::max({rel_diff(series, integral), rel_diff(series, convolution),
                                   rel_diff(integral, convolution)});
        worst = std::max(worst, r);
        expect(r < 1e-2, "representations disagree by " + num(r) + " at delta = " +
                             num(delta));
    }
    return "max pairwise disagreement " + num(worst);
}

std::string check_riemann_liouville(bool) {
    const AnalyticProbe one([](double) { return 1.0; });
    const AnalyticProbe ident([](double t) { return t; });
    const double i1 = riemann_liouville(one, 0.0, 2.0, 1.0, 1e-10);
    expect(std::abs(i1 - 2.0) <= 1e-10, "order 1 on the unit function: " + fmt_shortest(i1));
    const double i2 = riemann_liouville(one, 0.0, 3.0, 2.0, 1e-10);
    expect(std::abs(i2 - 4.5) <= 1e-10, "order 2 on the unit function: " + fmt_shortest(i2));
    const double ih = riemann_liouville(ident, 0.0, 1.0, 0.5, 1e-10);
    expect(std::abs(ih - 0.75225277806367505) <= 1e-8,
           "half order on t: " + fmt_shortest(ih));
    return "integer and half-order pins hold";
}

std::string check_density_power_law(bool quick) {
    const std::vector<double> xs = {1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
    std::vector<double> ys(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) ys[j] = 2.5 * std::pow(xs[j], 0.8);
    const double fitted = fit_loglog_slope(xs, ys).slope;
    expect(std::abs(fitted - 0.8) <= 1e-12, "log-log fitter is inexact: " + fmt_shortest(fitted));

    const ChainParams p(1.01, 1.0, 1.0);
    const auto grid = long_wave_omega_grid(p, 1e-4, 1e-2, quick ? 10 : 20, 1e-12);
    const DensityFit fit = density_empirical_check(p, grid, 1e-12);
    const double err = std::abs(fit.fit.slope - fit.expected);
    expect(err <= 0.05 * std::abs(fit.expected),
           "empirical slope " + fmt_shortest(fit.fit.slope) + " vs expected " +
               fmt_shortest(fit.expected));
    return "empirical slope " + num(fit.fit.slope) + " vs expected " + num(fit.expected);
}

std::string check_spectral_conservation(bool) {
    const ChainParams p(1.5, 0.5, 1.0);
    const Field u0 = check_random_field(32, 32.0, 0.5, 1113);
    const Field v0 = check_random_field(32, 32.0, 0.5, 2113);
    const auto st = make_spectral_state(u0, v0, p, 1e-12);
    const double e0 = spectral_total_energy(st);
    const double T = 100.0 * 2.0 * std::numbers::pi / st.omega[1];

    const auto one_jump = evolve_spectral(st, T);
    const double drift = std::abs(spectral_total_energy(one_jump) / e0 - 1.0);
    expect(drift <= 1e-12, "energy drift " + num(drift) + " over 100 periods");

    auto chained = st;
    for (int j = 1; j <= 10; ++j)
        chained = evolve_spectral(chained, T * static_cast<double>(j) / 10.0);
    const auto [ua, va] = spectral_fields(one_jump);
    const auto [ub, vb] = spectral_fields(chained);
    double gap = 0.0;
    for (std::size_t j = 0; j < ua.n(); ++j)
        gap = std::max(gap, std::abs(ua.u[j] - ub.u[j]));
    expect(gap <= 1e-10, "chained evolution differs from the single jump by " + num(gap));
    return "drift " + num(drift) + ", jump composition gap " + num(gap);
}

std::string check_verlet_shadow_energy(bool quick) {
    const ChainParams p(1.5, 0.5, 1.0);
    const Field u0 = check_random_field(32, 32.0, 0.5, 1114);
    const Field v0 = check_random_field(32, 32.0, 0.5, 2114);
    const double dt = 0.25 * stability_limit_dt(32, 32.0, p, 1e-10);
    const long steps = quick ? 1000 : 4000;
    SimRun run(u0, v0, dt, steps);
    run.max_snapshots = static_cast<std::size_t>(steps) + 1;
    const auto traj = evolve_realspace(run, p);
    const double e0 = traj.snaps[0].energy_invariant;
    const double h0 = traj.snaps[0].energy;
    double drift = 0.0, excursion = 0.0;
    for (const auto& s : traj.snaps) {
        drift = std::max(drift, std::abs(s.energy_invariant / e0 - 1.0));
        excursion = std::max(excursion, std::abs(s.energy / h0 - 1.0));
    }
    expect(drift <= 1e-8, "discrete invariant drifted by " + num(drift));
    expect(excursion <= 0.05,
           "Hamiltonian excursion " + num(excursion) + " above the (w dt)^2/8 envelope");
    return "invariant drift " + num(drift) + ", H excursion " + num(excursion);
}

std::string check_verlet_reversibility(bool) {
    const ChainParams p(1.5, 0.5, 1.0);
    const Field u0 = check_random_field(32, 32.0, 0.5, 1115);
    const Field v0 = check_random_field(32, 32.0, 0.5, 2115);
    const double dt = 0.2 * stability_limit_dt(32, 32.0, p, 1e-10);

    SimRun fwd(u0, v0, dt, 200);
    fwd.max_snapshots = 2;
    const auto out = evolve_realspace(fwd, p);
    Field u1 = out.snaps.back().u, v1 = out.snaps.back().v;
    for (auto& x : v1.u) x = -x;
    SimRun bwd(u1, v1, dt, 200);
    bwd.max_snapshots = 2;
    const auto back = evolve_realspace(bwd, p);

    double gap = 0.0;
    for (std::size_t j = 0; j < u0.n(); ++j) {
        gap = std::max(gap, std::abs(back.snaps.back().u.u[j] - u0.u[j]));
        gap = std::max(gap, std::abs(back.snaps.back().v.u[j] + v0.u[j]));
    }
    expect(gap <= 1e-10, "round trip misses the initial state by " + num(gap));
    return "round-trip gap " + num(gap);
}

std::string check_momentum_conservation(bool) {
    const ChainParams p(1.5, 0.5, 1.0);
    const Field u0 = check_random_field(32, 32.0, 0.4, 1116);
    const Field v0 = check_random_field(32, 32.0, 0.2, 2116, 0.3);
    const double dt = 0.2 * stability_limit_dt(32, 32.0, p, 1e-10);
    SimRun run(u0, v0, dt, 500);
    run.max_snapshots = 2;
    double worst = 0.0;
    for (const bool spectral : {false, true}) {
        const auto traj = spectral ? spectral_trajectory(run, p) : evolve_realspace(run, p);
        const double p0 = traj.snaps.front().momentum;
        const double gap = std::abs(traj.snaps.back().momentum - p0);
        worst = std::max(worst, gap);
        expect(gap <= 1e-10 * std::max(1.0, std::abs(p0)),
               std::string(spectral ? "spectral" : "verlet") + " momentum drifted by " +
                   num(gap));
    }
    return "worst momentum drift " + num(worst);
}

std::string check_dalembert_residual(bool) {
    const ChainParams p(1.5, 0.5, 1.0);
    SimulateCfg pulse;
    pulse.preset = "pulse";
    const Field u0 = build_initial(pulse);
    const Field v0(std::vector<double>(64, 0.0), u0.dx);

    SimRun coarse(u0, v0, 0.2, 40);
    coarse.max_snapshots = 41;
    SimRun fine(u0, v0, 0.1, 80);
    fine.max_snapshots = 81;
    auto traj_c = spectral_trajectory(coarse, p);
    const auto traj_f = spectral_trajectory(fine, p);
    const double rc = dalembert_residual(traj_c, 1e-10);
    const double rf = dalembert_residual(traj_f, 1e-10);
    const double ratio = rc / rf;
    expect(ratio >= 3.5 && ratio <= 4.5,
           "halving dt scaled the residual by " + num(ratio) + ", not ~4");

    traj_c.snaps[20].u.u[32] += 0.5;
    const double corrupted = dalembert_residual(traj_c, 1e-10);
    expect(corrupted >= 20.0 * rc,
           "corrupted snapshot barely moved the residual: " + num(corrupted) + " vs " +
               num(rc));
    return "Richardson ratio " + num(ratio) + ", corruption amplifies " +
           num(corrupted / rc) + "x";
}

std::string check_dimension_estimator(bool) {
    std::vector<double> scales;
    for (int j = 0; j <= 12; ++j) scales.push_back(std::pow(2.0, -(3.0 + 0.5 * j)));

    const std::size_t n = 4097;
    std::vector<double> xs(n);
    for (std::size_t j = 0; j < n; ++j)
        xs[j] = static_cast<double>(j) / static_cast<double>(n - 1);
    const DispersionCurve line{ChainParams(1.5, 0.5, 1.0), xs, xs,
                               std::vector<double>(n, 0.0)};
    DimensionOptions opts;
    opts.scales = scales;
    const auto rep = estimate_dimension(line, opts);
    expect(rep.D_estimated >= 0.95 && rep.D_estimated <= 1.1,
           "straight line measured at D = " + fmt_shortest(rep.D_estimated));

    expect_rejected(
        [&] {
            DimensionOptions few;
            few.scales = {0.5, 0.25, 0.125, 0.0625};
            estimate_dimension(line, few);
        },
        "fit over fewer than 5 scales");
    expect_rejected(
        [&] {
            std::vector<double> cx(512), cy(512);
            for (std::size_t j = 0; j < 512; ++j) {
                cx[j] = static_cast<double>(j) / 511.0;
                cy[j] = cx[j];
            }
            const DispersionCurve sparse{ChainParams(1.5, 0.5, 1.0), cx, cy,
                                         std::vector<double>(512, 0.0)};
            box_count(sparse, default_box_scales());
        },
        "undersampled curve");
    return "line at D = " + num(rep.D_estimated) + ", degenerate inputs rejected";
}

std::string check_unstable_step_rejection(bool) {
    const ChainParams p(1.5, 0.5, 1.0);
    const std::size_t n = 16;
    std::vector<double> alt(n);
    for (std::size_t j = 0; j < n; ++j) alt[j] = (j % 2 == 0 ? 1.0 : -1.0) * 1e-3;
    const Field u0(std::move(alt), 1.0);
    const Field v0(std::vector<double>(n, 0.0), 1.0);
    const double dt_bad = 1.05 * stability_limit_dt(n, 16.0, p, 1e-10);

    expect_rejected([&] { evolve_realspace(SimRun(u0, v0, dt_bad, 100), p); },
                    "a-priori stability rejection");

    SimRun forced(u0, v0, dt_bad, 4000);
    forced.allow_unstable_dt = true;
    forced.max_snapshots = 2;
    bool detected = false;
    try {
        evolve_realspace(forced, p);
    } catch (const std::runtime_error&) {
        detected = true;
    }
    expect(detected, "runaway growth went undetected");
    return "rejected a-priori; forced run aborted by the growth monitor";
}

int run_check(bool quick) {
    struct Entry {
        const char* name;
        std::string (*fn)(bool);
    };
    const std::vector<Entry> entries = {
        {"dispersion scaling law", check_dispersion_scaling},
        {"dispersion evenness, positivity", check_dispersion_evenness},
        {"dispersion certified tails", check_dispersion_tails},
        {"laplacian eigenrelation", check_laplacian_eigenrelation},
        {"laplacian scaling law", check_laplacian_scaling},
        {"laplacian quadratic form", check_laplacian_quadratic_form},
        {"elastic energy identity", check_elastic_energy},
        {"gamma function", check_gamma},
        {"continuum constant", check_continuum_constant},
        {"representation equivalence", check_representation_equivalence},
        {"riemann-liouville pins", check_riemann_liouville},
        {"density power law", check_density_power_law},
        {"spectral energy conservation", check_spectral_conservation},
        {"verlet shadow energy", check_verlet_shadow_energy},
        {"verlet reversibility", check_verlet_reversibility},
        {"momentum conservation", check_momentum_conservation},
        {"wave-operator residual", check_dalembert_residual},
        {"dimension estimator", check_dimension_estimator},
        {"unstable step rejection", check_unstable_step_rejection},
    };

    std::size_t failures = 0;
    for (const auto& e : entries) {
        std::string detail;
        bool ok = true;
        try {
            detail = e.fn(quick);
        } catch (const std::exception& ex) {
            ok = false;
            detail = ex.what();
            ++failures;
        }
        std::printf("%s  %-34s %s\n", ok ? "[PASS]" : "[FAIL]", e.name, detail.c_str());
    }
    std::printf("%zu/%zu invariants hold%s\n", entries.size() - failures, entries.size(),
                quick ? " (quick)" : "");
    return failures == 0 ? 0 : 4;
}

// ---------------------------------------------------------------------------
// rerun

int run_rerun(const std::string& in_path, OutputOpts oo) {
    std::ifstream is(in_path);
    if (!is) throw std::invalid_argument("rerun: cannot open record: " + in_path);
    const json rec = json::parse(is);
    if (!rec.contains("tool") || rec["tool"] != "selfsim" || !rec.contains("command") ||
        !rec.contains("config"))
        throw std::invalid_argument("rerun: not a selfsim run record: " + in_path);

    const std::string command = rec["command"];
    if (oo.out.empty())
        oo.out = command + "_rerun" + (oo.format == "csv" ? ".csv" : ".json");

    const json& cfg = rec["config"];
    if (command == "dispersion") return run_dispersion(cfg.get<DispersionCfg>(), oo);
    if (command == "density") return run_density(cfg.get<DensityCfg>(), oo);
    if (command == "kernel") return run_kernel(cfg.get<KernelCfg>(), oo);
    if (command == "dimension") return run_dimension(cfg.get<DimensionCfg>(), oo);
    if (command == "simulate") return run_simulate(cfg.get<SimulateCfg>(), oo);
    throw std::invalid_argument("rerun: records of command '" + command +
                                "' cannot be replayed");
}

// ---------------------------------------------------------------------------

// `--h` is a real option (the lattice spacing), so help answers to --help only.
CLI::App* add_subcommand(CLI::App& app, const std::string& name, const std::string& desc) {
    auto* sub = app.add_subcommand(name, desc);
    sub->set_help_flag("--help", "print help");
    return sub;
}

void add_output_opts(CLI::App* sub, OutputOpts& oo) {
    sub->add_option("--out", oo.out, "output file (default: <command>.<ext>)");
    sub->add_option("--format", oo.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->add_flag("--timestamp", oo.timestamp,
                  "include the generation time (off keeps output byte-reproducible)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-similar chain toolkit: dispersion, continuum limits, simulation"};
    app.set_help_flag("--help", "print help");
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);

    DispersionCfg dc;
    OutputOpts d_oo;
    auto* disp = add_subcommand(app, "dispersion", "sample the dispersion relation");
    disp->add_option("--N", dc.N, "scale ratio (> 1)")->capture_default_str();
    disp->add_option("--delta", dc.delta, "scaling exponent, 0 < delta < 2")
        ->capture_default_str();
    disp->add_option("--h", dc.h, "base lattice spacing")->capture_default_str();
    disp->add_option("--kh-min", dc.kh_min, "window start")->capture_default_str();
    disp->add_option("--kh-max", dc.kh_max, "window end")->capture_default_str();
    disp->add_option("--n", dc.n, "grid points")->capture_default_str();
    disp->add_option("--tol", dc.tol, "certified truncation tolerance")->capture_default_str();
    disp->add_option("--preset", dc.preset, "figure preset")
        ->check(CLI::IsMember({"fig1", "fig2", "fig3", "fig4"}));
    disp->add_flag("--point", dc.point, "evaluate a single kh and print to stdout");
    disp->add_option("--kh", dc.kh, "kh for --point")->capture_default_str();
    add_output_opts(disp, d_oo);

    DensityCfg nc;
    OutputOpts n_oo;
    auto* dens = add_subcommand(app, "density", "empirical vs model density of states");
    dens->add_option("--N", nc.N, "scale ratio (> 1)")->capture_default_str();
    dens->add_option("--delta", nc.delta, "scaling exponent, 0 < delta < 2")
        ->capture_default_str();
    dens->add_option("--h", nc.h, "base lattice spacing")->capture_default_str();
    dens->add_option("--kh-min", nc.kh_min, "long-wave window start")->capture_default_str();
    dens->add_option("--kh-max", nc.kh_max, "long-wave window end")->capture_default_str();
    dens->add_option("--points", nc.points, "frequency grid size")->capture_default_str();
    dens->add_option("--tol", nc.tol, "dispersion tolerance")->capture_default_str();
    dens->add_option("--quad-tol", nc.quad_tol, "quadrature tolerance for the constant")
        ->capture_default_str();
    add_output_opts(dens, n_oo);

    KernelCfg kc;
    OutputOpts k_oo;
    auto* kern = add_subcommand(app, "kernel", "continuum convolution kernel");
    kern->add_option("--N", kc.N, "scale ratio (> 1)")->capture_default_str();
    kern->add_option("--delta", kc.delta, "scaling exponent, 0 < delta < 2")
        ->capture_default_str();
    kern->add_option("--h", kc.h, "base lattice spacing")->capture_default_str();
    kern->add_option("--x-min", kc.x_min, "grid start (> 0)")->capture_default_str();
    kern->add_option("--x-max", kc.x_max, "grid end")->capture_default_str();
    kern->add_option("--n", kc.n, "grid points")->capture_default_str();
    kern->add_flag("--linear", kc.linear, "linear grid instead of log-spaced");
    add_output_opts(kern, k_oo);

    DimensionCfg mc;
    OutputOpts m_oo;
    auto* dim = add_subcommand(app, "dimension", "box-counting dimension of the curve");
    dim->add_option("--N", mc.N, "scale ratio (> 1)")->capture_default_str();
    dim->add_option("--delta", mc.delta, "scaling exponent, 0 < delta < 2")
        ->capture_default_str();
    dim->add_option("--h", mc.h, "base lattice spacing")->capture_default_str();
    dim->add_option("--kh-min", mc.kh_min, "curve window start")->capture_default_str();
    dim->add_option("--kh-max", mc.kh_max, "curve window end")->capture_default_str();
    dim->add_option("--samples", mc.samples, "curve samples")->capture_default_str();
    dim->add_option("--tol", mc.tol, "dispersion tolerance")->capture_default_str();
    dim->add_option("--discard", mc.discard, "fraction of scales dropped at each end")
        ->capture_default_str();
    add_output_opts(dim, m_oo);

    SimulateCfg sc;
    OutputOpts s_oo;
    auto* simu = add_subcommand(app, "simulate", "evolve the lattice wave equation");
    simu->add_option("--N", sc.N, "scale ratio (> 1)")->capture_default_str();
    simu->add_option("--delta", sc.delta, "scaling exponent, 0 < delta < 2")
        ->capture_default_str();
    simu->add_option("--h", sc.h, "base lattice spacing")->capture_default_str();
    simu->add_option("--preset", sc.preset, "initial condition")
        ->check(CLI::IsMember({"mode", "pulse", "random"}))
        ->capture_default_str();
    simu->add_option("--method", sc.method, "integrator")
        ->check(CLI::IsMember({"verlet", "spectral"}))
        ->capture_default_str();
    simu->add_option("--n", sc.n, "grid points")->capture_default_str();
    simu->add_option("--length", sc.length, "periodic box length")->capture_default_str();
    simu->add_option("--dt", sc.dt, "time step (default: quarter of the stability limit)");
    simu->add_option("--steps", sc.steps, "time steps")->capture_default_str();
    simu->add_option("--snapshots", sc.snapshots, "most snapshots kept")->capture_default_str();
    simu->add_option("--tol", sc.tol, "force truncation tolerance")->capture_default_str();
    simu->add_option("--amplitude", sc.amplitude,
                     "initial amplitude (default: 1, random preset: 1e-3)");
    simu->add_option("--mode-index", sc.mode_index, "mode number for the mode preset")
        ->capture_default_str();
    simu->add_option("--seed", sc.seed, "seed for the random preset")->capture_default_str();
    simu->add_flag("--allow-unstable-dt", sc.allow_unstable_dt,
                   "skip the a-priori stability rejection (diagnostic)");
    add_output_opts(simu, s_oo);

    bool quick = false;
    auto* chk = add_subcommand(app, "check", "run the invariant battery");
    chk->add_flag("--quick", quick, "reduced draws and step counts");

    std::string rerun_in;
    OutputOpts r_oo;
    r_oo.format = "json";
    auto* rer = add_subcommand(app, "rerun", "replay a JSON run record");
    rer->add_option("--in", rerun_in, "run record to replay")->required();
    rer->add_option("--out", r_oo.out, "output file (default: <command>_rerun.<ext>)");
    rer->add_option("--format", r_oo.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    rer->add_flag("--timestamp", r_oo.timestamp, "include the generation time");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(disp)) {
            if (!dc.preset.empty()) {
                DispersionCfg base;
                base.preset = dc.preset;
                base.delta = preset_delta(dc.preset);
                base.N = 1.5;
                base.h = 1.0;
                base.kh_min = 0.0;
                base.kh_max = 20.0;
                base.n = 2000;
                base.tol = 1e-9;
                if (disp->count("--N")) base.N = dc.N;
                if (disp->count("--delta")) base.delta = dc.delta;
                if (disp->count("--h")) base.h = dc.h;
                if (disp->count("--kh-min")) base.kh_min = dc.kh_min;
                if (disp->count("--kh-max")) base.kh_max = dc.kh_max;
                if (disp->count("--n")) base.n = dc.n;
                if (disp->count("--tol")) base.tol = dc.tol;
                base.point = dc.point;
                base.kh = dc.kh;
                dc = base;
            }
            return run_dispersion(dc, d_oo);
        }
        if (app.got_subcommand(dens)) return run_density(nc, n_oo);
        if (app.got_subcommand(kern)) return run_kernel(kc, k_oo);
        if (app.got_subcommand(dim)) return run_dimension(mc, m_oo);
        if (app.got_subcommand(simu)) return run_simulate(sc, s_oo);
        if (app.got_subcommand(chk)) return run_check(quick);
        if (app.got_subcommand(rer)) return run_rerun(rerun_in, r_oo);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
