#include "bragg/cli.hpp"

#include "bragg/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

namespace bragg {

namespace {

struct Failure {
    int code;
    std::string kind;
    std::string message;
    ordered_json extra = ordered_json::object();
};

std::string shortest(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string g12(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

void write_or_print(const std::string& path, const std::string& text, std::ostream& out)
{
    if (path.empty() || path == "-") out << text;
    else write_atomic(path, text);
}

SimConfig load_with_overrides(const std::string& path, const std::vector<std::string>& sets)
{
    SimConfig cfg = load_config(path);
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError({"--set expects key=value, got '" + s + "'"});
        apply_override(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    return cfg;
}

ordered_json bloch_json(const BlochResult& b)
{
    ordered_json j;
    j["window"] = {b.window.first, b.window.second};
    j["period"] = b.period ? ordered_json(*b.period) : ordered_json(nullptr);
    j["expected_period"] = b.expected_period;
    j["amplitude"] = b.amplitude;
    return j;
}

// ---- simulate ----

struct SimulateOpts {
    std::string config;
    std::string out_dir = ".";
    std::vector<std::string> sets;
};

void simulate(const SimulateOpts& o, std::ostream& out)
{
    const SimConfig cfg = load_with_overrides(o.config, o.sets);
    const std::filesystem::path stem = std::filesystem::path(o.config).stem();
    const std::filesystem::path dir = o.out_dir;
    const std::filesystem::path traj_path =
        cfg.trajectory_path.empty() ? dir / (stem.string() + ".csv") : std::filesystem::path(cfg.trajectory_path);
    const std::filesystem::path sum_path =
        cfg.summary_path.empty() ? dir / (stem.string() + ".json") : std::filesystem::path(cfg.summary_path);

    ordered_json summary;
    if (cfg.analysis == Analysis::Bloch) {
        const BlochResult b = analyze_bloch(run_mirror(cfg.params));
        emit_trajectory(b.run.trajectory, traj_path);
        summary = summary_json(cfg, b.run);
        summary["bloch"] = bloch_json(b);
    } else {
        const RunResult r = run_scenario(cfg.params);
        emit_trajectory(r.trajectory, traj_path);
        summary = summary_json(cfg, r);
    }
    if (cfg.sigma_q > 0.0) {
        const SummaryMetrics avg = q_average(cfg.params, cfg.sigma_q, cfg.q_points);
        summary["q_average"] = metrics_json(avg);
    }
    emit_summary(summary, sum_path);

    out << "trajectory " << traj_path.string() << "\n";
    out << "summary " << sum_path.string() << "\n";
    out << "fidelity " << g12(summary["metrics"]["fidelity"].get<double>()) << "\n";
    if (summary.contains("bloch") && !summary["bloch"]["period"].is_null())
        out << "bloch_period " << g12(summary["bloch"]["period"].get<double>()) << "\n";
    for (const auto& w : summary["warnings"]) out << "warning: " << w.get<std::string>() << "\n";
}

// ---- spectrum / crossings ----

struct SpectrumOpts {
    std::string config;
    std::string out;
    int levels = 10;
    int samples = 1000;
    double t0 = 0.0;
    double t1 = -1.0;  // < t0: pulse end
    int track = -1;
    std::vector<std::string> sets;
};

void spectrum(const SpectrumOpts& o, std::ostream& out)
{
    const SimConfig sim = load_with_overrides(o.config, o.sets);
    const LadderConfig cfg = build_config(sim.params);
    const double t1 = o.t1 < o.t0 ? cfg.pulse_end() : o.t1;
    if (o.samples < 2) throw ConfigError({"--samples must be >= 2"});
    if (o.levels < 1) throw ConfigError({"--levels must be >= 1"});

    std::string csv;
    if (o.track >= 0) {
        const AdiabaticTrack tr = adiabatic_track(cfg, {o.t0, t1}, o.track, static_cast<std::size_t>(o.samples));
        csv = "t,E,dominant\n";
        for (std::size_t i = 0; i < tr.times.size(); ++i)
            csv += g12(tr.times[i]) + "," + g12(tr.energies[i]) + "," + std::to_string(tr.dominant[i]) + "\n";
    } else {
        const LadderConfig sc = spectral_config(cfg);
        const int k = std::min<int>(o.levels, static_cast<int>(sc.dimension()));
        csv = "t";
        for (int i = 0; i < k; ++i) csv += ",E_" + std::to_string(i);
        csv += "\n";
        for (int s = 0; s < o.samples; ++s) {
            const double t = o.t0 + (t1 - o.t0) * s / (o.samples - 1);
            const Spectrum sp = instantaneous_spectrum(hamiltonian(sc, t));
            csv += g12(t);
            for (int i = 0; i < k; ++i) csv += "," + g12(sp.eigenvalues[i]);
            csv += "\n";
        }
    }
    write_or_print(o.out, csv, out);
}

struct CrossingOpts {
    std::string config;
    std::string out;
    std::vector<std::string> sets;
};

void crossings(const CrossingOpts& o, std::ostream& out)
{
    const SimConfig sim = load_with_overrides(o.config, o.sets);
    const LadderConfig cfg = build_config(sim.params);
    std::string csv = "n,n_plus_1,pulse,t_cross,gap,t_lz,dt_spacing,ratio,flagged\n";
    for (const auto& e : adiabaticity_report(cfg)) {
        const auto& c = e.crossing;
        csv += std::to_string(c.pair.first) + "," + std::to_string(c.pair.second) + "," + std::to_string(c.pulse) +
               "," + g12(c.t_cross) + "," + g12(c.gap) + "," + g12(c.t_lz) + "," + g12(c.dt_spacing) + "," +
               g12(e.ratio) + "," + (e.flagged ? "1" : "0") + "\n";
    }
    write_or_print(o.out, csv, out);
}

// ---- scan ----

struct ScanOpts {
    std::string config;
    std::string param;
    std::vector<double> values;
    std::string out;
    std::string csv;
    std::vector<std::string> sets;
};

void scan(const ScanOpts& o, std::ostream& out)
{
    const SimConfig base = load_with_overrides(o.config, o.sets);
    const int opposite = -base.params.direction;  // one step against the climb
    ScanResult res;
    if (o.param == "sigma_q") {
        res = parameter_scan(
            o.param, o.values, [&](double s) { return q_average(base.params, s, base.q_points); }, base.params);
    } else {
        // Validate every point before any work starts.
        std::vector<SimConfig> cfgs;
        for (double v : o.values) {
            SimConfig c = base;
            apply_override(c, o.param, shortest(v));
            cfgs.push_back(c);
        }
        res = parameter_scan(
            o.param, o.values,
            [&](double v) {
                const auto it = std::find(o.values.begin(), o.values.end(), v);
                const SimConfig& c = cfgs[static_cast<std::size_t>(it - o.values.begin())];
                return c.sigma_q > 0.0 ? q_average(c.params, c.sigma_q, c.q_points) : run_scenario(c.params).metrics;
            },
            base.params);
    }

    ordered_json j;
    j["parameter"] = res.parameter;
    j["config"] = config_json(base);
    ordered_json rows = ordered_json::array();
    std::string csv = o.param + ",fidelity,residual_low,transient_opposite\n";
    for (std::size_t k = 0; k < res.values.size(); ++k) {
        const SummaryMetrics& m = res.metrics[k];
        ordered_json row;
        row["value"] = res.values[k];
        row["fidelity"] = m.fidelity;
        row["residual_low"] = m.residual_low;
        row["transient_opposite"] = m.transient(opposite);
        rows.push_back(row);
        csv += g12(res.values[k]) + "," + g12(m.fidelity) + "," + g12(m.residual_low) + "," +
               g12(m.transient(opposite)) + "\n";
    }
    j["rows"] = rows;
    write_or_print(o.out, j.dump(2) + "\n", out);
    if (!o.csv.empty()) write_atomic(o.csv, csv);
}

// ---- calibrate ----

struct CalibrateOpts {
    std::string config;
    std::string out;
    CalibrationTarget target;
    CalibrationBounds bounds;
    std::vector<std::string> sets;
};

ordered_json point_json(const CalibrationPoint& c)
{
    ordered_json j;
    j["omega0"] = c.omega0;
    j["ramp_up"] = c.ramp_up;
    j["ramp_down"] = c.ramp_down;
    j["fidelity"] = c.fidelity;
    j["transient"] = c.transient;
    j["feasible"] = c.feasible;
    return j;
}

void calibrate_cmd(const CalibrateOpts& o, std::ostream& out)
{
    const SimConfig base = load_with_overrides(o.config, o.sets);
    const CalibrationResult r = calibrate(base.params, o.target, o.bounds);
    ordered_json j;
    j["config"] = config_json(base);
    j["target"] = {{"fidelity", o.target.fidelity}, {"max_transient", o.target.max_transient}};
    j["feasible"] = r.feasible;
    j["chosen"] = point_json(r.chosen);
    ordered_json ev = ordered_json::array();
    for (const auto& c : r.evaluated) ev.push_back(point_json(c));
    j["evaluated"] = ev;
    write_or_print(o.out, j.dump(2) + "\n", out);
    if (!r.feasible)
        throw Failure{kExitFailure, "infeasible", "no calibration point meets the target; best point reported",
                      {{"best", point_json(r.chosen)}}};
}

// ---- units ----

struct UnitsOpts {
    double omega_k_hz = 50e3;
    int n = 25;
    double alpha = 0.1;
    double duration = 0.0;
};

void units(const UnitsOpts& o, std::ostream& out)
{
    const SiSheet s = convert_units(LabUnits{o.omega_k_hz}, RecoilParams{o.alpha, o.n, o.duration});
    out << "recoil frequency   " << g12(s.omega_k_hz / 1e3) << " kHz\n";
    out << "momentum span      " << g12(s.span_hz / 1e6) << " MHz  (n = " << o.n << ")\n";
    out << "chirp rate         " << g12(s.chirp_hz_per_s / 1e9) << " kHz/us  (alpha = " << g12(o.alpha) << ")\n";
    out << "crossing spacing   " << g12(s.spacing_s * 1e6) << " us\n";
    if (o.duration > 0.0) {
        out << "duration           " << g12(s.duration_s * 1e6) << " us\n";
        out << "critical spread    " << g12(critical_spread(o.n, o.duration)) << " hbar k\n";
    }
}

// ---- selftest ----

struct Check {
    std::string name;
    double value;
    double limit;
    bool pass;
};

ScenarioParams small_mirror(int target)
{
    ScenarioParams p = mirror_defaults();
    p.target = target;
    return p;
}

std::vector<Check> selftest_checks()
{
    std::vector<Check> checks;
    const auto add = [&](std::string name, double value, double limit) {
        checks.push_back({std::move(name), value, limit, value <= limit});
    };

    // The chirp sign must send a positive rate up the positive branch.
    {
        const RunResult r = run_mirror(small_mirror(3));
        add("chirp_sign_climbs_positive", 1.0 - r.metrics.final_population(3), 0.05);
        double drift = 0.0;
        for (double n : r.trajectory.norm) drift = std::max(drift, std::abs(n - 1.0));
        add("norm_drift", drift, 1e-9);

        ScenarioParams bare = small_mirror(3);
        bare.frame = Frame::Bare;
        const RunResult rb = run_mirror(bare);
        double diff = 0.0;
        for (std::size_t i = 0; i < r.metrics.final_populations.size(); ++i)
            diff = std::max(diff, std::abs(r.metrics.final_populations[i] - rb.metrics.final_populations[i]));
        add("frame_equivalence", diff, 1e-8);

        ScenarioParams rev = small_mirror(3);
        rev.direction = -1;
        const RunResult rr = run_mirror(rev);
        double mirror = 0.0;
        for (int n = -r.metrics.n_max; n <= r.metrics.n_max; ++n)
            mirror = std::max(mirror, std::abs(r.metrics.final_population(n) - rr.metrics.final_population(-n)));
        add("direction_reversal", mirror, 1e-8);
    }
    {
        ScenarioParams s = splitter_defaults();
        s.target = 3;
        const RunResult r = run_splitter(s);
        double asym = 0.0;
        for (int n = 1; n <= r.metrics.n_max; ++n)
            asym = std::max(asym, std::abs(r.metrics.final_population(n) - r.metrics.final_population(-n)));
        add("splitter_reflection", asym, 1e-9);
    }
    {
        // Without coupling the spectrum is the bare quasi-energy ladder.
        LadderConfig cfg = build_config(small_mirror(3));
        cfg.pulses[0].envelope = PulseEnvelope(0.0, 1.0, 1.0, 1.0);
        const double t = 17.0;
        const Spectrum sp = instantaneous_spectrum(hamiltonian(spectral_config(cfg), t));
        std::vector<double> expect;
        for (int n = -cfg.n_max; n <= cfg.n_max; ++n) expect.push_back(hamiltonian(cfg, t).diag[n + cfg.n_max]);
        std::sort(expect.begin(), expect.end());
        double err = 0.0;
        for (std::size_t i = 0; i < expect.size(); ++i) err = std::max(err, std::abs(expect[i] - sp.eigenvalues[i]));
        add("uncoupled_spectrum", err, 1e-9);
    }
    return checks;
}

void selftest(std::ostream& out)
{
    const auto checks = selftest_checks();
    bool ok = true;
    for (const auto& c : checks) {
        out << (c.pass ? "PASS " : "FAIL ") << c.name << " " << g12(c.value) << " (limit " << g12(c.limit) << ")\n";
        ok = ok && c.pass;
    }
    if (!ok) throw Failure{kExitFailure, "selftest", "one or more self-test checks failed"};
}

void report(std::ostream& err, const Failure& f)
{
    ordered_json j;
    j["error"] = f.kind;
    j["message"] = f.message;
    j["exit_code"] = f.code;
    for (auto it = f.extra.begin(); it != f.extra.end(); ++it) j[it.key()] = it.value();
    err << j.dump() << "\n";
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Chirped Bragg ladder simulator (recoil units)", "bragg"};
    app.require_subcommand(1);

    SimulateOpts sim;
    auto* c_sim = app.add_subcommand("simulate", "run a config; write trajectory CSV and summary JSON");
    c_sim->add_option("config", sim.config, "config file")->required();
    c_sim->add_option("--out-dir", sim.out_dir, "directory for outputs without an explicit path");
    c_sim->add_option("--set", sim.sets, "override key=value (repeatable)");

    SpectrumOpts spec;
    auto* c_spec = app.add_subcommand("spectrum", "dressed-state eigenvalues versus time as CSV");
    c_spec->add_option("config", spec.config)->required();
    c_spec->add_option("-o,--out", spec.out, "output path (default stdout)");
    c_spec->add_option("--levels", spec.levels, "lowest K eigenvalues");
    c_spec->add_option("--samples", spec.samples);
    c_spec->add_option("--t0", spec.t0);
    c_spec->add_option("--t1", spec.t1, "end time (default pulse end)");
    c_spec->add_option("--track", spec.track, "follow one adiabatic level instead");
    c_spec->add_option("--set", spec.sets);

    CrossingOpts cross;
    auto* c_cross = app.add_subcommand("crossings", "avoided crossings with Landau-Zener ratios as CSV");
    c_cross->add_option("config", cross.config)->required();
    c_cross->add_option("-o,--out", cross.out);
    c_cross->add_option("--set", cross.sets);

    ScanOpts sc;
    auto* c_scan = app.add_subcommand("scan", "sweep one config key");
    c_scan->add_option("config", sc.config)->required();
    c_scan->add_option("--param", sc.param, "config key, or sigma_q")->required();
    c_scan->add_option("--values", sc.values, "comma separated, increasing")->required()->delimiter(',');
    c_scan->add_option("-o,--out", sc.out, "JSON output (default stdout)");
    c_scan->add_option("--csv", sc.csv, "also write a CSV table");
    c_scan->add_option("--set", sc.sets);

    CalibrateOpts cal;
    auto* c_cal = app.add_subcommand("calibrate", "search peak Rabi frequency and ramps for a fidelity target");
    c_cal->add_option("config", cal.config)->required();
    c_cal->add_option("-o,--out", cal.out);
    c_cal->add_option("--fidelity", cal.target.fidelity);
    c_cal->add_option("--max-transient", cal.target.max_transient);
    c_cal->add_option("--omega-min", cal.bounds.omega_min);
    c_cal->add_option("--omega-max", cal.bounds.omega_max);
    c_cal->add_option("--omega-points", cal.bounds.omega_points);
    c_cal->add_option("--ramp-up", cal.bounds.ramp_up)->delimiter(',');
    c_cal->add_option("--ramp-down", cal.bounds.ramp_down)->delimiter(',');
    c_cal->add_option("--refine", cal.bounds.refine_steps);
    c_cal->add_option("--set", cal.sets);

    UnitsOpts un;
    auto* c_units = app.add_subcommand("units", "SI sheet for recoil-scaled parameters");
    c_units->add_option("--omega-k-hz", un.omega_k_hz, "recoil frequency / 2 pi in Hz");
    c_units->add_option("--n", un.n, "target level");
    c_units->add_option("--alpha", un.alpha, "chirp rate in omega_k^2");
    c_units->add_option("--duration", un.duration, "pulse length in 1/omega_k");

    auto* c_self = app.add_subcommand("selftest", "chirp-sign check and a quick invariant subset");

    if (!args.empty() && !args[0].empty() && args[0][0] != '-' && !app.got_subcommand(args[0])) {
        bool known = false;
        for (const auto* sub : app.get_subcommands({})) known = known || sub->get_name() == args[0];
        if (!known) {
            err << app.help();
            report(err, Failure{kExitUsage, "usage", "unknown subcommand '" + args[0] + "'"});
            return kExitUsage;
        }
    }

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << app.help();
        report(err, Failure{kExitUsage, "usage", e.what()});
        return kExitUsage;
    }

    try {
        if (*c_sim) simulate(sim, out);
        else if (*c_spec) spectrum(spec, out);
        else if (*c_cross) crossings(cross, out);
        else if (*c_scan) scan(sc, out);
        else if (*c_cal) calibrate_cmd(cal, out);
        else if (*c_units) units(un, out);
        else if (*c_self) selftest(out);
        return kExitOk;
    } catch (const Failure& f) {
        report(err, f);
        return f.code;
    } catch (const ConfigError& e) {
        ordered_json problems = e.problems();
        report(err, Failure{kExitConfig, "config", e.what(), {{"problems", problems}}});
        return kExitConfig;
    } catch (const IoError& e) {
        report(err, Failure{kExitIo, "io", e.what(), {{"path", e.path().string()}}});
        return kExitIo;
    } catch (const IntegrationError& e) {
        report(err, Failure{kExitNumeric, "numeric", e.what()});
        return kExitNumeric;
    } catch (const TrackingError& e) {
        report(err, Failure{kExitNumeric, "numeric", e.what()});
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        report(err, Failure{kExitConfig, "config", e.what()});
        return kExitConfig;
    } catch (const std::exception& e) {
        report(err, Failure{kExitFailure, "internal", e.what()});
        return kExitFailure;
    }
}

int cli_dispatch(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace bragg
