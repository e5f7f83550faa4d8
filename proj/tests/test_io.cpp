#include <doctest.h>

#include "bragg/cli.hpp"
#include "bragg/io.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace bragg;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(BRAGG_SOURCE_DIR) / "configs";

fs::path scratch_dir(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / ("bragg_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

bool mentions(const ConfigError& e, const std::string& what)
{
    for (const auto& p : e.problems())
        if (p.find(what) != std::string::npos) return true;
    return false;
}

ConfigError parse_error(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("config was accepted: " << text);
    return ConfigError({});
}

const std::string kMinimal = "mode = mirror\ntarget = 3\nalpha = 0.1\nt_c = 10\nomega0 = 0.7\n";

}  // namespace

TEST_CASE("bundled configs")
{
    const SimConfig f2 = load_config(kConfigs / "fig2.cfg");
    CHECK(f2.params.mode == Mode::Mirror);
    CHECK(f2.params.alpha == 0.1);
    CHECK(f2.params.t_c == 10.0);
    CHECK(f2.params == mirror_defaults());

    const SimConfig f3 = load_config(kConfigs / "fig3.cfg");
    CHECK(f3.params == splitter_defaults());

    const char* names[] = {"fig1b_dotted.cfg", "fig1b_dashed.cfg", "fig1b_solid.cfg"};
    const auto regimes = bloch_regimes();
    for (std::size_t i = 0; i < 3; ++i) {
        const SimConfig c = load_config(kConfigs / names[i]);
        CHECK(c.analysis == Analysis::Bloch);
        CHECK(c.params == bloch_scenario(regimes[i]));
    }
}

TEST_CASE("every violation is reported")
{
    const ConfigError empty = parse_error("");
    for (const auto& k : required_keys()) CHECK(mentions(empty, k));

    CHECK(mentions(parse_error("mode = mirror\ntarget = 3\nalpha = 0\nt_c = 10\nomega0 = 0.7\n"),
                   "chirp rate must be nonzero"));

    const ConfigError many = parse_error(kMinimal + "bogus = 1\nq = 3\nomega0 = 0.5\nramp_up = -1\nalpha2 = 0.1\n"
                                                    "line without equals\n");
    CHECK(mentions(many, "unknown key 'bogus'"));
    CHECK(mentions(many, "q = 3: out of range [-1, 1]"));
    CHECK(mentions(many, "duplicate key 'omega0'"));
    CHECK(mentions(many, "ramp_up = -1: out of range [0, inf)"));
    CHECK(mentions(many, "alpha2: only valid in splitter mode"));
    CHECK(mentions(many, "expected 'key = value'"));
    CHECK(many.problems().size() == 6);

    const ConfigError split = parse_error("mode = splitter\ntarget = 3\nalpha = 0.1\nt_c = 20\nomega0 = 0.7\n");
    CHECK(mentions(split, "alpha2"));
    CHECK(mentions(split, "t_c2"));

    CHECK(mentions(parse_error(kMinimal + "t_c2 = nan\n"), "t_c2"));
    CHECK(mentions(parse_error(kMinimal + "target = 2.5\n"), "duplicate"));
    CHECK(mentions(parse_error(kMinimal + "dt = 0.5\nauto_step = false\n"), "step rule"));
    CHECK(mentions(parse_error(kMinimal + "analysis = bloch\nmode = splitter\n"), "duplicate"));
}

TEST_CASE("comments, whitespace and signs")
{
    const SimConfig c = parse_config("# header\n  mode=mirror  # trailing\n\ntarget = 3\nalpha = 0.1\nt_c = 10\n"
                                     "omega0 = 0.7\ndirection = -1\nq = +0.25\n");
    CHECK(c.params.direction == -1);
    CHECK(c.params.q == 0.25);
    CHECK(c.params.target == 3);
}

TEST_CASE("dt given alone fixes the step")
{
    const SimConfig c = parse_config(kMinimal + "dt = 0.01\n");
    CHECK_FALSE(c.params.auto_step);
    CHECK(c.params.integrator.dt == 0.01);
    const SimConfig d = parse_config(kMinimal + "dt = 0.002\nauto_step = true\n");
    CHECK(d.params.auto_step);
}

TEST_CASE("emit then parse is the identity")
{
    for (const char* f : {"fig2.cfg", "fig3.cfg", "fig1b_dotted.cfg", "fig1b_dashed.cfg", "fig1b_solid.cfg"}) {
        const SimConfig c = load_config(kConfigs / f);
        CHECK(parse_config(emit_config(c)) == c);
    }

    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const bool splitter = i % 2;
        SimConfig c;
        c.params = splitter ? splitter_defaults() : mirror_defaults();
        c.params.target = 1 + static_cast<int>(u(rng) * 30);
        c.params.direction = u(rng) < 0.5 ? 1 : -1;
        c.params.alpha = 0.05 + 0.1 * u(rng);
        c.params.t_c = 5.0 + 20.0 * u(rng);
        c.params.delta0 = u(rng) - 0.5;
        c.params.omega0 = 0.3 + u(rng);
        c.params.ramp_up = 30.0 + 10 * u(rng);
        c.params.ramp_down = 10.0 + 10 * u(rng);
        c.params.end_offset = -3.0 - u(rng);
        if (u(rng) < 0.5) c.params.plateau = 400.0 + 100.0 * u(rng);
        if (u(rng) < 0.5) c.params.n_max = c.params.target + 5;
        c.params.q = 2.0 * u(rng) - 1.0;
        c.params.shape = u(rng) < 0.5 ? RampShape::Linear : RampShape::SinSquared;
        c.params.frame = u(rng) < 0.5 ? Frame::Bare : Frame::Rotating;
        c.params.integrator.dt = 1e-3 * u(rng) + 1e-5;
        c.params.integrator.tolerance = 1e-10 * u(rng) + 1e-14;
        c.params.integrator.record_stride = 1 + static_cast<int>(u(rng) * 200);
        c.sigma_q = u(rng) * 0.5;
        c.q_points = 1 + 2 * static_cast<int>(u(rng) * 15);
        c.trajectory_path = u(rng) < 0.5 ? "" : "out dir/traj.csv";
        if (splitter) {
            c.params.alpha2 = 0.05 + 0.1 * u(rng);
            c.params.t_c2 = 10.0 + 20.0 * u(rng);
            c.params.delta0_2 = u(rng);
            c.params.omega0_2 = u(rng);
            c.params.pulse_start = 20.0 * u(rng);
        }
        // only configs the parser accepts are in scope
        try {
            build_config(c.params);
        } catch (const std::invalid_argument&) {
            continue;
        }
        const std::string text = emit_config(c);
        CHECK_MESSAGE(parse_config(text) == c, text);
    }
}

TEST_CASE("overrides")
{
    SimConfig c = parse_config(kMinimal);
    apply_override(c, "omega0", "0.5");
    CHECK(c.params.omega0 == 0.5);
    apply_override(c, "plateau", "auto");
    CHECK_FALSE(c.params.plateau);
    CHECK_THROWS_AS(apply_override(c, "nope", "1"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "alpha", "0"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "alpha2", "0.1"), ConfigError);
}

TEST_CASE("trajectory CSV")
{
    ScenarioParams p = mirror_defaults();
    p.target = 3;
    p.omega0 = 0.0;
    const RunResult r = run_mirror(p);
    const std::string csv = trajectory_csv(r.trajectory);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    // t, 2N + 1 populations, v_mean, norm
    const std::size_t columns = 2 * static_cast<std::size_t>(r.config.n_max) + 4;
    CHECK(std::count(line.begin(), line.end(), ',') + 1 == static_cast<long>(columns));
    CHECK(line.rfind("t,P_-11,", 0) == 0);
    CHECK(line.find(",P_0,") != std::string::npos);
    CHECK(line.substr(line.size() - 12) == ",v_mean,norm");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        std::vector<double> v;
        std::istringstream cells(line);
        for (std::string cell; std::getline(cells, cell, ',');) v.push_back(std::stod(cell));
        REQUIRE(v.size() == columns);
        CHECK(v[1 + static_cast<std::size_t>(r.config.n_max)] == 1.0);  // P_0
        CHECK(std::abs(v.back() - 1.0) <= 1e-9);
    }
    CHECK(rows == r.trajectory.records());
}

TEST_CASE("summary embeds the config")
{
    SimConfig c = parse_config(kMinimal);
    const RunResult r = run_scenario(c.params);
    const ordered_json j = summary_json(c, r);
    CHECK(j["config"] == config_json(c));
    CHECK(j["config"]["alpha"] == 0.1);
    CHECK(j["metrics"]["fidelity"].get<double>() == r.metrics.fidelity);
    CHECK(j["resolved"]["n_max"] == 11);
    CHECK(j.begin().key() == "config");
    // the embedded snapshot reproduces the config
    std::string text;
    for (auto it = j["config"].begin(); it != j["config"].end(); ++it)
        text += it.key() + " = " + (it->is_string() ? it->get<std::string>() : it->dump()) + "\n";
    CHECK(parse_config(text) == c);
}

TEST_CASE("atomic writes and I/O errors")
{
    const fs::path d = scratch_dir("atomic");
    write_atomic(d / "a.txt", "hello\n");
    CHECK(slurp(d / "a.txt") == "hello\n");
    CHECK_FALSE(fs::exists(d / "a.txt.tmp"));
    try {
        write_atomic(d / "missing" / "a.txt", "x");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.path() == d / "missing" / "a.txt");
        CHECK(std::string(e.what()).find("cannot open") != std::string::npos);
    }
    CHECK_THROWS_AS(load_config(d / "nope.cfg"), IoError);
}

namespace {

int run_cli(std::vector<std::string> args, std::string& out, std::string& err)
{
    std::ostringstream o, e;
    const int code = cli_dispatch(args, o, e);
    out = o.str();
    err = e.str();
    return code;
}

}  // namespace

TEST_CASE("command line")
{
    std::string out, err;
    CHECK(run_cli({"units", "--omega-k-hz", "50000", "--n", "25", "--alpha", "0.1"}, out, err) == kExitOk);
    CHECK(out.find("2.5 MHz") != std::string::npos);
    CHECK(out.find("1.57079632679 kHz/us") != std::string::npos);

    CHECK(run_cli({"simulate", "missing.cfg"}, out, err) == kExitIo);
    CHECK(err.find("\"error\":\"io\"") != std::string::npos);
    CHECK(err.find("file not found") != std::string::npos);

    CHECK(run_cli({"launch"}, out, err) == kExitUsage);
    CHECK(err.find("unknown subcommand 'launch'") != std::string::npos);
    CHECK(run_cli({}, out, err) == kExitUsage);
    CHECK(run_cli({"simulate"}, out, err) == kExitUsage);
    CHECK(run_cli({"units", "--n", "many"}, out, err) == kExitUsage);
    CHECK(run_cli({"--help"}, out, err) == kExitOk);
    CHECK(out.find("selftest") != std::string::npos);

    const fs::path d = scratch_dir("cli");
    {
        std::ofstream(d / "bad.cfg") << "mode = mirror\nalpha = 0\n";
    }
    CHECK(run_cli({"simulate", (d / "bad.cfg").string()}, out, err) == kExitConfig);
    CHECK(err.find("chirp rate must be nonzero") != std::string::npos);
    CHECK(err.find("missing required keys") != std::string::npos);
}

TEST_CASE("simulate writes reproducible files")
{
    const fs::path d = scratch_dir("simulate");
    {
        std::ofstream(d / "small.cfg") << kMinimal;
    }
    std::string out, err;
    REQUIRE(run_cli({"simulate", (d / "small.cfg").string(), "--out-dir", d.string()}, out, err) == kExitOk);
    const std::string csv = slurp(d / "small.csv"), json = slurp(d / "small.json");
    CHECK(!csv.empty());
    const auto summary = ordered_json::parse(json);
    CHECK(summary["metrics"]["fidelity"].get<double>() > 0.99);

    REQUIRE(run_cli({"simulate", (d / "small.cfg").string(), "--out-dir", d.string()}, out, err) == kExitOk);
    CHECK(slurp(d / "small.csv") == csv);
    CHECK(slurp(d / "small.json") == json);

    REQUIRE(run_cli({"simulate", (d / "small.cfg").string(), "--out-dir", d.string(), "--set", "target=2"}, out,
                    err) == kExitOk);
    CHECK(slurp(d / "small.csv") != csv);
}

TEST_CASE("table subcommands")
{
    const fs::path d = scratch_dir("tables");
    {
        std::ofstream(d / "small.cfg") << kMinimal;
    }
    std::string out, err;
    REQUIRE(run_cli({"crossings", (d / "small.cfg").string()}, out, err) == kExitOk);
    CHECK(out.rfind("n,n_plus_1,pulse,t_cross,gap,t_lz,dt_spacing,ratio,flagged\n", 0) == 0);
    CHECK(std::count(out.begin(), out.end(), '\n') >= 4);

    REQUIRE(run_cli({"spectrum", (d / "small.cfg").string(), "--levels", "4", "--samples", "11", "-o",
                     (d / "spec.csv").string()},
                    out, err) == kExitOk);
    const std::string spec = slurp(d / "spec.csv");
    CHECK(spec.rfind("t,E_0,E_1,E_2,E_3\n", 0) == 0);
    CHECK(std::count(spec.begin(), spec.end(), '\n') == 12);

    REQUIRE(run_cli({"spectrum", (d / "small.cfg").string(), "--track", "0", "--t0", "5", "--t1", "70"}, out,
                    err) == kExitOk);
    CHECK(out.rfind("t,E,dominant\n", 0) == 0);

    REQUIRE(run_cli({"scan", (d / "small.cfg").string(), "--param", "omega0", "--values", "0.5,0.7", "--csv",
                     (d / "scan.csv").string()},
                    out, err) == kExitOk);
    const auto scan = ordered_json::parse(out);
    CHECK(scan["parameter"] == "omega0");
    CHECK(scan["rows"].size() == 2);
    CHECK(scan["config"]["omega0"] == 0.7);
    CHECK(slurp(d / "scan.csv").rfind("omega0,fidelity,", 0) == 0);

    CHECK(run_cli({"scan", (d / "small.cfg").string(), "--param", "alpha", "--values", "0.1,0"}, out, err) ==
          kExitConfig);

    REQUIRE(run_cli({"selftest"}, out, err) == kExitOk);
    CHECK(out.find("FAIL") == std::string::npos);
}
