#include "bragg/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

namespace bragg {

namespace {

std::string join(const std::vector<std::string>& v, const std::string& sep)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
    return s;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string format_double(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

// A rejected value; the message is reported as "key = value: message".
struct Bad {
    std::string message;
};

// from_chars rejects a leading '+'.
std::string unsigned_text(const std::string& v) { return v.size() > 1 && v[0] == '+' ? v.substr(1) : v; }

double to_double(const std::string& text)
{
    const std::string v = unsigned_text(text);
    double x = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw Bad{"not a number"};
    if (!std::isfinite(x)) throw Bad{"must be finite"};
    return x;
}

int to_int(const std::string& text)
{
    const std::string v = unsigned_text(text);
    int x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw Bad{"not an integer"};
    return x;
}

bool to_bool(const std::string& v)
{
    if (v == "true") return true;
    if (v == "false") return false;
    throw Bad{"expected true | false"};
}

double at_least(double x, double lo, const char* what = "")
{
    if (x < lo) throw Bad{std::string(what) + "out of range [" + format_double(lo) + ", inf)"};
    return x;
}

double positive(double x)
{
    if (!(x > 0.0)) throw Bad{"must be > 0"};
    return x;
}

template <class F>
auto wrap_enum(F f, const std::string& v)
{
    try {
        return f(v);
    } catch (const std::invalid_argument& e) {
        throw Bad{e.what()};
    }
}

struct Key {
    std::string name;
    bool splitter_only = false;
    std::function<void(SimConfig&, const std::string&)> set;
    std::function<ordered_json(const SimConfig&)> get;
};

const std::vector<Key>& keys()
{
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        auto num = [&](std::string name, double ScenarioParams::*field, auto check, bool splitter = false) {
            k.push_back({name, splitter, [field, check](SimConfig& c, const std::string& v) {
                             c.params.*field = check(to_double(v));
                         },
                         [field](const SimConfig& c) { return ordered_json(c.params.*field); }});
        };
        const auto any = [](double x) { return x; };
        const auto nonneg = [](double x) { return at_least(x, 0.0); };
        const auto rate = [](double x) {
            if (x == 0.0) throw Bad{"chirp rate must be nonzero"};
            if (x < 0.0) throw Bad{"chirp rate must be positive (set direction = -1 to reverse the transfer)"};
            return x;
        };

        k.push_back({"mode", false, [](SimConfig& c, const std::string& v) { c.params.mode = wrap_enum(mode_from_string, v); },
                     [](const SimConfig& c) { return ordered_json(to_string(c.params.mode)); }});
        k.push_back({"analysis", false,
                     [](SimConfig& c, const std::string& v) {
                         if (v == "transfer") c.analysis = Analysis::Transfer;
                         else if (v == "bloch") c.analysis = Analysis::Bloch;
                         else throw Bad{"expected transfer | bloch"};
                     },
                     [](const SimConfig& c) { return ordered_json(c.analysis == Analysis::Bloch ? "bloch" : "transfer"); }});
        k.push_back({"target", false,
                     [](SimConfig& c, const std::string& v) {
                         const int n = to_int(v);
                         if (n < 1) throw Bad{"out of range [1, inf)"};
                         c.params.target = n;
                     },
                     [](const SimConfig& c) { return ordered_json(c.params.target); }});
        k.push_back({"direction", false,
                     [](SimConfig& c, const std::string& v) {
                         const int d = to_int(v);
                         if (d != 1 && d != -1) throw Bad{"expected +1 or -1"};
                         c.params.direction = d;
                     },
                     [](const SimConfig& c) { return ordered_json(c.params.direction); }});
        num("alpha", &ScenarioParams::alpha, rate);
        num("t_c", &ScenarioParams::t_c, any);
        num("delta0", &ScenarioParams::delta0, any);
        num("alpha2", &ScenarioParams::alpha2, rate, true);
        num("t_c2", &ScenarioParams::t_c2, any, true);
        num("delta0_2", &ScenarioParams::delta0_2, any, true);
        num("omega0", &ScenarioParams::omega0, nonneg);
        num("omega0_2", &ScenarioParams::omega0_2, nonneg, true);
        num("pulse_start", &ScenarioParams::pulse_start, any);
        num("ramp_up", &ScenarioParams::ramp_up, nonneg);
        num("ramp_down", &ScenarioParams::ramp_down, nonneg);
        k.push_back({"plateau", false,
                     [](SimConfig& c, const std::string& v) {
                         if (v == "auto") c.params.plateau.reset();
                         else c.params.plateau = at_least(to_double(v), 0.0);
                     },
                     [](const SimConfig& c) {
                         return c.params.plateau ? ordered_json(*c.params.plateau) : ordered_json("auto");
                     }});
        num("end_offset", &ScenarioParams::end_offset, any);
        k.push_back({"shape", false,
                     [](SimConfig& c, const std::string& v) { c.params.shape = wrap_enum(ramp_shape_from_string, v); },
                     [](const SimConfig& c) { return ordered_json(to_string(c.params.shape)); }});
        k.push_back({"n_max", false,
                     [](SimConfig& c, const std::string& v) {
                         if (v == "auto") {
                             c.params.n_max.reset();
                             return;
                         }
                         const int n = to_int(v);
                         if (n < 1) throw Bad{"out of range [1, inf)"};
                         c.params.n_max = n;
                     },
                     [](const SimConfig& c) {
                         return c.params.n_max ? ordered_json(*c.params.n_max) : ordered_json("auto");
                     }});
        num("q", &ScenarioParams::q, [](double x) {
            if (std::abs(x) > 1.0) throw Bad{"out of range [-1, 1]"};
            return x;
        });
        k.push_back({"sigma_q", false, [](SimConfig& c, const std::string& v) { c.sigma_q = at_least(to_double(v), 0.0); },
                     [](const SimConfig& c) { return ordered_json(c.sigma_q); }});
        k.push_back({"q_points", false,
                     [](SimConfig& c, const std::string& v) {
                         const int n = to_int(v);
                         if (n < 1 || n % 2 == 0) throw Bad{"must be an odd integer >= 1"};
                         c.q_points = n;
                     },
                     [](const SimConfig& c) { return ordered_json(c.q_points); }});
        k.push_back({"frame", false,
                     [](SimConfig& c, const std::string& v) { c.params.frame = wrap_enum(frame_from_string, v); },
                     [](const SimConfig& c) { return ordered_json(to_string(c.params.frame)); }});
        k.push_back({"method", false,
                     [](SimConfig& c, const std::string& v) {
                         c.params.integrator.method = wrap_enum(method_from_string, v);
                     },
                     [](const SimConfig& c) { return ordered_json(to_string(c.params.integrator.method)); }});
        k.push_back({"dt", false,
                     [](SimConfig& c, const std::string& v) { c.params.integrator.dt = positive(to_double(v)); },
                     [](const SimConfig& c) { return ordered_json(c.params.integrator.dt); }});
        k.push_back({"auto_step", false, [](SimConfig& c, const std::string& v) { c.params.auto_step = to_bool(v); },
                     [](const SimConfig& c) { return ordered_json(c.params.auto_step); }});
        k.push_back({"tolerance", false,
                     [](SimConfig& c, const std::string& v) { c.params.integrator.tolerance = positive(to_double(v)); },
                     [](const SimConfig& c) { return ordered_json(c.params.integrator.tolerance); }});
        k.push_back({"record_stride", false,
                     [](SimConfig& c, const std::string& v) {
                         const int n = to_int(v);
                         if (n < 1) throw Bad{"out of range [1, inf)"};
                         c.params.integrator.record_stride = n;
                     },
                     [](const SimConfig& c) { return ordered_json(c.params.integrator.record_stride); }});
        k.push_back({"trajectory", false, [](SimConfig& c, const std::string& v) { c.trajectory_path = v; },
                     [](const SimConfig& c) { return ordered_json(c.trajectory_path); }});
        k.push_back({"summary", false, [](SimConfig& c, const std::string& v) { c.summary_path = v; },
                     [](const SimConfig& c) { return ordered_json(c.summary_path); }});
        return k;
    }();
    return table;
}

const Key* find_key(const std::string& name)
{
    for (const auto& k : keys())
        if (k.name == name) return &k;
    return nullptr;
}

std::string value_text(const ordered_json& v)
{
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    return format_double(v.get<double>());
}

// Cross-key checks once every key has been applied.
void check_consistency(const SimConfig& c, const std::set<std::string>& seen, std::vector<std::string>& problems,
                       bool done_with_keys = true)
{
    if (c.params.mode == Mode::Mirror)
        for (const auto& k : keys())
            if (k.splitter_only && seen.count(k.name)) problems.push_back(k.name + ": only valid in splitter mode");
    if (c.analysis == Analysis::Bloch && c.params.mode != Mode::Mirror)
        problems.push_back("analysis: bloch analysis requires mirror mode");
    if (!problems.empty() || !done_with_keys) return;
    try {
        const LadderConfig cfg = build_config(c.params);
        if (c.params.n_max && *c.params.n_max <= c.params.target)
            problems.push_back("n_max: must exceed target " + std::to_string(c.params.target));
        if (!c.params.auto_step) check_step_rule(cfg, c.params.integrator, {0.0, cfg.pulse_end()});
    } catch (const std::invalid_argument& e) {
        problems.push_back(e.what());
    }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("invalid configuration: " + join(problems, "; ")), problems_(std::move(problems))
{
}

IoError::IoError(const std::filesystem::path& path, const std::string& cause)
    : std::runtime_error(path.string() + ": " + cause), path_(path)
{
}

const std::vector<std::string>& required_keys()
{
    static const std::vector<std::string> k{"mode", "target", "alpha", "t_c", "omega0"};
    return k;
}

const std::vector<std::string>& splitter_required_keys()
{
    static const std::vector<std::string> k{"alpha2", "t_c2"};
    return k;
}

SimConfig parse_config(const std::string& text)
{
    std::vector<std::string> problems;
    std::vector<std::pair<std::string, std::string>> entries;
    std::map<std::string, int> first_line;

    std::istringstream in(text);
    std::string raw;
    for (int line = 1; std::getline(in, raw); ++line) {
        const std::string s = trim(raw.substr(0, raw.find('#')));
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            problems.push_back("line " + std::to_string(line) + ": expected 'key = value'");
            continue;
        }
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (!find_key(key)) {
            problems.push_back("line " + std::to_string(line) + ": unknown key '" + key + "'");
            continue;
        }
        if (first_line.count(key)) {
            problems.push_back("line " + std::to_string(line) + ": duplicate key '" + key + "' (first on line " +
                               std::to_string(first_line[key]) + ")");
            continue;
        }
        first_line[key] = line;
        entries.emplace_back(key, value);
    }

    // Mode decides which defaults the remaining keys start from.
    SimConfig cfg;
    for (const auto& [k, v] : entries)
        if (k == "mode" && v == "splitter") cfg.params = splitter_defaults();

    std::set<std::string> seen;
    for (const auto& [k, v] : entries) {
        seen.insert(k);
        try {
            find_key(k)->set(cfg, v);
        } catch (const Bad& b) {
            problems.push_back(k + " = " + v + ": " + b.message);
        }
    }
    if (seen.count("dt") && !seen.count("auto_step")) cfg.params.auto_step = false;

    std::vector<std::string> missing;
    for (const auto& k : required_keys())
        if (!seen.count(k)) missing.push_back(k);
    if (cfg.params.mode == Mode::Splitter)
        for (const auto& k : splitter_required_keys())
            if (!seen.count(k)) missing.push_back(k);
    if (!missing.empty()) problems.push_back("missing required keys: " + join(missing, ", "));

    check_consistency(cfg, seen, problems, problems.empty());
    if (!problems.empty()) throw ConfigError(problems);
    return cfg;
}

SimConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        std::error_code ec;
        throw IoError(path, std::filesystem::exists(path, ec) ? "cannot open file" : "file not found");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string emit_config(const SimConfig& cfg)
{
    std::ostringstream os;
    for (const auto& k : keys()) {
        if (k.splitter_only && cfg.params.mode != Mode::Splitter) continue;
        const ordered_json v = k.get(cfg);
        if (v.is_string() && v.get<std::string>().empty()) continue;
        os << k.name << " = " << value_text(v) << "\n";
    }
    return os.str();
}

void apply_override(SimConfig& cfg, const std::string& key, const std::string& value)
{
    const Key* k = find_key(key);
    if (!k) throw ConfigError({"unknown key '" + key + "'"});
    try {
        k->set(cfg, value);
    } catch (const Bad& b) {
        throw ConfigError({key + " = " + value + ": " + b.message});
    }
    if (key == "dt") cfg.params.auto_step = false;
    std::vector<std::string> problems;
    check_consistency(cfg, {key}, problems);
    if (!problems.empty()) throw ConfigError(problems);
}

void write_atomic(const std::filesystem::path& path, const std::string& contents)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(path, "cannot open for writing");
        out << contents;
        out.flush();
        if (!out) throw IoError(path, "write failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError(path, "rename failed: " + ec.message());
    }
}

std::string trajectory_csv(const Trajectory& traj)
{
    std::string out = "t";
    for (int n = -traj.n_max; n <= traj.n_max; ++n) out += ",P_" + std::to_string(n);
    out += ",v_mean,norm\n";
    char buf[32];
    const auto put = [&](double x, char sep) {
        std::snprintf(buf, sizeof buf, "%.12g", x);
        out += buf;
        out += sep;
    };
    for (std::size_t i = 0; i < traj.records(); ++i) {
        put(traj.times[i], ',');
        for (double p : traj.populations[i]) put(p, ',');
        put(traj.mean_velocity[i], ',');
        put(traj.norm[i], '\n');
    }
    return out;
}

void emit_trajectory(const Trajectory& traj, const std::filesystem::path& path)
{
    write_atomic(path, trajectory_csv(traj));
}

ordered_json config_json(const SimConfig& cfg)
{
    ordered_json j = ordered_json::object();
    for (const auto& k : keys()) {
        if (k.splitter_only && cfg.params.mode != Mode::Splitter) continue;
        j[k.name] = k.get(cfg);
    }
    return j;
}

ordered_json metrics_json(const SummaryMetrics& m)
{
    ordered_json j;
    j["n_max"] = m.n_max;
    j["fidelity"] = m.fidelity;
    j["residual_low"] = m.residual_low;
    j["final_populations"] = m.final_populations;
    j["max_transient"] = m.max_transient;
    j["bloch_period"] = m.bloch_period ? ordered_json(*m.bloch_period) : ordered_json(nullptr);
    return j;
}

ordered_json summary_json(const SimConfig& cfg, const RunResult& run)
{
    ordered_json j;
    j["config"] = config_json(cfg);
    ordered_json r;
    r["n_max"] = run.config.n_max;
    r["frame"] = to_string(run.config.frame);
    r["method"] = to_string(run.integrator.method);
    r["dt"] = run.integrator.dt;
    r["t_start"] = run.span.first;
    r["t_end"] = run.span.second;
    r["plateau"] = run.config.pulses.at(0).envelope.plateau();
    r["records"] = run.trajectory.records();
    r["final_norm"] = run.trajectory.norm.back();
    j["resolved"] = r;
    j["metrics"] = metrics_json(run.metrics);
    if (run.branches) {
        j["branches"] = {{"p_plus", run.branches->p_plus},
                         {"p_minus", run.branches->p_minus},
                         {"asymmetry", run.branches->asymmetry}};
    }
    ordered_json crossings = ordered_json::array();
    for (const auto& e : run.adiabaticity) {
        ordered_json c;
        c["pair"] = {e.crossing.pair.first, e.crossing.pair.second};
        c["pulse"] = e.crossing.pulse;
        c["t_cross"] = e.crossing.t_cross;
        c["gap"] = e.crossing.gap;
        c["t_lz"] = e.crossing.t_lz;
        c["dt_spacing"] = e.crossing.dt_spacing;
        c["ratio"] = e.ratio;
        c["flagged"] = e.flagged;
        crossings.push_back(c);
    }
    j["adiabaticity"] = crossings;
    j["warnings"] = run.warnings;
    return j;
}

void emit_summary(const ordered_json& summary, const std::filesystem::path& path)
{
    write_atomic(path, summary.dump(2) + "\n");
}

}  // namespace bragg
