#include "bragg/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

namespace bragg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Evaluates f(0..n-1) on a small worker pool; results keep index order.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, F f)
{
    std::vector<T> out(n);
    const std::size_t workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n);
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i; (i = next++) < n;) out[i] = f(i);
        }));
    for (auto& p : pool) p.get();
    return out;
}

void check_params(const ScenarioParams& p)
{
    if (p.target < 1) throw std::invalid_argument("target must be >= 1");
    if (p.direction != 1 && p.direction != -1) throw std::invalid_argument("direction must be +1 or -1");
    if (p.alpha == 0.0 || (p.mode == Mode::Splitter && p.alpha2 == 0.0))
        throw std::invalid_argument("chirp rate must be nonzero");
    if (p.alpha < 0.0 || p.alpha2 < 0.0)
        throw std::invalid_argument("chirp rate must be positive; use direction to reverse the climb");
}

ChirpProfile chirp1(const ScenarioParams& p)
{
    return ChirpProfile{p.alpha, p.t_c, p.delta0, positive_climbing_sign() * p.direction};
}

}  // namespace

ScenarioParams mirror_defaults()
{
    ScenarioParams p;
    p.mode = Mode::Mirror;
    p.t_c = 10.0;
    p.omega0 = 0.7;
    p.ramp_up = 34.0;
    p.ramp_down = 20.0;
    p.end_offset = -5.0;
    p.frame = Frame::Rotating;
    return p;
}

ScenarioParams splitter_defaults()
{
    ScenarioParams p;
    p.mode = Mode::Splitter;
    p.t_c = 20.0;
    p.t_c2 = 20.0;
    p.omega0 = 0.7;
    p.omega0_2 = 0.7;
    // the pulse must stay weak through the wrong-way (0, +-1) resonance at
    // t_c - 1/alpha and be strong by the first climbing crossing at t_c + 1/alpha
    p.pulse_start = 13.0;
    p.ramp_up = 41.0;
    p.ramp_down = 20.0;
    p.end_offset = -6.0;
    p.frame = Frame::Bare;
    return p;
}

double default_plateau(const ScenarioParams& p)
{
    check_params(p);
    const ChirpProfile ch = chirp1(p);
    const int pair = p.direction > 0 ? p.target - 1 : -p.target;
    // nominal design ignores q so that a spread of q shares one pulse
    const double t_last = predicted_crossing_time(ch, pair, 0.0);
    const double end = t_last + 1.0 / p.alpha + 0.5 * p.ramp_down + p.end_offset;
    const double plateau = end - p.pulse_start - p.ramp_up - p.ramp_down;
    if (plateau < 0.0) {
        std::ostringstream os;
        os << "pulse cannot reach target " << p.target << ": ramps end after t = " << end;
        throw std::invalid_argument(os.str());
    }
    return plateau;
}

LadderConfig build_config(const ScenarioParams& p)
{
    check_params(p);
    const double plateau = p.plateau ? *p.plateau : default_plateau(p);
    LadderConfig cfg;
    cfg.n_max = p.n_max.value_or(p.target + kTruncationMargin);
    cfg.mode = p.mode;
    cfg.q = p.q;
    cfg.frame = p.frame;
    const ChirpProfile c1 = chirp1(p);
    cfg.pulses = {Pulse{PulseEnvelope(p.omega0, p.ramp_up, plateau, p.ramp_down, p.shape, p.pulse_start), c1}};
    if (p.mode == Mode::Splitter) {
        const ChirpProfile c2{p.alpha2, p.t_c2, p.delta0_2, -c1.sign};
        cfg.pulses.push_back(
            Pulse{PulseEnvelope(p.omega0_2, p.ramp_up, plateau, p.ramp_down, p.shape, p.pulse_start), c2});
    }
    cfg.validate();
    return cfg;
}

IntegratorSpec resolve_integrator(const ScenarioParams& p, const LadderConfig& cfg)
{
    IntegratorSpec spec = p.integrator;
    if (p.auto_step && spec.method == Method::Rk4Fixed)
        spec.dt = std::min(spec.dt, max_stable_dt(cfg, {0.0, cfg.pulse_end()}));
    return spec;
}

std::set<int> target_levels(const ScenarioParams& p)
{
    if (p.mode == Mode::Splitter) return {-p.target, p.target};
    return {p.direction * p.target};
}

namespace {

RunResult execute(const ScenarioParams& p)
{
    RunResult r;
    r.params = p;
    r.config = build_config(p);
    r.integrator = resolve_integrator(p, r.config);
    r.span = {0.0, r.config.pulse_end()};
    if (!(r.span.second > 0.0)) throw std::invalid_argument("pulse has zero duration");
    r.trajectory = propagate(r.config, r.integrator, r.span);
    r.metrics = transfer_fidelity(r.trajectory, target_levels(p));
    r.adiabaticity = adiabaticity_report(r.config);
    r.warnings = r.trajectory.warnings;
    for (const auto& e : r.adiabaticity) {
        if (!e.flagged) continue;
        std::ostringstream os;
        os << "adiabaticity: crossing (" << e.crossing.pair.first << ", " << e.crossing.pair.second << ") at t = "
           << e.crossing.t_cross << " has t_lz / spacing = " << e.ratio;
        r.warnings.push_back(os.str());
    }
    return r;
}

}  // namespace

RunResult run_mirror(const ScenarioParams& p)
{
    if (p.mode != Mode::Mirror) throw std::invalid_argument("run_mirror requires mirror mode");
    return execute(p);
}

RunResult run_splitter(const ScenarioParams& p)
{
    if (p.mode != Mode::Splitter) throw std::invalid_argument("run_splitter requires splitter mode");
    RunResult r = execute(p);
    BranchMetrics b;
    b.p_plus = r.metrics.final_population(p.target);
    b.p_minus = r.metrics.final_population(-p.target);
    b.asymmetry = std::abs(b.p_plus - b.p_minus);
    r.branches = b;
    return r;
}

RunResult run_scenario(const ScenarioParams& p) { return p.mode == Mode::Mirror ? run_mirror(p) : run_splitter(p); }

ScenarioParams bloch_scenario(const BlochParams& b)
{
    if (!(b.alpha > 0.0)) throw std::invalid_argument("chirp rate must be positive");
    if (b.cycles < 3) throw std::invalid_argument("Bloch run needs at least 3 cycles");
    const double spacing = 2.0 / b.alpha;
    ScenarioParams p;
    p.mode = Mode::Mirror;
    p.target = b.cycles;
    p.alpha = b.alpha;
    p.t_c = 1.0 / b.alpha;  // the (-1, 0) resonance sits at t = 0
    p.omega0 = b.omega0;
    // Both ramps are centred on zone centres (phidot = 0 mod 2), half a
    // spacing away from any resonance, so the lattice is loaded and released
    // adiabatically.
    p.pulse_start = 0.25 * spacing;
    p.ramp_up = 0.5 * spacing;
    p.ramp_down = 0.5 * spacing;
    p.plateau = (b.cycles - 0.5) * spacing;
    p.n_max = b.n_max;
    p.integrator = b.integrator;
    return p;
}

BlochResult analyze_bloch(RunResult run)
{
    BlochResult out;
    const PulseEnvelope& env = run.config.pulses.at(0).envelope;
    out.window = {env.plateau_start(), env.plateau_end()};
    out.expected_period = 2.0 / std::abs(run.config.pulses.at(0).chirp.alpha);
    std::vector<double> t, v;
    const Trajectory& tr = run.trajectory;
    for (std::size_t i = 0; i < tr.records(); ++i) {
        if (tr.times[i] < out.window.first || tr.times[i] > out.window.second) continue;
        t.push_back(tr.times[i]);
        v.push_back(tr.mean_velocity[i]);
    }
    try {
        out.period = bloch_period(t, v);
    } catch (const NoPeriodError& e) {
        run.warnings.push_back(std::string("bloch period: ") + e.what());
    }
    out.amplitude = std::sqrt(2.0) * detrended_rms(t, v);
    run.metrics.bloch_period = out.period;
    out.run = std::move(run);
    return out;
}

BlochResult run_bloch(const BlochParams& b) { return analyze_bloch(run_mirror(bloch_scenario(b))); }

std::vector<BlochParams> bloch_regimes()
{
    std::vector<BlochParams> out(3);
    out[0].alpha = 0.01, out[0].omega0 = 0.15;
    out[1].alpha = 0.01, out[1].omega0 = 0.7;
    out[2].alpha = 0.1, out[2].omega0 = 0.7;
    return out;
}

std::vector<BlochResult> run_bloch_regimes()
{
    const auto regimes = bloch_regimes();
    return parallel_map<BlochResult>(regimes.size(), [&](std::size_t i) { return run_bloch(regimes[i]); });
}

namespace {

double violation(const CalibrationPoint& c, const CalibrationTarget& target)
{
    return std::max(0.0, target.fidelity - c.fidelity) + std::max(0.0, c.transient - target.max_transient);
}

CalibrationPoint evaluate(const ScenarioParams& base, const CalibrationTarget& target, double omega0, double up,
                          double down)
{
    ScenarioParams p = base;
    p.omega0 = omega0;
    if (p.mode == Mode::Splitter) p.omega0_2 = omega0;
    p.ramp_up = up;
    p.ramp_down = down;
    p.plateau.reset();
    const RunResult r = run_scenario(p);
    CalibrationPoint c{omega0, up, down, r.metrics.fidelity, r.metrics.transient(-p.direction), false};
    c.feasible = c.fidelity >= target.fidelity && c.transient <= target.max_transient;
    return c;
}

}  // namespace

CalibrationResult calibrate(const ScenarioParams& base, const CalibrationTarget& target,
                            const CalibrationBounds& bounds)
{
    if (bounds.omega_points < 1 || bounds.ramp_up.empty() || bounds.ramp_down.empty() ||
        !(bounds.omega_max >= bounds.omega_min) || bounds.omega_min < 0.0)
        throw std::invalid_argument("calibration bounds are empty");

    std::vector<double> omegas;
    for (int i = 0; i < bounds.omega_points; ++i)
        omegas.push_back(bounds.omega_points == 1 ? bounds.omega_min
                                                  : bounds.omega_min + (bounds.omega_max - bounds.omega_min) * i /
                                                                           (bounds.omega_points - 1));
    struct Job {
        double omega, up, down;
    };
    std::vector<Job> jobs;
    for (double o : omegas)
        for (double u : bounds.ramp_up)
            for (double d : bounds.ramp_down) jobs.push_back({o, u, d});

    CalibrationResult res;
    res.evaluated = parallel_map<CalibrationPoint>(
        jobs.size(), [&](std::size_t i) { return evaluate(base, target, jobs[i].omega, jobs[i].up, jobs[i].down); });

    const CalibrationPoint* best = nullptr;
    for (const auto& c : res.evaluated) {
        if (!c.feasible) continue;
        if (!best || c.omega0 < best->omega0 || (c.omega0 == best->omega0 && c.fidelity > best->fidelity)) best = &c;
    }
    if (!best) {
        best = &*std::min_element(res.evaluated.begin(), res.evaluated.end(),
                                  [&](const auto& a, const auto& b) { return violation(a, target) < violation(b, target); });
        res.chosen = *best;
        return res;
    }

    res.feasible = true;
    res.chosen = *best;
    const auto it = std::find(omegas.begin(), omegas.end(), best->omega0);
    if (it == omegas.begin()) return res;
    double lo = *(it - 1), hi = best->omega0;
    for (int k = 0; k < bounds.refine_steps; ++k) {
        const double mid = 0.5 * (lo + hi);
        const CalibrationPoint c = evaluate(base, target, mid, best->ramp_up, best->ramp_down);
        res.evaluated.push_back(c);
        if (c.feasible) {
            hi = mid;
            res.chosen = c;
        } else {
            lo = mid;
        }
    }
    return res;
}

ScanResult parameter_scan(const std::string& name, const std::vector<double>& values,
                          const std::function<SummaryMetrics(double)>& job, const ScenarioParams& provenance)
{
    for (std::size_t i = 1; i < values.size(); ++i)
        if (!(values[i] > values[i - 1])) throw std::invalid_argument("scan values must be strictly increasing");
    ScanResult r;
    r.parameter = name;
    r.values = values;
    r.provenance = provenance;
    r.metrics = parallel_map<SummaryMetrics>(values.size(), [&](std::size_t i) { return job(values[i]); });
    return r;
}

SummaryMetrics q_average(const ScenarioParams& p, double sigma_q, int points)
{
    if (!(sigma_q >= 0.0)) throw std::invalid_argument("sigma_q must be non-negative");
    if (points < 1 || points % 2 == 0) throw std::invalid_argument("q grid size must be odd");
    if (sigma_q == 0.0 || points == 1) return run_scenario(p).metrics;

    const double half = std::min(3.0 * sigma_q, 1.0 - std::abs(p.q));
    std::vector<double> qs(static_cast<std::size_t>(points)), w(qs.size());
    double wsum = 0.0;
    for (int i = 0; i < points; ++i) {
        const double x = -half + 2.0 * half * i / (points - 1);
        qs[i] = p.q + x;
        w[i] = std::exp(-0.5 * x * x / (sigma_q * sigma_q));
        wsum += w[i];
    }
    const auto runs = parallel_map<SummaryMetrics>(qs.size(), [&](std::size_t i) {
        ScenarioParams pq = p;
        pq.q = qs[i];
        return run_scenario(pq).metrics;
    });

    SummaryMetrics avg;
    avg.n_max = runs.front().n_max;
    avg.final_populations.assign(runs.front().final_populations.size(), 0.0);
    avg.max_transient.assign(avg.final_populations.size(), 0.0);
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const double wi = w[i] / wsum;
        avg.fidelity += wi * runs[i].fidelity;
        avg.residual_low += wi * runs[i].residual_low;
        for (std::size_t j = 0; j < avg.final_populations.size(); ++j) {
            avg.final_populations[j] += wi * runs[i].final_populations[j];
            avg.max_transient[j] += wi * runs[i].max_transient[j];
        }
    }
    return avg;
}

ScanResult q_spread_scan(const ScenarioParams& p, const std::vector<double>& sigmas, int points)
{
    return parameter_scan("sigma_q", sigmas, [&](double s) { return q_average(p, s, points); }, p);
}

SiSheet convert_units(const LabUnits& lab, const RecoilParams& p)
{
    if (!(lab.omega_k_hz > 0.0)) throw std::invalid_argument("recoil frequency must be positive");
    const double f = lab.omega_k_hz;
    const double w = kTwoPi * f;
    SiSheet s;
    s.omega_k_hz = f;
    s.chirp_hz_per_s = p.alpha * kTwoPi * f * f;
    s.span_hz = 2.0 * p.n * f;
    s.duration_s = p.duration / w;
    s.spacing_s = p.alpha != 0.0 ? 2.0 / p.alpha / w : std::numeric_limits<double>::infinity();
    return s;
}

RecoilParams recoil_units(const SiSheet& s)
{
    if (!(s.omega_k_hz > 0.0)) throw std::invalid_argument("recoil frequency must be positive");
    const double f = s.omega_k_hz;
    RecoilParams p;
    p.alpha = s.chirp_hz_per_s / (kTwoPi * f * f);
    p.n = static_cast<int>(std::lround(s.span_hz / (2.0 * f)));
    p.duration = s.duration_s * (kTwoPi * f);
    return p;
}

double critical_spread(int n, double t_total)
{
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (!(t_total > 0.0)) throw std::invalid_argument("total duration must be positive");
    return 1.0 / (2.0 * n * t_total);
}

}  // namespace bragg
