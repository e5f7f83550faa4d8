#pragma once

#include "bragg/ladder.hpp"
#include "bragg/observables.hpp"
#include "bragg/propagator.hpp"
#include "bragg/spectrum.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bragg {

/// Everything needed to build and run one mirror or splitter pulse.
/// Chirp 1 climbs the branch given by `direction`; in splitter mode chirp 2
/// has the opposite slope and climbs the other branch.
struct ScenarioParams {
    Mode mode = Mode::Mirror;
    int target = 25;          // |n| of the target level(s)
    int direction = +1;       // +1: chirp 1 climbs n > 0

    double alpha = 0.1;
    double t_c = 10.0;
    double delta0 = 0.0;
    double alpha2 = 0.1;      // splitter only
    double t_c2 = 20.0;
    double delta0_2 = 0.0;

    double omega0 = 0.7;
    double omega0_2 = 0.7;    // splitter only
    double pulse_start = 0.0;
    double ramp_up = 34.0;
    double ramp_down = 20.0;
    RampShape shape = RampShape::SinSquared;
    std::optional<double> plateau;  // empty: derived from target and end_offset
    // Pulse end relative to (last target crossing + dt_spacing/2 + ramp_down/2).
    double end_offset = -5.0;

    std::optional<int> n_max;  // empty: target + 8
    double q = 0.0;
    Frame frame = Frame::Rotating;
    IntegratorSpec integrator{};
    bool auto_step = true;     // lower dt to the step-rule limit when needed

    bool operator==(const ScenarioParams&) const = default;
};

inline constexpr int kTruncationMargin = 8;

/// Calibrated mirror: t_c = 10, alpha = 0.1, target 25.
ScenarioParams mirror_defaults();
/// Calibrated splitter: t_c = 20, alpha = 0.1, targets +-25.
ScenarioParams splitter_defaults();

/// Plateau implied by the target and the turn-off rule.
double default_plateau(const ScenarioParams& p);
LadderConfig build_config(const ScenarioParams& p);
/// Integrator settings actually used (dt resolved against the step rule).
IntegratorSpec resolve_integrator(const ScenarioParams& p, const LadderConfig& cfg);
std::set<int> target_levels(const ScenarioParams& p);

struct BranchMetrics {
    double p_plus = 0.0;
    double p_minus = 0.0;
    double asymmetry = 0.0;
};

struct RunResult {
    ScenarioParams params;
    LadderConfig config;
    IntegratorSpec integrator;
    std::pair<double, double> span;
    Trajectory trajectory;
    SummaryMetrics metrics;
    std::optional<BranchMetrics> branches;
    std::vector<AdiabaticityEntry> adiabaticity;
    std::vector<std::string> warnings;
};

RunResult run_mirror(const ScenarioParams& p);
RunResult run_splitter(const ScenarioParams& p);
/// Dispatches on p.mode.
RunResult run_scenario(const ScenarioParams& p);

struct BlochParams {
    double alpha = 0.01;
    double omega0 = 0.15;
    int cycles = 6;            // crossings on the plateau
    std::optional<int> n_max;
    IntegratorSpec integrator{};
};

struct BlochResult {
    RunResult run;
    std::pair<double, double> window;  // plateau section used for the analysis
    std::optional<double> period;
    double amplitude = 0.0;            // sqrt(2) * detrended rms of v_mean
    double expected_period = 0.0;      // 2 / alpha
};

/// Pulse with t_c = 1 / alpha whose ramps (half a crossing spacing each) are
/// centred between crossings, with `cycles` crossings on the plateau.
ScenarioParams bloch_scenario(const BlochParams& b);
/// Period and amplitude of the mean velocity over the plateau of a mirror run.
BlochResult analyze_bloch(RunResult run);
BlochResult run_bloch(const BlochParams& b);
/// Bloch regimes (alpha, omega0): (0.01, 0.15), (0.01, 0.7), (0.1, 0.7).
std::vector<BlochParams> bloch_regimes();
std::vector<BlochResult> run_bloch_regimes();

struct CalibrationTarget {
    double fidelity = 0.99;
    double max_transient = 0.01;  // on the level one step against the climb
};

struct CalibrationBounds {
    double omega_min = 0.6;
    double omega_max = 0.8;
    int omega_points = 5;
    std::vector<double> ramp_up{30.0, 34.0, 38.0, 42.0};
    std::vector<double> ramp_down{20.0};
    int refine_steps = 4;
};

struct CalibrationPoint {
    double omega0 = 0.0;
    double ramp_up = 0.0;
    double ramp_down = 0.0;
    double fidelity = 0.0;
    double transient = 0.0;
    bool feasible = false;
};

struct CalibrationResult {
    bool feasible = false;
    CalibrationPoint chosen;  // smallest feasible omega0, or the least violating point
    std::vector<CalibrationPoint> evaluated;
};

/// Grid search over (omega0, ramp_up, ramp_down), then bisection of omega0
/// toward the feasibility edge for the chosen ramps.
CalibrationResult calibrate(const ScenarioParams& base, const CalibrationTarget& target,
                            const CalibrationBounds& bounds);

struct ScanResult {
    std::string parameter;
    std::vector<double> values;
    std::vector<SummaryMetrics> metrics;
    ScenarioParams provenance;
};

/// Runs `job` for every value, concurrently, keeping the value order.
ScanResult parameter_scan(const std::string& name, const std::vector<double>& values,
                          const std::function<SummaryMetrics(double)>& job, const ScenarioParams& provenance);

/// Incoherent average over a quasi-momentum spread: `points` uniformly spaced
/// q in +-min(3 sigma, 1) with normalized Gaussian weights.
SummaryMetrics q_average(const ScenarioParams& p, double sigma_q, int points = 21);
ScanResult q_spread_scan(const ScenarioParams& p, const std::vector<double>& sigmas, int points = 21);

struct LabUnits {
    double omega_k_hz = 50e3;  // omega_k / 2 pi
};

struct RecoilParams {
    double alpha = 0.1;    // units omega_k^2
    int n = 25;
    double duration = 0.0; // units 1/omega_k
};

struct SiSheet {
    double omega_k_hz = 0.0;
    double chirp_hz_per_s = 0.0;  // alpha / 2 pi
    double span_hz = 0.0;         // 2 n omega_k / 2 pi
    double duration_s = 0.0;
    double spacing_s = 0.0;       // 2 omega_k / alpha
};

SiSheet convert_units(const LabUnits& lab, const RecoilParams& p);
RecoilParams recoil_units(const SiSheet& sheet);

/// Delta p_c = hbar k / (2 n omega_k T), in units of hbar k.
double critical_spread(int n, double t_total);

}  // namespace bragg
