#pragma once

#include "bragg/ladder.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bragg {

enum class Method { Rk4Fixed, RkAdaptive };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct IntegratorSpec {
    Method method = Method::Rk4Fixed;
    double dt = 1e-3;           // fixed step, or initial step for the adaptive method
    double tolerance = 1e-11;   // adaptive: per-step amplitude error target
    int record_stride = 100;
    bool record_amplitudes = false;

    bool operator==(const IntegratorSpec&) const = default;
};

// Step-size rule for the fixed-step integrator. The diagonal of H is
// integrated exactly, so only the couplings, their phase rotation and the
// link detunings limit dt.
inline constexpr double kCouplingStepLimit = 0.05;  // dt * 2 max|offdiag|
inline constexpr double kPhaseStepLimit = 0.025;    // dt * max|d arg(offdiag)/dt|
inline constexpr double kDetuningStepLimit = 0.5;   // dt * max|diag_{j+1} - diag_j|

inline constexpr double kStepNormDriftLimit = 1e-6;
inline constexpr double kTruncationWarnLevel = 1e-8;

class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Trajectory {
    int n_max = 0;
    double q = 0.0;
    std::vector<double> times;
    std::vector<std::vector<double>> populations;  // [record][n + N]
    std::vector<double> norm;
    std::vector<double> mean_velocity;
    std::vector<std::vector<cplx>> amplitudes;      // only when requested
    std::vector<std::string> warnings;

    std::size_t records() const { return times.size(); }
    const std::vector<double>& final_populations() const { return populations.back(); }
    double population(std::size_t record, int n) const { return populations[record][n + n_max]; }
    /// Population of level n at every record.
    std::vector<double> series(int n) const;
};

using HamiltonianFn = std::function<TridiagonalH(double)>;

/// One fourth-order step of i da/dt = H(t) a.
///
/// Integrating-factor RK4: with D(t) = diag H(t) the diagonal evolution
/// exp(-i int D) is applied exactly (Simpson's rule on D, exact for D
/// quadratic in t), and classical RK4 integrates the couplings in the
/// interaction picture. Uses tridiagonal products only.
StateVector step(const StateVector& state, const HamiltonianFn& h, double t, double dt);

/// Largest dt allowed by the fixed-step rule over [t0, t1].
double max_stable_dt(const LadderConfig& cfg, std::pair<double, double> t_span);

/// Fastest rotation of a coupling phase over [t0, t1]: the chirp rates in
/// the bare frame, their difference in the splitter rotating frame.
double max_coupling_phase_rate(const LadderConfig& cfg, std::pair<double, double> t_span);

/// Throws std::invalid_argument when spec.dt violates the step rule.
void check_step_rule(const LadderConfig& cfg, const IntegratorSpec& spec, std::pair<double, double> t_span);

Trajectory propagate(const LadderConfig& cfg, const IntegratorSpec& spec, std::pair<double, double> t_span,
                     const StateVector& initial);

/// Same, starting from a_0 = 1 at t_span.first.
Trajectory propagate(const LadderConfig& cfg, const IntegratorSpec& spec, std::pair<double, double> t_span);

enum class FrameDirection { RotatingToBare, BareToRotating };

/// a_n -> a_n e^{+- i n phi}.
StateVector frame_transform(const StateVector& state, double phi, FrameDirection dir);

/// Per-level phases, for frames where branches co-rotate with different chirps.
StateVector frame_transform(const StateVector& state, const std::vector<double>& phases, FrameDirection dir);

}  // namespace bragg
