#pragma once

#include "bragg/ladder.hpp"
#include "bragg/propagator.hpp"

#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

namespace bragg {

/// |a_n|^2 indexed by n + N.
std::vector<double> populations(const StateVector& state);

/// Sum_n (n + q/2) P_n in units of 2 hbar k / m.
double mean_velocity(const StateVector& state, double q = 0.0);
double mean_velocity(std::span<const double> populations, int n_max, double q = 0.0);

class NoPeriodError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Oscillation period from the mean spacing of zero crossings of the
/// linearly detrended series (times two). Throws NoPeriodError when fewer
/// than three crossings exist.
double bloch_period(std::span<const double> times, std::span<const double> velocities);

/// Root-mean-square of the linearly detrended series.
double detrended_rms(std::span<const double> times, std::span<const double> values);

struct SummaryMetrics {
    int n_max = 0;
    std::vector<double> final_populations;  // indexed by n + N
    double fidelity = 0.0;
    double residual_low = 0.0;              // final probability with |n| < min |target|
    std::vector<double> max_transient;      // per-level maximum over the record
    std::optional<double> bloch_period;

    double final_population(int n) const { return final_populations.at(n + n_max); }
    double transient(int n) const { return max_transient.at(n + n_max); }
};

SummaryMetrics transfer_fidelity(const Trajectory& traj, const std::set<int>& targets);

}  // namespace bragg
