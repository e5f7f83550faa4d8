#include "bragg/observables.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

namespace bragg {

std::vector<double> populations(const StateVector& state)
{
    std::vector<double> p(state.size());
    std::transform(state.amplitudes().begin(), state.amplitudes().end(), p.begin(),
                   [](const cplx& a) { return std::norm(a); });
    return p;
}

double mean_velocity(std::span<const double> pops, int n_max, double q)
{
    double v = 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < pops.size(); ++j) {
        v += (static_cast<int>(j) - n_max) * pops[j];
        total += pops[j];
    }
    return v + 0.5 * q * total;
}

double mean_velocity(const StateVector& state, double q)
{
    const auto p = populations(state);
    return mean_velocity(p, state.n_max(), q);
}

namespace {

struct Line {
    double slope = 0.0;
    double intercept = 0.0;
};

Line fit_line(std::span<const double> x, std::span<const double> y)
{
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    return {slope, my - slope * mx};
}

void check_series(std::span<const double> times, std::span<const double> values)
{
    if (times.size() != values.size()) throw std::invalid_argument("time and value series differ in length");
}

}  // namespace

double detrended_rms(std::span<const double> times, std::span<const double> values)
{
    check_series(times, values);
    if (times.empty()) return 0.0;
    const Line l = fit_line(times, values);
    double s = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double r = values[i] - (l.slope * times[i] + l.intercept);
        s += r * r;
    }
    return std::sqrt(s / static_cast<double>(times.size()));
}

double bloch_period(std::span<const double> times, std::span<const double> velocities)
{
    check_series(times, velocities);
    if (times.size() < 3) throw NoPeriodError("series too short for a period estimate");

    const Line l = fit_line(times, velocities);
    std::vector<double> r(times.size());
    double scale = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        r[i] = velocities[i] - (l.slope * times[i] + l.intercept);
        scale = std::max(scale, std::abs(r[i]));
    }
    // a flat residual has no oscillation, only rounding noise
    if (scale <= 1e-12 * std::max(1.0, std::abs(l.intercept))) throw NoPeriodError("series has no oscillation");

    std::vector<double> crossings;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
        if (r[i] == 0.0) {
            crossings.push_back(times[i]);
        } else if (r[i] * r[i + 1] < 0.0) {
            const double f = r[i] / (r[i] - r[i + 1]);
            crossings.push_back(times[i] + f * (times[i + 1] - times[i]));
        }
    }
    if (crossings.size() < 3)
        throw NoPeriodError("only " + std::to_string(crossings.size()) + " zero crossings in detrended series");
    const double spacing = (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
    return 2.0 * spacing;
}

SummaryMetrics transfer_fidelity(const Trajectory& traj, const std::set<int>& targets)
{
    if (traj.records() == 0) throw std::invalid_argument("empty trajectory");
    SummaryMetrics m;
    m.n_max = traj.n_max;
    m.final_populations = traj.final_populations();
    for (int n : targets) m.fidelity += m.final_populations.at(n + traj.n_max);

    int low = traj.n_max + 1;
    for (int n : targets) low = std::min(low, std::abs(n));
    for (int n = -traj.n_max; n <= traj.n_max; ++n)
        if (std::abs(n) < low) m.residual_low += m.final_populations[n + traj.n_max];

    m.max_transient.assign(m.final_populations.size(), 0.0);
    for (const auto& rec : traj.populations)
        for (std::size_t j = 0; j < rec.size(); ++j) m.max_transient[j] = std::max(m.max_transient[j], rec[j]);
    return m;
}

}  // namespace bragg
