#pragma once

// Reference computations shared by the unit tests and the acceptance run.

#include "bragg/propagator.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace oracle {

using bragg::cplx;

// Exact Landau-Zener survival for H = [[alpha t/2, -Omega], [-Omega, -alpha t/2]].
inline double lz_survival(double omega, double alpha) { return std::exp(-2.0 * std::numbers::pi * omega * omega / alpha); }

// Same quantity from the integrator, over t in [-T, T]. At finite |t| the
// diabatic populations still oscillate at order Omega / (alpha t), so the run
// starts in and projects onto instantaneous eigenstates instead.
inline double lz_survival_numeric(double omega, double alpha, double T)
{
    const auto eigvec = [omega](double d, bool upper) {
        // eigenvectors of [[d, -omega], [-omega, -d]]
        const double e = std::hypot(d, omega) * (upper ? 1.0 : -1.0);
        const double x = -omega, y = e - d;
        const double n = std::hypot(x, y);
        return std::array<double, 2>{x / n, y / n};
    };
    const bragg::HamiltonianFn h = [&](double t) {
        bragg::TridiagonalH m;
        m.diag = {0.5 * alpha * t, -0.5 * alpha * t};
        m.offdiag = {cplx(-omega)};
        return m;
    };
    const double dt = bragg::kPhaseStepLimit / (alpha * T);
    const auto lower = eigvec(-0.5 * alpha * T, false);
    bragg::StateVector a(0);
    a.amplitudes() = {cplx(lower[0]), cplx(lower[1])};
    const long steps = std::lround(2.0 * T / dt);
    const double h_step = 2.0 * T / static_cast<double>(steps);
    for (long i = 0; i < steps; ++i) a = bragg::step(a, h, -T + static_cast<double>(i) * h_step, h_step);
    const auto upper = eigvec(0.5 * alpha * T, true);
    return std::norm(upper[0] * a.amplitudes()[0] + upper[1] * a.amplitudes()[1]);
}

inline std::vector<cplx> final_amplitudes(const bragg::LadderConfig& c, double dt, std::pair<double, double> span)
{
    bragg::IntegratorSpec s;
    s.dt = dt;
    s.record_stride = 1 << 30;
    s.record_amplitudes = true;
    return bragg::propagate(c, s, span).amplitudes.back();
}

inline double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Global error ratio e(h) / e(h/2) estimated from runs at h, h/2, h/4;
// 16 for a fourth-order method.
inline double richardson_ratio(const bragg::LadderConfig& c, std::pair<double, double> span, double h)
{
    const auto a = final_amplitudes(c, h, span), b = final_amplitudes(c, h / 2, span), d = final_amplitudes(c, h / 4, span);
    return max_diff(a, b) / max_diff(b, d);
}

}  // namespace oracle
