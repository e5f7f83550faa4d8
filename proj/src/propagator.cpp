#include "bragg/propagator.hpp"

#include "bragg/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace bragg {

std::string to_string(Method m) { return m == Method::Rk4Fixed ? "rk4" : "adaptive"; }

Method method_from_string(const std::string& s)
{
    if (s == "rk4" || s == "rk4-fixed") return Method::Rk4Fixed;
    if (s == "adaptive" || s == "rk-adaptive") return Method::RkAdaptive;
    throw std::invalid_argument("unknown integration method '" + s + "' (expected rk4 | adaptive)");
}

std::vector<double> Trajectory::series(int n) const
{
    std::vector<double> s(records());
    for (std::size_t i = 0; i < records(); ++i) s[i] = population(i, n);
    return s;
}

namespace {

using Fill = std::function<void(double, TridiagonalH&)>;

// y = -i * (H - diag H) x
void couple(const TridiagonalH& h, const std::vector<cplx>& x, std::vector<cplx>& y)
{
    const std::size_t n = x.size();
    for (std::size_t j = 0; j < n; ++j) y[j] = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        y[j + 1] += h.offdiag[j] * x[j];
        y[j] += std::conj(h.offdiag[j]) * x[j + 1];
    }
    for (auto& v : y) v = cplx(v.imag(), -v.real());
}

class Stepper {
public:
    explicit Stepper(Fill fill) : fill_(std::move(fill)) {}

    // Advances amps from t to t + dt in place.
    void advance(std::vector<cplx>& a, double t, double dt)
    {
        const std::size_t n = a.size();
        resize(n);
        fill_(t, h0_);
        fill_(t + 0.5 * dt, hm_);
        fill_(t + dt, he_);
        if (h0_.size() != n) throw std::invalid_argument("Hamiltonian dimension does not match the state");

        for (std::size_t j = 0; j < n; ++j) {
            const double d0 = h0_.diag[j], dm = hm_.diag[j], de = he_.diag[j];
            const double first = dt / 24.0 * (5.0 * d0 + 8.0 * dm - de);
            const double whole = dt / 6.0 * (d0 + 4.0 * dm + de);
            e_tm_[j] = std::polar(1.0, -first);
            e_me_[j] = std::polar(1.0, -(whole - first));
            e_te_[j] = e_tm_[j] * e_me_[j];
        }

        couple(h0_, a, k1_);
        for (std::size_t j = 0; j < n; ++j) tmp_[j] = e_tm_[j] * (a[j] + 0.5 * dt * k1_[j]);
        couple(hm_, tmp_, k2_);
        for (std::size_t j = 0; j < n; ++j) tmp_[j] = e_tm_[j] * a[j] + 0.5 * dt * k2_[j];
        couple(hm_, tmp_, k3_);
        for (std::size_t j = 0; j < n; ++j) tmp_[j] = e_te_[j] * a[j] + dt * e_me_[j] * k3_[j];
        couple(he_, tmp_, k4_);
        for (std::size_t j = 0; j < n; ++j)
            a[j] = e_te_[j] * (a[j] + dt / 6.0 * k1_[j]) + dt / 3.0 * e_me_[j] * (k2_[j] + k3_[j]) +
                   dt / 6.0 * k4_[j];
    }

private:
    void resize(std::size_t n)
    {
        if (k1_.size() == n) return;
        for (auto* v : {&k1_, &k2_, &k3_, &k4_, &tmp_, &e_tm_, &e_me_, &e_te_}) v->assign(n, 0.0);
    }

    Fill fill_;
    TridiagonalH h0_, hm_, he_;
    std::vector<cplx> k1_, k2_, k3_, k4_, tmp_, e_tm_, e_me_, e_te_;
};

void check_drift(double before, double after, double t)
{
    if (!std::isfinite(after) || std::abs(after - before) > kStepNormDriftLimit) {
        std::ostringstream os;
        os << "norm drift " << std::abs(after - before) << " in one step at t = " << t
           << " (limit " << kStepNormDriftLimit << "); reduce dt";
        throw IntegrationError(os.str());
    }
}

double amp_norm(const std::vector<cplx>& a)
{
    double s = 0.0;
    for (const auto& v : a) s += std::norm(v);
    return s;
}

class Recorder {
public:
    Recorder(Trajectory& traj, bool amplitudes) : traj_(traj), amplitudes_(amplitudes) {}

    void operator()(double t, const std::vector<cplx>& a)
    {
        std::vector<double> p(a.size());
        std::transform(a.begin(), a.end(), p.begin(), [](const cplx& v) { return std::norm(v); });
        traj_.times.push_back(t);
        traj_.norm.push_back(std::accumulate(p.begin(), p.end(), 0.0));
        traj_.mean_velocity.push_back(mean_velocity(p, traj_.n_max, traj_.q));
        traj_.populations.push_back(std::move(p));
        if (amplitudes_) traj_.amplitudes.push_back(a);
    }

private:
    Trajectory& traj_;
    bool amplitudes_;
};

}  // namespace

StateVector step(const StateVector& state, const HamiltonianFn& h, double t, double dt)
{
    Stepper s([&h](double tt, TridiagonalH& out) { out = h(tt); });
    StateVector next = state;
    const double before = state.norm();
    s.advance(next.amplitudes(), t, dt);
    next.set_time(t + dt);
    check_drift(before, next.norm(), t);
    return next;
}

double max_coupling_phase_rate(const LadderConfig& cfg, std::pair<double, double> t_span)
{
    // chirp rates are affine in t, so the extremes sit at the span ends
    const auto peak_rate = [&](auto rate) {
        return std::max(std::abs(rate(t_span.first)), std::abs(rate(t_span.second)));
    };
    if (cfg.frame == Frame::Rotating) {
        if (cfg.mode == Mode::Mirror) return 0.0;
        const auto& c1 = cfg.pulses.at(0).chirp;
        const auto& c2 = cfg.pulses.at(1).chirp;
        return peak_rate([&](double t) { return chirp_rate(c2, t) - chirp_rate(c1, t); });
    }
    double rate = 0.0;
    for (const auto& p : cfg.pulses)
        if (p.envelope.peak() > 0.0) rate = std::max(rate, peak_rate([&](double t) { return chirp_rate(p.chirp, t); }));
    return rate;
}

double max_stable_dt(const LadderConfig& cfg, std::pair<double, double> t_span)
{
    constexpr int kSamples = 512;
    // Link detunings are frame-invariant; the rotating frame exposes them on the diagonal.
    LadderConfig rot = cfg;
    rot.frame = Frame::Rotating;
    TridiagonalH h;
    double coupling = 0.0;
    double detuning = 0.0;
    for (int i = 0; i <= kSamples; ++i) {
        const double t = t_span.first + (t_span.second - t_span.first) * i / kSamples;
        hamiltonian_into(rot, t, h);
        for (const auto& o : h.offdiag) coupling = std::max(coupling, std::abs(o));
        for (std::size_t j = 0; j + 1 < h.diag.size(); ++j)
            detuning = std::max(detuning, std::abs(h.diag[j + 1] - h.diag[j]));
    }
    // pulse plateaus sit between samples; the peak bounds the envelope
    for (const auto& p : cfg.pulses) coupling = std::max(coupling, p.envelope.peak());
    if (cfg.mode == Mode::Splitter) {
        double sum = 0.0;
        for (const auto& p : cfg.pulses) sum += p.envelope.peak();
        coupling = std::max(coupling, sum);
    }
    double limit = std::numeric_limits<double>::infinity();
    if (coupling > 0.0) limit = std::min(limit, kCouplingStepLimit / (2.0 * coupling));
    if (detuning > 0.0) limit = std::min(limit, kDetuningStepLimit / detuning);
    const double spin = max_coupling_phase_rate(cfg, t_span);
    if (spin > 0.0) limit = std::min(limit, kPhaseStepLimit / spin);
    return limit;
}

void check_step_rule(const LadderConfig& cfg, const IntegratorSpec& spec, std::pair<double, double> t_span)
{
    if (!(spec.dt > 0.0) || !std::isfinite(spec.dt)) throw std::invalid_argument("time step dt must be positive");
    if (spec.record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");
    if (spec.method == Method::RkAdaptive) {
        if (!(spec.tolerance > 0.0)) throw std::invalid_argument("adaptive tolerance must be positive");
        return;
    }
    const double limit = max_stable_dt(cfg, t_span);
    if (spec.dt > limit) {
        std::ostringstream os;
        os << "dt = " << spec.dt << " violates the step rule (max " << limit << " for this configuration)";
        throw std::invalid_argument(os.str());
    }
}

Trajectory propagate(const LadderConfig& cfg, const IntegratorSpec& spec, std::pair<double, double> t_span,
                     const StateVector& initial)
{
    cfg.validate();
    if (initial.n_max() != cfg.n_max) throw std::invalid_argument("initial state size does not match n_max");
    if (!(t_span.second > t_span.first)) throw std::invalid_argument("t_span must be increasing");
    check_step_rule(cfg, spec, t_span);

    Trajectory traj;
    traj.n_max = cfg.n_max;
    traj.q = cfg.q;
    Recorder record(traj, spec.record_amplitudes);

    Stepper stepper([&cfg](double t, TridiagonalH& out) { hamiltonian_into(cfg, t, out); });
    std::vector<cplx> a = initial.amplitudes();
    const double duration = t_span.second - t_span.first;
    record(t_span.first, a);

    if (spec.method == Method::Rk4Fixed) {
        const auto steps = static_cast<long>(std::ceil(duration / spec.dt - 1e-9));
        const double dt = duration / static_cast<double>(steps);
        double before = amp_norm(a);
        for (long i = 0; i < steps; ++i) {
            const double t = t_span.first + dt * static_cast<double>(i);
            stepper.advance(a, t, dt);
            const double after = amp_norm(a);
            check_drift(before, after, t);
            before = after;
            if ((i + 1) % spec.record_stride == 0 || i + 1 == steps) record(t_span.first + dt * (i + 1), a);
        }
    } else {
        // step doubling: one full step against two half steps
        double t = t_span.first;
        double h = std::min(spec.dt, duration);
        long accepted = 0;
        std::vector<cplx> big, half;
        while (t < t_span.second) {
            const bool last = t + h >= t_span.second;
            if (last) h = t_span.second - t;
            big = a;
            stepper.advance(big, t, h);
            half = a;
            stepper.advance(half, t, 0.5 * h);
            stepper.advance(half, t + 0.5 * h, 0.5 * h);
            double err = 0.0;
            for (std::size_t j = 0; j < a.size(); ++j) err = std::max(err, std::abs(half[j] - big[j]));
            err /= 15.0;
            if (err <= spec.tolerance || h < 1e-12) {
                check_drift(amp_norm(a), amp_norm(half), t);
                a.swap(half);
                t = last ? t_span.second : t + h;
                ++accepted;
                if (accepted % spec.record_stride == 0 || t >= t_span.second) record(t, a);
            }
            const double factor = err > 0.0 ? 0.9 * std::pow(spec.tolerance / err, 0.2) : 4.0;
            h *= std::clamp(factor, 0.2, 4.0);
        }
    }

    const double edge = std::max(std::norm(a.front()), std::norm(a.back()));
    if (edge > kTruncationWarnLevel) {
        std::ostringstream os;
        os << "truncation: final population " << edge << " at |n| = " << cfg.n_max << " exceeds "
           << kTruncationWarnLevel << "; increase n_max";
        traj.warnings.push_back(os.str());
    }
    return traj;
}

Trajectory propagate(const LadderConfig& cfg, const IntegratorSpec& spec, std::pair<double, double> t_span)
{
    return propagate(cfg, spec, t_span, StateVector::ground(cfg.n_max, t_span.first));
}

StateVector frame_transform(const StateVector& state, const std::vector<double>& phases, FrameDirection dir)
{
    if (phases.size() != state.size()) throw std::invalid_argument("phase vector size does not match the state");
    StateVector out = state;
    const double s = dir == FrameDirection::RotatingToBare ? 1.0 : -1.0;
    for (std::size_t j = 0; j < phases.size(); ++j) out.amplitudes()[j] *= std::polar(1.0, s * phases[j]);
    return out;
}

StateVector frame_transform(const StateVector& state, double phi, FrameDirection dir)
{
    std::vector<double> phases(state.size());
    for (std::size_t j = 0; j < phases.size(); ++j) phases[j] = (static_cast<int>(j) - state.n_max()) * phi;
    return frame_transform(state, phases, dir);
}

}  // namespace bragg
