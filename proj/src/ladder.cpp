#include "bragg/ladder.hpp"

#include <cmath>
#include <numbers>

namespace bragg {

namespace {

constexpr double kPi = std::numbers::pi;

double ramp(RampShape shape, double x)
{
    // x in [0, 1]
    if (shape == RampShape::Linear) return x;
    const double s = std::sin(0.5 * kPi * x);
    return s * s;
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

std::string to_string(RampShape s) { return s == RampShape::Linear ? "linear" : "sin2"; }
std::string to_string(Mode m) { return m == Mode::Mirror ? "mirror" : "splitter"; }
std::string to_string(Frame f) { return f == Frame::Bare ? "bare" : "rotating"; }

RampShape ramp_shape_from_string(const std::string& s)
{
    if (s == "sin2") return RampShape::SinSquared;
    if (s == "linear") return RampShape::Linear;
    throw std::invalid_argument("unknown ramp shape '" + s + "' (expected sin2 | linear)");
}

Mode mode_from_string(const std::string& s)
{
    if (s == "mirror") return Mode::Mirror;
    if (s == "splitter") return Mode::Splitter;
    throw std::invalid_argument("unknown mode '" + s + "' (expected mirror | splitter)");
}

Frame frame_from_string(const std::string& s)
{
    if (s == "bare") return Frame::Bare;
    if (s == "rotating") return Frame::Rotating;
    throw std::invalid_argument("unknown frame '" + s + "' (expected bare | rotating)");
}

PulseEnvelope::PulseEnvelope(double peak, double ramp_up, double plateau, double ramp_down,
                             RampShape shape, double start)
    : peak_(peak), ramp_up_(ramp_up), plateau_(plateau), ramp_down_(ramp_down), shape_(shape), start_(start)
{
    if (!finite(peak) || !finite(ramp_up) || !finite(plateau) || !finite(ramp_down) || !finite(start))
        throw std::invalid_argument("pulse envelope parameters must be finite");
    if (ramp_up < 0 || plateau < 0 || ramp_down < 0)
        throw std::invalid_argument("pulse envelope durations must be non-negative");
    if (peak < 0) throw std::invalid_argument("peak Rabi frequency must be non-negative");
}

double envelope_value(const PulseEnvelope& env, double t)
{
    if (t < env.start() || t > env.end()) return 0.0;
    if (t < env.plateau_start()) return ramp(env.shape(), (t - env.start()) / env.ramp_up());
    if (t <= env.plateau_end()) return 1.0;
    return ramp(env.shape(), (env.end() - t) / env.ramp_down());
}

int positive_climbing_sign()
{
    // The first adjacent degeneracy E_n = E_{n+1} reached after the chirp
    // zero t_c must involve n = 0 -> n = 1 for a positive rate to climb the
    // positive branch. Probe both slopes on the quasi-energy ladder itself.
    static const int sign = [] {
        const auto gap = [](int n, double phidot) {
            return quasi_energy(n + 1, phidot, 0.0) - quasi_energy(n, phidot, 0.0);
        };
        for (int s : {+1, -1}) {
            for (int i = 1; i < 4000; ++i) {
                const double phidot = s * 1e-3 * i;
                if (gap(0, phidot) * gap(0, 0.0) <= 0.0) return s;
                if (gap(-1, phidot) * gap(-1, 0.0) <= 0.0) break;
            }
        }
        throw std::logic_error("quasi-energy ladder has no adjacent crossing");
    }();
    return sign;
}

double chirp_rate(const ChirpProfile& ch, double t) { return ch.slope() * (t - ch.t_c) - ch.delta0; }

double chirp_phase(const ChirpProfile& ch, double t)
{
    return ch.slope() * (0.5 * t * t - ch.t_c * t) - ch.delta0 * t;
}

int climb_direction(const ChirpProfile& ch)
{
    // Adjacent crossings sit at phidot = -(2n + 1): a decreasing phidot
    // reaches them in order of increasing n.
    return ch.slope() < 0.0 ? +1 : -1;
}

void LadderConfig::validate() const
{
    if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
    if (!finite(q) || std::abs(q) > 1.0) throw std::invalid_argument("quasi-momentum q must satisfy |q| <= 1");
    const std::size_t want = mode == Mode::Mirror ? 1 : 2;
    if (pulses.size() != want)
        throw std::invalid_argument(to_string(mode) + " mode requires exactly " + std::to_string(want) +
                                    " pulse(s), got " + std::to_string(pulses.size()));
    for (const auto& p : pulses) {
        if (!finite(p.chirp.alpha) || !finite(p.chirp.t_c) || !finite(p.chirp.delta0))
            throw std::invalid_argument("chirp parameters must be finite");
        if (p.chirp.sign != 1 && p.chirp.sign != -1) throw std::invalid_argument("chirp sign must be +1 or -1");
    }
}

double LadderConfig::pulse_end() const
{
    double end = 0.0;
    for (const auto& p : pulses) end = std::max(end, p.envelope.end());
    return end;
}

StateVector::StateVector(int n_max, double time)
    : n_max_(n_max), time_(time), amps_(static_cast<std::size_t>(2 * n_max + 1))
{
    if (n_max < 0) throw std::invalid_argument("n_max must be non-negative");
}

StateVector StateVector::ground(int n_max, double time)
{
    StateVector s(n_max, time);
    s[0] = 1.0;
    return s;
}

std::size_t StateVector::index(int n) const
{
    if (n < -n_max_ || n > n_max_)
        throw std::out_of_range("ladder index " + std::to_string(n) + " outside [-" + std::to_string(n_max_) +
                                ", " + std::to_string(n_max_) + "]");
    return static_cast<std::size_t>(n + n_max_);
}

double StateVector::norm() const
{
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return s;
}

void TridiagonalH::apply(const std::vector<cplx>& x, std::vector<cplx>& y) const
{
    const std::size_t n = diag.size();
    y.resize(n);
    for (std::size_t j = 0; j < n; ++j) y[j] = diag[j] * x[j];
    for (std::size_t j = 0; j + 1 < n; ++j) {
        y[j + 1] += offdiag[j] * x[j];
        y[j] += std::conj(offdiag[j]) * x[j + 1];
    }
}

double quasi_energy(int n, double phidot, double q)
{
    const double p = 2.0 * n + q;
    return 0.25 * p * p + n * phidot;
}

namespace {

void assemble_mirror(const LadderConfig& cfg, double t, TridiagonalH& h)
{
    const Pulse& p = cfg.pulses.at(0);
    const int N = cfg.n_max;
    const double omega = rabi(p.envelope, t);

    h.diag.resize(cfg.dimension());
    h.offdiag.resize(cfg.dimension() - 1);
    if (cfg.frame == Frame::Rotating) {
        const double phidot = chirp_rate(p.chirp, t);
        for (int n = -N; n <= N; ++n) h.diag[n + N] = quasi_energy(n, phidot, cfg.q);
        for (auto& o : h.offdiag) o = -omega;
    } else {
        for (int n = -N; n <= N; ++n) h.diag[n + N] = quasi_energy(n, 0.0, cfg.q);
        const cplx c = -omega * std::polar(1.0, chirp_phase(p.chirp, t));
        for (auto& o : h.offdiag) o = c;
    }
}

void assemble_splitter(const LadderConfig& cfg, double t, TridiagonalH& h);

}  // namespace

TridiagonalH mirror_hamiltonian(const LadderConfig& cfg, double t)
{
    if (cfg.mode != Mode::Mirror) throw std::invalid_argument("mirror_hamiltonian requires mirror mode");
    TridiagonalH h;
    assemble_mirror(cfg, t, h);
    return h;
}

SplitterCouplings splitter_couplings(const std::vector<Pulse>& pulses, double t)
{
    if (pulses.size() != 2) throw std::invalid_argument("splitter_couplings requires two pulses");
    const double o1 = rabi(pulses[0].envelope, t);
    const double o2 = rabi(pulses[1].envelope, t);
    const double d23 = chirp_phase(pulses[1].chirp, t) - chirp_phase(pulses[0].chirp, t);
    const cplx e = std::polar(1.0, d23);
    return {o1 + o2 * std::conj(e), o1 * e + o2};
}

cplx splitter_bare_coupling(const std::vector<Pulse>& pulses, double t)
{
    if (pulses.size() != 2) throw std::invalid_argument("splitter_bare_coupling requires two pulses");
    return rabi(pulses[0].envelope, t) * std::polar(1.0, chirp_phase(pulses[0].chirp, t)) +
           rabi(pulses[1].envelope, t) * std::polar(1.0, chirp_phase(pulses[1].chirp, t));
}

int splitter_chirp1_branch(const std::vector<Pulse>& pulses) { return climb_direction(pulses.at(0).chirp); }

namespace {

void assemble_splitter(const LadderConfig& cfg, double t, TridiagonalH& h)
{
    const int N = cfg.n_max;
    h.diag.resize(cfg.dimension());
    h.offdiag.resize(cfg.dimension() - 1);

    if (cfg.frame == Frame::Bare) {
        for (int n = -N; n <= N; ++n) h.diag[n + N] = quasi_energy(n, 0.0, cfg.q);
        const cplx c = -splitter_bare_coupling(cfg.pulses, t);
        for (auto& o : h.offdiag) o = c;
        return;
    }

    // Each branch co-rotates with the chirp that climbs it.
    const int b1 = splitter_chirp1_branch(cfg.pulses);
    const double rate1 = chirp_rate(cfg.pulses[0].chirp, t);
    const double rate2 = chirp_rate(cfg.pulses[1].chirp, t);
    for (int n = -N; n <= N; ++n) {
        const bool on_chirp1 = n * b1 >= 0;
        h.diag[n + N] = quasi_energy(n, on_chirp1 ? rate1 : rate2, cfg.q);
    }
    const SplitterCouplings c = splitter_couplings(cfg.pulses, t);
    for (int n = -N; n < N; ++n) {
        // link (n, n+1) belongs to the branch of whichever end is nonzero
        const int far = (n >= 0) ? n + 1 : n;
        const bool on_chirp1 = far * b1 > 0;
        h.offdiag[n + N] = -std::conj(on_chirp1 ? c.omega_minus : c.omega_plus);
    }
}

}  // namespace

TridiagonalH splitter_hamiltonian(const LadderConfig& cfg, double t)
{
    if (cfg.mode != Mode::Splitter) throw std::invalid_argument("splitter_hamiltonian requires splitter mode");
    TridiagonalH h;
    assemble_splitter(cfg, t, h);
    return h;
}

TridiagonalH hamiltonian(const LadderConfig& cfg, double t)
{
    TridiagonalH h;
    hamiltonian_into(cfg, t, h);
    return h;
}

void hamiltonian_into(const LadderConfig& cfg, double t, TridiagonalH& out)
{
    if (cfg.mode == Mode::Mirror)
        assemble_mirror(cfg, t, out);
    else
        assemble_splitter(cfg, t, out);
}

std::vector<double> frame_phases(const LadderConfig& cfg, double t)
{
    const int N = cfg.n_max;
    std::vector<double> th(cfg.dimension());
    if (cfg.mode == Mode::Mirror) {
        const double phi = chirp_phase(cfg.pulses.at(0).chirp, t);
        for (int n = -N; n <= N; ++n) th[n + N] = n * phi;
        return th;
    }
    const int b1 = splitter_chirp1_branch(cfg.pulses);
    const double phi1 = chirp_phase(cfg.pulses[0].chirp, t);
    const double phi2 = chirp_phase(cfg.pulses[1].chirp, t);
    for (int n = -N; n <= N; ++n) th[n + N] = n * ((n * b1 >= 0) ? phi1 : phi2);
    return th;
}

}  // namespace bragg
