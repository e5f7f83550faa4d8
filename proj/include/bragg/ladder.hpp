#pragma once

// Momentum-ladder model of a two-level atom driven by chirped standing waves.
//
// Conventions: frequencies are in units of the two-photon recoil frequency
// omega_k, times in 1/omega_k, momenta in hbar*k. Ladder state n carries
// momentum 2n hbar k (+ q hbar k for a quasi-momentum offset q).

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bragg {

using cplx = std::complex<double>;

enum class RampShape { SinSquared, Linear };
enum class Mode { Mirror, Splitter };
enum class Frame { Bare, Rotating };

std::string to_string(RampShape s);
std::string to_string(Mode m);
std::string to_string(Frame f);
RampShape ramp_shape_from_string(const std::string& s);
Mode mode_from_string(const std::string& s);
Frame frame_from_string(const std::string& s);

/// Ramp / plateau / ramp envelope switched on at `start`, scaled by the peak
/// effective Rabi frequency.
class PulseEnvelope {
public:
    PulseEnvelope() = default;
    PulseEnvelope(double peak, double ramp_up, double plateau, double ramp_down,
                  RampShape shape = RampShape::SinSquared, double start = 0.0);

    double peak() const { return peak_; }
    double ramp_up() const { return ramp_up_; }
    double plateau() const { return plateau_; }
    double ramp_down() const { return ramp_down_; }
    RampShape shape() const { return shape_; }
    double start() const { return start_; }

    double duration() const { return ramp_up_ + plateau_ + ramp_down_; }
    double end() const { return start_ + duration(); }
    double plateau_start() const { return start_ + ramp_up_; }
    double plateau_end() const { return start_ + ramp_up_ + plateau_; }

    bool operator==(const PulseEnvelope&) const = default;

private:
    double peak_ = 0.7;
    double ramp_up_ = 20.0;
    double plateau_ = 480.0;
    double ramp_down_ = 20.0;
    RampShape shape_ = RampShape::SinSquared;
    double start_ = 0.0;
};

/// Normalized envelope f(t) in [0, 1].
double envelope_value(const PulseEnvelope& env, double t);

/// Effective Rabi frequency peak * f(t).
inline double rabi(const PulseEnvelope& env, double t) { return env.peak() * envelope_value(env, t); }

/// Sign of the chirp slope for which a positive chirp rate climbs the
/// positive momentum branch. Determined once from the quasi-energy ladder.
int positive_climbing_sign();

/// Linear chirp of the two-photon detuning:
///   phidot(t) = sign * alpha * (t - t_c) - delta0,  phi(0) = 0.
struct ChirpProfile {
    double alpha = 0.1;
    double t_c = 10.0;
    double delta0 = 0.0;
    int sign = positive_climbing_sign();

    double slope() const { return sign * alpha; }
    bool operator==(const ChirpProfile&) const = default;
};

double chirp_rate(const ChirpProfile& ch, double t);
double chirp_phase(const ChirpProfile& ch, double t);

/// +1 if the chirp sweeps population up the positive branch, -1 otherwise.
int climb_direction(const ChirpProfile& ch);

struct Pulse {
    PulseEnvelope envelope;
    ChirpProfile chirp;
    bool operator==(const Pulse&) const = default;
};

struct LadderConfig {
    int n_max = 33;
    Mode mode = Mode::Mirror;
    double q = 0.0;
    Frame frame = Frame::Rotating;
    std::vector<Pulse> pulses{Pulse{}};

    /// Throws std::invalid_argument on a malformed configuration.
    void validate() const;
    std::size_t dimension() const { return static_cast<std::size_t>(2 * n_max + 1); }
    double pulse_end() const;

    bool operator==(const LadderConfig&) const = default;
};

/// Complex amplitudes a_n, n = -N..N.
class StateVector {
public:
    StateVector() = default;
    explicit StateVector(int n_max, double time = 0.0);

    /// a_0 = 1.
    static StateVector ground(int n_max, double time = 0.0);

    int n_max() const { return n_max_; }
    std::size_t size() const { return amps_.size(); }
    double time() const { return time_; }
    void set_time(double t) { time_ = t; }

    cplx& operator[](int n) { return amps_[index(n)]; }
    const cplx& operator[](int n) const { return amps_[index(n)]; }

    std::vector<cplx>& amplitudes() { return amps_; }
    const std::vector<cplx>& amplitudes() const { return amps_; }

    double norm() const;

private:
    std::size_t index(int n) const;

    int n_max_ = 0;
    double time_ = 0.0;
    std::vector<cplx> amps_;
};

/// Hermitian tridiagonal matrix. offdiag[j] is the element H[j+1][j]
/// (coupling from n into n+1, array index j = n + N); H[j][j+1] is its
/// complex conjugate.
struct TridiagonalH {
    std::vector<double> diag;
    std::vector<cplx> offdiag;

    std::size_t size() const { return diag.size(); }
    /// y = H x
    void apply(const std::vector<cplx>& x, std::vector<cplx>& y) const;
};

/// E_n / hbar = (2n + q)^2 / 4 + n * phidot.
double quasi_energy(int n, double phidot, double q);

TridiagonalH mirror_hamiltonian(const LadderConfig& cfg, double t);

struct SplitterCouplings {
    cplx omega_minus;  // upper link element in the branch co-rotating with chirp 1
    cplx omega_plus;   // upper link element in the branch co-rotating with chirp 2
};

/// Branch couplings with delta'_23(t) = phi_2(t) - phi_1(t).
SplitterCouplings splitter_couplings(const std::vector<Pulse>& pulses, double t);

/// Bare-frame coupling Omega_1(t) e^{i phi_1} + Omega_2(t) e^{i phi_2}.
cplx splitter_bare_coupling(const std::vector<Pulse>& pulses, double t);

/// Branch (+1 / -1) co-rotating with chirp 1 in the splitter rotating frame;
/// chirp 2 takes the other branch.
int splitter_chirp1_branch(const std::vector<Pulse>& pulses);

TridiagonalH splitter_hamiltonian(const LadderConfig& cfg, double t);

/// Dispatches on cfg.mode.
TridiagonalH hamiltonian(const LadderConfig& cfg, double t);
void hamiltonian_into(const LadderConfig& cfg, double t, TridiagonalH& out);

/// Phases theta_n(t) with bare amplitude = rotating amplitude * e^{i theta_n}.
std::vector<double> frame_phases(const LadderConfig& cfg, double t);

}  // namespace bragg
