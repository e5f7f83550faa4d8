#include <doctest.h>

#include "bragg/ladder.hpp"

#include <cmath>
#include <random>

using namespace bragg;

TEST_CASE("quasi-energy ladder")
{
    CHECK(quasi_energy(0, 3.0, 0.0) == 0.0);
    CHECK(quasi_energy(1, 0.0, 0.0) == doctest::Approx(1.0));
    CHECK(quasi_energy(-2, 0.5, 0.0) == doctest::Approx(4.0 - 1.0));
    CHECK(quasi_energy(25, 0.0, 0.0) == 625.0);
    CHECK(quasi_energy(1, -1.0, 0.0) == 0.0);
    CHECK(quasi_energy(3, -1.0, 0.5) == doctest::Approx(6.5 * 6.5 / 4.0 - 3.0));

    // E_{n+1} - E_n = 2n + 1 + q + phidot: adjacent levels cross at phidot = -(2n + 1 + q)
    for (int n = -5; n <= 5; ++n)
        for (double q : {0.0, 0.3, -0.7}) {
            const double phidot = -(2.0 * n + 1.0 + q);
            CHECK(quasi_energy(n + 1, phidot, q) == doctest::Approx(quasi_energy(n, phidot, q)).epsilon(1e-12));
        }
}

TEST_CASE("chirp phase differentiates to the chirp rate")
{
    for (int sign : {-1, 1}) {
        const ChirpProfile ch{0.1, 10.0, 0.3, sign};
        CHECK(chirp_phase(ch, 0.0) == 0.0);
        for (double t : {0.0, 3.7, 10.0, 55.0, 512.0}) {
            const double h = 1e-4;
            const double fd = (chirp_phase(ch, t + h) - chirp_phase(ch, t - h)) / (2 * h);
            CHECK(fd == doctest::Approx(chirp_rate(ch, t)).epsilon(1e-8));
        }
        CHECK(chirp_rate(ch, 10.0) == doctest::Approx(-0.3));
    }
}

TEST_CASE("positive chirp climbs the positive branch")
{
    // With phidot = sign * alpha (t - t_c), the (n, n+1) resonance at
    // phidot = -(2n + 1) moves to larger n as time goes on only for sign -1.
    CHECK(positive_climbing_sign() == -1);
    const ChirpProfile up{0.1, 10.0, 0.0, positive_climbing_sign()};
    CHECK(climb_direction(up) == 1);
    const ChirpProfile down{0.1, 10.0, 0.0, -positive_climbing_sign()};
    CHECK(climb_direction(down) == -1);
}

TEST_CASE("envelope shape")
{
    const PulseEnvelope env(0.7, 20.0, 100.0, 10.0, RampShape::SinSquared, 5.0);
    CHECK(env.start() == 5.0);
    CHECK(env.end() == 135.0);
    CHECK(envelope_value(env, 4.9) == 0.0);
    CHECK(envelope_value(env, 5.0) == 0.0);
    CHECK(envelope_value(env, 15.0) == doctest::Approx(0.5));
    CHECK(envelope_value(env, 25.0) == doctest::Approx(1.0));
    CHECK(envelope_value(env, 80.0) == 1.0);
    CHECK(envelope_value(env, 130.0) == doctest::Approx(0.5));
    CHECK(envelope_value(env, 136.0) == 0.0);
    CHECK(rabi(env, 80.0) == doctest::Approx(0.7));

    const PulseEnvelope lin(1.0, 10.0, 0.0, 10.0, RampShape::Linear);
    CHECK(envelope_value(lin, 2.5) == doctest::Approx(0.25));
    CHECK(envelope_value(lin, 17.5) == doctest::Approx(0.25));

    CHECK_THROWS_AS(PulseEnvelope(-0.1, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(PulseEnvelope(0.5, -1, 1, 1), std::invalid_argument);
}

TEST_CASE("names round trip")
{
    for (auto s : {RampShape::SinSquared, RampShape::Linear}) CHECK(ramp_shape_from_string(to_string(s)) == s);
    for (auto m : {Mode::Mirror, Mode::Splitter}) CHECK(mode_from_string(to_string(m)) == m);
    for (auto f : {Frame::Bare, Frame::Rotating}) CHECK(frame_from_string(to_string(f)) == f);
    CHECK_THROWS_AS(mode_from_string("lens"), std::invalid_argument);
}

TEST_CASE("state vector indexing")
{
    StateVector s = StateVector::ground(3);
    CHECK(s.size() == 7);
    CHECK(s[0] == cplx(1.0));
    CHECK(s.norm() == 1.0);
    s[-3] = cplx(0.0, 1.0);
    CHECK(s.amplitudes().front() == cplx(0.0, 1.0));
    CHECK_THROWS(s[4]);
}

namespace {

LadderConfig mirror(Frame f)
{
    LadderConfig c;
    c.n_max = 6;
    c.frame = f;
    c.pulses = {Pulse{PulseEnvelope(0.7, 10.0, 30.0, 10.0), ChirpProfile{0.1, 10.0, 0.2, -1}}};
    return c;
}

LadderConfig splitter(Frame f, double omega2 = 0.5)
{
    LadderConfig c;
    c.n_max = 6;
    c.mode = Mode::Splitter;
    c.frame = f;
    c.pulses = {Pulse{PulseEnvelope(0.7, 10.0, 30.0, 10.0), ChirpProfile{0.1, 20.0, 0.0, -1}},
                Pulse{PulseEnvelope(omega2, 10.0, 30.0, 10.0), ChirpProfile{0.1, 20.0, 0.0, +1}}};
    return c;
}

}  // namespace

TEST_CASE("hamiltonian layout")
{
    const LadderConfig c = mirror(Frame::Rotating);
    const TridiagonalH h = hamiltonian(c, 25.0);
    REQUIRE(h.size() == 13);
    REQUIRE(h.offdiag.size() == 12);
    const double phidot = chirp_rate(c.pulses[0].chirp, 25.0);
    for (int n = -6; n <= 6; ++n) CHECK(h.diag[n + 6] == doctest::Approx(quasi_energy(n, phidot, 0.0)));
    for (auto o : h.offdiag) CHECK(o == cplx(-0.7));

    // the matrix applied by TridiagonalH::apply is Hermitian: <x, H y> = <H x, y>
    const TridiagonalH hb = hamiltonian(splitter(Frame::Rotating), 31.3);
    std::mt19937 rng(7);
    std::normal_distribution<double> g;
    std::vector<cplx> x(13), y(13), hx, hy;
    for (std::size_t i = 0; i < 13; ++i) x[i] = {g(rng), g(rng)}, y[i] = {g(rng), g(rng)};
    hb.apply(x, hx);
    hb.apply(y, hy);
    cplx l = 0, r = 0;
    for (std::size_t i = 0; i < 13; ++i) l += std::conj(x[i]) * hy[i], r += std::conj(hx[i]) * y[i];
    CHECK(std::abs(l - r) < 1e-12);
}

TEST_CASE("bare and rotating mirror frames differ by the phase transform")
{
    // H_bare = U H_rot U^dag + dU/dt U^dag terms: check the coupling phases.
    const LadderConfig rot = mirror(Frame::Rotating), bare = mirror(Frame::Bare);
    const double t = 17.0;
    const auto th = frame_phases(rot, t);
    const TridiagonalH hr = hamiltonian(rot, t), hb = hamiltonian(bare, t);
    for (std::size_t j = 0; j + 1 < hr.size(); ++j) {
        const cplx rotated = hr.offdiag[j] * std::polar(1.0, th[j + 1] - th[j]);
        CHECK(std::abs(rotated - hb.offdiag[j]) < 1e-12);
    }
}

TEST_CASE("splitter with one chirp switched off is the mirror")
{
    LadderConfig s = splitter(Frame::Bare, 0.0);
    LadderConfig m = mirror(Frame::Bare);
    m.pulses[0] = s.pulses[0];
    for (double t : {0.0, 5.0, 22.0, 49.0}) {
        const TridiagonalH a = hamiltonian(s, t), b = hamiltonian(m, t);
        for (std::size_t j = 0; j < a.size(); ++j) CHECK(a.diag[j] == doctest::Approx(b.diag[j]));
        for (std::size_t j = 0; j + 1 < a.size(); ++j) CHECK(std::abs(a.offdiag[j] - b.offdiag[j]) < 1e-14);
    }
}

TEST_CASE("splitter couplings")
{
    const LadderConfig s = splitter(Frame::Rotating);
    const double t = 33.0;
    const auto c = splitter_couplings(s.pulses, t);
    const double d = chirp_phase(s.pulses[1].chirp, t) - chirp_phase(s.pulses[0].chirp, t);
    const double o1 = rabi(s.pulses[0].envelope, t), o2 = rabi(s.pulses[1].envelope, t);
    CHECK(std::abs(c.omega_minus - (o1 + o2 * std::polar(1.0, -d))) < 1e-14);
    CHECK(std::abs(c.omega_plus - (o1 * std::polar(1.0, d) + o2)) < 1e-14);
    CHECK(splitter_chirp1_branch(s.pulses) == 1);
}

TEST_CASE("config validation")
{
    LadderConfig c = mirror(Frame::Rotating);
    CHECK_NOTHROW(c.validate());
    c.n_max = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = mirror(Frame::Rotating);
    c.q = 1.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = mirror(Frame::Rotating);
    c.pulses.push_back(c.pulses[0]);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    LadderConfig s = splitter(Frame::Rotating);
    s.pulses.pop_back();
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    CHECK(mirror(Frame::Rotating).pulse_end() == 50.0);
}

TEST_CASE("symmetric splitter")
{
    LadderConfig s = splitter(Frame::Bare, 0.7);
    for (double t : {3.0, 20.0, 27.5, 41.0}) {
        const double phi1 = chirp_phase(s.pulses[0].chirp, t);
        const cplx bare = splitter_bare_coupling(s.pulses, t);
        CHECK(std::abs(bare - 2.0 * rabi(s.pulses[0].envelope, t) * std::cos(phi1)) < 1e-13);

        // the bare matrix commutes with n -> -n
        const TridiagonalH h = hamiltonian(s, t);
        const std::size_t d = h.size();
        for (std::size_t j = 0; j < d; ++j) CHECK(h.diag[j] == h.diag[d - 1 - j]);
        for (std::size_t j = 0; j + 1 < d; ++j) CHECK(std::abs(h.offdiag[j] - std::conj(h.offdiag[d - 2 - j])) < 1e-14);
    }
    // equal envelopes and zero phase difference: both couplings are 2 Omega
    LadderConfig z = splitter(Frame::Rotating, 0.7);
    z.pulses[1].chirp = z.pulses[0].chirp;
    const auto c = splitter_couplings(z.pulses, 25.0);
    CHECK(std::abs(c.omega_minus - 1.4) < 1e-14);
    CHECK(std::abs(c.omega_plus - 1.4) < 1e-14);
    CHECK(std::abs(splitter_couplings(s.pulses, 25.0).omega_minus) ==
          doctest::Approx(std::abs(splitter_couplings(s.pulses, 25.0).omega_plus)));
}
