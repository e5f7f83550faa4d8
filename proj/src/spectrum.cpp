#include "bragg/spectrum.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bragg {

Spectrum instantaneous_spectrum(const TridiagonalH& h, bool with_vectors)
{
    const auto n = static_cast<Eigen::Index>(h.size());
    Spectrum out;
    if (n == 0) return out;

    Eigen::VectorXd diag(n);
    Eigen::VectorXd sub(std::max<Eigen::Index>(n - 1, 0));
    std::vector<cplx> gauge(static_cast<std::size_t>(n));
    gauge[0] = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) diag[j] = h.diag[j];
    for (Eigen::Index j = 0; j + 1 < n; ++j) {
        const cplx o = h.offdiag[j];
        const double mag = std::abs(o);
        sub[j] = mag;
        gauge[j + 1] = gauge[j] * (mag > 0.0 ? o / mag : cplx(1.0));
    }

    // The tridiagonal QL iteration in Eigen does not rescale its input and can
    // stall on exactly degenerate spectra of unscaled matrices; the dense path
    // scales first, so do the same here.
    double scale = std::max(diag.cwiseAbs().maxCoeff(), n > 1 ? sub.maxCoeff() : 0.0);
    if (!(scale > 0.0)) scale = 1.0;
    diag /= scale;
    sub /= scale;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw std::runtime_error("tridiagonal eigensolver did not converge");

    out.eigenvalues.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
    for (double& e : out.eigenvalues) e *= scale;
    if (with_vectors) {
        const Eigen::MatrixXd& v = solver.eigenvectors();
        out.vectors.assign(static_cast<std::size_t>(n), std::vector<cplx>(static_cast<std::size_t>(n)));
        for (Eigen::Index k = 0; k < n; ++k)
            for (Eigen::Index j = 0; j < n; ++j) out.vectors[k][j] = gauge[j] * v(j, k);
    }
    return out;
}

LadderConfig spectral_config(const LadderConfig& cfg, std::size_t pulse_index)
{
    LadderConfig s = cfg;
    s.frame = Frame::Rotating;
    if (cfg.mode == Mode::Splitter) {
        s.mode = Mode::Mirror;
        s.pulses = {cfg.pulses.at(pulse_index)};
    }
    return s;
}

double predicted_crossing_time(const ChirpProfile& chirp, int n, double q)
{
    if (chirp.slope() == 0.0) throw std::invalid_argument("chirp rate must be nonzero");
    return chirp.t_c + (chirp.delta0 - (2.0 * n + 1.0 + q)) / chirp.slope();
}

namespace {

double lowest_gap(const LadderConfig& cfg, double t, TridiagonalH& h)
{
    hamiltonian_into(cfg, t, h);
    const Spectrum s = instantaneous_spectrum(h);
    return s.eigenvalues.size() > 1 ? s.eigenvalues[1] - s.eigenvalues[0] : 0.0;
}

template <class F>
double golden_section_min(F f, double a, double b, double tol)
{
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

std::pair<int, int> lowest_diabatic_pair(const TridiagonalH& h, int n_max)
{
    std::size_t i0 = 0, i1 = 1;
    if (h.diag[i1] < h.diag[i0]) std::swap(i0, i1);
    for (std::size_t j = 2; j < h.diag.size(); ++j) {
        if (h.diag[j] < h.diag[i0]) {
            i1 = i0;
            i0 = j;
        } else if (h.diag[j] < h.diag[i1]) {
            i1 = j;
        }
    }
    const int a = static_cast<int>(i0) - n_max, b = static_cast<int>(i1) - n_max;
    return {std::min(a, b), std::max(a, b)};
}

}  // namespace

std::vector<CrossingRecord> locate_crossings(const LadderConfig& cfg, std::pair<double, double> window)
{
    cfg.validate();
    std::vector<CrossingRecord> all;
    if (!(window.second > window.first)) return all;

    for (std::size_t p = 0; p < cfg.pulses.size(); ++p) {
        const LadderConfig sc = spectral_config(cfg, p);
        const ChirpProfile& chirp = sc.pulses[0].chirp;
        const double alpha = std::abs(chirp.slope());
        if (alpha == 0.0) throw std::invalid_argument("chirp rate must be nonzero");

        const double spacing = 2.0 / alpha;
        const double h = spacing / 50.0;
        const auto samples = static_cast<std::size_t>(std::ceil((window.second - window.first) / h)) + 1;
        const double step = (window.second - window.first) / static_cast<double>(samples - 1);

        TridiagonalH hm;
        std::vector<double> g(samples);
        for (std::size_t i = 0; i < samples; ++i) g[i] = lowest_gap(sc, window.first + step * i, hm);

        std::vector<CrossingRecord> recs;
        for (std::size_t i = 1; i + 1 < samples; ++i) {
            if (!(g[i] < g[i - 1] && g[i] <= g[i + 1])) continue;
            const double a = window.first + step * (i - 1), b = window.first + step * (i + 1);
            const double t = golden_section_min([&](double x) { return lowest_gap(sc, x, hm); }, a, b, 1e-6);
            CrossingRecord r;
            r.t_cross = t;
            r.gap = lowest_gap(sc, t, hm);
            r.pair = lowest_diabatic_pair(hm, sc.n_max);
            r.t_lz = rabi(sc.pulses[0].envelope, t) / alpha;
            r.pulse = p;
            recs.push_back(r);
        }
        for (std::size_t k = 0; k < recs.size(); ++k)
            recs[k].dt_spacing = k + 1 < recs.size() ? recs[k + 1].t_cross - recs[k].t_cross : spacing;
        all.insert(all.end(), recs.begin(), recs.end());
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const CrossingRecord& a, const CrossingRecord& b) { return a.t_cross < b.t_cross; });
    return all;
}

std::vector<AdiabaticityEntry> adiabaticity_report(const LadderConfig& cfg)
{
    std::vector<AdiabaticityEntry> out;
    for (const auto& c : locate_crossings(cfg, {0.0, cfg.pulse_end()})) {
        AdiabaticityEntry e;
        e.crossing = c;
        e.ratio = c.dt_spacing > 0.0 ? c.t_lz / c.dt_spacing : 0.0;
        e.flagged = e.ratio >= 1.0;
        out.push_back(e);
    }
    return out;
}

namespace {

constexpr double kMinOverlap = 0.9;
constexpr int kMaxRefineDepth = 10;

struct TrackState {
    std::vector<cplx> vec;
    double energy = 0.0;
};

double overlap(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    cplx s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += std::conj(a[j]) * b[j];
    return std::abs(s);
}

// Advances `cur` from t0 to t1, bisecting when the best overlap is ambiguous.
double follow(const LadderConfig& sc, TrackState& cur, double t0, double t1, int depth, TridiagonalH& h)
{
    hamiltonian_into(sc, t1, h);
    const Spectrum s = instantaneous_spectrum(h, true);
    std::size_t best = 0;
    double best_ov = -1.0;
    for (std::size_t k = 0; k < s.vectors.size(); ++k) {
        const double ov = overlap(cur.vec, s.vectors[k]);
        if (ov > best_ov) {
            best_ov = ov;
            best = k;
        }
    }
    if (best_ov < kMinOverlap) {
        if (depth >= kMaxRefineDepth) {
            std::ostringstream os;
            os << "adiabatic tracking lost the level between t = " << t0 << " and " << t1 << " (best overlap "
               << best_ov << ")";
            throw TrackingError(os.str());
        }
        const double mid = 0.5 * (t0 + t1);
        const double m1 = follow(sc, cur, t0, mid, depth + 1, h);
        const double m2 = follow(sc, cur, mid, t1, depth + 1, h);
        return std::min(m1, m2);
    }
    cur.vec = s.vectors[best];
    cur.energy = s.eigenvalues[best];
    return best_ov;
}

int dominant_label(const std::vector<cplx>& v, int n_max)
{
    std::size_t best = 0;
    for (std::size_t j = 1; j < v.size(); ++j)
        if (std::norm(v[j]) > std::norm(v[best])) best = j;
    return static_cast<int>(best) - n_max;
}

}  // namespace

AdiabaticTrack adiabatic_track(const LadderConfig& cfg, std::pair<double, double> window, int level_index,
                               std::size_t samples)
{
    cfg.validate();
    if (!(window.second > window.first)) throw std::invalid_argument("tracking window must be increasing");
    const LadderConfig sc = spectral_config(cfg, 0);
    if (level_index < 0 || static_cast<std::size_t>(level_index) >= sc.dimension())
        throw std::invalid_argument("level index out of range");
    if (samples == 0) {
        const double h = 2.0 / std::abs(sc.pulses[0].chirp.slope()) / 50.0;
        samples = static_cast<std::size_t>(std::ceil((window.second - window.first) / h)) + 1;
    }
    if (samples < 2) throw std::invalid_argument("tracking needs at least two samples");

    TridiagonalH h;
    hamiltonian_into(sc, window.first, h);
    const Spectrum s0 = instantaneous_spectrum(h, true);
    TrackState cur{s0.vectors[static_cast<std::size_t>(level_index)], s0.eigenvalues[static_cast<std::size_t>(level_index)]};

    AdiabaticTrack tr;
    const double step = (window.second - window.first) / static_cast<double>(samples - 1);
    tr.times.push_back(window.first);
    tr.energies.push_back(cur.energy);
    tr.dominant.push_back(dominant_label(cur.vec, sc.n_max));
    for (std::size_t i = 1; i < samples; ++i) {
        const double t0 = window.first + step * (i - 1);
        const double t1 = i + 1 == samples ? window.second : window.first + step * i;
        tr.min_overlap = std::min(tr.min_overlap, follow(sc, cur, t0, t1, 0, h));
        tr.times.push_back(t1);
        tr.energies.push_back(cur.energy);
        tr.dominant.push_back(dominant_label(cur.vec, sc.n_max));
    }
    tr.start_label = tr.dominant.front();
    tr.end_label = tr.dominant.back();
    return tr;
}

}  // namespace bragg
