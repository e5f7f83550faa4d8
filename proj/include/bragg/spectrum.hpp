#pragma once

#include "bragg/ladder.hpp"

#include <stdexcept>
#include <utility>
#include <vector>

namespace bragg {

struct Spectrum {
    std::vector<double> eigenvalues;          // ascending
    std::vector<std::vector<cplx>> vectors;   // vectors[k] pairs with eigenvalues[k]; empty unless requested
};

/// Diagonalizes a Hermitian tridiagonal matrix. The off-diagonal phases are
/// gauged away first, leaving a real symmetric tridiagonal problem.
Spectrum instantaneous_spectrum(const TridiagonalH& h, bool with_vectors = false);

/// Dressed-state Hamiltonian used for spectral diagnostics: the rotating
/// frame of the mirror, or of one splitter chirp taken on its own.
LadderConfig spectral_config(const LadderConfig& cfg, std::size_t pulse_index = 0);

struct CrossingRecord {
    std::pair<int, int> pair;  // diabatic labels (n, n + 1)
    double t_cross = 0.0;      // time of minimum gap
    double gap = 0.0;          // minimum eigenvalue separation
    double t_lz = 0.0;         // Omega_e(t_cross) / |alpha|
    double dt_spacing = 0.0;   // time to the next crossing
    std::size_t pulse = 0;     // chirp responsible (splitter: 0 or 1)
};

/// Gap minima of the lowest adjacent pair in [window.first, window.second].
/// Coarse sampling at (2/|alpha|)/50 brackets each minimum, golden-section
/// search refines it to 1e-6. For a splitter each chirp is analysed alone.
std::vector<CrossingRecord> locate_crossings(const LadderConfig& cfg, std::pair<double, double> window);

/// Crossing time of (n, n + 1) predicted from the chirp alone.
double predicted_crossing_time(const ChirpProfile& chirp, int n, double q = 0.0);

struct AdiabaticityEntry {
    CrossingRecord crossing;
    double ratio = 0.0;  // t_lz / dt_spacing
    bool flagged = false;
};

/// Crossings over the pulse support with t_lz / spacing; ratio >= 1 is flagged.
std::vector<AdiabaticityEntry> adiabaticity_report(const LadderConfig& cfg);

class TrackingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AdiabaticTrack {
    std::vector<double> times;
    std::vector<double> energies;
    std::vector<int> dominant;    // diabatic label with largest weight, per sample
    double min_overlap = 1.0;     // smallest successive overlap accepted
    int start_label = 0;
    int end_label = 0;
};

/// Follows one adiabatic level through [window] by maximal overlap between
/// successive eigenvectors. Intervals whose best overlap falls below 0.9 are
/// bisected (up to a fixed depth) before giving up with TrackingError.
AdiabaticTrack adiabatic_track(const LadderConfig& cfg, std::pair<double, double> window, int level_index,
                               std::size_t samples = 0);

}  // namespace bragg
