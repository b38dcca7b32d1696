#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twinhet/current_frame.hpp"
#include "twinhet/twinbeam.hpp"

namespace twinhet {

struct SamplerSpec {
    double grid_halfwidth_sigmas = 6.0;
    int nodes_per_axis = 201;
    std::uint64_t seed = 0;
    void validate() const;
};

// Counter-based generator: the n-th draw of stream s is a pure function of
// (seed, s, n), so streams split without coordination.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}
    std::uint64_t next();
    double uniform();  // [0, 1)
    CounterRng split(std::uint64_t stream) const { return CounterRng(seed_, stream); }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

struct MeasurementRecord {
    std::vector<HeterodyneOutcome> outcomes;
    std::vector<double> purities;
    DetectorParams params;
    std::uint64_t seed;
    int frame_cutoff = 0;
    double frame_dropped_mass = 0.0;
    std::vector<std::string> warnings;
};

// Default frame cutoff for k successive reductions. The posterior Z spread
// shrinks like delta_sq / (k + 1), and the node spacing has to follow it:
// K = max(2 n_max, 8 (k + 1) / ideal delta_sq). Clamped at 2000 for pure
// sequences and, for eta < 1 (side^4 densities), at what fits the memory cap;
// a clamp is reported through `clamped`.
int sequence_frame_cutoff(int n_max, const DetectorParams& det, int k, bool* clamped = nullptr);

struct SensitivityPoint {
    double n_bar;
    double lambda;
    double w_mod_sq;
    double delta_phi;
    double product;
    // diagnostics: total photons of the optimal state (closed form and numeric),
    // truncation used and its boundary mass
    double n_bar_exact = 0.0;
    double n_bar_numeric = 0.0;
    int n_max = 0;
    double tail_mass = 0.0;
};

struct TruncationPolicy {
    int extra = 20;            // n_max = ceil(2 n_bar) + extra
    double tail_bound = 1e-6;  // boundary mass that must not be exceeded
    int step = 20;             // growth while the bound fails
    int max_n_max = 400;
    int n_max_for(double n_bar) const { return static_cast<int>(std::ceil(2.0 * n_bar)) + extra; }
};

// Outcome grid: rectangle centered on the centroid, half-width in units of
// the per-axis outcome standard deviation.
struct DensityGrid {
    RVector xs;
    RVector ys;
    RMatrix values;  // values(a, b) = P(xs[a] + i ys[b])
    double captured_mass;
};

DensityGrid outcome_grid(const CurrentFrame& f, const FrameState& s, const DetectorParams& det,
                         const SamplerSpec& spec);

// 2-D inverse CDF on the grid, bilinear inside each cell. The density field
// is the bilinear interpolant at the drawn point.
HeterodyneOutcome sample_from_grid(const DensityGrid& g, CounterRng& rng);

HeterodyneOutcome sample_outcome(const FrameState& s, const CurrentFrame& f,
                                 const DetectorParams& det, const SamplerSpec& spec,
                                 CounterRng& rng);
HeterodyneOutcome sample_outcome(const DensityOperator& rho, const DetectorParams& det,
                                 const SamplerSpec& spec, CounterRng& rng);

// Sample then reduce, k times. frame_cutoff < 0 picks sequence_frame_cutoff.
MeasurementRecord run_sequence(const DensityOperator& rho0, int k, const DetectorParams& det,
                               const SamplerSpec& spec, int frame_cutoff = -1,
                               const QuadratureGrid& quad = {});
MeasurementRecord run_sequence(const KetState& psi0, int k, const DetectorParams& det,
                               const SamplerSpec& spec, int frame_cutoff = -1,
                               const QuadratureGrid& quad = {});

// Circular rms of the phase about theta, wrapped to (theta - pi, theta + pi].
double phase_rms(cplx w, double sigma_sq, double theta, int intervals = 1 << 16);

std::vector<SensitivityPoint> sensitivity_sweep(const std::vector<double>& n_bars, double eta,
                                                const TruncationPolicy& policy = {},
                                                const SamplerSpec& spec = {});

}  // namespace twinhet
