#include "twinhet/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "twinhet/errors.hpp"

namespace twinhet {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// t in [0,1] with CDF proportional to a t + (b - a) t^2 / 2 hitting u (a + b)/2
double invert_linear(double a, double b, double u) {
    double s = a + b;
    if (!(s > 0)) return u;
    double d = b - a;
    if (std::abs(d) < 1e-12 * s) return u;
    double t = (-a + std::sqrt(std::max(0.0, a * a + d * u * s))) / d;
    return std::clamp(t, 0.0, 1.0);
}

RVector linspace(double c, double half, int n) {
    if (n == 1) return RVector::Constant(1, c);
    return RVector::LinSpaced(n, c - half, c + half);
}

}  // namespace

void SamplerSpec::validate() const {
    if (nodes_per_axis < 21 || nodes_per_axis % 2 == 0)
        throw ValidationError("sampler: nodes_per_axis must be odd and >= 21");
    if (!(grid_halfwidth_sigmas > 0)) throw ValidationError("sampler: grid half-width must be > 0");
}

std::uint64_t CounterRng::next() {
    std::uint64_t z = seed_ ^ mix64(stream_ * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
    z += (++counter_) * 0x9E3779B97F4A7C15ULL;
    return mix64(z);
}

double CounterRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

DensityGrid outcome_grid(const CurrentFrame& f, const FrameState& s, const DetectorParams& det,
                         const SamplerSpec& spec) {
    spec.validate();
    const double dsq = det.delta_sq();
    cplx c = frame_mean(f, s);
    auto [vx, vy] = frame_outcome_variance(f, s, dsq);
    double hx = spec.grid_halfwidth_sigmas * std::sqrt(vx);
    double hy = spec.grid_halfwidth_sigmas * std::sqrt(vy);
    DensityGrid g;
    g.xs = linspace(c.real(), hx, spec.nodes_per_axis);
    g.ys = linspace(c.imag(), hy, spec.nodes_per_axis);
    g.values = frame_density_grid(f, s, g.xs, g.ys, dsq);
    g.captured_mass = frame_rectangle_mass(f, s, c.real() - hx, c.real() + hx, c.imag() - hy,
                                           c.imag() + hy, dsq);
    if (g.captured_mass < 1.0 - 1e-6)
        throw NumericalError("sampler: grid captures only " + std::to_string(g.captured_mass) +
                             " of the outcome mass");
    return g;
}

HeterodyneOutcome sample_from_grid(const DensityGrid& g, CounterRng& rng) {
    const Eigen::Index nx = g.xs.size(), ny = g.ys.size();
    if (nx < 2 || ny < 2) throw ValidationError("sampler: grid needs at least 2 nodes per axis");
    const RMatrix& v = g.values;
    std::vector<double> cum((nx - 1) * (ny - 1));
    double total = 0;
    for (Eigen::Index a = 0; a + 1 < nx; ++a)
        for (Eigen::Index b = 0; b + 1 < ny; ++b) {
            total += std::max(0.0, v(a, b) + v(a + 1, b) + v(a, b + 1) + v(a + 1, b + 1));
            cum[a * (ny - 1) + b] = total;
        }
    if (!(total > 0)) throw NumericalError("sampler: density grid is identically zero");

    double u = rng.uniform() * total;
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    if (it == cum.end()) --it;
    Eigen::Index cell = it - cum.begin();
    Eigen::Index a = cell / (ny - 1), b = cell % (ny - 1);

    double v00 = v(a, b), v10 = v(a + 1, b), v01 = v(a, b + 1), v11 = v(a + 1, b + 1);
    double t = invert_linear(v00 + v01, v10 + v11, rng.uniform());
    double lo = (1 - t) * v00 + t * v10, hi = (1 - t) * v01 + t * v11;
    double s = invert_linear(lo, hi, rng.uniform());

    double hxs = g.xs(1) - g.xs(0), hys = g.ys(1) - g.ys(0);
    cplx z(g.xs(a) + t * hxs, g.ys(b) + s * hys);
    return {z, (1 - s) * lo + s * hi};
}

HeterodyneOutcome sample_outcome(const FrameState& s, const CurrentFrame& f,
                                 const DetectorParams& det, const SamplerSpec& spec,
                                 CounterRng& rng) {
    return sample_from_grid(outcome_grid(f, s, det, spec), rng);
}

HeterodyneOutcome sample_outcome(const DensityOperator& rho, const DetectorParams& det,
                                 const SamplerSpec& spec, CounterRng& rng) {
    CurrentFrame f(frame_cutoff_for(rho.truncation().n_max(), det.delta_sq()));
    return sample_outcome(FrameState::from_fock(f, rho), f, det, spec, rng);
}

namespace {

MeasurementRecord run_frame_sequence(FrameState state, const CurrentFrame& f, int k,
                                     const DetectorParams& det, const SamplerSpec& spec,
                                     const QuadratureGrid& quad) {
    if (k < 1) throw ValidationError("run_sequence: k must be >= 1");
    spec.validate();
    MeasurementRecord rec{{}, {}, det, spec.seed, f.cutoff(), state.dropped_mass(), {}};
    CounterRng rng(spec.seed);
    for (int step = 0; step < k; ++step) {
        HeterodyneOutcome o = sample_outcome(state, f, det, spec, rng);
        FrameReduction r = frame_reduce_eta(f, state, o.z, det, quad);
        state = std::move(r.state);
        double purity = state.purity();
        if (!(purity > 0 && purity <= 1 + 1e-8))
            throw NumericalError("run_sequence: purity out of range");
        rec.outcomes.push_back(o);
        rec.purities.push_back(purity);
    }
    return rec;
}

}  // namespace

int sequence_frame_cutoff(int n_max, const DetectorParams& det, int k, bool* clamped) {
    if (k < 1) throw ValidationError("sequence_frame_cutoff: k must be >= 1");
    int want = frame_cutoff_for(n_max, det.ideal_delta_sq() / (k + 1), 8.0);
    int cap = 2000;
    if (det.eta() < 1.0) {
        // four side^4 complex matrices live at once during a lossy reduction
        double side = std::pow(static_cast<double>(memory_cap_bytes()) / (4.0 * sizeof(cplx)), 0.25);
        cap = static_cast<int>(std::floor(side)) - 1;
    }
    int k_frame = std::min(want, cap);
    if (k_frame < 2 * n_max)
        throw CapacityError("sequence_frame_cutoff: the lossy-reduction frame for n_max=" + std::to_string(n_max) +
                            " does not fit the memory cap");
    if (clamped) *clamped = k_frame < want;
    return k_frame;
}

namespace {

MeasurementRecord with_default_frame(int n_max, int k, const DetectorParams& det, int frame_cutoff,
                                     const std::function<MeasurementRecord(const CurrentFrame&)>& run) {
    bool clamped = false;
    int cut = frame_cutoff < 0 ? sequence_frame_cutoff(n_max, det, k, &clamped) : frame_cutoff;
    MeasurementRecord rec = run(CurrentFrame(cut));
    if (clamped)
        rec.warnings.push_back("frame cutoff clamped to " + std::to_string(cut) +
                               "; late steps resolve the narrowed state coarsely");
    return rec;
}

}  // namespace

MeasurementRecord run_sequence(const DensityOperator& rho0, int k, const DetectorParams& det,
                               const SamplerSpec& spec, int frame_cutoff,
                               const QuadratureGrid& quad) {
    return with_default_frame(rho0.truncation().n_max(), k, det, frame_cutoff, [&](const CurrentFrame& f) {
        return run_frame_sequence(FrameState::from_fock(f, rho0), f, k, det, spec, quad);
    });
}

MeasurementRecord run_sequence(const KetState& psi0, int k, const DetectorParams& det,
                               const SamplerSpec& spec, int frame_cutoff,
                               const QuadratureGrid& quad) {
    return with_default_frame(psi0.truncation().n_max(), k, det, frame_cutoff, [&](const CurrentFrame& f) {
        return run_frame_sequence(FrameState::from_fock(f, psi0), f, k, det, spec, quad);
    });
}

double phase_rms(cplx w, double sigma_sq, double theta, int intervals) {
    if (intervals < 2 || intervals % 2) throw ValidationError("phase_rms: intervals must be even");
    // composite Simpson over (theta - pi, theta + pi]
    const double h = 2.0 * M_PI / intervals;
    double mass = 0, second = 0;
    for (int k = 0; k <= intervals; ++k) {
        double d = -M_PI + k * h;
        double c = (k == 0 || k == intervals) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        double p = gaussian_phase_marginal(w, sigma_sq, theta + d);
        mass += c * p;
        second += c * p * d * d;
    }
    return std::sqrt(second / mass);
}

std::vector<SensitivityPoint> sensitivity_sweep(const std::vector<double>& n_bars, double eta,
                                                const TruncationPolicy& policy,
                                                const SamplerSpec& spec) {
    spec.validate();
    std::vector<SensitivityPoint> out;
    for (double nb : n_bars) {
        DisplacedTwinBeamParams p = optimal_split(nb);
        DetectorParams det(p.lambda(), eta);

        int n = policy.n_max_for(nb);
        double tail = 1.0, numeric = 0.0;
        for (;;) {
            Truncation t(n, 2);
            KetState psi = displaced_twin_beams(p, t);
            tail = std::max(psi.tail_mass(), psi.discarded_mass());
            numeric = mean_photons_numeric(psi);
            if (tail < policy.tail_bound) break;
            if (n + policy.step > policy.max_n_max)
                throw CapacityError("sensitivity_sweep: no truncation up to n_max=" +
                                    std::to_string(policy.max_n_max) + " meets the tail bound");
            n += policy.step;
        }

        double dphi = phase_rms(p.w(), det.delta_sq(), p.theta());
        SensitivityPoint sp;
        sp.n_bar = nb;
        sp.lambda = p.lambda();
        sp.w_mod_sq = std::norm(p.w());
        sp.delta_phi = dphi;
        sp.product = dphi * nb;
        sp.n_bar_exact = mean_photons_closed_form(p);
        sp.n_bar_numeric = numeric;
        sp.n_max = n;
        sp.tail_mass = tail;
        out.push_back(sp);
    }
    return out;
}

}  // namespace twinhet
