#pragma once

#include "twinhet/heterodyne.hpp"

namespace twinhet {

// Rotated modes c = (a+b)/sqrt2, e = (a-b)/sqrt2 turn the photocurrent into
// Z = sqrt2 x_c + i sqrt2 p_e with x = (c + c^H)/2, p = (e - e^H)/(2i).
// Cutting c and e off separately keeps Z1 and Z2 commuting exactly, so the
// truncated Z stays normal and its joint eigenbasis |x_i>_c |p_j>_e carries
// eigenvalues zeta_ij = sqrt2 (x_i + i x_j) (x and p share a spectrum).
//
// A two-mode Fock state with cutoff n maps into this frame without loss when
// cutoff >= 2n, since a beam splitter conserves total photon number.
class CurrentFrame {
public:
    explicit CurrentFrame(int cutoff);

    int cutoff() const { return k_; }
    int side() const { return k_ + 1; }
    const RVector& nodes() const { return x_; }
    cplx zeta(int i, int j) const { return M_SQRT2 * cplx(x_(i), x_(j)); }

    // Coefficients <x_i, p_j | psi> as a side x side matrix. Mass that does not
    // fit under the cutoff goes to *dropped.
    CMatrix ket(const KetState& psi, double* dropped = nullptr) const;
    // side^2 x dim matrix whose columns are the frame images of Fock basis
    // states (row index i * side + j). Isometric when cutoff >= 2 n_max.
    CMatrix isometry(const Truncation& t) const;

private:
    int k_;
    RVector x_;
    RMatrix vx_;
};

// Frame cutoff for a state with Fock cutoff n_max probed at width delta_sq:
// at least 2 n_max (lossless), and fine enough that the node spacing resolves
// the narrowest Gaussian. Errors fall like exp(-c K delta_sq); K delta_sq = 16
// keeps the vacuum phase density flat to ~1e-10.
int frame_cutoff_for(int n_max, double delta_sq, double resolution = 16.0);

// A state held in the joint eigenbasis: a side x side ket while pure, a
// side^2 x side^2 density once mixed.
class FrameState {
public:
    static FrameState pure(CMatrix psi);
    static FrameState mixed(CMatrix rho);
    static FrameState from_fock(const CurrentFrame& f, const DensityOperator& rho);
    static FrameState from_fock(const CurrentFrame& f, const KetState& psi);

    bool is_pure() const { return pure_; }
    int side() const { return side_; }
    const CMatrix& ket() const { return psi_; }
    const CMatrix& density() const { return rho_; }
    CMatrix density_matrix() const;

    // Probability on each joint eigenvector, side x side
    RMatrix populations() const;
    double purity() const;
    double dropped_mass() const { return dropped_; }

private:
    bool pure_ = true;
    int side_ = 0;
    CMatrix psi_;
    CMatrix rho_;
    double dropped_ = 0.0;
};

struct FrameReduction {
    FrameState state;
    double density;
};

double frame_density(const CurrentFrame& f, const FrameState& s, cplx z, double delta_sq);
// values(a, b) = P(xs[a] + i ys[b])
RMatrix frame_density_grid(const CurrentFrame& f, const FrameState& s, const RVector& xs,
                           const RVector& ys, double delta_sq);
// Exact outcome mass inside [x0,x1] x [y0,y1]
double frame_rectangle_mass(const CurrentFrame& f, const FrameState& s, double x0, double x1,
                            double y0, double y1, double delta_sq);
// Mean of Z and per-axis outcome variances (including delta_sq/2 per axis)
cplx frame_mean(const CurrentFrame& f, const FrameState& s);
std::pair<double, double> frame_outcome_variance(const CurrentFrame& f, const FrameState& s,
                                                 double delta_sq);

// Ideal instrument: Omega(z) rho Omega(z)^H / P(z), Omega carrying width amp_delta_sq.
FrameReduction frame_reduce(const CurrentFrame& f, const FrameState& s, cplx z,
                            double amp_delta_sq);
// eta < 1: Gaussian mixture of ideal reductions over z' ~ N(z, smear), the
// amplitude operators at the eta = 1 width. Factorizes over the two axes.
FrameReduction frame_reduce_eta(const CurrentFrame& f, const FrameState& s, cplx z,
                                const DetectorParams& det, const QuadratureGrid& quad = {});
// Per-axis smearing kernel k(a, b) = int w(t - z) A_a(t) A_b(t) dt from the
// tensor-grid rule; `coverage` receives the captured weight.
RMatrix smearing_kernel(const CurrentFrame& f, double center, double amp_delta_sq,
                        double smear_sq, const QuadratureGrid& quad, double* coverage);

double frame_phase_density(const CurrentFrame& f, const FrameState& s, double phi,
                           double delta_sq);
// Phase POM values on the joint spectrum (side x side)
RMatrix frame_phase_kernel(const CurrentFrame& f, double phi, double delta_sq);

}  // namespace twinhet
