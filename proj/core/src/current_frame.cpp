#include "twinhet/current_frame.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "twinhet/errors.hpp"

namespace twinhet {

namespace {

// T_N(m, k) = <m, N-m|_ce |k, N-k>_ab for the 50:50 splitter a = (c+e)/sqrt2, b = (c-e)/sqrt2.
std::vector<RMatrix> splitter_blocks(int n_total) {
    std::vector<RMatrix> t(n_total + 1);
    t[0] = RMatrix::Ones(1, 1);
    for (int n = 1; n <= n_total; ++n) {
        const RMatrix& p = t[n - 1];
        RMatrix b = RMatrix::Zero(n + 1, n + 1);
        for (int k = 0; k <= n; ++k) {
            // k > 0: raise a from column k-1; k == 0: raise b from column 0
            int src = k > 0 ? k - 1 : 0;
            double sign = k > 0 ? 1.0 : -1.0;
            double pre = 1.0 / std::sqrt(2.0 * (k > 0 ? k : n));
            for (int m = 0; m <= n; ++m) {
                double v = 0;
                if (m >= 1) v += std::sqrt(static_cast<double>(m)) * p(m - 1, src);
                if (m <= n - 1) v += sign * std::sqrt(static_cast<double>(n - m)) * p(m, src);
                b(m, k) = pre * v;
            }
        }
        t[n] = std::move(b);
    }
    return t;
}

// (-i)^n
cplx minus_i_pow(int n) {
    static const cplx table[4] = {1.0, -I_UNIT, -1.0, I_UNIT};
    return table[n & 3];
}

CVector row_major_vec(const CMatrix& m) {
    CVector v(m.size());
    const Eigen::Index s = m.cols();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < s; ++j) v(i * s + j) = m(i, j);
    return v;
}

CMatrix hermitize(const CMatrix& m) { return (m + m.adjoint()) * 0.5; }

}  // namespace

int frame_cutoff_for(int n_max, double delta_sq, double resolution) {
    if (!(delta_sq > 0) || !(resolution > 0)) throw ValidationError("frame_cutoff_for: needs delta_sq > 0");
    return std::max(2 * n_max, static_cast<int>(std::ceil(resolution / delta_sq)));
}

CurrentFrame::CurrentFrame(int cutoff) : k_(cutoff) {
    if (cutoff < 0) throw ValidationError("CurrentFrame: cutoff must be >= 0");
    RMatrix x = RMatrix::Zero(side(), side());
    for (int n = 1; n <= k_; ++n) x(n - 1, n) = x(n, n - 1) = 0.5 * std::sqrt(static_cast<double>(n));
    RealEigen e = eigh(x);
    x_ = std::move(e.values);
    vx_ = std::move(e.vectors);
}

CMatrix CurrentFrame::ket(const KetState& psi, double* dropped) const {
    const Truncation& t = psi.truncation();
    if (t.n_modes() != 2) throw ValidationError("CurrentFrame::ket: needs a two-mode state");
    const int n = t.n_max();
    auto blocks = splitter_blocks(2 * n);
    CMatrix pf = CMatrix::Zero(side(), side());
    const CVector& a = psi.amplitudes();
    for (int na = 0; na <= n; ++na)
        for (int nb = 0; nb <= n; ++nb) {
            int occ[2] = {na, nb};
            cplx amp = a(t.index(occ));
            if (amp == cplx(0)) continue;
            int tot = na + nb;
            const RMatrix& blk = blocks[tot];
            for (int m = std::max(0, tot - k_); m <= std::min(k_, tot); ++m)
                pf(m, tot - m) += blk(m, na) * amp;
        }
    if (dropped) *dropped = std::max(0.0, a.squaredNorm() - pf.squaredNorm());
    for (int m = 0; m <= k_; ++m) pf.col(m) *= minus_i_pow(m);
    return vx_.transpose() * pf * vx_;
}

CMatrix CurrentFrame::isometry(const Truncation& t) const {
    if (t.n_modes() != 2) throw ValidationError("CurrentFrame::isometry: needs two modes");
    const int n = t.n_max();
    const int s = side();
    if (static_cast<double>(s) * s * t.dim() * sizeof(cplx) > static_cast<double>(memory_cap_bytes()))
        throw CapacityError("CurrentFrame::isometry: " + std::to_string(s * s) + " x " +
                            std::to_string(t.dim()) + " exceeds the memory cap");
    auto blocks = splitter_blocks(2 * n);
    CMatrix c(s * s, t.dim());
    for (int na = 0; na <= n; ++na)
        for (int nb = 0; nb <= n; ++nb) {
            int occ[2] = {na, nb};
            int tot = na + nb;
            const RMatrix& blk = blocks[tot];
            CMatrix pf = CMatrix::Zero(s, s);
            for (int m = std::max(0, tot - k_); m <= std::min(k_, tot); ++m)
                pf(m, tot - m) = blk(m, na) * minus_i_pow(tot - m);
            c.col(t.index(occ)) = row_major_vec(vx_.transpose() * pf * vx_);
        }
    return c;
}

FrameState FrameState::pure(CMatrix psi) {
    if (psi.rows() != psi.cols()) throw ValidationError("FrameState: ket must be square");
    FrameState s;
    s.pure_ = true;
    s.side_ = static_cast<int>(psi.rows());
    double n = psi.norm();
    if (!(n > 0)) throw NumericalError("FrameState: zero ket");
    s.psi_ = psi / n;
    return s;
}

FrameState FrameState::mixed(CMatrix rho) {
    int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(rho.rows()))));
    if (rho.rows() != rho.cols() || side * side != rho.rows())
        throw ValidationError("FrameState: density must be side^2 x side^2");
    double tr = rho.trace().real();
    if (!(tr > 0)) throw NumericalError("FrameState: non-positive trace");
    FrameState s;
    s.pure_ = false;
    s.side_ = side;
    s.rho_ = hermitize(rho / tr);
    return s;
}

FrameState FrameState::from_fock(const CurrentFrame& f, const KetState& psi) {
    double dropped = 0;
    CMatrix k = f.ket(psi, &dropped);
    FrameState s = pure(std::move(k));
    s.dropped_ = dropped;
    return s;
}

FrameState FrameState::from_fock(const CurrentFrame& f, const DensityOperator& rho) {
    require_dense_fits(static_cast<std::size_t>(f.side()) * f.side(), "FrameState");
    CMatrix c = f.isometry(rho.truncation());
    CMatrix r = c * rho.matrix() * c.adjoint();
    double kept = r.trace().real();
    FrameState s = mixed(std::move(r));
    s.dropped_ = std::max(0.0, 1.0 - kept);
    return s;
}

CMatrix FrameState::density_matrix() const {
    if (!pure_) return rho_;
    CVector v = row_major_vec(psi_);
    return v * v.adjoint();
}

RMatrix FrameState::populations() const {
    if (pure_) return psi_.cwiseAbs2();
    RMatrix d(side_, side_);
    for (int i = 0; i < side_; ++i)
        for (int j = 0; j < side_; ++j) d(i, j) = rho_(i * side_ + j, i * side_ + j).real();
    return d;
}

double FrameState::purity() const {
    if (pure_) return std::pow(psi_.squaredNorm(), 2);
    return rho_.cwiseAbs2().sum();
}

double frame_density(const CurrentFrame& f, const FrameState& s, cplx z, double delta_sq) {
    RMatrix d = s.populations();
    double p = 0;
    for (int i = 0; i < f.side(); ++i)
        for (int j = 0; j < f.side(); ++j)
            p += d(i, j) * std::exp(-std::norm(z - f.zeta(i, j)) / delta_sq);
    return p / (M_PI * delta_sq);
}

RMatrix frame_density_grid(const CurrentFrame& f, const FrameState& s, const RVector& xs,
                           const RVector& ys, double delta_sq) {
    const int side = f.side();
    RMatrix gx(xs.size(), side), gy(ys.size(), side);
    for (Eigen::Index a = 0; a < xs.size(); ++a)
        for (int i = 0; i < side; ++i) {
            double t = xs(a) - M_SQRT2 * f.nodes()(i);
            gx(a, i) = std::exp(-t * t / delta_sq);
        }
    for (Eigen::Index b = 0; b < ys.size(); ++b)
        for (int j = 0; j < side; ++j) {
            double t = ys(b) - M_SQRT2 * f.nodes()(j);
            gy(b, j) = std::exp(-t * t / delta_sq);
        }
    return gx * s.populations() * gy.transpose() / (M_PI * delta_sq);
}

double frame_rectangle_mass(const CurrentFrame& f, const FrameState& s, double x0, double x1,
                            double y0, double y1, double delta_sq) {
    const int side = f.side();
    const double d = std::sqrt(delta_sq);
    RVector mx(side), my(side);
    for (int i = 0; i < side; ++i) {
        double c = M_SQRT2 * f.nodes()(i);
        mx(i) = 0.5 * (erfc((x0 - c) / d) - erfc((x1 - c) / d));
        my(i) = 0.5 * (erfc((y0 - c) / d) - erfc((y1 - c) / d));
    }
    return mx.dot(s.populations() * my);
}

cplx frame_mean(const CurrentFrame& f, const FrameState& s) {
    RMatrix d = s.populations();
    cplx m = 0;
    for (int i = 0; i < f.side(); ++i)
        for (int j = 0; j < f.side(); ++j) m += d(i, j) * f.zeta(i, j);
    return m;
}

std::pair<double, double> frame_outcome_variance(const CurrentFrame& f, const FrameState& s,
                                                 double delta_sq) {
    RMatrix d = s.populations();
    cplx m = frame_mean(f, s);
    double vx = 0, vy = 0;
    for (int i = 0; i < f.side(); ++i)
        for (int j = 0; j < f.side(); ++j) {
            cplx z = f.zeta(i, j) - m;
            vx += d(i, j) * z.real() * z.real();
            vy += d(i, j) * z.imag() * z.imag();
        }
    return {vx + 0.5 * delta_sq, vy + 0.5 * delta_sq};
}

FrameReduction frame_reduce(const CurrentFrame& f, const FrameState& s, cplx z, double amp_delta_sq) {
    const int side = f.side();
    const cplx phase = std::exp(-I_UNIT * (z.real() * z.imag()));
    const double norm = 1.0 / std::sqrt(M_PI * amp_delta_sq);
    CMatrix a(side, side);
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j)
            a(i, j) = phase * norm * std::exp(-std::norm(f.zeta(i, j) - z) / (2.0 * amp_delta_sq));
    if (s.is_pure()) {
        CMatrix out = a.cwiseProduct(s.ket());
        double p = out.squaredNorm();
        if (!(p > 1e-30)) throw NumericalError("reduction: outcome density below floor 1e-30");
        return {FrameState::pure(std::move(out)), p};
    }
    CVector av = row_major_vec(a);
    CMatrix out = (av * av.adjoint()).cwiseProduct(s.density());
    double p = out.trace().real();
    if (!(p > 1e-30)) throw NumericalError("reduction: outcome density below floor 1e-30");
    return {FrameState::mixed(std::move(out)), p};
}

RMatrix smearing_kernel(const CurrentFrame& f, double center, double amp_delta_sq,
                        double smear_sq, const QuadratureGrid& quad, double* coverage) {
    if (quad.nodes_per_axis < 3 || !(quad.halfwidth_sigmas > 0))
        throw ValidationError("smearing_kernel: quadrature grid too small");
    const int q = quad.nodes_per_axis;
    const double half = quad.halfwidth_sigmas * std::sqrt(smear_sq / 2.0);
    const double h = 2.0 * half / (q - 1);
    const int side = f.side();
    // one axis of (sqrt(pi) D)^-1 exp(-|zeta - t|^2 / (2 D^2))
    const double amp_scale = std::pow(M_PI * amp_delta_sq, -0.25);
    RMatrix amp(side, q);
    RVector wt(q);
    double cov = 0;
    for (int k = 0; k < q; ++k) {
        double off = -half + k * h;
        wt(k) = h * std::exp(-off * off / smear_sq) / std::sqrt(M_PI * smear_sq) *
                ((k == 0 || k == q - 1) ? 0.5 : 1.0);
        cov += wt(k);
        for (int i = 0; i < side; ++i) {
            double t = M_SQRT2 * f.nodes()(i) - (center + off);
            amp(i, k) = amp_scale * std::exp(-t * t / (2.0 * amp_delta_sq));
        }
    }
    if (coverage) *coverage = cov;
    return amp * wt.asDiagonal() * amp.transpose();
}

FrameReduction frame_reduce_eta(const CurrentFrame& f, const FrameState& s, cplx z,
                                const DetectorParams& det, const QuadratureGrid& quad) {
    if (det.eta() == 1.0) return frame_reduce(f, s, z, det.ideal_delta_sq());
    double c1 = 0, c2 = 0;
    RMatrix k1 = smearing_kernel(f, z.real(), det.ideal_delta_sq(), det.smear_sq(), quad, &c1);
    RMatrix k2 = smearing_kernel(f, z.imag(), det.ideal_delta_sq(), det.smear_sq(), quad, &c2);
    if (c1 * c2 < 1.0 - 1e-6)
        throw NumericalError("reduction: grid covers less than 1 - 1e-6 of the smearing weight");
    const int side = f.side();
    CMatrix rho = s.density_matrix();
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j)
            for (int k = 0; k < side; ++k)
                for (int l = 0; l < side; ++l) rho(i * side + j, k * side + l) *= k1(i, k) * k2(j, l);
    double p = rho.trace().real();
    if (!(p > 1e-30)) throw NumericalError("reduction: outcome density below floor 1e-30");
    return {FrameState::mixed(std::move(rho)), p};
}

RMatrix frame_phase_kernel(const CurrentFrame& f, double phi, double delta_sq) {
    const int side = f.side();
    RMatrix g(side, side);
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j) g(i, j) = phase_kernel(f.zeta(i, j), phi, delta_sq);
    return g;
}

double frame_phase_density(const CurrentFrame& f, const FrameState& s, double phi, double delta_sq) {
    return frame_phase_kernel(f, phi, delta_sq).cwiseProduct(s.populations()).sum();
}

}  // namespace twinhet
