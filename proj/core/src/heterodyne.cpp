#include "twinhet/heterodyne.hpp"

#include <cmath>
#include <limits>

#include "twinhet/current_frame.hpp"
#include "twinhet/errors.hpp"

namespace twinhet {

namespace {

constexpr double kDensityFloor = 1e-30;

void require_two_mode(const Truncation& t, const char* what) {
    if (t.n_modes() != 2) throw ValidationError(std::string(what) + ": needs a two-mode truncation");
}

CMatrix hermitize(const CMatrix& m) { return (m + m.adjoint()) * 0.5; }

}  // namespace

DetectorParams::DetectorParams(double lambda, double eta) : lambda_(lambda), eta_(eta) {
    if (!(lambda >= 0.0 && lambda < 1.0)) throw ValidationError("detector lambda must lie in [0, 1)");
    if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("detector eta must lie in (0, 1]");
}

CurrentOperator current_operator(const Truncation& t, int signal, int image) {
    if (signal == image) throw ValidationError("current_operator: signal and image must differ");
    DenseOperator a1 = annihilator(t.n_max());
    DenseOperator as = embed(a1, signal, t);
    DenseOperator ai = embed(a1, image, t);
    CMatrix z = as.matrix() + ai.matrix().adjoint();
    CMatrix z1 = hermitize((z + z.adjoint()) * 0.5);
    CMatrix z2 = hermitize((z - z.adjoint()) / (2.0 * I_UNIT));
    return {DenseOperator(z, t), DenseOperator(z1, t, true), DenseOperator(z2, t, true)};
}

RMatrix current_matrix(const Truncation& t) {
    require_two_mode(t, "current_matrix");
    require_dense_fits(t.dim(), "current_matrix");
    const int n = t.n_max();
    RMatrix z = RMatrix::Zero(t.dim(), t.dim());
    for (int na = 0; na <= n; ++na)
        for (int nb = 0; nb <= n; ++nb) {
            int col[2] = {na, nb};
            std::size_t c = t.index(col);
            if (na > 0) {
                int row[2] = {na - 1, nb};
                z(t.index(row), c) += std::sqrt(static_cast<double>(na));
            }
            if (nb < n) {
                int row[2] = {na, nb + 1};
                z(t.index(row), c) += std::sqrt(static_cast<double>(nb + 1));
            }
        }
    return z;
}

Eigen::VectorXi sector_charge(const Truncation& t) {
    require_two_mode(t, "sector_charge");
    Eigen::VectorXi s(t.dim());
    for (std::size_t i = 0; i < t.dim(); ++i) s(i) = t.occupation(i, 0) - t.occupation(i, 1);
    return s;
}

RadialPom::RadialPom(double r, double delta_sq, const Truncation& t)
    : r_(r), dsq_(delta_sq), trunc_(t), charge_(sector_charge(t)) {
    if (!(r >= 0.0)) throw ValidationError("RadialPom: radius must be >= 0");
    if (!(delta_sq > 0.0)) throw ValidationError("RadialPom: delta_sq must be > 0");
    RMatrix zr = current_matrix(t);
    zr.diagonal().array() -= r;
    RMatrix m = zr.transpose() * zr;
    eig_ = eigh(RMatrix((m + m.transpose()) * 0.5));
}

double RadialPom::density(const CVector& psi, double phi) const {
    const Eigen::Index d = psi.size();
    RVector ur(d), ui(d);
    for (Eigen::Index a = 0; a < d; ++a) {
        cplx v = psi(a) * std::polar(1.0, -phi * charge_(a));
        ur(a) = v.real();
        ui(a) = v.imag();
    }
    RVector yr = eig_.vectors.transpose() * ur;
    RVector yi = eig_.vectors.transpose() * ui;
    const double norm = 1.0 / (M_PI * dsq_);
    double p = 0;
    for (Eigen::Index k = 0; k < d; ++k)
        p += std::exp(-eig_.values(k) / dsq_) * (yr(k) * yr(k) + yi(k) * yi(k));
    return std::max(0.0, p * norm);
}

double RadialPom::density(const CMatrix& rho, double phi) const {
    CMatrix f = pom(phi);
    return std::max(0.0, f.cwiseProduct(rho.transpose()).sum().real());
}

RMatrix RadialPom::pom_real() const {
    RVector g = (-eig_.values.array() / dsq_).exp() / (M_PI * dsq_);
    RMatrix f = eig_.vectors * g.asDiagonal() * eig_.vectors.transpose();
    return (f + f.transpose()) * 0.5;
}

CMatrix RadialPom::rotate(const RMatrix& m, double phi) const {
    const Eigen::Index d = m.rows();
    CMatrix out(d, d);
    for (Eigen::Index b = 0; b < d; ++b)
        for (Eigen::Index a = 0; a < d; ++a)
            out(a, b) = m(a, b) * std::polar(1.0, phi * (charge_(a) - charge_(b)));
    return out;
}

CMatrix RadialPom::pom(double phi) const { return rotate(pom_real(), phi); }

CMatrix RadialPom::amplitude(double phi) const {
    RVector h = (-eig_.values.array() / (2.0 * dsq_)).exp() / std::sqrt(M_PI * dsq_);
    RMatrix o = eig_.vectors * h.asDiagonal() * eig_.vectors.transpose();
    o = (o + o.transpose()) * 0.5;
    cplx z = std::polar(r_, phi);
    return rotate(o, phi) * std::exp(-I_UNIT * (z.real() * z.imag()));
}

DenseOperator pom_element(cplx z, const DetectorParams& det, const Truncation& t) {
    RadialPom rp(std::abs(z), det.delta_sq(), t);
    return DenseOperator(hermitize(rp.pom(std::arg(z))), t, true);
}

DenseOperator amplitude_operator(cplx z, const DetectorParams& det, const Truncation& t) {
    if (det.eta() != 1.0)
        throw ValidationError("amplitude_operator: ideal instrument only (eta = 1); use reduce_state_eta");
    RadialPom rp(std::abs(z), det.delta_sq(), t);
    return DenseOperator(rp.amplitude(std::arg(z)), t);
}

double outcome_density(const DensityOperator& rho, cplx z, const DetectorParams& det) {
    RadialPom rp(std::abs(z), det.delta_sq(), rho.truncation());
    return rp.density(rho.matrix(), std::arg(z));
}

double outcome_density(const KetState& psi, cplx z, const DetectorParams& det) {
    RadialPom rp(std::abs(z), det.delta_sq(), psi.truncation());
    return rp.density(psi.amplitudes(), std::arg(z));
}

double closed_form_density(cplx w, double state_lambda, cplx z, const DetectorParams& det) {
    if (!(state_lambda >= 0.0 && state_lambda <= 1.0))
        throw ValidationError("closed_form_density: state lambda must lie in [0, 1]");
    double s2 = (1.0 - state_lambda) / (1.0 + state_lambda) + det.delta_sq();
    return std::exp(-std::norm(z - w) / s2) / (M_PI * s2);
}

ReductionResult reduce_state(const DensityOperator& rho, cplx z, const DetectorParams& det) {
    if (det.eta() != 1.0) throw ValidationError("reduce_state: eta < 1 needs reduce_state_eta");
    RadialPom rp(std::abs(z), det.delta_sq(), rho.truncation());
    CMatrix omega = rp.amplitude(std::arg(z));
    CMatrix out = omega * rho.matrix() * omega.adjoint();
    double p = out.trace().real();
    if (!(p > kDensityFloor))
        throw NumericalError("reduce_state: outcome density below floor 1e-30");
    out = hermitize(out / p);
    DensityOperator state(std::move(out), rho.truncation(), false);
    double purity = state.purity();
    return {std::move(state), {z, p}, purity};
}

ReductionResult reduce_state_eta(const DensityOperator& rho, cplx z, const DetectorParams& det,
                                 const QuadratureGrid& quad) {
    if (!(det.eta() < 1.0)) throw ValidationError("reduce_state_eta: needs eta < 1");
    if (quad.nodes_per_axis < 3 || !(quad.halfwidth_sigmas > 0))
        throw ValidationError("reduce_state_eta: quadrature grid too small");
    const double s2 = det.smear_sq();
    const double half = quad.halfwidth_sigmas * std::sqrt(s2 / 2.0);
    const int q = quad.nodes_per_axis;
    const double h = 2.0 * half / (q - 1);

    // trapezoid weights of exp(-|z'-z|^2/s2)/(pi s2), the eta-smear of the outcome
    std::vector<double> w1(q);
    double cov1 = 0;
    for (int k = 0; k < q; ++k) {
        double t = -half + k * h;
        w1[k] = h * std::exp(-t * t / s2) / std::sqrt(M_PI * s2) * ((k == 0 || k == q - 1) ? 0.5 : 1.0);
        cov1 += w1[k];
    }
    if (cov1 * cov1 < 1.0 - 1e-6)
        throw NumericalError("reduce_state_eta: grid covers less than 1 - 1e-6 of the smearing weight");

    const Truncation& t = rho.truncation();
    const double amp_dsq = det.ideal_delta_sq();
    CMatrix acc = CMatrix::Zero(t.dim(), t.dim());
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) {
            double wt = w1[i] * w1[j];
            if (wt < 1e-18) continue;
            cplx zp = z + cplx(-half + i * h, -half + j * h);
            RadialPom rp(std::abs(zp), amp_dsq, t);
            CMatrix omega = rp.amplitude(std::arg(zp));
            acc.noalias() += wt * (omega * rho.matrix() * omega.adjoint());
        }
    double p = acc.trace().real();
    if (!(p > kDensityFloor))
        throw NumericalError("reduce_state_eta: outcome density below floor 1e-30");
    acc = hermitize(acc / p);
    DensityOperator state(std::move(acc), t, false);
    double purity = state.purity();
    return {std::move(state), {z, p}, purity};
}

DenseOperator phase_pom(double phi, const DetectorParams& det, const Truncation& t) {
    require_two_mode(t, "phase_pom");
    if (!std::isfinite(phi)) throw ValidationError("phase_pom: phi must be finite");
    CurrentFrame frame(frame_cutoff_for(t.n_max(), det.delta_sq()));
    CMatrix c = frame.isometry(t);
    RMatrix g = frame_phase_kernel(frame, phi, det.delta_sq());
    const int side = frame.side();
    RVector gv(side * side);
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j) gv(i * side + j) = g(i, j);
    CMatrix mu = c.adjoint() * gv.asDiagonal() * c;
    return DenseOperator(hermitize(mu), t, true);
}

double phase_density(const DensityOperator& rho, double phi, const DetectorParams& det) {
    require_two_mode(rho.truncation(), "phase_density");
    // mix the pure-state populations of the eigenvectors; avoids the side^4 frame density
    CurrentFrame frame(frame_cutoff_for(rho.truncation().n_max(), det.delta_sq()));
    ComplexEigen e = eigh(rho.matrix());
    RMatrix g = frame_phase_kernel(frame, phi, det.delta_sq());
    double p = 0;
    for (Eigen::Index k = 0; k < e.values.size(); ++k) {
        if (e.values(k) < 1e-15) continue;
        KetState v(e.vectors.col(k), rho.truncation());
        p += e.values(k) * g.cwiseProduct(frame.ket(v).cwiseAbs2()).sum();
    }
    return std::max(0.0, p);
}

double phase_density(const KetState& psi, double phi, const DetectorParams& det) {
    require_two_mode(psi.truncation(), "phase_density");
    CurrentFrame frame(frame_cutoff_for(psi.truncation().n_max(), det.delta_sq()));
    FrameState s = FrameState::from_fock(frame, psi);
    return frame_phase_density(frame, s, phi, det.delta_sq());
}

void gauss_legendre(int n, double a, double b, RVector& nodes, RVector& weights) {
    if (n < 1) throw ValidationError("gauss_legendre: n must be >= 1");
    RMatrix j = RMatrix::Zero(n, n);
    for (int k = 1; k < n; ++k) j(k - 1, k) = j(k, k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
    RealEigen e = eigh(j);
    nodes = 0.5 * (b - a) * (e.values.array() + 1.0) + a;
    weights = (b - a) * e.vectors.row(0).transpose().array().square();
}

CompletenessReport pom_completeness(const DetectorParams& det, const Truncation& t,
                                    int radial_nodes, int angular_nodes, double halfwidth_sigmas) {
    require_two_mode(t, "pom_completeness");
    if (radial_nodes < 2 || angular_nodes < 2) throw ValidationError("pom_completeness: too few nodes");
    const double dsq = det.delta_sq();
    const double radius = halfwidth_sigmas * std::sqrt((t.n_max() + 1 + dsq) / 2.0);
    RVector r, w;
    gauss_legendre(radial_nodes, 0.0, radius, r, w);

    // trapezoid in phi: sum_q exp(i k phi_q) * 2pi/N = 2pi when N divides k, else 0
    Eigen::VectorXi s = sector_charge(t);
    const Eigen::Index d = t.dim();
    RMatrix mask(d, d);
    for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b)
            mask(a, b) = ((s(a) - s(b)) % angular_nodes == 0) ? 2.0 * M_PI : 0.0;

    RMatrix acc = RMatrix::Zero(d, d);
    for (Eigen::Index k = 0; k < r.size(); ++k) {
        RadialPom rp(r(k), dsq, t);
        acc += (w(k) * r(k)) * rp.pom_real();
    }
    CompletenessReport rep;
    rep.integral = acc.cwiseProduct(mask).cast<cplx>();
    rep.radius = radius;
    rep.block_deviation = 0;
    const int half = t.n_max() / 2;
    for (Eigen::Index a = 0; a < d; ++a) {
        if (t.occupation(a, 0) > half || t.occupation(a, 1) > half) continue;
        for (Eigen::Index b = 0; b < d; ++b) {
            if (t.occupation(b, 0) > half || t.occupation(b, 1) > half) continue;
            double dev = std::abs(rep.integral(a, b) - (a == b ? 1.0 : 0.0));
            rep.block_deviation = std::max(rep.block_deviation, dev);
        }
    }
    return rep;
}

std::vector<double> radial_phase_marginal(const KetState& psi, const std::vector<double>& phis,
                                          const DetectorParams& det, double r_max, int radial_nodes) {
    RVector r, w;
    gauss_legendre(radial_nodes, 0.0, r_max, r, w);
    std::vector<double> out(phis.size(), 0.0);
    for (Eigen::Index k = 0; k < r.size(); ++k) {
        RadialPom rp(r(k), det.delta_sq(), psi.truncation());
        for (std::size_t q = 0; q < phis.size(); ++q)
            out[q] += w(k) * r(k) * rp.density(psi.amplitudes(), phis[q]);
    }
    return out;
}

double erf(double x) { return std::erf(x); }

double erfc(double x) { return std::erfc(x); }

double phase_kernel(cplx zeta, double phi, double delta_sq) {
    cplx r = zeta * std::polar(1.0, -phi);
    double u = r.real(), v = r.imag();
    double d = std::sqrt(delta_sq);
    double g = std::exp(-v * v / delta_sq) *
               (std::exp(-u * u / delta_sq) / (2.0 * M_PI) +
                u / (2.0 * std::sqrt(M_PI) * d) * erfc(-u / d));
    return std::max(0.0, g);
}

double gaussian_phase_marginal(cplx w, double sigma_sq, double phi) {
    return phase_kernel(w, phi, sigma_sq);
}

}  // namespace twinhet
