#include "twinhet/fock.hpp"

#include <cmath>

#include "twinhet/errors.hpp"

namespace twinhet {

Truncation::Truncation(int n_max, int n_modes) : n_max_(n_max), n_modes_(n_modes), dim_(1) {
    if (n_max < 0) throw ValidationError("truncation: n_max must be >= 0");
    if (n_modes < 1) throw ValidationError("truncation: n_modes must be >= 1");
    long double d = 1;
    for (int i = 0; i < n_modes; ++i) d *= (n_max + 1);
    // a ket must fit; dense operators are checked where they are built
    if (d * sizeof(cplx) > static_cast<long double>(memory_cap_bytes()))
        throw CapacityError("truncation: state dimension exceeds memory cap");
    dim_ = static_cast<std::size_t>(d);
}

std::vector<int> Truncation::occupations(std::size_t index) const {
    std::vector<int> occ(n_modes_);
    for (int m = n_modes_ - 1; m >= 0; --m) {
        occ[m] = static_cast<int>(index % levels());
        index /= levels();
    }
    return occ;
}

std::size_t Truncation::index(std::span<const int> occ) const {
    if (static_cast<int>(occ.size()) != n_modes_) throw ValidationError("index: wrong mode count");
    std::size_t idx = 0;
    for (int n : occ) {
        if (n < 0 || n > n_max_) throw ValidationError("index: occupation out of range");
        idx = idx * levels() + n;
    }
    return idx;
}

int Truncation::occupation(std::size_t index, int mode) const {
    for (int m = n_modes_ - 1; m > mode; --m) index /= levels();
    return static_cast<int>(index % levels());
}

bool Truncation::on_boundary(std::size_t index) const {
    for (int m = 0; m < n_modes_; ++m) {
        if (static_cast<int>(index % levels()) == n_max_) return true;
        index /= levels();
    }
    return false;
}

KetState::KetState(CVector amplitudes, Truncation truncation, double discarded_mass,
                   bool normalize)
    : amps_(std::move(amplitudes)), trunc_(truncation), discarded_(discarded_mass),
      normalized_(normalize) {
    if (static_cast<std::size_t>(amps_.size()) != trunc_.dim())
        throw ValidationError("ket: amplitude length does not match truncation");
    if (normalize) {
        double n = amps_.norm();
        if (!(n > 0)) throw NumericalError("ket: zero vector cannot be normalized");
        amps_ /= n;
        if (std::abs(amps_.squaredNorm() - 1.0) > 1e-12)
            throw NumericalError("ket: normalization failed");
    }
}

KetState KetState::basis(const Truncation& t, std::span<const int> occ) {
    CVector v = CVector::Zero(t.dim());
    v(t.index(occ)) = 1.0;
    return KetState(std::move(v), t);
}

double KetState::tail_mass() const {
    double s = 0;
    for (std::size_t i = 0; i < trunc_.dim(); ++i)
        if (trunc_.on_boundary(i)) s += std::norm(amps_(i));
    return s;
}

DenseOperator::DenseOperator(CMatrix matrix, Truncation truncation, bool hermitian, bool unitary)
    : m_(std::move(matrix)), trunc_(truncation), hermitian_(hermitian), unitary_(unitary) {
    if (static_cast<std::size_t>(m_.rows()) != trunc_.dim() || m_.rows() != m_.cols())
        throw ValidationError("operator: matrix shape does not match truncation");
    if (hermitian_ && hermiticity_defect(m_) > 1e-10)
        throw NumericalError("operator flagged hermitian but max|M - M^H| > 1e-10");
    if (unitary_) {
        double d = max_abs(m_.adjoint() * m_ - CMatrix::Identity(m_.rows(), m_.cols()));
        if (d > 1e-8) throw NumericalError("operator flagged unitary but max|M^H M - I| > 1e-8");
    }
}

DenseOperator DenseOperator::adjoint() const {
    return DenseOperator(m_.adjoint(), trunc_, hermitian_, unitary_);
}

DensityOperator::DensityOperator(CMatrix matrix, Truncation truncation, bool check_psd)
    : m_(std::move(matrix)), trunc_(truncation) {
    if (static_cast<std::size_t>(m_.rows()) != trunc_.dim() || m_.rows() != m_.cols())
        throw ValidationError("density: matrix shape does not match truncation");
    if (hermiticity_defect(m_) > 1e-10) throw NumericalError("density: not Hermitian to 1e-10");
    if (std::abs(m_.trace() - 1.0) > 1e-8) throw NumericalError("density: trace differs from 1");
    if (check_psd && eigvalsh(m_).minCoeff() < -1e-8)
        throw NumericalError("density: negative eigenvalue below -1e-8");
}

DensityOperator DensityOperator::from_ket(const KetState& psi) {
    require_dense_fits(psi.truncation().dim(), "density");
    CVector v = psi.amplitudes() / psi.amplitudes().norm();
    return DensityOperator(v * v.adjoint(), psi.truncation(), false);
}

double DensityOperator::purity() const { return m_.cwiseAbs2().sum(); }

cplx DensityOperator::expectation(const CMatrix& op) const {
    return (op.cwiseProduct(m_.transpose())).sum();
}

double DensityOperator::tail_mass() const {
    double s = 0;
    for (std::size_t i = 0; i < trunc_.dim(); ++i)
        if (trunc_.on_boundary(i)) s += m_(i, i).real();
    return s;
}

DenseOperator annihilator(int n_max) {
    Truncation t(n_max, 1);
    require_dense_fits(t.dim(), "annihilator");
    CMatrix a = CMatrix::Zero(t.dim(), t.dim());
    for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return DenseOperator(std::move(a), t);
}

DenseOperator embed(const DenseOperator& op, int mode_index, const Truncation& truncation) {
    const Truncation& single = op.truncation();
    if (single.n_modes() != 1 || single.n_max() != truncation.n_max())
        throw ValidationError("embed: operator must be single-mode with matching n_max");
    if (mode_index < 0 || mode_index >= truncation.n_modes())
        throw ValidationError("embed: mode index out of range");
    require_dense_fits(truncation.dim(), "embed");

    const Eigen::Index L = truncation.levels();
    Eigen::Index before = 1, after = 1;
    for (int m = 0; m < mode_index; ++m) before *= L;
    for (int m = mode_index + 1; m < truncation.n_modes(); ++m) after *= L;

    const CMatrix& s = op.matrix();
    CMatrix out = CMatrix::Zero(truncation.dim(), truncation.dim());
    // out = I_before (x) s (x) I_after
    for (Eigen::Index b = 0; b < before; ++b)
        for (Eigen::Index i = 0; i < L; ++i)
            for (Eigen::Index j = 0; j < L; ++j) {
                cplx v = s(i, j);
                if (v == cplx(0)) continue;
                Eigen::Index r0 = (b * L + i) * after, c0 = (b * L + j) * after;
                for (Eigen::Index k = 0; k < after; ++k) out(r0 + k, c0 + k) = v;
            }
    return DenseOperator(std::move(out), truncation, op.hermitian(), op.unitary());
}

RVector number_diagonal(const Truncation& t, int mode) {
    if (mode < 0 || mode >= t.n_modes()) throw ValidationError("number_diagonal: bad mode");
    RVector d(t.dim());
    for (std::size_t i = 0; i < t.dim(); ++i) d(i) = t.occupation(i, mode);
    return d;
}

DenseOperator hermitian_function(const DenseOperator& h, const SpectralFunction& f) {
    if (hermiticity_defect(h.matrix()) > 1e-10)
        throw ValidationError("hermitian_function: input is not Hermitian");
    const CMatrix& m = h.matrix();
    bool real_input = m.imag().cwiseAbs().maxCoeff() == 0.0;

    RVector w;
    CMatrix v;
    if (real_input) {
        RealEigen e = eigh(RMatrix(m.real()));
        w = std::move(e.values);
        v = e.vectors.cast<cplx>();
    } else {
        ComplexEigen e = eigh(m);
        w = std::move(e.values);
        v = std::move(e.vectors);
    }
    CVector fw(w.size());
    bool real_valued = true;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        fw(k) = f(w(k));
        if (fw(k).imag() != 0.0) real_valued = false;
    }
    CMatrix out = v * fw.asDiagonal() * v.adjoint();
    if (real_valued) out = (out + out.adjoint()) * 0.5;
    return DenseOperator(std::move(out), h.truncation(), real_valued);
}

DenseOperator unitary_from_hamiltonian(const DenseOperator& h, double t) {
    DenseOperator u = hermitian_function(h, [t](double e) { return std::exp(-I_UNIT * (e * t)); });
    return DenseOperator(u.matrix(), u.truncation(), false, true);
}

DenseOperator displacement(cplx alpha, int mode_index, const Truncation& truncation) {
    if (mode_index < 0 || mode_index >= truncation.n_modes())
        throw ValidationError("displacement: mode index out of range");
    DenseOperator a = annihilator(truncation.n_max());
    // exp(alpha a^H - conj(alpha) a) = exp(-i K) with K = i(alpha a^H - conj(alpha) a)
    CMatrix k = I_UNIT * (alpha * a.matrix().adjoint() - std::conj(alpha) * a.matrix());
    DenseOperator gen((k + k.adjoint()) * 0.5, a.truncation(), true);
    DenseOperator d1 = unitary_from_hamiltonian(gen, 1.0);
    if (truncation.n_modes() == 1) return d1;
    return embed(d1, mode_index, truncation);
}

CVector apply_single_mode(const CMatrix& op, int mode_index, const Truncation& t,
                          const CVector& psi) {
    const Eigen::Index L = t.levels();
    if (op.rows() != L || op.cols() != L) throw ValidationError("apply_single_mode: shape");
    if (mode_index < 0 || mode_index >= t.n_modes()) throw ValidationError("apply_single_mode: mode");
    Eigen::Index before = 1, after = 1;
    for (int m = 0; m < mode_index; ++m) before *= L;
    for (int m = mode_index + 1; m < t.n_modes(); ++m) after *= L;
    CVector out(psi.size());
    for (Eigen::Index b = 0; b < before; ++b) {
        // block (L x after), column-major view over the contiguous slab
        Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            in(psi.data() + b * L * after, L, after);
        Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> o(
            out.data() + b * L * after, L, after);
        o.noalias() = op * in;
    }
    return out;
}

}  // namespace twinhet
