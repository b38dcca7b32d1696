#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "twinhet/linalg.hpp"

namespace twinhet {

// Uniform per-mode cutoff. Basis index is lexicographic in (n_1, ..., n_k)
// with mode 0 most significant; this order is part of every file format.
class Truncation {
public:
    Truncation(int n_max, int n_modes);

    int n_max() const { return n_max_; }
    int n_modes() const { return n_modes_; }
    int levels() const { return n_max_ + 1; }
    std::size_t dim() const { return dim_; }

    std::vector<int> occupations(std::size_t index) const;
    std::size_t index(std::span<const int> occ) const;
    int occupation(std::size_t index, int mode) const;
    // True when any mode sits at n_max.
    bool on_boundary(std::size_t index) const;

    bool operator==(const Truncation& o) const {
        return n_max_ == o.n_max_ && n_modes_ == o.n_modes_;
    }

private:
    int n_max_;
    int n_modes_;
    std::size_t dim_;
};

class KetState {
public:
    // Normalizes unless `normalize` is false; `discarded_mass` records
    // probability removed by truncation before normalization.
    KetState(CVector amplitudes, Truncation truncation, double discarded_mass = 0.0,
             bool normalize = true);

    static KetState basis(const Truncation& t, std::span<const int> occ);

    const CVector& amplitudes() const { return amps_; }
    const Truncation& truncation() const { return trunc_; }
    double squared_norm() const { return amps_.squaredNorm(); }
    bool normalized() const { return normalized_; }
    double discarded_mass() const { return discarded_; }
    double tail_mass() const;

    std::vector<std::string> warnings;

private:
    CVector amps_;
    Truncation trunc_;
    double discarded_;
    bool normalized_;
};

class DenseOperator {
public:
    // Flags are verified: hermitian needs max|M - M^H| <= 1e-10,
    // unitary needs max|M^H M - I| <= 1e-8. NumericalError otherwise.
    DenseOperator(CMatrix matrix, Truncation truncation, bool hermitian = false,
                  bool unitary = false);

    const CMatrix& matrix() const { return m_; }
    const Truncation& truncation() const { return trunc_; }
    bool hermitian() const { return hermitian_; }
    bool unitary() const { return unitary_; }

    DenseOperator adjoint() const;

private:
    CMatrix m_;
    Truncation trunc_;
    bool hermitian_;
    bool unitary_;
};

class DensityOperator {
public:
    // Hermitian to 1e-10, unit trace to 1e-8, and (when check_psd) minimum
    // eigenvalue >= -1e-8.
    DensityOperator(CMatrix matrix, Truncation truncation, bool check_psd = true);

    static DensityOperator from_ket(const KetState& psi);

    const CMatrix& matrix() const { return m_; }
    const Truncation& truncation() const { return trunc_; }
    double trace() const { return m_.trace().real(); }
    double purity() const;
    cplx expectation(const CMatrix& op) const;
    double tail_mass() const;

private:
    CMatrix m_;
    Truncation trunc_;
};

DenseOperator annihilator(int n_max);
DenseOperator embed(const DenseOperator& op, int mode_index, const Truncation& truncation);

// Diagonal of the number operator of `mode` (no dense matrix built).
RVector number_diagonal(const Truncation& t, int mode);

using SpectralFunction = std::function<cplx(double)>;

DenseOperator hermitian_function(const DenseOperator& h, const SpectralFunction& f);
DenseOperator unitary_from_hamiltonian(const DenseOperator& h, double t);
DenseOperator displacement(cplx alpha, int mode_index, const Truncation& truncation);

// Applies a single-mode operator to one mode of a ket without forming the
// full operator.
CVector apply_single_mode(const CMatrix& op, int mode_index, const Truncation& t,
                          const CVector& psi);

}  // namespace twinhet
