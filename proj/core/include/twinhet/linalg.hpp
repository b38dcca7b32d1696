#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace twinhet {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr cplx I_UNIT{0.0, 1.0};

// Eigenpairs in ascending order; columns of `vectors` are orthonormal.
struct RealEigen {
    RVector values;
    RMatrix vectors;
};

struct ComplexEigen {
    RVector values;
    CMatrix vectors;
};

// Full symmetric/Hermitian eigendecompositions (LAPACK divide and conquer).
// With check_residual the result must satisfy max|hV - V diag(w)| <= 1e-9 max|h|,
// otherwise NumericalError is thrown.
RealEigen eigh(const RMatrix& h, bool check_residual = true);
ComplexEigen eigh(const CMatrix& h, bool check_residual = true);
RVector eigvalsh(const CMatrix& h);

// Upper bound on bytes for any single dense buffer. Read from
// TWINHET_MEMORY_CAP_MB when set, 2048 MB otherwise.
std::size_t memory_cap_bytes();

// Throws CapacityError when a dim x dim complex matrix does not fit under the cap.
void require_dense_fits(std::size_t dim, const char* what);

double max_abs(const CMatrix& m);
double hermiticity_defect(const CMatrix& m);

}  // namespace twinhet
