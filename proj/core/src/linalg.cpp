#include "twinhet/linalg.hpp"

#include <cstdlib>
#include <string>
#include <vector>

#include "twinhet/errors.hpp"

// Fortran LAPACK entry points; the trailing size_t arguments are the hidden
// string lengths gfortran passes for CHARACTER parameters.
extern "C" {
void dsyevd_(const char* jobz, const char* uplo, const int* n, double* a, const int* lda,
             double* w, double* work, const int* lwork, int* iwork, const int* liwork,
             int* info, std::size_t, std::size_t);
void zheevd_(const char* jobz, const char* uplo, const int* n, std::complex<double>* a,
             const int* lda, double* w, std::complex<double>* work, const int* lwork,
             double* rwork, const int* lrwork, int* iwork, const int* liwork, int* info,
             std::size_t, std::size_t);
}

namespace twinhet {

namespace {

void check_square(Eigen::Index rows, Eigen::Index cols) {
    if (rows != cols || rows == 0) throw ValidationError("eigh: matrix must be square and non-empty");
}

template <class M, class V>
void check_residual_or_throw(const M& h, const V& vectors, const RVector& values) {
    double scale = h.cwiseAbs().maxCoeff();
    if (scale == 0.0) return;
    double res = (h * vectors - vectors * values.asDiagonal()).cwiseAbs().maxCoeff();
    if (!(res <= 1e-9 * scale)) {
        throw NumericalError("eigendecomposition residual " + std::to_string(res) +
                             " exceeds 1e-9 * " + std::to_string(scale));
    }
}

}  // namespace

RealEigen eigh(const RMatrix& h, bool check_residual) {
    check_square(h.rows(), h.cols());
    int n = static_cast<int>(h.rows());
    RealEigen out;
    out.vectors = h;
    out.values.resize(n);
    int info = 0, lwork = -1, liwork = -1, iwq = 0;
    double wq = 0;
    dsyevd_("V", "L", &n, out.vectors.data(), &n, out.values.data(), &wq, &lwork, &iwq,
            &liwork, &info, 1, 1);
    lwork = static_cast<int>(wq);
    liwork = iwq;
    std::vector<double> work(lwork);
    std::vector<int> iwork(liwork);
    dsyevd_("V", "L", &n, out.vectors.data(), &n, out.values.data(), work.data(), &lwork,
            iwork.data(), &liwork, &info, 1, 1);
    if (info != 0) throw NumericalError("dsyevd failed, info=" + std::to_string(info));
    if (check_residual) check_residual_or_throw(h, out.vectors, out.values);
    return out;
}

ComplexEigen eigh(const CMatrix& h, bool check_residual) {
    check_square(h.rows(), h.cols());
    int n = static_cast<int>(h.rows());
    ComplexEigen out;
    out.vectors = h;
    out.values.resize(n);
    int info = 0, lwork = -1, lrwork = -1, liwork = -1, iwq = 0;
    std::complex<double> wq;
    double rwq = 0;
    zheevd_("V", "L", &n, out.vectors.data(), &n, out.values.data(), &wq, &lwork, &rwq,
            &lrwork, &iwq, &liwork, &info, 1, 1);
    lwork = static_cast<int>(wq.real());
    lrwork = static_cast<int>(rwq);
    liwork = iwq;
    std::vector<std::complex<double>> work(lwork);
    std::vector<double> rwork(lrwork);
    std::vector<int> iwork(liwork);
    zheevd_("V", "L", &n, out.vectors.data(), &n, out.values.data(), work.data(), &lwork,
            rwork.data(), &lrwork, iwork.data(), &liwork, &info, 1, 1);
    if (info != 0) throw NumericalError("zheevd failed, info=" + std::to_string(info));
    if (check_residual) check_residual_or_throw(h, out.vectors, out.values);
    return out;
}

RVector eigvalsh(const CMatrix& h) {
    check_square(h.rows(), h.cols());
    int n = static_cast<int>(h.rows());
    CMatrix a = h;
    RVector w(n);
    int info = 0, lwork = -1, lrwork = -1, liwork = -1, iwq = 0;
    std::complex<double> wq;
    double rwq = 0;
    zheevd_("N", "L", &n, a.data(), &n, w.data(), &wq, &lwork, &rwq, &lrwork, &iwq, &liwork,
            &info, 1, 1);
    lwork = std::max(1, static_cast<int>(wq.real()));
    lrwork = std::max(1, static_cast<int>(rwq));
    liwork = std::max(1, iwq);
    std::vector<std::complex<double>> work(lwork);
    std::vector<double> rwork(lrwork);
    std::vector<int> iwork(liwork);
    zheevd_("N", "L", &n, a.data(), &n, w.data(), work.data(), &lwork, rwork.data(), &lrwork,
            iwork.data(), &liwork, &info, 1, 1);
    if (info != 0) throw NumericalError("zheevd failed, info=" + std::to_string(info));
    return w;
}

std::size_t memory_cap_bytes() {
    constexpr std::size_t mb = 1024 * 1024;
    if (const char* env = std::getenv("TWINHET_MEMORY_CAP_MB")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && v > 0) return static_cast<std::size_t>(v) * mb;
    }
    return 2048 * mb;
}

void require_dense_fits(std::size_t dim, const char* what) {
    long double bytes = static_cast<long double>(dim) * dim * sizeof(cplx);
    if (bytes > static_cast<long double>(memory_cap_bytes())) {
        throw CapacityError(std::string(what) + ": dense " + std::to_string(dim) + "x" +
                            std::to_string(dim) + " complex matrix exceeds memory cap");
    }
}

double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

double hermiticity_defect(const CMatrix& m) { return max_abs(m - m.adjoint()); }

}  // namespace twinhet
