#pragma once

#include "twinhet/fock.hpp"

namespace twinhet {

class DetectorParams {
public:
    DetectorParams(double lambda, double eta = 1.0);

    double lambda() const { return lambda_; }
    double eta() const { return eta_; }
    // (1-lambda)/(1+lambda): the probe's own spread, what an eta = 1 detector adds
    double ideal_delta_sq() const { return (1.0 - lambda_) / (1.0 + lambda_); }
    // (1-eta)/eta: extra Gaussian smear from lost photons
    double smear_sq() const { return (1.0 - eta_) / eta_; }
    double delta_sq() const { return ideal_delta_sq() + smear_sq(); }

private:
    double lambda_;
    double eta_;
};

struct HeterodyneOutcome {
    cplx z;
    double density = 0.0;
    double phase() const { return std::arg(z); }
};

struct ReductionResult {
    DensityOperator state;
    HeterodyneOutcome outcome;
    double purity;
};

struct CurrentOperator {
    DenseOperator z;   // a + b^H
    DenseOperator z1;  // (Z + Z^H)/2
    DenseOperator z2;  // (Z - Z^H)/(2i)
};

// Tensor grid for the eta < 1 smearing integral, centered on the outcome.
struct QuadratureGrid {
    double halfwidth_sigmas = 6.0;
    int nodes_per_axis = 41;
};

CurrentOperator current_operator(const Truncation& t, int signal = 0, int image = 1);

// Real matrix of Z = a + b^H on a two-mode truncation, modes (0, 1).
RMatrix current_matrix(const Truncation& t);

// n_a - n_b for every basis index; exp(i phi s) rotates Z by exp(-i phi).
Eigen::VectorXi sector_charge(const Truncation& t);

DenseOperator pom_element(cplx z, const DetectorParams& det, const Truncation& t);
DenseOperator amplitude_operator(cplx z, const DetectorParams& det, const Truncation& t);
double outcome_density(const DensityOperator& rho, cplx z, const DetectorParams& det);
double outcome_density(const KetState& psi, cplx z, const DetectorParams& det);
double closed_form_density(cplx w, double state_lambda, cplx z, const DetectorParams& det);

ReductionResult reduce_state(const DensityOperator& rho, cplx z, const DetectorParams& det);
ReductionResult reduce_state_eta(const DensityOperator& rho, cplx z, const DetectorParams& det,
                                 const QuadratureGrid& quad = {});

DenseOperator phase_pom(double phi, const DetectorParams& det, const Truncation& t);
double phase_density(const DensityOperator& rho, double phi, const DetectorParams& det);
double phase_density(const KetState& psi, double phi, const DetectorParams& det);

// libm error functions, exported for the phase kernel
double erf(double x);
double erfc(double x);

// Phase-marginal kernel at a point zeta of the joint (Z1, Z2) spectrum:
// exp(-v^2/D^2) [exp(-u^2/D^2)/(2 pi) + u/(2 sqrt(pi) D) erfc(-u/D)],
// u + iv = zeta exp(-i phi). Clamped at 0.
double phase_kernel(cplx zeta, double phi, double delta_sq);

// Phase marginal of the Gaussian exp(-|z-w|^2/S^2)/(pi S^2); same kernel at zeta = w.
double gaussian_phase_marginal(cplx w, double sigma_sq, double phi);

// F(z) and Omega(z) on the circle |z| = r from one real eigendecomposition of
// M(r) = (Z - r)^T (Z - r). With U = diag(exp(i phi s)), M(r e^{i phi}) = U M(r) U^H
// exactly, so one decomposition serves every angle.
class RadialPom {
public:
    RadialPom(double r, double delta_sq, const Truncation& t);

    double radius() const { return r_; }
    double delta_sq() const { return dsq_; }
    const RVector& spectrum() const { return eig_.values; }

    double density(const CVector& psi, double phi) const;
    double density(const CMatrix& rho, double phi) const;

    // Real F(r); rotated operators below
    RMatrix pom_real() const;
    CMatrix pom(double phi) const;
    // Omega with the spectral Gaussian at width `delta_sq` (phase factor included)
    CMatrix amplitude(double phi) const;

private:
    CMatrix rotate(const RMatrix& m, double phi) const;

    double r_;
    double dsq_;
    Truncation trunc_;
    Eigen::VectorXi charge_;
    RealEigen eig_;
};

// Gauss-Legendre rule on [a, b] (Golub-Welsch).
void gauss_legendre(int n, double a, double b, RVector& nodes, RVector& weights);

struct CompletenessReport {
    CMatrix integral;        // quadrature of F(z) over the disk
    double radius;           // disk radius
    double block_deviation;  // max |integral - I| on n_a, n_b <= n_max/2
};

// Polar rule: Gauss-Legendre in r, equally spaced trapezoid in phi. Radius is
// halfwidth_sigmas times the largest per-axis outcome spread of the block,
// sqrt((n_max + 1 + delta_sq)/2).
CompletenessReport pom_completeness(const DetectorParams& det, const Truncation& t,
                                    int radial_nodes = 201, int angular_nodes = 201,
                                    double halfwidth_sigmas = 6.0);

// int_0^r_max P(r e^{i phi}) r dr with Gauss-Legendre nodes, for each phi.
std::vector<double> radial_phase_marginal(const KetState& psi, const std::vector<double>& phis,
                                          const DetectorParams& det, double r_max, int radial_nodes);

}  // namespace twinhet
