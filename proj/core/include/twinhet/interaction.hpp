#pragma once

#include <array>
#include <string>
#include <vector>

#include "twinhet/heterodyne.hpp"

namespace twinhet {

// Modes in basis order: a, b (system), c, d (probe). Energies in units of
// the coupling K, with hbar = 1 and K tau = 1 by default.
class FourModeSystem {
public:
    explicit FourModeSystem(int n_max = 5, double k_tau = 1.0);

    const Truncation& truncation() const { return trunc_; }
    double k_tau() const { return k_tau_; }
    const DenseOperator& a() const { return ops_[0]; }
    const DenseOperator& b() const { return ops_[1]; }
    const DenseOperator& c() const { return ops_[2]; }
    const DenseOperator& d() const { return ops_[3]; }

    CMatrix system_current() const;  // Z = a + b^H
    CMatrix probe_current() const;   // A = c + d^H

private:
    Truncation trunc_;
    double k_tau_;
    std::vector<DenseOperator> ops_;
};

// -(i/2) [(a^H c + b c + a d + b^H d) - h.c.]
DenseOperator build_hamiltonian(const FourModeSystem& sys);
// Z1 (c_{pi/2} + d_{pi/2}) - Z2 (c_0 - d_0), x_phi = (x^H e^{i phi} + x e^{-i phi})/2
DenseOperator hamiltonian_quadrature_form(const FourModeSystem& sys);
DenseOperator interaction_unitary(const FourModeSystem& sys);

// |<psi| U^H e^{i Re(conj(mu) A)} U |psi> - <psi| e^{i Re(conj(mu) (A + Z))} |psi>|
double heisenberg_shift_residual(const FourModeSystem& sys, const DenseOperator& u,
                                 const KetState& psi, cplx mu);
double heisenberg_shift_residual(const FourModeSystem& sys, const KetState& psi, cplx mu);

struct OutcomeMoments {
    cplx mean;         // E z
    double abs_sq;     // E |z|^2
    cplx square;       // E z^2
};

struct IndirectReport {
    OutcomeMoments probe;      // probe current after the coupling
    OutcomeMoments predicted;  // from F(z) on the system state
    double first_moment_error;
    double second_moment_error;
    double max_error;
    double boundary_mass;      // evolved probability on n = n_max states
};

// F(z) = Gaussian(delta_sq) smearing of the Z spectral measure, so
// E z = <Z>, E|z|^2 = <Z^H Z> + delta_sq, E z^2 = <Z^2>. Evaluated with `pad`
// extra levels so the truncation edge does not enter.
OutcomeMoments predicted_moments(const DensityOperator& rho_s, double delta_sq, int pad = 6);

IndirectReport indirect_measurement_check(const DensityOperator& rho_s, double det_lambda,
                                          const FourModeSystem& sys, const DenseOperator& u,
                                          double max_boundary_mass = 0.05);
IndirectReport indirect_measurement_check(const DensityOperator& rho_s, double det_lambda,
                                          const FourModeSystem& sys);

struct RestrictionCheck {
    std::string name;
    bool passed;
};

struct FrequencyPlan {
    double omega_a, omega_b, omega_c;
    double omega_d, omega_xi, omega_gamma;
    double tolerance;
    std::vector<RestrictionCheck> checks;

    bool valid() const;
    std::vector<std::string> failing() const;
};

FrequencyPlan plan_frequencies(double omega_a, double omega_b, double omega_c, double tol = 1e-9);

struct LadderOp {
    std::string mode;  // a b c d xi gamma
    bool dagger;
    std::string label() const { return dagger ? mode + "^dag" : mode; }
};

struct TrilinearTerm {
    std::array<LadderOp, 3> ops;  // field, field, pump (or a third field)
    std::string label() const;
    TrilinearTerm conjugate() const;
};

// Every trilinear product whose signed frequency sum vanishes within tol
// (annihilators count +omega, creators -omega): two distinct field modes with
// a pump, plus three distinct field modes with no pump. The pump-free products
// are what the restrictions keep off resonance; e.g. omega_c = omega_a + omega_b
// lets a^dag b^dag c through. No validity requirement.
std::vector<TrilinearTerm> enumerate_resonant_terms(const FrequencyPlan& plan);
// Same, but the plan must be valid.
std::vector<TrilinearTerm> resonant_terms(const FrequencyPlan& plan);
// a^dag c xi^dag, b^dag d xi^dag, a d gamma^dag, b c gamma^dag and conjugates
std::vector<TrilinearTerm> expected_resonant_terms();
bool same_terms(const std::vector<TrilinearTerm>& x, const std::vector<TrilinearTerm>& y);

}  // namespace twinhet
