#include "twinhet/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "twinhet/errors.hpp"
#include "twinhet/twinbeam.hpp"

namespace twinhet {

namespace {

CMatrix hermitize(const CMatrix& m) { return (m + m.adjoint()) * 0.5; }

// <phi| e^{i x} |phi> from one eigendecomposition of the Hermitian x
cplx exp_i_expectation(const CMatrix& x, const CVector& phi) {
    ComplexEigen e = eigh(hermitize(x));
    CVector y = e.vectors.adjoint() * phi;
    cplx s = 0;
    for (Eigen::Index k = 0; k < y.size(); ++k) s += std::polar(1.0, e.values(k)) * std::norm(y(k));
    return s;
}

// Embed a two-mode (a, b) state of the system truncation into modes 0,1 of a
// wider two-mode truncation.
CMatrix pad_two_mode(const CMatrix& rho, const Truncation& from, const Truncation& to) {
    CMatrix out = CMatrix::Zero(to.dim(), to.dim());
    std::vector<std::size_t> map(from.dim());
    for (std::size_t i = 0; i < from.dim(); ++i) map[i] = to.index(from.occupations(i));
    for (std::size_t i = 0; i < from.dim(); ++i)
        for (std::size_t j = 0; j < from.dim(); ++j) out(map[i], map[j]) = rho(i, j);
    return out;
}

double boundary_mass(const CVector& phi, const Truncation& t) {
    double s = 0;
    for (std::size_t i = 0; i < t.dim(); ++i)
        if (t.on_boundary(i)) s += std::norm(phi(i));
    return s;
}

}  // namespace

FourModeSystem::FourModeSystem(int n_max, double k_tau) : trunc_(n_max, 4), k_tau_(k_tau) {
    if (n_max < 1) throw ValidationError("FourModeSystem: n_max must be >= 1");
    require_dense_fits(trunc_.dim(), "FourModeSystem");
    DenseOperator a1 = annihilator(n_max);
    for (int m = 0; m < 4; ++m) ops_.push_back(embed(a1, m, trunc_));
}

CMatrix FourModeSystem::system_current() const { return a().matrix() + b().matrix().adjoint(); }
CMatrix FourModeSystem::probe_current() const { return c().matrix() + d().matrix().adjoint(); }

DenseOperator build_hamiltonian(const FourModeSystem& sys) {
    const CMatrix& a = sys.a().matrix();
    const CMatrix& b = sys.b().matrix();
    const CMatrix& c = sys.c().matrix();
    const CMatrix& d = sys.d().matrix();
    CMatrix x = a.adjoint() * c + b * c + a * d + b.adjoint() * d;
    CMatrix h = -0.5 * I_UNIT * (x - x.adjoint());
    return DenseOperator(hermitize(h), sys.truncation(), true);
}

DenseOperator hamiltonian_quadrature_form(const FourModeSystem& sys) {
    CMatrix z = sys.system_current();
    CMatrix z1 = (z + z.adjoint()) * 0.5;
    CMatrix z2 = (z - z.adjoint()) / (2.0 * I_UNIT);
    auto quad = [](const CMatrix& m, double phi) {
        return CMatrix((m.adjoint() * std::polar(1.0, phi) + m * std::polar(1.0, -phi)) * 0.5);
    };
    const CMatrix& c = sys.c().matrix();
    const CMatrix& d = sys.d().matrix();
    CMatrix h = z1 * (quad(c, M_PI / 2) + quad(d, M_PI / 2)) - z2 * (quad(c, 0.0) - quad(d, 0.0));
    return DenseOperator(hermitize(h), sys.truncation(), true);
}

DenseOperator interaction_unitary(const FourModeSystem& sys) {
    return unitary_from_hamiltonian(build_hamiltonian(sys), sys.k_tau());
}

double heisenberg_shift_residual(const FourModeSystem& sys, const DenseOperator& u,
                                 const KetState& psi, cplx mu) {
    const Truncation& t = sys.truncation();
    if (!(psi.truncation() == t)) throw ValidationError("heisenberg_shift_residual: truncation mismatch");
    for (int m = 0; m < 4; ++m) {
        double nm = (number_diagonal(t, m).array() * psi.amplitudes().cwiseAbs2().array()).sum();
        if (nm > t.n_max() / 4.0)
            throw ValidationError("heisenberg_shift_residual: state too energetic for the truncation");
    }
    if (mu == cplx(0)) return 0.0;  // f = 1 on both sides

    CMatrix a = sys.probe_current();
    CMatrix s = a + sys.system_current();
    auto re_part = [&](const CMatrix& m) {
        return CMatrix((std::conj(mu) * m + mu * m.adjoint()) * 0.5);
    };
    CVector evolved = u.matrix() * psi.amplitudes();
    cplx lhs = exp_i_expectation(re_part(a), evolved);
    cplx rhs = exp_i_expectation(re_part(s), psi.amplitudes());
    return std::abs(lhs - rhs);
}

double heisenberg_shift_residual(const FourModeSystem& sys, const KetState& psi, cplx mu) {
    return heisenberg_shift_residual(sys, interaction_unitary(sys), psi, mu);
}

OutcomeMoments predicted_moments(const DensityOperator& rho_s, double delta_sq, int pad) {
    const Truncation& from = rho_s.truncation();
    if (from.n_modes() != 2) throw ValidationError("predicted_moments: needs a two-mode state");
    Truncation wide(from.n_max() + pad, 2);
    CMatrix rho = pad_two_mode(rho_s.matrix(), from, wide);
    CMatrix z = current_matrix(wide).cast<cplx>();
    auto expect = [&](const CMatrix& op) { return op.cwiseProduct(rho.transpose()).sum(); };
    OutcomeMoments m;
    m.mean = expect(z);
    m.abs_sq = expect(z.adjoint() * z).real() + delta_sq;
    m.square = expect(z * z);
    return m;
}

IndirectReport indirect_measurement_check(const DensityOperator& rho_s, double det_lambda,
                                          const FourModeSystem& sys, const DenseOperator& u,
                                          double max_boundary_mass) {
    const Truncation& t4 = sys.truncation();
    Truncation t2(t4.n_max(), 2);
    if (!(rho_s.truncation() == t2))
        throw ValidationError("indirect_measurement_check: system state must share n_max");
    KetState probe = twin_beams(TwinBeamParams(det_lambda), t2);

    // rho_S = sum_k p_k |s_k><s_k|; evolve each s_k (x) probe separately
    ComplexEigen es = eigh(rho_s.matrix());
    CMatrix a = sys.probe_current();
    OutcomeMoments ev{0.0, 0.0, 0.0};
    double edge = 0;
    for (Eigen::Index k = 0; k < es.values.size(); ++k) {
        double pk = es.values(k);
        if (pk < 1e-14) continue;
        CVector in(t4.dim());
        const CVector& sk = es.vectors.col(k);
        for (std::size_t i = 0; i < t2.dim(); ++i)
            in.segment(i * t2.dim(), t2.dim()) = sk(i) * probe.amplitudes();
        CVector phi = u.matrix() * in;
        CVector aphi = a * phi;
        ev.mean += pk * phi.dot(aphi);
        ev.abs_sq += pk * aphi.squaredNorm();
        ev.square += pk * phi.dot(a * aphi);
        edge += pk * boundary_mass(phi, t4);
    }
    if (edge > max_boundary_mass)
        throw NumericalError("indirect_measurement_check: evolved boundary mass " +
                             std::to_string(edge) + " too large for n_max=" +
                             std::to_string(t4.n_max()));

    IndirectReport r;
    r.probe = ev;
    r.predicted = predicted_moments(rho_s, DetectorParams(det_lambda).delta_sq());
    r.first_moment_error = std::abs(ev.mean - r.predicted.mean);
    r.second_moment_error = std::max(std::abs(ev.abs_sq - r.predicted.abs_sq),
                                     std::abs(ev.square - r.predicted.square));
    r.max_error = std::max(r.first_moment_error, r.second_moment_error);
    r.boundary_mass = edge;
    return r;
}

IndirectReport indirect_measurement_check(const DensityOperator& rho_s, double det_lambda,
                                          const FourModeSystem& sys) {
    return indirect_measurement_check(rho_s, det_lambda, sys, interaction_unitary(sys));
}

bool FrequencyPlan::valid() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

std::vector<std::string> FrequencyPlan::failing() const {
    std::vector<std::string> f;
    for (const auto& c : checks)
        if (!c.passed) f.push_back(c.name);
    return f;
}

FrequencyPlan plan_frequencies(double wa, double wb, double wc, double tol) {
    if (!(wa > 0 && wb > wa && wc > 0)) throw ValidationError("plan_frequencies: need 0 < omega_a < omega_b, omega_c > 0");
    if (!(tol >= 0)) throw ValidationError("plan_frequencies: tolerance must be >= 0");
    FrequencyPlan p{wa, wb, wc, wc + wb - wa, wc - wa, wc + wb, tol, {}};
    auto differs = [tol](double l, double r) { return std::abs(l - r) > tol; };
    p.checks = {
        {"omega_b != 2 omega_a", differs(wb, 2 * wa)},
        {"omega_c > omega_b", wc - wb > tol},
        {"omega_c != 3/2 omega_a", differs(wc, 1.5 * wa)},
        {"omega_c != 2 omega_a", differs(wc, 2 * wa)},
        {"omega_c != omega_a + omega_b/2", differs(wc, wa + wb / 2)},
        {"omega_c != omega_a + omega_b", differs(wc, wa + wb)},
        {"omega_c != 2 omega_a + omega_b", differs(wc, 2 * wa + wb)},
    };
    return p;
}

namespace {

const std::array<LadderOp, 8> kFieldOps = {{{"a", false}, {"a", true}, {"b", false}, {"b", true},
                                            {"c", false}, {"c", true}, {"d", false}, {"d", true}}};
const std::array<LadderOp, 4> kPumpOps = {{{"xi", false}, {"xi", true}, {"gamma", false}, {"gamma", true}}};

int field_rank(const LadderOp& op) {
    for (std::size_t i = 0; i < kFieldOps.size(); ++i)
        if (kFieldOps[i].mode == op.mode && kFieldOps[i].dagger == op.dagger) return static_cast<int>(i);
    throw ValidationError("unknown field operator " + op.label());
}

double frequency_of(const FrequencyPlan& p, const LadderOp& op) {
    double w = 0;
    if (op.mode == "a") w = p.omega_a;
    else if (op.mode == "b") w = p.omega_b;
    else if (op.mode == "c") w = p.omega_c;
    else if (op.mode == "d") w = p.omega_d;
    else if (op.mode == "xi") w = p.omega_xi;
    else if (op.mode == "gamma") w = p.omega_gamma;
    return op.dagger ? -w : w;
}

bool is_pump(const LadderOp& op) { return op.mode == "xi" || op.mode == "gamma"; }

TrilinearTerm canonical(LadderOp f1, LadderOp f2, LadderOp third) {
    if (field_rank(f2) < field_rank(f1)) std::swap(f1, f2);
    if (!is_pump(third)) {
        if (field_rank(third) < field_rank(f2)) std::swap(f2, third);
        if (field_rank(f2) < field_rank(f1)) std::swap(f1, f2);
    }
    return {{f1, f2, third}};
}

}  // namespace

std::string TrilinearTerm::label() const {
    return ops[0].label() + " " + ops[1].label() + " " + ops[2].label();
}

TrilinearTerm TrilinearTerm::conjugate() const {
    auto flip = [](LadderOp o) { o.dagger = !o.dagger; return o; };
    return canonical(flip(ops[0]), flip(ops[1]), flip(ops[2]));
}

std::vector<TrilinearTerm> enumerate_resonant_terms(const FrequencyPlan& plan) {
    std::vector<TrilinearTerm> out;
    for (std::size_t i = 0; i < kFieldOps.size(); ++i)
        for (std::size_t j = i + 1; j < kFieldOps.size(); ++j) {
            if (kFieldOps[i].mode == kFieldOps[j].mode) continue;
            for (const auto& pump : kPumpOps) {
                double s = frequency_of(plan, kFieldOps[i]) + frequency_of(plan, kFieldOps[j]) +
                           frequency_of(plan, pump);
                if (std::abs(s) <= plan.tolerance) out.push_back(canonical(kFieldOps[i], kFieldOps[j], pump));
            }
            // three distinct signal modes mixing on their own
            for (std::size_t k = j + 1; k < kFieldOps.size(); ++k) {
                if (kFieldOps[k].mode == kFieldOps[i].mode || kFieldOps[k].mode == kFieldOps[j].mode) continue;
                double s = frequency_of(plan, kFieldOps[i]) + frequency_of(plan, kFieldOps[j]) +
                           frequency_of(plan, kFieldOps[k]);
                if (std::abs(s) <= plan.tolerance)
                    out.push_back(canonical(kFieldOps[i], kFieldOps[j], kFieldOps[k]));
            }
        }
    return out;
}

std::vector<TrilinearTerm> resonant_terms(const FrequencyPlan& plan) {
    if (!plan.valid()) throw ValidationError("resonant_terms: plan violates restrictions");
    return enumerate_resonant_terms(plan);
}

std::vector<TrilinearTerm> expected_resonant_terms() {
    std::vector<TrilinearTerm> base = {
        canonical({"a", true}, {"c", false}, {"xi", true}),
        canonical({"b", true}, {"d", false}, {"xi", true}),
        canonical({"a", false}, {"d", false}, {"gamma", true}),
        canonical({"b", false}, {"c", false}, {"gamma", true}),
    };
    std::vector<TrilinearTerm> all = base;
    for (const auto& t : base) all.push_back(t.conjugate());
    return all;
}

bool same_terms(const std::vector<TrilinearTerm>& x, const std::vector<TrilinearTerm>& y) {
    std::set<std::string> sx, sy;
    for (const auto& t : x) sx.insert(t.label());
    for (const auto& t : y) sy.insert(t.label());
    return sx == sy && sx.size() == x.size() && sy.size() == y.size();
}

}  // namespace twinhet
