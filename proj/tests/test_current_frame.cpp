#include <gtest/gtest.h>

#include <cmath>

#include "twinhet/current_frame.hpp"
#include "twinhet/errors.hpp"
#include "twinhet/twinbeam.hpp"

using namespace twinhet;

namespace {

KetState dtb(double lambda, cplx w, int n_max) {
    return displaced_twin_beams(DisplacedTwinBeamParams(TwinBeamParams(lambda), w), Truncation(n_max, 2));
}

}  // namespace

TEST(CurrentFrame, CutoffRule) {
    EXPECT_EQ(frame_cutoff_for(30, 0.5), 60);
    EXPECT_EQ(frame_cutoff_for(4, 0.25), 64);
    EXPECT_THROW(frame_cutoff_for(4, 0.0), ValidationError);
}

TEST(CurrentFrame, NodesSymmetric) {
    CurrentFrame f(9);
    EXPECT_EQ(f.side(), 10);
    const RVector& x = f.nodes();
    for (int i = 0; i < f.side(); ++i) EXPECT_NEAR(x(i), -x(f.side() - 1 - i), 1e-12);
    EXPECT_THROW(CurrentFrame(-1), ValidationError);
}

TEST(CurrentFrame, IsometryWhenCutoffCoversTotal) {
    Truncation t(6, 2);
    CMatrix c = CurrentFrame(12).isometry(t);
    EXPECT_LT(max_abs(c.adjoint() * c - CMatrix::Identity(t.dim(), t.dim())), 1e-12);
    // a short frame loses the high-total states
    CMatrix s = CurrentFrame(8).isometry(t);
    EXPECT_GT(max_abs(s.adjoint() * s - CMatrix::Identity(t.dim(), t.dim())), 0.1);
}

TEST(CurrentFrame, KetMatchesIsometry) {
    KetState psi = dtb(0.4, cplx(0.3, -0.7), 8);
    CurrentFrame f(16);
    double dropped = 1;
    CMatrix k = f.ket(psi, &dropped);
    CVector v = f.isometry(psi.truncation()) * psi.amplitudes();
    for (int i = 0; i < f.side(); ++i)
        for (int j = 0; j < f.side(); ++j) EXPECT_NEAR(std::abs(k(i, j) - v(i * f.side() + j)), 0, 1e-12);
    EXPECT_LT(dropped, 1e-12);
}

TEST(CurrentFrame, CurrentIsDiagonal) {
    // C Z C^H = diag(zeta) on the image of the Fock interior
    Truncation t(6, 2);
    CurrentFrame f(12);
    CMatrix c = f.isometry(t);
    int occ[2] = {1, 2};
    KetState psi = KetState::basis(t, occ);
    CVector zpsi = current_matrix(t).cast<cplx>() * psi.amplitudes();
    CVector lhs = c * zpsi;
    CVector img = c * psi.amplitudes();
    for (int i = 0; i < f.side(); ++i)
        for (int j = 0; j < f.side(); ++j) {
            Eigen::Index r = i * f.side() + j;
            EXPECT_NEAR(std::abs(lhs(r) - f.zeta(i, j) * img(r)), 0, 1e-10);
        }
}

TEST(FrameState, MeanMatchesFock) {
    KetState psi = dtb(0.5, cplx(0.8, -0.4), 24);
    CurrentFrame f(48);
    FrameState s = FrameState::from_fock(f, psi);
    CVector z = current_matrix(psi.truncation()).cast<cplx>() * psi.amplitudes();
    cplx fock = psi.amplitudes().dot(z);
    EXPECT_NEAR(std::abs(frame_mean(f, s) - fock), 0, 1e-9);
    EXPECT_NEAR(std::abs(fock - cplx(0.8, -0.4)), 0, 1e-9);
}

TEST(FrameState, MixedAgreesWithPure) {
    KetState psi = dtb(0.3, cplx(0.2, 0.5), 6);
    CurrentFrame f(12);
    FrameState p = FrameState::from_fock(f, psi);
    FrameState m = FrameState::from_fock(f, DensityOperator::from_ket(psi));
    EXPECT_TRUE(p.is_pure());
    EXPECT_FALSE(m.is_pure());
    EXPECT_LT((p.populations() - m.populations()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(m.purity(), 1.0, 1e-10);
    EXPECT_NEAR(p.purity(), 1.0, 1e-12);
    EXPECT_THROW(FrameState::mixed(CMatrix::Identity(5, 5)), ValidationError);
}

TEST(FrameDensity, MatchesClosedForm) {
    KetState psi = dtb(0.6, 1.0, 30);
    CurrentFrame f(60);
    FrameState s = FrameState::from_fock(f, psi);
    DetectorParams det(0.6);
    for (cplx z : {cplx(1, 0), cplx(1.5, 0.4), cplx(-0.5, 0.8), cplx(1, -2)})
        EXPECT_NEAR(frame_density(f, s, z, det.delta_sq()), closed_form_density(1.0, 0.6, z, det), 1e-6);
}

TEST(FrameDensity, GridAndRectangle) {
    KetState psi = dtb(0.3, cplx(0.5, 0.1), 8);
    CurrentFrame f(16);
    FrameState s = FrameState::from_fock(f, psi);
    const double d = 0.7;
    RVector xs = RVector::LinSpaced(5, -1, 2), ys = RVector::LinSpaced(4, -1.5, 1);
    RMatrix g = frame_density_grid(f, s, xs, ys, d);
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 4; ++b) EXPECT_NEAR(g(a, b), frame_density(f, s, cplx(xs(a), ys(b)), d), 1e-14);
    EXPECT_NEAR(frame_rectangle_mass(f, s, -30, 30, -30, 30, d), 1.0, 1e-12);
    double half = frame_rectangle_mass(f, s, -30, 30, -30, 0.1, d) +
                  frame_rectangle_mass(f, s, -30, 30, 0.1, 30, d);
    EXPECT_NEAR(half, 1.0, 1e-12);
}

TEST(FrameDensity, VarianceAddsDetector) {
    KetState psi = dtb(0.5, 0.0, 20);
    CurrentFrame f(40);
    FrameState s = FrameState::from_fock(f, psi);
    auto [vx, vy] = frame_outcome_variance(f, s, 0.4);
    EXPECT_NEAR(vx, (1.0 / 3 + 0.4) / 2, 1e-9);
    EXPECT_NEAR(vy, (1.0 / 3 + 0.4) / 2, 1e-9);
}

TEST(FrameReduce, AgreesWithFock) {
    // n_max = 24 keeps the Fock edge out of the posterior mean
    KetState psi = dtb(0.5, cplx(0.2, 0.1), 24);
    DensityOperator rho = DensityOperator::from_ket(psi);
    DetectorParams det(0.3);
    cplx z(0.9, -0.4);
    ReductionResult direct = reduce_state(rho, z, det);
    CurrentFrame f(frame_cutoff_for(24, det.delta_sq()));
    FrameReduction r = frame_reduce(f, FrameState::from_fock(f, psi), z, det.delta_sq());
    EXPECT_NEAR(r.density, direct.outcome.density, 1e-6);
    EXPECT_NEAR(r.state.purity(), 1.0, 1e-12);
    cplx fock_mean = direct.state.expectation(current_matrix(rho.truncation()).cast<cplx>());
    EXPECT_NEAR(std::abs(frame_mean(f, r.state) - fock_mean), 0, 1e-7);
}

TEST(FrameReduce, FloorError) {
    KetState psi = dtb(0.3, 0.0, 4);
    CurrentFrame f(8);
    EXPECT_THROW(frame_reduce(f, FrameState::from_fock(f, psi), cplx(80, 0), 0.5), NumericalError);
}

TEST(FrameReduceEta, MixesAndNormalizes) {
    KetState psi = dtb(0.3, cplx(0.2, 0.1), 10);
    DetectorParams det(0.3, 0.8);
    CurrentFrame f(frame_cutoff_for(10, det.ideal_delta_sq()));
    FrameState s = FrameState::from_fock(f, psi);
    cplx z(0.4, 0.2);
    FrameReduction r = frame_reduce_eta(f, s, z, det);
    EXPECT_LT(r.state.purity(), 1 - 1e-3);
    EXPECT_NEAR(r.state.density_matrix().trace().real(), 1.0, 1e-12);
    // the trace before normalization is the eta-smeared density
    EXPECT_NEAR(r.density, frame_density(f, s, z, det.delta_sq()), 1e-7);
    EXPECT_NEAR(r.density, closed_form_density(cplx(0.2, 0.1), 0.3, z, det), 1e-7);
    // and matches the direct Fock route
    ReductionResult d = reduce_state_eta(DensityOperator::from_ket(psi), z, det);
    EXPECT_NEAR(r.density, d.outcome.density, 1e-5);
    EXPECT_NEAR(r.state.purity(), d.purity, 1e-3);
}

TEST(FrameReduceEta, NearOneMatchesIdeal) {
    KetState psi = dtb(0.3, cplx(0.2, 0.1), 6);
    CurrentFrame f(12);
    FrameState s = FrameState::from_fock(f, psi);
    cplx z(0.4, 0.2);
    FrameReduction ideal = frame_reduce(f, s, z, DetectorParams(0.3).delta_sq());
    FrameReduction lossy = frame_reduce_eta(f, s, z, DetectorParams(0.3, 1 - 1e-7));
    EXPECT_LT(max_abs(ideal.state.density_matrix() - lossy.state.density_matrix()), 1e-5);
    EXPECT_GT(lossy.state.purity(), 1 - 1e-5);
}

TEST(FrameReduceEta, CoverageCheck) {
    KetState psi = dtb(0.3, 0.0, 4);
    CurrentFrame f(8);
    EXPECT_THROW(frame_reduce_eta(f, FrameState::from_fock(f, psi), 0.0, DetectorParams(0.3, 0.8),
                                  QuadratureGrid{1.5, 41}),
                 NumericalError);
}

TEST(FramePhase, NormalizedAndFlatForVacuum) {
    KetState vac = dtb(0.0, 0.0, 4);
    KetState psi = dtb(0.4, std::polar(1.2, 0.8), 12);
    CurrentFrame f0(frame_cutoff_for(4, 0.5)), f(frame_cutoff_for(12, 0.5));
    FrameState v = FrameState::from_fock(f0, vac), s = FrameState::from_fock(f, psi);
    const int n = 256;
    double mass = 0;
    for (int q = 0; q < n; ++q) {
        double phi = -M_PI + 2 * M_PI * q / n;
        EXPECT_NEAR(frame_phase_density(f0, v, phi, 0.5), 1.0 / (2 * M_PI), 1e-9);
        mass += frame_phase_density(f, s, phi, 0.5);
    }
    EXPECT_NEAR(mass * 2 * M_PI / n, 1.0, 1e-9);
}
