#include <gtest/gtest.h>

#include <cmath>

#include "twinhet/errors.hpp"
#include "twinhet/twinbeam.hpp"

using namespace twinhet;

TEST(TwinBeamParams, GainAndRange) {
    TwinBeamParams p(0.5);
    EXPECT_NEAR(p.gain(), 1.0 / 0.75, 1e-12);
    EXPECT_THROW(TwinBeamParams(1.0), ValidationError);
    EXPECT_THROW(TwinBeamParams(-0.1), ValidationError);
}

TEST(DisplacedParams, ThetaRange) {
    DisplacedTwinBeamParams p(TwinBeamParams(0.2), cplx(-1.0, -0.0));
    EXPECT_DOUBLE_EQ(p.theta(), M_PI);
    EXPECT_NEAR(DisplacedTwinBeamParams(TwinBeamParams(0.2), cplx(0, 2)).theta(), M_PI / 2, 1e-15);
}

TEST(TwinBeams, LambdaZeroIsVacuum) {
    Truncation t(5, 2);
    KetState k = twin_beams(TwinBeamParams(0.0), t);
    EXPECT_EQ(k.amplitudes()(0), cplx(1.0));
    EXPECT_EQ(k.amplitudes().tail(t.dim() - 1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(TwinBeams, AmplitudeOnThreeThree) {
    Truncation t(40, 2);
    KetState k = twin_beams(TwinBeamParams(0.5), t);
    int occ[2] = {3, 3};
    EXPECT_NEAR(k.amplitudes()(t.index(occ)).real(), -0.108253175473, 1e-12);
    EXPECT_NEAR(k.discarded_mass(), std::pow(0.5, 82), 1e-30);
}

TEST(TwinBeams, PhotonDifferenceIsSharp) {
    for (double lam : {0.1, 0.5, 0.8}) {
        Truncation t(30, 2);
        KetState k = twin_beams(TwinBeamParams(lam), t);
        RVector diff = number_diagonal(t, 0) - number_diagonal(t, 1);
        RVector p = k.amplitudes().cwiseAbs2();
        double mean = diff.dot(p), second = diff.cwiseProduct(diff).dot(p);
        EXPECT_EQ(mean, 0.0);
        EXPECT_EQ(second - mean * mean, 0.0);
    }
}

TEST(TwinBeams, DiagonalSupportAlternatingSigns) {
    Truncation t(12, 2);
    KetState k = twin_beams(TwinBeamParams(0.4), t);
    for (std::size_t i = 0; i < t.dim(); ++i) {
        int na = t.occupation(i, 0), nb = t.occupation(i, 1);
        cplx v = k.amplitudes()(i);
        if (na != nb) {
            EXPECT_EQ(v, cplx(0));
        } else {
            EXPECT_EQ(v.real() > 0, na % 2 == 0);
        }
    }
}

TEST(TwinBeams, CapacityFailureNearUnitLambda) {
    EXPECT_THROW(twin_beams(TwinBeamParams(0.99999), Truncation(4, 2)), CapacityError);
}

TEST(TailRule, MatchesLogBound) {
    EXPECT_EQ(tail_rule_n_max(0.6), 19);
    EXPECT_EQ(tail_rule_n_max(0.0), 0);
}

TEST(DisplacedTwinBeams, ZeroDisplacementIsTwinBeam) {
    Truncation t(10, 2);
    KetState a = twin_beams(TwinBeamParams(0.3), t);
    KetState b = displaced_twin_beams(DisplacedTwinBeamParams(TwinBeamParams(0.3), 0.0), t);
    EXPECT_EQ((a.amplitudes() - b.amplitudes()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(DisplacedTwinBeams, CoherentSignalVacuumImage) {
    Truncation t(25, 2);
    KetState k = displaced_twin_beams(DisplacedTwinBeamParams(TwinBeamParams(0.0), 1.0), t);
    double p = std::exp(-1.0);
    for (int n = 0; n <= 10; ++n) {
        int occ[2] = {n, 0};
        EXPECT_NEAR(std::norm(k.amplitudes()(t.index(occ))), p, 1e-12);
        p /= (n + 1);
    }
}

TEST(DisplacedTwinBeams, MeanPhotonsMatchClosedForm) {
    DisplacedTwinBeamParams p(TwinBeamParams(0.6), 2.0);
    Truncation t(40, 2);
    KetState k = displaced_twin_beams(p, t);
    EXPECT_TRUE(k.warnings.empty());
    double bound = 10.0 * std::max(k.tail_mass(), k.discarded_mass()) * 2 * t.n_max() + 1e-10;
    EXPECT_NEAR(mean_photons_numeric(k), mean_photons_closed_form(p), bound);
}

TEST(DisplacedTwinBeams, WarnsWhenOverloaded) {
    KetState k = displaced_twin_beams(DisplacedTwinBeamParams(TwinBeamParams(0.5), 3.0), Truncation(8, 2));
    EXPECT_FALSE(k.warnings.empty());
}

TEST(MeanPhotons, ClosedFormValues) {
    EXPECT_DOUBLE_EQ(mean_photons_closed_form(DisplacedTwinBeamParams(TwinBeamParams(0.0), 2.0)), 4.0);
    EXPECT_NEAR(mean_photons_closed_form(DisplacedTwinBeamParams(TwinBeamParams(0.5), 0.0)), 2.0 / 3.0, 1e-15);
    EXPECT_EQ(mean_photons_closed_form(DisplacedTwinBeamParams(TwinBeamParams(0.0), 0.0)), 0.0);
}

TEST(MeanPhotons, NumericValues) {
    Truncation t(6, 2);
    int vac[2] = {0, 0}, f23[2] = {2, 3};
    EXPECT_EQ(mean_photons_numeric(KetState::basis(t, vac)), 0.0);
    EXPECT_EQ(mean_photons_numeric(KetState::basis(t, f23)), 5.0);
    KetState tb = twin_beams(TwinBeamParams(0.5), Truncation(40, 2));
    EXPECT_NEAR(mean_photons_numeric(tb), 2.0 / 3.0, 1e-9);
}

TEST(OptimalSplit, Values) {
    DisplacedTwinBeamParams a = optimal_split(20);
    EXPECT_NEAR(a.lambda(), 0.9, 1e-15);
    EXPECT_NEAR(std::norm(a.w()), 10.0, 1e-12);
    DisplacedTwinBeamParams b = optimal_split(4, 0.3);
    EXPECT_NEAR(b.lambda(), 0.5, 1e-15);
    EXPECT_NEAR(std::norm(b.w()), 2.0, 1e-12);
    EXPECT_NEAR(b.theta(), 0.3, 1e-15);
    EXPECT_THROW(optimal_split(2.0), ValidationError);
}

TEST(OptimalSplit, PhotonGapAgainstNominal) {
    for (double nb : {4.0, 10.0, 20.0, 40.0}) {
        DisplacedTwinBeamParams p = optimal_split(nb);
        double lam = 1 - 2 / nb;
        double gap = 2 * lam * lam / (1 - lam * lam) - nb / 2;
        EXPECT_NEAR(mean_photons_closed_form(p) - nb, gap, 1e-12);
        // lambda^2/(1-lambda^2) at lambda = 1 - 2/n is (n-2)^2/(4(n-1))
        EXPECT_NEAR(gap, (nb - 2) * (nb - 2) / (2 * (nb - 1)) - nb / 2, 1e-12);
    }
}
