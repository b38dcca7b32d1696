#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "twinhet/errors.hpp"
#include "twinhet/experiments.hpp"

using namespace twinhet;

namespace {

KetState dtb(double lambda, cplx w, int n_max) {
    return displaced_twin_beams(DisplacedTwinBeamParams(TwinBeamParams(lambda), w), Truncation(n_max, 2));
}

double normal_cdf(double x, double mean, double var) {
    return 0.5 * std::erfc(-(x - mean) / std::sqrt(2 * var));
}

// sup |F_emp - F| for sorted samples
double ks_distance(std::vector<double> xs, double mean, double var) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double f = normal_cdf(xs[i], mean, var);
        d = std::max({d, std::abs((i + 1) / n - f), std::abs(i / n - f)});
    }
    return d;
}

}  // namespace

TEST(SamplerSpec, Validate) {
    EXPECT_NO_THROW(SamplerSpec{}.validate());
    EXPECT_THROW((SamplerSpec{6.0, 20, 0}).validate(), ValidationError);
    EXPECT_THROW((SamplerSpec{6.0, 19, 0}).validate(), ValidationError);
    EXPECT_THROW((SamplerSpec{0.0, 41, 0}).validate(), ValidationError);
}

TEST(CounterRng, DeterministicAndSplit) {
    CounterRng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        std::uint64_t x = a.next();
        EXPECT_EQ(x, b.next());
        EXPECT_NE(x, c.next());
    }
    CounterRng s1 = a.split(1), s2 = a.split(2);
    EXPECT_NE(s1.next(), s2.next());
    double sum = 0;
    CounterRng u(7);
    for (int i = 0; i < 20000; ++i) {
        double v = u.uniform();
        ASSERT_GE(v, 0.0);
        ASSERT_LT(v, 1.0);
        sum += v;
    }
    EXPECT_NEAR(sum / 20000, 0.5, 0.01);
}

TEST(Sampler, GaussianMomentsAndKs) {
    const double ls = 0.5;
    cplx w(1.0, -0.5);
    KetState psi = dtb(ls, w, 20);
    DetectorParams det(0.5);
    CurrentFrame f(frame_cutoff_for(20, det.delta_sq()));
    FrameState s = FrameState::from_fock(f, psi);
    SamplerSpec spec;
    spec.seed = 2024;
    DensityGrid g = outcome_grid(f, s, det, spec);
    EXPECT_GT(g.captured_mass, 1 - 1e-6);

    const int n = 10000;
    CounterRng rng(spec.seed);
    std::vector<double> xs(n), ys(n);
    double mx = 0, my = 0;
    for (int i = 0; i < n; ++i) {
        HeterodyneOutcome o = sample_from_grid(g, rng);
        EXPECT_GE(o.density, 0.0);
        xs[i] = o.z.real();
        ys[i] = o.z.imag();
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double vx = 0, vy = 0;
    for (int i = 0; i < n; ++i) {
        vx += (xs[i] - mx) * (xs[i] - mx);
        vy += (ys[i] - my) * (ys[i] - my);
    }
    vx /= n - 1;
    vy /= n - 1;
    double axis_var = ((1 - ls) / (1 + ls) + det.delta_sq()) / 2;
    double tol = 4 * std::sqrt(axis_var / n);
    EXPECT_NEAR(mx, w.real(), tol);
    EXPECT_NEAR(my, w.imag(), tol);
    EXPECT_NEAR(vx, axis_var, 0.1 * axis_var);
    EXPECT_NEAR(vy, axis_var, 0.1 * axis_var);
    EXPECT_LT(ks_distance(xs, w.real(), axis_var), 0.02);
    EXPECT_LT(ks_distance(ys, w.imag(), axis_var), 0.02);
}

TEST(Sampler, FixedSeedRepeats) {
    DensityOperator rho = DensityOperator::from_ket(dtb(0.3, cplx(0.2, 0.4), 10));
    DetectorParams det(0.4);
    SamplerSpec spec;
    CounterRng r1(99), r2(99);
    for (int i = 0; i < 3; ++i) {
        HeterodyneOutcome a = sample_outcome(rho, det, spec, r1);
        HeterodyneOutcome b = sample_outcome(rho, det, spec, r2);
        EXPECT_EQ(a.z, b.z);
        EXPECT_EQ(a.density, b.density);
    }
}

TEST(Sampler, CoverageFailure) {
    KetState psi = dtb(0.3, 0.0, 6);
    DetectorParams det(0.4);
    CurrentFrame f(frame_cutoff_for(6, det.delta_sq()));
    FrameState s = FrameState::from_fock(f, psi);
    EXPECT_THROW(outcome_grid(f, s, det, SamplerSpec{2.0, 41, 0}), NumericalError);
}

TEST(RunSequence, IdealKeepsPurityAndRepeats) {
    KetState psi = dtb(0.4, cplx(0.5, 0.5), 10);
    DetectorParams det(0.5);
    SamplerSpec spec;
    spec.seed = 5;
    MeasurementRecord a = run_sequence(psi, 6, det, spec);
    MeasurementRecord b = run_sequence(psi, 6, det, spec);
    ASSERT_EQ(a.outcomes.size(), 6u);
    ASSERT_EQ(a.purities.size(), 6u);
    for (int i = 0; i < 6; ++i) {
        EXPECT_GE(a.purities[i], 1 - 1e-6);
        EXPECT_EQ(a.outcomes[i].z, b.outcomes[i].z);
        EXPECT_EQ(a.purities[i], b.purities[i]);
    }
    EXPECT_THROW(run_sequence(psi, 0, det, spec), ValidationError);
}

TEST(RunSequence, DensityAndKetAgree) {
    KetState psi = dtb(0.3, cplx(0.1, 0.2), 5);
    DetectorParams det(0.4);
    SamplerSpec spec;
    spec.seed = 11;
    MeasurementRecord a = run_sequence(psi, 3, det, spec);
    MeasurementRecord b = run_sequence(DensityOperator::from_ket(psi), 3, det, spec);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(std::abs(a.outcomes[i].z - b.outcomes[i].z), 0, 1e-8);
}

TEST(RunSequence, RepeatabilityConcentration) {
    // after the first outcome the Z spread is at most Delta^2, so successive
    // outcomes differ by about sqrt(2) Delta in rms
    KetState psi = dtb(0.0, cplx(0.5, 0.0), 8);
    DetectorParams det(0.6);
    const double delta = std::sqrt(det.delta_sq());
    double sum = 0;
    int count = 0;
    for (std::uint64_t seed : {1, 2, 3, 4}) {
        SamplerSpec spec;
        spec.seed = seed;
        MeasurementRecord r = run_sequence(psi, 12, det, spec);
        for (std::size_t j = 1; j + 1 < r.outcomes.size(); ++j) {
            sum += std::norm(r.outcomes[j + 1].z - r.outcomes[j].z);
            ++count;
        }
    }
    double rms = std::sqrt(sum / count);
    EXPECT_LE(rms, 1.1 * M_SQRT2 * delta);
    EXPECT_GT(rms, 0.5 * delta);
}

TEST(RunSequence, LossMixesMonotonically) {
    KetState vac = dtb(0.0, 0.0, 4);
    DetectorParams det(0.0, 0.8);
    SamplerSpec spec;
    spec.seed = 3;
    MeasurementRecord r = run_sequence(vac, 5, det, spec);
    EXPECT_LT(r.purities[0], 1.0);
    for (std::size_t j = 1; j < r.purities.size(); ++j) EXPECT_LT(r.purities[j], r.purities[j - 1]);
    // vacuum through a lossy Delta^2 = 1 probe: 1 - k / (5 (k + 1))
    for (std::size_t j = 0; j < r.purities.size(); ++j) {
        double k = j + 1.0;
        EXPECT_NEAR(r.purities[j], 1 - k / (5 * (k + 1)), 1e-3);
    }
}

TEST(PhaseRms, NarrowGaussian) {
    cplx w = std::polar(4.0, 1.0);
    double s2 = 0.2;
    EXPECT_NEAR(phase_rms(w, s2, 1.0), std::sqrt(s2 / (2 * 16.0)), 2e-3);
    // flat phase: rms of a uniform on (-pi, pi]
    EXPECT_NEAR(phase_rms(0.0, 1.0, 0.0), M_PI / std::sqrt(3.0), 1e-6);
    EXPECT_THROW(phase_rms(w, s2, 1.0, 7), ValidationError);
}

TEST(Sensitivity, IdealApproachesHeisenberg) {
    std::vector<SensitivityPoint> pts = sensitivity_sweep({10, 20, 40}, 1.0);
    ASSERT_EQ(pts.size(), 3u);
    EXPECT_NEAR(pts[1].product, 1.0, 0.1);
    EXPECT_LT(std::abs(pts[2].product - 1), std::abs(pts[0].product - 1));
    EXPECT_LE(pts[1].product, pts[0].product);
    EXPECT_LE(pts[2].product, pts[1].product);
    for (const SensitivityPoint& p : pts) {
        EXPECT_GT(p.delta_phi, 0);
        EXPECT_LT(p.tail_mass, 1e-6);
        EXPECT_NEAR(p.n_bar_numeric, p.n_bar_exact, 1e-4 * p.n_bar_exact);
        EXPECT_NEAR(p.product, p.delta_phi * p.n_bar, 1e-15);
    }
    EXPECT_NEAR(pts[0].product, 1.0601, 1e-3);
    EXPECT_NEAR(pts[1].product, 1.0273, 1e-3);
    EXPECT_NEAR(pts[2].product, 1.0131, 1e-3);
}

TEST(Sensitivity, SmallLossKeepsLimit) {
    // 1 - eta << 2 / n_bar = 0.1
    double ideal = sensitivity_sweep({20}, 1.0)[0].product;
    double lossy = sensitivity_sweep({20}, 0.995)[0].product;
    EXPECT_NEAR(lossy, ideal, 0.15 * ideal);
    EXPECT_GT(lossy, ideal);
}

TEST(Sensitivity, HeavyLossShotNoise) {
    // 1 - eta >> 2 / n_bar: delta_phi ~ sqrt((1-eta)/eta / (2 |w|^2)), product ~ sqrt(n_bar)
    std::vector<SensitivityPoint> pts = sensitivity_sweep({10, 40}, 0.5);
    double ratio = pts[1].product / pts[0].product;
    EXPECT_NEAR(ratio, 2.0, 0.3);
}

TEST(Policy, NMaxRule) {
    TruncationPolicy p;
    EXPECT_EQ(p.n_max_for(20), 60);
    EXPECT_EQ(p.n_max_for(10.2), 41);
}

TEST(FrameCutoff, SequenceRuleAndClamp) {
    bool clamped = true;
    // 8 (k + 1) / Delta^2 nodes when lossless
    EXPECT_EQ(sequence_frame_cutoff(8, DetectorParams(0.6), 3, &clamped), 128);
    EXPECT_FALSE(clamped);
    EXPECT_EQ(sequence_frame_cutoff(40, DetectorParams(0.6), 1), 80);
    // lossy frames hold side^4 matrices; the memory cap wins
    int lossy = sequence_frame_cutoff(8, DetectorParams(0.6, 0.8), 20, &clamped);
    EXPECT_TRUE(clamped);
    EXPECT_LT(lossy, 672);
    EXPECT_GE(lossy, 16);
    EXPECT_THROW(sequence_frame_cutoff(lossy, DetectorParams(0.6, 0.8), 1), CapacityError);
    EXPECT_THROW(sequence_frame_cutoff(8, DetectorParams(0.6), 0), ValidationError);
}
