#include "setid/csv.hpp"
#include "setid/errors.hpp"
#include "setid/estimate.hpp"
#include "setid/spao.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace setid;

namespace {

Vector v2(double a, double b)
{
    Vector v(2);
    v << a, b;
    return v;
}

SystemModel reference_system()
{
    return SystemModel(v2(3.0, -1.0), {1.0}, NoiseModel::gaussian(25.0), 2);
}

InputPlan reference_inputs()
{
    InputPlan plan;
    plan.dither_halfwidth = 0.1;
    plan.seed = 1;
    return plan;
}

StepPolicy harmonic(double beta, long k0 = 0)
{
    StepPolicy p;
    p.beta = beta;
    p.warm_start = k0;
    return p;
}

} // namespace

TEST(Estimate, HarmonicStep)
{
    const auto sys = reference_system();
    const EstimatorState st = EstimatorState::start(sys, harmonic(20.0), v2(0, 0));
    EXPECT_DOUBLE_EQ(step_size(st.policy, 40, v2(1, 1), st), 0.5);
}

TEST(Estimate, NormalizedStepIncludesCurrentRegressor)
{
    StepPolicy p;
    p.kind = StepKind::Normalized;
    p.beta = 1.0;
    p.beta_lo = 0.5;
    p.beta_hi = 2.0;
    const auto sys = reference_system();
    EstimatorState st = EstimatorState::start(sys, p, v2(0, 0));
    st.normalizer = 5.0;
    EXPECT_DOUBLE_EQ(step_size(p, 1, v2(2, 0), st), 0.1);
    p.beta = 10.0; // clamped to beta_hi
    EXPECT_DOUBLE_EQ(step_size(p, 1, v2(2, 0), st), 0.2);
}

TEST(Estimate, AdaptiveStepUsesCertifiedBounds)
{
    StepPolicy p;
    p.kind = StepKind::AdaptiveBeta;
    p.safety_margin = 1.1;
    PECertificate pe;
    pe.valid = true;
    pe.excitation_level = 1.0;
    pe.regressor_bound = std::sqrt(5.0);
    pe.window = 3;
    const auto sys = reference_system();
    const EstimatorState st = EstimatorState::start(sys, p, v2(3, -1), pe); // |theta_hat| = sqrt(10)
    // beta_k = 1.1 / (2 f(1 + sqrt 50)), f(1 + sqrt 50) from mpmath.
    const double beta_k = 25.36530149878359;
    EXPECT_NEAR(step_size(p, 1, v2(1, 0), st), beta_k, 1e-11);
    EXPECT_NEAR(step_size(p, 4, v2(1, 0), st), beta_k / 4, 1e-11);
}

TEST(Estimate, AdaptiveStepFaultsOnZeroDensityFloor)
{
    StepPolicy p;
    p.kind = StepKind::AdaptiveBeta;
    PECertificate pe;
    pe.valid = true;
    pe.excitation_level = 1.0;
    pe.regressor_bound = 1.0;
    const SystemModel sys(v2(0.1, 0.1), {0.0},
                          NoiseModel::tabulated({-1.0, 0.0, 1.0}, {0.0, 0.5, 1.0}), 2);
    const EstimatorState st = EstimatorState::start(sys, p, v2(5, 5), pe);
    EXPECT_THROW(step_size(p, 1, v2(1, 0), st), NumericalFault);
    EXPECT_THROW(EstimatorState::start(sys, p, v2(0, 0), PECertificate{}), ConfigError);
}

TEST(Estimate, SingleStepByHand)
{
    // C - phi'theta_hat = 0, so F_hat = 1/2 for any symmetric noise.
    const SystemModel sys(v2(0, 0), {1.0}, NoiseModel::gaussian(7.0), 2);
    EstimatorState st = EstimatorState::start(sys, harmonic(1.0), v2(1, 1));
    st = sa_step(st, v2(2, -1), 1);
    EXPECT_EQ(st.k, 1);
    EXPECT_DOUBLE_EQ(st.theta_hat(0), 0.0);
    EXPECT_DOUBLE_EQ(st.theta_hat(1), 1.5);
}

TEST(Estimate, ExpectedOutputMultiThreshold)
{
    const NoiseModel g = NoiseModel::gaussian(4.0);
    const Vector phi = v2(1.0, 2.0);
    const Vector th = v2(0.5, 0.25); // phi'th = 1
    const std::vector<double> one{0.3};
    EXPECT_DOUBLE_EQ(expected_output(one, phi, th, g), g.cdf(0.3 - 1.0));
    const std::vector<double> sym{1.0 - 0.7, 1.0 + 0.7};
    EXPECT_NEAR(expected_output(sym, phi, th, g), 1.0, 1e-15);
    const std::vector<double> far{1e3, 2e3, 3e3};
    EXPECT_DOUBLE_EQ(expected_output(far, phi, th, g), 3.0);
}

TEST(Estimate, MeanReplayIsAFixedPoint)
{
    // If the estimate equals theta and the observation equals its mean, nothing moves.
    const SystemModel sys(v2(0.4, -0.2), {0.1}, NoiseModel::gaussian(1.0), 2);
    EstimatorState st = EstimatorState::start(sys, harmonic(3.0), sys.theta);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int k = 0; k < 100; ++k) {
        const Vector phi = v2(u(rng), u(rng));
        const double F = expected_output(sys.thresholds, phi, sys.theta, sys.noise);
        const double Fhat = expected_output(sys.thresholds, phi, st.theta_hat, sys.noise);
        EXPECT_EQ(F - Fhat, 0.0);
    }
}

TEST(Estimate, StepMagnitudeBoundAndMonotoneSensitivity)
{
    Vector theta(2);
    theta << 3.0, -1.0;
    const SystemModel sys(theta, {-1.0, 1.0, 2.5}, NoiseModel::laplacian(4.0), 2);
    const RunTrace trace = simulate_run(sys, reference_inputs(), 3000, 4);
    EstimatorState st = EstimatorState::start(sys, harmonic(5.0), v2(0, 0));
    for (long k = 1; k <= trace.length(); ++k) {
        const Vector before = st.theta_hat;
        const double rho = step_size(st.policy, k, trace.regressor(k), st);
        sa_update(st, trace.regressor(k), trace.s[k - 1]);
        EXPECT_LE((st.theta_hat - before).norm(),
                  rho * trace.regressor(k).norm() * 3.0 * (1 + 1e-12));
    }

    const NoiseModel g = NoiseModel::gaussian(2.0);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z;
    for (int i = 0; i < 200; ++i) {
        const Vector phi = v2(z(rng), z(rng));
        const Vector a = v2(z(rng), z(rng));
        const Vector b = v2(z(rng), z(rng));
        const std::vector<double> c{0.2};
        if (phi.dot(a - b) > 0)
            EXPECT_LE(expected_output(c, phi, a, g), expected_output(c, phi, b, g));
    }
}

TEST(Estimate, WarmStartStartsAtK0)
{
    const RunTrace trace = simulate_run(reference_system(), reference_inputs(), 100, 2);
    const EstimateTrajectory t = run_estimator(trace, harmonic(20.0, 20), v2(1, 1));
    EXPECT_EQ(t.first_k, 20);
    EXPECT_EQ(t.last_k(), 100);
    EXPECT_EQ(t.theta_hat.col(0), v2(1, 1));
    EXPECT_DOUBLE_EQ(t.err_sq.front(), 8.0);

    // First stochastic step is k = 21, with rho = 20/21 and the 21st observation.
    EstimatorState st = EstimatorState::start(reference_system(), harmonic(20.0, 20), v2(1, 1));
    sa_update(st, trace.regressor(21), trace.s[20]);
    EXPECT_EQ(st.theta_hat, Vector(t.theta_hat.col(1)));
}

TEST(Estimate, ReproducibleBitForBit)
{
    const RunTrace a = simulate_run(reference_system(), reference_inputs(), 10000, 12);
    const RunTrace b = simulate_run(reference_system(), reference_inputs(), 10000, 12);
    const EstimateTrajectory ta = run_estimator(a, harmonic(20.0, 20), v2(1, 1));
    const EstimateTrajectory tb = run_estimator(b, harmonic(20.0, 20), v2(1, 1));
    EXPECT_EQ(ta.theta_hat, tb.theta_hat);
    EXPECT_EQ(ta.err_sq, tb.err_sq);
}

TEST(Estimate, ConvergesOnReferenceRun)
{
    const RunTrace trace = simulate_run(reference_system(), reference_inputs(), 100000, 31);
    const EstimateTrajectory t = run_estimator(trace, harmonic(20.0, 20), v2(1, 1));
    EXPECT_LT(t.err_sq.back(), t.err_sq.front());
    EXPECT_LT(std::sqrt(t.err_sq.back()), 0.2);
}

TEST(Estimate, CoordinatePermutationEquivariance)
{
    const auto sys = reference_system();
    const RunTrace trace = simulate_run(sys, reference_inputs(), 2000, 6);

    RunTrace swapped = trace;
    swapped.phi = trace.phi.colwise().reverse();
    swapped.system = std::make_shared<const SystemModel>(
        SystemModel(v2(-1.0, 3.0), {1.0}, sys.noise, 2));

    const EstimateTrajectory a = run_estimator(trace, harmonic(20.0, 20), v2(1, 0.5));
    const EstimateTrajectory b = run_estimator(swapped, harmonic(20.0, 20), v2(0.5, 1));
    for (Eigen::Index c = 0; c < a.theta_hat.cols(); ++c) {
        EXPECT_NEAR(a.theta_hat(0, c), b.theta_hat(1, c), 1e-12);
        EXPECT_NEAR(a.theta_hat(1, c), b.theta_hat(0, c), 1e-12);
    }
}

TEST(Estimate, DeterministicReplayContracts)
{
    // Replace every observation by its mean F_k: the error norm never grows.
    const auto sys = reference_system();
    const RunTrace trace = simulate_run(sys, reference_inputs(), 20000, 1);
    EstimatorState st = EstimatorState::start(sys, harmonic(20.0, 20), v2(1, 1));
    double prev = (st.theta_hat - sys.theta).norm();
    for (long k = 21; k <= trace.length(); ++k) {
        const auto phi = trace.regressor(k);
        const double F = sys.noise.cdf(1.0 - phi.dot(sys.theta));
        const double rho = step_size(st.policy, k, phi, st);
        const double Fhat = expected_output(sys.thresholds, phi, st.theta_hat, sys.noise);
        st.theta_hat += rho * (Fhat - F) * phi;
        st.k = k;
        const double err = (st.theta_hat - sys.theta).norm();
        EXPECT_LE(err, prev * (1 + 1e-12));
        prev = err;
    }
    EXPECT_LT(prev, 0.1);
}

TEST(Estimate, PolicyValidation)
{
    StepPolicy p;
    p.beta = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = StepPolicy{};
    p.kind = StepKind::Normalized;
    p.beta_lo = 2.0;
    p.beta_hi = 1.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = StepPolicy{};
    p.kind = StepKind::AdaptiveBeta;
    p.safety_margin = 1.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = StepPolicy{};
    p.warm_start = -1;
    EXPECT_THROW(p.validate(), ConfigError);
    EXPECT_EQ(parse_step_kind("adaptive"), StepKind::AdaptiveBeta);
    EXPECT_THROW(parse_step_kind("newton"), ConfigError);
}

TEST(Estimate, NonFiniteEstimateIsAFault)
{
    const auto sys = reference_system();
    EstimatorState st = EstimatorState::start(sys, harmonic(1e308), v2(0, 0));
    EXPECT_THROW(sa_update(st, v2(1e10, 1e10), 0), NumericalFault);
}

TEST(Estimate, TrajectoryCsvColumns)
{
    const RunTrace trace = simulate_run(reference_system(), reference_inputs(), 50, 2);
    const auto path = std::filesystem::temp_directory_path() / "setid_traj.csv";
    write_trajectory_csv(run_estimator(trace, harmonic(20.0, 20), v2(1, 1)), path);
    const CsvTable table = read_csv(path);
    EXPECT_EQ(table.header,
              (std::vector<std::string>{"k", "theta_hat_1", "theta_hat_2", "err_sq"}));
    EXPECT_EQ(table.rows.front()[0], 20);
    EXPECT_EQ(table.rows.back()[0], 50);
    write_trajectory_csv(run_estimator(trace, harmonic(20.0, 20), v2(1, 1), false), path);
    EXPECT_EQ(read_csv(path).header.size(), 3u);
    std::filesystem::remove(path);
}
