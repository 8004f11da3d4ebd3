#include "setid/errors.hpp"
#include "setid/noise.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace setid;

// Reference values below were computed once with mpmath at 50 digits.

TEST(Noise, GaussianMatchesHighPrecisionValues)
{
    const NoiseModel g = NoiseModel::gaussian(25.0);
    EXPECT_NEAR(g.cdf(6.0), 0.8849303297782917, 1e-15);
    EXPECT_NEAR(g.pdf(0.0), 0.07978845608028654, 1e-16);
    EXPECT_NEAR(g.pdf(3.0), 0.06664492057835993, 1e-16);
    EXPECT_NEAR(g.pdf(1.0 + std::sqrt(50.0)), 0.02168316430326584, 1e-16);
    EXPECT_DOUBLE_EQ(g.cdf(0.0), 0.5);
}

TEST(Noise, StudentTScaledToVariance)
{
    const NoiseModel t = NoiseModel::student_t(5.0, 25.0);
    EXPECT_NEAR(t.scale(), std::sqrt(15.0), 1e-14);
    EXPECT_NEAR(t.cdf(2.0), 0.6862023393260493, 1e-14);
    EXPECT_NEAR(t.pdf(2.0), 0.08386692970867295, 1e-14);
    EXPECT_THROW(NoiseModel::student_t(2.0, 1.0), ConfigError);
}

TEST(Noise, LaplaceScaledToVariance)
{
    const NoiseModel l = NoiseModel::laplacian(25.0);
    EXPECT_NEAR(l.cdf(2.0), 0.7160146439939039, 1e-15);
    EXPECT_NEAR(l.pdf(2.0), 0.08032318839583455, 1e-15);
    const NoiseModel b2 = NoiseModel::laplacian(8.0);
    EXPECT_NEAR(b2.cdf(1.0), 0.6967346701436833, 1e-15);
}

TEST(Noise, SymmetricFamiliesAreSymmetric)
{
    for (const NoiseModel& m : {NoiseModel::gaussian(2.0), NoiseModel::laplacian(2.0),
                                NoiseModel::student_t(4.0, 2.0)}) {
        for (double x : {0.1, 0.7, 2.5, 9.0}) {
            EXPECT_NEAR(m.cdf(x) + m.cdf(-x), 1.0, 1e-14);
            EXPECT_NEAR(m.pdf(x), m.pdf(-x), 1e-16);
        }
    }
}

TEST(Noise, PdfIsDerivativeOfCdf)
{
    for (const NoiseModel& m : {NoiseModel::gaussian(3.0), NoiseModel::laplacian(3.0),
                                NoiseModel::student_t(6.0, 3.0)}) {
        for (double x : {-2.3, -0.4, 0.9, 3.1}) {
            const double h = 1e-5;
            const double fd = (m.cdf(x + h) - m.cdf(x - h)) / (2 * h);
            EXPECT_NEAR(fd, m.pdf(x), 1e-8) << to_string(m.family()) << " at " << x;
        }
    }
}

TEST(Noise, QuantileInvertsCdf)
{
    const NoiseModel g = NoiseModel::gaussian(25.0);
    for (double p : {0.01, 0.3, 0.5, 0.8849303297782917, 0.999})
        EXPECT_NEAR(g.cdf(g.quantile(p)), p, 1e-11);
    EXPECT_NEAR(g.quantile(0.8849303297782917), 6.0, 1e-9);
    EXPECT_THROW(g.quantile(0.0), InversionError);
    EXPECT_THROW(g.quantile(1.0), InversionError);
}

TEST(Noise, DegenerateGaussianIsAStep)
{
    const NoiseModel g = NoiseModel::gaussian(0.0);
    EXPECT_EQ(g.cdf(-1e-9), 0.0);
    EXPECT_EQ(g.cdf(1e-9), 1.0);
}

TEST(Noise, TabulatedTriangle)
{
    // Symmetric triangle on [-1, 1], approximated by three linear pieces.
    const NoiseModel t = NoiseModel::tabulated({-1.0, -0.5, 0.5, 1.0}, {0.0, 0.2, 0.8, 1.0});
    EXPECT_DOUBLE_EQ(t.cdf(0.0), 0.5);
    EXPECT_DOUBLE_EQ(t.pdf(0.0), 0.6);
    EXPECT_DOUBLE_EQ(t.pdf(-0.75), 0.4);
    EXPECT_THROW(t.cdf(1.5), DomainError);
    EXPECT_THROW(t.pdf(-2.0), DomainError);
    EXPECT_DOUBLE_EQ(t.infimum_density(-0.2, 0.2), 0.6);
    EXPECT_DOUBLE_EQ(t.infimum_density(-0.2, 0.7), 0.4);
    EXPECT_EQ(t.infimum_density(-1.0, 0.0), 0.0);
    EXPECT_GT(t.variance(), 0.0);
}

TEST(Noise, TabulatedRejectsBadTables)
{
    EXPECT_THROW(NoiseModel::tabulated({-1.0, 1.0}, {0.1, 1.0}), ConfigError);
    EXPECT_THROW(NoiseModel::tabulated({-1.0, 0.0, 0.0, 1.0}, {0.0, 0.5, 0.5, 1.0}), ConfigError);
    EXPECT_THROW(NoiseModel::tabulated({-1.0, 0.0, 0.5, 1.0}, {0.0, 0.5, 0.5, 1.0}), ConfigError);
    EXPECT_THROW(NoiseModel::tabulated({0.0, 1.0, 2.0}, {0.0, 0.5, 1.0}), ConfigError);
}

TEST(Noise, TabulatedFromCsvSkipsHeader)
{
    const auto path = std::filesystem::temp_directory_path() / "setid_noise_table.csv";
    std::ofstream(path) << "x,F\n-2,0\n0,0.5\n2,1\n";
    const NoiseModel u = NoiseModel::tabulated_from_csv(path);
    EXPECT_DOUBLE_EQ(u.cdf(1.0), 0.75);
    EXPECT_NEAR(u.variance(), 4.0 / 3.0, 1e-12);
    std::filesystem::remove(path);
}

TEST(Noise, InfimumDensityOfSymmetricFamilyIsAtFarEnd)
{
    const NoiseModel g = NoiseModel::gaussian(25.0);
    EXPECT_DOUBLE_EQ(g.infimum_density(-2.0, 5.0), g.pdf(5.0));
    EXPECT_DOUBLE_EQ(g.infimum_density(-7.0, 5.0), g.pdf(7.0));
}

TEST(Noise, SamplerMomentsAndReproducibility)
{
    const int n = 200000;
    for (const NoiseModel& m : {NoiseModel::gaussian(4.0), NoiseModel::laplacian(4.0),
                                NoiseModel::student_t(8.0, 4.0)}) {
        NoiseSampler a(m, 99);
        NoiseSampler b(m, 99);
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = a();
            ASSERT_EQ(x, b());
            sum += x;
            sq += x * x;
        }
        const double mean = sum / n;
        EXPECT_NEAR(mean, 0.0, 5 * std::sqrt(4.0 / n)) << to_string(m.family());
        EXPECT_NEAR(sq / n, 4.0, 0.1) << to_string(m.family());
    }
}

TEST(Noise, SamplerMatchesCdfByKolmogorovSmirnov)
{
    const int n = 100000;
    const double critical = 1.628 / std::sqrt(static_cast<double>(n)); // 1% level
    for (const NoiseModel& m :
         {NoiseModel::gaussian(25.0), NoiseModel::laplacian(25.0), NoiseModel::student_t(5.0, 25.0),
          NoiseModel::tabulated({-1.0, -0.5, 0.5, 1.0}, {0.0, 0.2, 0.8, 1.0})}) {
        NoiseSampler draw(m, 7);
        std::vector<double> xs(n);
        for (double& x : xs)
            x = draw();
        std::sort(xs.begin(), xs.end());
        double d = 0.0;
        for (int i = 0; i < n; ++i) {
            const double F = m.cdf(xs[i]);
            d = std::max({d, std::abs(F - static_cast<double>(i) / n),
                          std::abs(static_cast<double>(i + 1) / n - F)});
        }
        EXPECT_LT(d, critical) << to_string(m.family());
    }
}

TEST(Noise, FamilyNamesRoundTrip)
{
    for (NoiseFamily f : {NoiseFamily::Gaussian, NoiseFamily::Laplacian, NoiseFamily::StudentT,
                          NoiseFamily::TabulatedCustom})
        EXPECT_EQ(parse_noise_family(to_string(f)), f);
    EXPECT_THROW(parse_noise_family("cauchy"), ConfigError);
}

TEST(Noise, GaussianMillionDraws)
{
    NoiseSampler draw(NoiseModel::gaussian(25.0), 2024);
    const int n = 1000000;
    double sum = 0.0;
    long nonpositive = 0;
    for (int i = 0; i < n; ++i) {
        const double x = draw();
        sum += x;
        nonpositive += x <= 0.0;
    }
    EXPECT_NEAR(sum / n, 0.0, 3 * 5.0 / 1000.0);
    EXPECT_NEAR(static_cast<double>(nonpositive) / n, 0.5, 3 * 0.5 / 1000.0);
}

TEST(Noise, CdfLimits)
{
    const NoiseModel g = NoiseModel::gaussian(25.0);
    EXPECT_EQ(g.cdf(1e6), 1.0);
    EXPECT_EQ(g.cdf(-1e6), 0.0);
}
