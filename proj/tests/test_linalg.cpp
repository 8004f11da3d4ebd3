#include "setid/linalg.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <random>

using namespace setid::linalg;
using Matrix = Eigen::MatrixXd;

namespace {

Matrix random_symmetric(std::mt19937_64& rng, int n)
{
    std::normal_distribution<double> z;
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a(i, j) = z(rng);
    return 0.5 * (a + a.transpose());
}

} // namespace

TEST(Linalg, JacobiAgreesWithEigenSolver)
{
    std::mt19937_64 rng(11);
    for (int n = 1; n <= 7; ++n) {
        for (int rep = 0; rep < 20; ++rep) {
            const Matrix a = random_symmetric(rng, n);
            const Eigen::VectorXd ours = jacobi_eigenvalues(a);
            const Eigen::SelfAdjointEigenSolver<Matrix> ref(a, Eigen::EigenvaluesOnly);
            ASSERT_EQ(ours.size(), n);
            for (int i = 0; i < n; ++i)
                EXPECT_NEAR(ours(i), ref.eigenvalues()(i), 1e-10 * (1 + a.norm()));
        }
    }
}

TEST(Linalg, MinEigenvalueClosedForms)
{
    Matrix a(1, 1);
    a << -2.5;
    EXPECT_DOUBLE_EQ(min_eigenvalue(a), -2.5);

    Matrix b(2, 2);
    b << 5.0 / 3, -2.0 / 3, -2.0 / 3, 5.0 / 3;
    EXPECT_NEAR(min_eigenvalue(b), 1.0, 1e-15);

    Matrix c = Matrix::Identity(4, 4) * 3.0;
    c(0, 0) = 0.5;
    EXPECT_NEAR(min_eigenvalue(c), 0.5, 1e-14);
}

TEST(Linalg, MinEigenvalueOfRankDeficientGramIsZero)
{
    Matrix v(3, 1);
    v << 1.0, -2.0, 0.5;
    EXPECT_NEAR(min_eigenvalue(v * v.transpose()), 0.0, 1e-14);
}

TEST(Linalg, EigenvaluesSumToTrace)
{
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        const Matrix a = random_symmetric(rng, 5);
        const Eigen::VectorXd ev = jacobi_eigenvalues(a);
        EXPECT_NEAR(ev.sum(), a.trace(), 1e-12);
        EXPECT_TRUE(std::is_sorted(ev.begin(), ev.end()));
    }
}
