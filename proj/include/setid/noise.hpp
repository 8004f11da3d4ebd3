#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace setid {

using Rng = std::mt19937_64;

enum class NoiseFamily { Gaussian, Laplacian, StudentT, TabulatedCustom };

std::string_view to_string(NoiseFamily family);
NoiseFamily parse_noise_family(std::string_view name);

/**
 * Zero-mean i.i.d. system noise with a known distribution F and density f.
 *
 * Built-in families are parameterised by their variance so that a config
 * can swap families without changing the noise power. A tabulated
 * distribution is a piecewise-linear CDF through (x, F) knots; its density
 * is the slope of the segment containing x.
 *
 * Instances are immutable and safe to share between threads.
 */
class NoiseModel {
public:
    static NoiseModel gaussian(double variance);
    static NoiseModel laplacian(double variance);
    /// Student t with `dof` > 2 degrees of freedom, rescaled to `variance`.
    static NoiseModel student_t(double dof, double variance);
    /// Knots must start at F = 0, end at F = 1 and have strictly positive slopes.
    static NoiseModel tabulated(std::vector<double> xs, std::vector<double> cdf);
    /// Two-column CSV `x,F`; a non-numeric first line is treated as a header.
    static NoiseModel tabulated_from_csv(const std::filesystem::path& path);

    NoiseFamily family() const noexcept { return family_; }
    double variance() const noexcept { return variance_; }
    double dof() const noexcept { return dof_; }
    /// Scale of the underlying standard family (sigma, Laplace b, t scale).
    double scale() const noexcept { return scale_; }
    std::span<const double> table_x() const noexcept { return xs_; }
    std::span<const double> table_cdf() const noexcept { return fs_; }

    double cdf(double x) const;
    double pdf(double x) const;

    /// Smallest x with F(x) >= p, by bisection to 1e-12.
    double quantile(double p) const;

    /// lim_{eps->0+} inf of f over [lo - eps, hi + eps].
    double infimum_density(double lo, double hi) const;

    bool symmetric() const noexcept { return family_ != NoiseFamily::TabulatedCustom; }

private:
    NoiseModel() = default;

    std::size_t segment(double x) const;

    NoiseFamily family_ = NoiseFamily::Gaussian;
    double variance_ = 0.0;
    double scale_ = 0.0;
    double dof_ = 0.0;
    std::vector<double> xs_;
    std::vector<double> fs_;
};

double noise_cdf(const NoiseModel& model, double x);
double noise_pdf(const NoiseModel& model, double x);

/// Per-worker source of noise draws. Owns its generator; never shared.
class NoiseSampler {
public:
    NoiseSampler(const NoiseModel& model, std::uint64_t seed);

    /// Next i.i.d. draw; the sequence is a pure function of the seed.
    double operator()();
    Rng& engine() noexcept { return rng_; }

private:
    const NoiseModel* model_;
    Rng rng_;
    std::normal_distribution<double> normal_;
    std::student_t_distribution<double> student_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace setid
