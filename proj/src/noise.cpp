#include "setid/noise.hpp"

#include "setid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

namespace setid {

std::string_view to_string(NoiseFamily family)
{
    switch (family) {
    case NoiseFamily::Gaussian: return "gaussian";
    case NoiseFamily::Laplacian: return "laplacian";
    case NoiseFamily::StudentT: return "student_t";
    case NoiseFamily::TabulatedCustom: return "custom";
    }
    return "unknown";
}

NoiseFamily parse_noise_family(std::string_view name)
{
    if (name == "gaussian") return NoiseFamily::Gaussian;
    if (name == "laplacian") return NoiseFamily::Laplacian;
    if (name == "student_t") return NoiseFamily::StudentT;
    if (name == "custom") return NoiseFamily::TabulatedCustom;
    throw ConfigError("noise.family: unknown family '" + std::string(name) + "'");
}

NoiseModel NoiseModel::gaussian(double variance)
{
    if (!(variance >= 0.0) || !std::isfinite(variance))
        throw ConfigError("noise.sigma2: gaussian variance must be finite and >= 0");
    NoiseModel m;
    m.family_ = NoiseFamily::Gaussian;
    m.variance_ = variance;
    m.scale_ = std::sqrt(variance);
    return m;
}

NoiseModel NoiseModel::laplacian(double variance)
{
    if (!(variance > 0.0) || !std::isfinite(variance))
        throw ConfigError("noise.sigma2: laplacian variance must be finite and > 0");
    NoiseModel m;
    m.family_ = NoiseFamily::Laplacian;
    m.variance_ = variance;
    m.scale_ = std::sqrt(variance / 2.0);
    return m;
}

NoiseModel NoiseModel::student_t(double dof, double variance)
{
    if (!(dof > 2.0) || !std::isfinite(dof))
        throw ConfigError("noise.dof: student_t needs more than 2 degrees of freedom");
    if (!(variance > 0.0) || !std::isfinite(variance))
        throw ConfigError("noise.sigma2: student_t variance must be finite and > 0");
    NoiseModel m;
    m.family_ = NoiseFamily::StudentT;
    m.variance_ = variance;
    m.dof_ = dof;
    m.scale_ = std::sqrt(variance * (dof - 2.0) / dof);
    return m;
}

NoiseModel NoiseModel::tabulated(std::vector<double> xs, std::vector<double> cdf)
{
    if (xs.size() != cdf.size() || xs.size() < 2)
        throw ConfigError("noise.table_path: need at least two (x, F) rows");
    if (cdf.front() != 0.0 || cdf.back() != 1.0)
        throw ConfigError("noise.table_path: table must start at F = 0 and end at F = 1");
    double mean = 0.0;
    double second = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const double a = xs[i - 1];
        const double b = xs[i];
        const double dF = cdf[i] - cdf[i - 1];
        if (!(b > a))
            throw ConfigError("noise.table_path: x column must be strictly ascending (row " +
                              std::to_string(i + 1) + ")");
        // Zero-slope interior segments would break the positive-density requirement.
        if (!(dF > 0.0))
            throw ConfigError("noise.table_path: F must be strictly increasing (row " +
                              std::to_string(i + 1) + ")");
        mean += dF * (a + b) / 2.0;
        second += dF * (a * a + a * b + b * b) / 3.0;
    }
    const double span = xs.back() - xs.front();
    if (std::abs(mean) > 1e-6 * span)
        throw ConfigError("noise.table_path: tabulated distribution must have zero mean (mean = " +
                          std::to_string(mean) + ")");

    NoiseModel m;
    m.family_ = NoiseFamily::TabulatedCustom;
    m.variance_ = second - mean * mean;
    m.scale_ = std::sqrt(m.variance_);
    m.xs_ = std::move(xs);
    m.fs_ = std::move(cdf);
    return m;
}

NoiseModel NoiseModel::tabulated_from_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("noise.table_path: cannot open '" + path.string() + "'");
    std::vector<double> xs;
    std::vector<double> fs;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line[0] == '#')
            continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        double x = 0.0;
        double F = 0.0;
        if (!(fields >> x >> F)) {
            if (row == 1)
                continue;
            throw ConfigError("noise.table_path: malformed row " + std::to_string(row) + " in '" +
                              path.string() + "'");
        }
        xs.push_back(x);
        fs.push_back(F);
    }
    return tabulated(std::move(xs), std::move(fs));
}

std::size_t NoiseModel::segment(double x) const
{
    if (x < xs_.front() || x > xs_.back() || std::isnan(x))
        throw DomainError("tabulated noise evaluated at " + std::to_string(x) +
                          " outside table domain [" + std::to_string(xs_.front()) + ", " +
                          std::to_string(xs_.back()) + "]");
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    auto idx = static_cast<std::size_t>(it - xs_.begin());
    // right-continuous: a knot belongs to the segment on its right, except the last knot
    return std::min(idx, xs_.size() - 1) - 1;
}

double NoiseModel::cdf(double x) const
{
    switch (family_) {
    case NoiseFamily::Gaussian:
        if (scale_ == 0.0)
            return x >= 0.0 ? 1.0 : 0.0;
        return 0.5 * std::erfc(-x / (scale_ * std::numbers::sqrt2));
    case NoiseFamily::Laplacian:
        if (x < 0.0)
            return 0.5 * std::exp(x / scale_);
        return 1.0 - 0.5 * std::exp(-x / scale_);
    case NoiseFamily::StudentT: {
        if (std::isinf(x))
            return x > 0.0 ? 1.0 : 0.0;
        boost::math::students_t_distribution<double> t(dof_);
        return boost::math::cdf(t, x / scale_);
    }
    case NoiseFamily::TabulatedCustom: {
        const std::size_t i = segment(x);
        const double w = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
        return fs_[i] + w * (fs_[i + 1] - fs_[i]);
    }
    }
    return 0.0;
}

double NoiseModel::pdf(double x) const
{
    switch (family_) {
    case NoiseFamily::Gaussian: {
        if (scale_ == 0.0)
            return x == 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        const double z = x / scale_;
        return std::exp(-0.5 * z * z) / (scale_ * std::sqrt(2.0 * std::numbers::pi));
    }
    case NoiseFamily::Laplacian:
        return std::exp(-std::abs(x) / scale_) / (2.0 * scale_);
    case NoiseFamily::StudentT: {
        if (std::isinf(x))
            return 0.0;
        boost::math::students_t_distribution<double> t(dof_);
        return boost::math::pdf(t, x / scale_) / scale_;
    }
    case NoiseFamily::TabulatedCustom: {
        const std::size_t i = segment(x);
        return (fs_[i + 1] - fs_[i]) / (xs_[i + 1] - xs_[i]);
    }
    }
    return 0.0;
}

double NoiseModel::quantile(double p) const
{
    if (!(p > 0.0 && p < 1.0))
        throw InversionError("CDF inverse requested at probability " + std::to_string(p) +
                             "; only (0, 1) is invertible");
    double lo = 0.0;
    double hi = 0.0;
    if (family_ == NoiseFamily::TabulatedCustom) {
        lo = xs_.front();
        hi = xs_.back();
    } else {
        const double step = std::max(scale_, 1e-300);
        lo = -step;
        hi = step;
        while (cdf(lo) >= p) lo *= 2.0;
        while (cdf(hi) < p) hi *= 2.0;
    }
    while (hi - lo > 1e-12 * std::max(1.0, std::abs(lo) + std::abs(hi))) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        if (cdf(mid) >= p)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

double NoiseModel::infimum_density(double lo, double hi) const
{
    if (lo > hi)
        std::swap(lo, hi);
    if (family_ != NoiseFamily::TabulatedCustom) {
        // symmetric, unimodal at 0 and continuous: the infimum sits at the endpoint farthest from 0
        return pdf(std::max(std::abs(lo), std::abs(hi)));
    }
    // the right limit widens the interval, so touching a support edge leaves it
    if (lo <= xs_.front() || hi >= xs_.back())
        return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < xs_.size(); ++i) {
        if (xs_[i] <= hi && xs_[i + 1] >= lo)
            best = std::min(best, (fs_[i + 1] - fs_[i]) / (xs_[i + 1] - xs_[i]));
    }
    return best;
}

double noise_cdf(const NoiseModel& model, double x) { return model.cdf(x); }

double noise_pdf(const NoiseModel& model, double x) { return model.pdf(x); }

NoiseSampler::NoiseSampler(const NoiseModel& model, std::uint64_t seed)
    : model_(&model), rng_(seed), normal_(0.0, 1.0),
      student_(model.family() == NoiseFamily::StudentT ? model.dof() : 3.0)
{
}

double NoiseSampler::operator()()
{
    const NoiseModel& m = *model_;
    switch (m.family()) {
    case NoiseFamily::Gaussian:
        return m.scale() * normal_(rng_);
    case NoiseFamily::Laplacian: {
        double u = uniform_(rng_) - 0.5;
        while (u == -0.5)
            u = uniform_(rng_) - 0.5;
        return m.scale() * std::copysign(std::log1p(-2.0 * std::abs(u)), u);
    }
    case NoiseFamily::StudentT:
        return m.scale() * student_(rng_);
    case NoiseFamily::TabulatedCustom: {
        const auto xs = m.table_x();
        const auto fs = m.table_cdf();
        const double u = uniform_(rng_);
        auto it = std::upper_bound(fs.begin(), fs.end(), u);
        auto i = static_cast<std::size_t>(it - fs.begin());
        i = std::clamp<std::size_t>(i, 1, fs.size() - 1) - 1;
        const double w = (u - fs[i]) / (fs[i + 1] - fs[i]);
        return xs[i] + w * (xs[i + 1] - xs[i]);
    }
    }
    return 0.0;
}

} // namespace setid
