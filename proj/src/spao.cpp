#include "setid/spao.hpp"

#include "setid/csv.hpp"
#include "setid/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace setid {

NoiseAverage::NoiseAverage(double beta, Eigen::Index dim) : beta_(beta), T_(Vector::Zero(dim)) {}

const Vector& NoiseAverage::push(const Eigen::Ref<const Vector>& phi, double F, int s)
{
    ++k_;
    const double kd = static_cast<double>(k_);
    T_ *= (kd - 1.0) / kd;
    T_.noalias() += (beta_ / kd * (F - static_cast<double>(s))) * phi;
    return T_;
}

namespace {

const SystemModel& binary_system(const RunTrace& trace, const char* who)
{
    if (!trace.system)
        throw ShapeError(std::string(who) + ": trace carries no system model");
    if (!trace.system->binary())
        throw ShapeError(std::string(who) + ": defined for a single threshold only");
    return *trace.system;
}

Vector column_or_zero(const Matrix& m, long col)
{
    if (col < 0)
        return Vector::Zero(m.rows());
    return m.col(col);
}

} // namespace

Matrix compute_T(const RunTrace& trace, double beta, const Vector& theta)
{
    const SystemModel& system = binary_system(trace, "compute_T");
    if (theta.size() != trace.phi.rows())
        throw ShapeError("compute_T: theta dimension does not match the regressors");
    const double C = system.threshold();
    NoiseAverage avg(beta, theta.size());
    Matrix T(theta.size(), trace.length());
    for (long k = 1; k <= trace.length(); ++k) {
        const auto phi = trace.regressor(k);
        const double F = system.noise.cdf(C - phi.dot(theta));
        T.col(k - 1) = avg.push(phi, F, trace.s[static_cast<std::size_t>(k - 1)]);
    }
    return T;
}

SpaoTrace compute_psi(const EstimateTrajectory& estimates, const Matrix& T, const Vector& theta)
{
    if (estimates.theta_hat.rows() != theta.size() || T.rows() != theta.size())
        throw ShapeError("compute_psi: dimension mismatch between estimates, T and theta");
    if (T.cols() < estimates.last_k())
        throw ShapeError("compute_psi: T covers k <= " + std::to_string(T.cols()) +
                         " but estimates reach k = " + std::to_string(estimates.last_k()));
    SpaoTrace out;
    out.first_k = estimates.first_k;
    const Eigen::Index cols = estimates.theta_hat.cols();
    out.T.resize(theta.size(), cols);
    out.theta_err = estimates.theta_hat.colwise() - theta;
    for (Eigen::Index c = 0; c < cols; ++c)
        out.T.col(c) = column_or_zero(T, estimates.first_k + c - 1);
    out.psi = out.theta_err - out.T;
    return out;
}

double psi_recursion_residual(const SpaoTrace& spao, const RunTrace& trace, double beta)
{
    const SystemModel& system = binary_system(trace, "psi_recursion_residual");
    if (spao.last_k() > trace.length())
        throw ShapeError("psi_recursion_residual: SPAO trace is longer than the run");
    const double C = system.threshold();
    const Vector& theta = system.theta;
    double worst = 0.0;
    for (long k = spao.first_k + 1; k <= spao.last_k(); ++k) {
        const Eigen::Index c = k - spao.first_k;
        const auto phi = trace.regressor(k);
        const auto psi_prev = spao.psi.col(c - 1);
        const auto T_prev = spao.T.col(c - 1);
        const double kd = static_cast<double>(k);
        const double F_true = system.noise.cdf(C - phi.dot(theta));
        const double F_est =
            system.noise.cdf(C - phi.dot(theta) - phi.dot(psi_prev) - phi.dot(T_prev));
        const Vector rhs = psi_prev + (beta / kd * (F_est - F_true)) * phi + T_prev / kd;
        worst = std::max(worst, (spao.psi.col(c) - rhs).norm());
    }
    return worst;
}

Matrix propagate_psi(const RunTrace& trace, double beta, const Matrix& T, long first_k,
                     const Vector& psi_first)
{
    const SystemModel& system = binary_system(trace, "propagate_psi");
    if (T.cols() != trace.length() || T.rows() != psi_first.size())
        throw ShapeError("propagate_psi: T must hold one column per step of the trace");
    const double C = system.threshold();
    const Vector& theta = system.theta;
    Matrix psi(psi_first.size(), trace.length() - first_k + 1);
    psi.col(0) = psi_first;
    for (long k = first_k + 1; k <= trace.length(); ++k) {
        const auto phi = trace.regressor(k);
        const Vector T_prev = column_or_zero(T, k - 2);
        const auto psi_prev = psi.col(k - first_k - 1);
        const double kd = static_cast<double>(k);
        const double base = C - phi.dot(theta);
        const double drift =
            system.noise.cdf(base - phi.dot(psi_prev) - phi.dot(T_prev)) - system.noise.cdf(base);
        psi.col(k - first_k) = psi_prev + (beta / kd * drift) * phi + T_prev / kd;
    }
    return psi;
}

GeneralizedSpao spao_generalized(std::span<const GeneralizedStep> steps, const Vector& theta_hat_0,
                                 const Vector& theta, const NoiseModel& noise)
{
    const Eigen::Index n = theta.size();
    const auto K = static_cast<Eigen::Index>(steps.size());
    if (theta_hat_0.size() != n)
        throw ShapeError("spao_generalized: theta_hat_0 dimension mismatch");
    const bool matrix_gain = K > 0 && std::holds_alternative<Matrix>(steps[0].rho);

    GeneralizedSpao out;
    out.T.resize(n, K);
    out.psi.resize(n, K);
    Vector sum = Vector::Zero(n);
    Vector T_prev = Vector::Zero(n);
    Vector psi_prev = theta_hat_0 - theta;
    Matrix rho_prev_inv;

    for (Eigen::Index i = 0; i < K; ++i) {
        const GeneralizedStep& st = steps[static_cast<std::size_t>(i)];
        const long k = static_cast<long>(i) + 1;
        if (std::holds_alternative<Matrix>(st.rho) != matrix_gain)
            throw ShapeError("spao_generalized: scalar and matrix step sizes mixed at k = " +
                             std::to_string(k));
        if (st.v.size() != n || st.phi.size() != n || st.theta_hat.size() != n)
            throw ShapeError("spao_generalized: vector dimension mismatch at k = " +
                             std::to_string(k));
        Matrix rho;
        if (matrix_gain) {
            rho = std::get<Matrix>(st.rho);
            if (rho.rows() != n || rho.cols() != n)
                throw ShapeError("spao_generalized: matrix step size at k = " + std::to_string(k) +
                                 " must be " + std::to_string(n) + "x" + std::to_string(n));
        } else {
            rho = std::get<double>(st.rho) * Matrix::Identity(n, n);
        }

        const double F = noise.cdf(st.threshold - st.phi.dot(theta));
        sum.noalias() += (F - static_cast<double>(st.s)) * st.v;
        const Vector T = rho * sum;
        const Vector psi = (st.theta_hat - theta) - T;

        Vector rhs = psi_prev + rho * st.v * (st.predicted - F);
        if (k > 1)
            rhs += (Matrix::Identity(n, n) - rho * rho_prev_inv) * T_prev;
        out.max_residual = std::max(out.max_residual, (psi - rhs).norm());

        out.T.col(i) = T;
        out.psi.col(i) = psi;
        T_prev = T;
        psi_prev = psi;
        Eigen::FullPivLU<Matrix> lu(rho);
        if (!lu.isInvertible())
            throw SingularityError("spao_generalized: step size at k = " + std::to_string(k) +
                                   " is singular",
                                   lu.rank());
        rho_prev_inv = lu.inverse();
    }
    return out;
}

double lower_density_bound(const NoiseModel& noise, double threshold, double regressor_bound,
                           double theta_norm, double x)
{
    const double z = regressor_bound * theta_norm + x;
    return noise.infimum_density(threshold - z, threshold + z);
}

std::string_view to_string(RateRegime regime)
{
    switch (regime) {
    case RateRegime::Above: return "> 1/2";
    case RateRegime::Critical: return "= 1/2";
    case RateRegime::Below: return "< 1/2";
    }
    return "?";
}

RateCoefficient rate_coefficient(double beta, double delta, double f_lower)
{
    RateCoefficient rc;
    rc.eta = beta * delta * f_lower;
    if (std::abs(rc.eta - 0.5) <= 1e-12)
        rc.regime = RateRegime::Critical;
    else
        rc.regime = rc.eta > 0.5 ? RateRegime::Above : RateRegime::Below;
    return rc;
}

double fit_loglog_slope(std::span<const long> ks, std::span<const double> values, long lo, long hi)
{
    if (ks.size() != values.size())
        throw ShapeError("fit_loglog_slope: k and value series differ in length");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    long count = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (ks[i] < lo || ks[i] > hi || !(values[i] > 0.0))
            continue;
        const double x = std::log(static_cast<double>(ks[i]));
        const double y = std::log(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count < 10)
        throw StatisticsError("fit_loglog_slope: only " + std::to_string(count) +
                              " points in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                              "], need 10");
    const double c = static_cast<double>(count);
    return (c * sxy - sx * sy) / (c * sxx - sx * sx);
}

double as_rate_value(long k, double err_sq)
{
    if (k < 3)
        return std::numeric_limits<double>::quiet_NaN();
    const double kd = static_cast<double>(k);
    return kd * err_sq / std::log(std::log(kd));
}

RateReport rate_diagnostics(std::span<const long> ks,
                            const std::vector<std::vector<double>>& err_sq_per_run, long window_lo,
                            long window_hi, bool strict)
{
    if (err_sq_per_run.empty())
        throw StatisticsError("rate_diagnostics: empty ensemble");
    if (ks.empty())
        throw StatisticsError("rate_diagnostics: empty k grid");
    for (const auto& run : err_sq_per_run)
        if (run.size() != ks.size())
            throw ShapeError("rate_diagnostics: run series not aligned with the k grid");

    RateReport report;
    report.k.assign(ks.begin(), ks.end());
    const std::size_t m = ks.size();
    report.mean_err_sq.assign(m, 0.0);
    for (const auto& run : err_sq_per_run) {
        std::vector<double> series(m);
        for (std::size_t i = 0; i < m; ++i) {
            series[i] = as_rate_value(ks[i], run[i]);
            report.mean_err_sq[i] += run[i];
        }
        report.as_series.push_back(std::move(series));
    }
    const double R = static_cast<double>(err_sq_per_run.size());
    report.mean_k_err_sq.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        report.mean_err_sq[i] /= R;
        report.mean_k_err_sq[i] = static_cast<double>(ks[i]) * report.mean_err_sq[i];
    }

    const long K = ks.back();
    report.slope_lo = window_lo > 0 ? window_lo : std::max(1L, K / 100);
    report.slope_hi = window_hi > 0 ? window_hi : K;
    try {
        report.ms_slope =
            fit_loglog_slope(ks, report.mean_err_sq, report.slope_lo, report.slope_hi);
    } catch (const StatisticsError&) {
        if (strict)
            throw;
        report.ms_slope = std::numeric_limits<double>::quiet_NaN();
    }
    return report;
}

TailPoint wilson_tail(long exceed, long runs)
{
    TailPoint tp;
    tp.exceed = exceed;
    tp.runs = runs;
    tp.reportable = runs >= 30;
    if (runs <= 0)
        return tp;
    constexpr double z = 1.959963984540054;
    const double n = static_cast<double>(runs);
    const double p = static_cast<double>(exceed) / n;
    const double denom = 1.0 + z * z / n;
    const double centre = (p + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
    tp.probability = p;
    tp.wilson_lo = std::max(0.0, centre - half);
    tp.wilson_hi = std::min(1.0, centre + half);
    return tp;
}

TailPoint tail_estimate(std::span<const double> suffix_sup_per_run, long k, double threshold)
{
    long exceed = 0;
    for (double sup : suffix_sup_per_run)
        if (sup >= threshold)
            ++exceed;
    TailPoint tp = wilson_tail(exceed, static_cast<long>(suffix_sup_per_run.size()));
    tp.k = k;
    tp.threshold = threshold;
    return tp;
}

TailPoint tail_estimate(const std::vector<std::vector<double>>& err_traces, long first_k, long k,
                        double threshold)
{
    std::vector<double> sups;
    sups.reserve(err_traces.size());
    for (const auto& trace : err_traces) {
        const long last_k = first_k + static_cast<long>(trace.size()) - 1;
        if (k < first_k || k > last_k)
            throw ShapeError("tail_estimate: k = " + std::to_string(k) +
                             " outside the trace range");
        const auto begin = trace.begin() + (k - first_k);
        sups.push_back(*std::max_element(begin, trace.end()));
    }
    return tail_estimate(sups, k, threshold);
}

void write_rates_csv(const RateReport& report, std::size_t run, const std::filesystem::path& path)
{
    if (run >= report.as_series.size())
        throw ShapeError("write_rates_csv: run index out of range");
    CsvWriter csv(path, {"k", "as_series", "mean_k_err_sq"});
    for (std::size_t i = 0; i < report.k.size(); ++i) {
        if (report.k[i] < 3)
            continue;
        csv << report.k[i] << report.as_series[run][i] << report.mean_k_err_sq[i];
        csv.end_row();
    }
}

std::string rate_summary_json(const RateReport& report)
{
    nlohmann::ordered_json j;
    j["eta"] = report.eta;
    j["f_lower"] = report.f_lower;
    j["ms_slope"] = report.ms_slope;
    j["regime"] = std::string(to_string(report.regime));
    return j.dump();
}

} // namespace setid
