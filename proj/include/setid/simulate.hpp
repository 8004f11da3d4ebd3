#pragma once

#include "setid/model.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace setid {

enum class InputKind { CyclicDither, IIDUniform, ExplicitSequence };

/**
 * Rule producing the scalar input sequence u_0, u_1, ...
 *
 * CyclicDither:  u_i = base_pattern[i mod P] + e_i
 * IIDUniform:    u_i = e_i
 * ExplicitSequence: u_i = sequence[i]
 *
 * with e_i i.i.d. uniform on [-dither_halfwidth, +dither_halfwidth].
 */
struct InputPlan {
    InputKind kind = InputKind::CyclicDither;
    std::vector<double> base_pattern{-1.0, 2.0, 0.0};
    double dither_halfwidth = 0.0;
    /// Index of the last generated input; gen_inputs returns length + 1 values.
    long length = 0;
    std::uint64_t seed = 0;
    std::vector<double> sequence;
};

/// Maps the input window (u_k, u_{k-1}, ..., u_{k-m+1}) to phi_k.
using RegressorMap = std::function<Vector(std::span<const double> window)>;

struct Observation {
    double y = 0.0;
    int s = 0;
};

/// Regressors, outputs and set-valued observations for k = 1..K.
struct RunTrace {
    std::shared_ptr<const SystemModel> system;
    /// Column k-1 holds phi_k.
    Matrix phi;
    Vector y;
    std::vector<int> s;
    PECertificate pe;
    std::uint64_t input_seed = 0;
    std::uint64_t noise_seed = 0;

    long length() const noexcept { return static_cast<long>(s.size()); }
    auto regressor(long k) const { return phi.col(k - 1); }
};

std::vector<double> gen_inputs(const InputPlan& plan);

/**
 * Delay-line regressors phi_k = (u_{k+offset}, ..., u_{k+offset-memory+1})
 * for k = 1..u.size()-1-offset. Throws ShapeError if an early regressor
 * would reach before u_0.
 */
Matrix build_regressors(std::span<const double> u, int memory, long offset = 0,
                        const RegressorMap& map = {});

/// Number of pre-sample inputs simulate_run prepends so that phi_1 is defined.
long regressor_history(int memory) noexcept;

Observation observe(const SystemModel& system, const Eigen::Ref<const Vector>& phi, double d);

/// s = number of thresholds C_j with y <= C_j.
int quantize(std::span<const double> thresholds, double y) noexcept;

/**
 * Minimum over all length-N windows of lambda_min((1/N) sum phi_i phi_i')
 * together with max_k |phi_k|. OpenMP-parallel over windows.
 */
PECertificate pe_check(const Matrix& phi, int window);

/// Sequential reference for pe_check; identical results.
PECertificate pe_check_serial(const Matrix& phi, int window);

/**
 * Inputs from `plan` (its length is overridden to cover K regressors),
 * noise from `noise_seed`. When pe_window is 0 the window defaults to
 * max(n, pattern period).
 */
RunTrace simulate_run(const SystemModel& system, const InputPlan& plan, long K,
                      std::uint64_t noise_seed, int pe_window = 0);

/// Regressors only; shared by every replication of an ensemble.
Matrix simulate_regressors(const SystemModel& system, const InputPlan& plan, long K);

/// CSV `k,phi_1..phi_n,y,s`.
void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path);

} // namespace setid
