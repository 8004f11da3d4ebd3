#pragma once

#include "setid/noise.hpp"

#include <Eigen/Dense>

#include <vector>

namespace setid {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/**
 * y_k = phi_k' theta + d_k, observed only through s_k = sum_j 1{y_k <= C_j}.
 *
 * With one threshold this is the binary sensor; with q ascending
 * thresholds s_k counts how many of them the output does not exceed.
 */
struct SystemModel {
    Vector theta;
    std::vector<double> thresholds;
    NoiseModel noise = NoiseModel::gaussian(1.0);
    int regressor_memory = 1;

    SystemModel(Vector theta, std::vector<double> thresholds, NoiseModel noise,
                int regressor_memory);

    Eigen::Index dim() const noexcept { return theta.size(); }
    int threshold_count() const noexcept { return static_cast<int>(thresholds.size()); }
    bool binary() const noexcept { return thresholds.size() == 1; }
    double threshold() const { return thresholds.front(); }
};

/// Finite-horizon certificate of bounded, uniformly exciting regressors.
struct PECertificate {
    int window = 0;
    double excitation_level = 0.0;
    double regressor_bound = 0.0;
    bool valid = false;
    /// 1-based k of the first regressor in the least exciting window.
    long worst_window_start = 0;
};

} // namespace setid
