#pragma once

#include "latcor/moments.hpp"

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace latcor {

/// Direct covariance and correlation estimates for the p higher-level
/// variables. Correlation entries touching a non-positive diagonal are NaN
/// and the variable is flagged in `diag_valid`. Correlations are reported
/// raw: finite-sample values outside [-1, 1] are listed in
/// `out_of_range_pairs` but never clipped here.
struct CovEstimate {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd r;
  std::vector<bool> diag_valid;
  std::vector<std::pair<int, int>> out_of_range_pairs;
  int n = 0;
};

/// Plug-in of the cross-products into the identification equations:
///   sigma(l,l) = pair_sum(diag(l))      / (|S_l| (|S_l|-1))
///   sigma(l,k) = pair_sum(offdiag(l,k)) / (|S_l| |S_k|)
/// Requires UVC.
Eigen::MatrixXd estimate_sigma(const CrossProducts& c, const UniqueSets& sets);

CovEstimate estimate_correlation(const Eigen::MatrixXd& sigma, int n);

/// estimate_sigma followed by estimate_correlation.
CovEstimate direct_estimate(const CrossProducts& c, const UniqueSets& sets);

} // namespace latcor
