#pragma once

#include "latcor/direct.hpp"
#include "latcor/moments.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace latcor {

/// Flags attached to a pair's inference record.
enum PairFlag : std::uint32_t {
  pair_ok = 0,
  pair_invalid_diagonal = 1u << 0,  // a non-positive variance estimate; no test possible
  pair_degenerate_variance = 1u << 1,  // delta2 == 0
  pair_r_out_of_range = 1u << 2,       // |r_hat| > 1 passed through unclipped
  pair_delta2_clamped = 1u << 3,       // tiny negative delta2 clamped to 0
  pair_p_underflow = 1u << 4,          // p below 1e-300 reported as 0
};

struct PairInference {
  int l = 0;
  int k = 0;
  double r_hat = 0.0;
  double delta2 = 0.0;
  double t_plus = 0.0;
  double t_minus = 0.0;
  double p_value = 1.0;
  double p_bh = 1.0;
  std::uint32_t flags = pair_ok;
};

struct InferenceTable {
  std::vector<PairInference> pairs;       // lexicographic (l, k), l < k
  std::vector<int> invalid_variables;     // higher-level indices with sigma_ll <= 0
  double xi = 0.0;
};

/// Upper tail P(Z > t) of the standard normal, via erfc in double precision.
double normal_upper_tail(double t);

/// Benjamini-Hochberg step-up adjustment (reported alongside raw p-values,
/// never applied to decisions by default).
std::vector<double> bh_adjust(const std::vector<double>& p);

/// The 3 x 3 plug-in matrix of asymptotic (co)variances of
/// (sigma_lk, sigma_ll, sigma_kk), from six quadratic forms of V_hat.
Eigen::Matrix3d upsilon(const QuadFormEngine& engine, int l, int k);
Eigen::Matrix3d upsilon(const SampleMatrix& z, const CrossProducts& c,
                        const UniqueSets& sets, int l, int k,
                        VDenominator vden = VDenominator::paper);

/// Delta-method variance of r_hat(l,k): f' Upsilon f with the plug-in
/// gradient f = (s_ll^{-1/2} s_kk^{-1/2}, -r s_ll^{-1}/2, -r s_kk^{-1}/2).
/// Tiny negative results are clamped to zero (flag reported by callers).
double delta2(const CovEstimate& cov, int l, int k, const Eigen::Matrix3d& ups);

/// Boundary-null test of H0: |r| <= xi via
///   T+ = sqrt(n) (r_hat - xi)_+ / delta,  T- = sqrt(n) (r_hat + xi)_- / delta,
///   p  = 2 P(Z > max(|T+|, |T-|)).
PairInference test_pair(int l, int k, double r_hat, double delta2_hat, int n, double xi);

/// Entry of the p^2 x p^2 asymptotic covariance of sqrt(n) vec(sigma_hat),
/// addressed by the two (row, column) index pairs; only requested entries
/// are ever computed.
double theta_entry(const QuadFormEngine& engine, int l1, int k1, int l2, int k2);

/// Tests every pair l < k at threshold xi. Pairs involving a non-positive
/// variance estimate cannot be tested: they are reported with p = 1 and the
/// invalid-diagonal flag, and the variables are listed separately.
InferenceTable infer_all(const QuadFormEngine& engine, const CovEstimate& cov, double xi);

} // namespace latcor
