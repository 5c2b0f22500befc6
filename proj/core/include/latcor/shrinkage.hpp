#pragma once

#include "latcor/direct.hpp"
#include "latcor/inference.hpp"
#include "latcor/moments.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace latcor {

/// Plug-in risk components of the diagonal-target shrinkage weight:
///   beta2  = sum_l quad_form(diag l, diag l) / (n |S_l|^2 (|S_l|-1)^2)
///   alpha2 = ||sigma||_F^2 - 2 tr(sigma diag(sigma)) + sum_l sigma_ll^2 + beta2
///   gamma2 = tr(Theta_hat) / n, via the p^2 diagonal Theta entries only.
struct RiskComponents {
  double alpha2 = 0.0;
  double beta2 = 0.0;
  double gamma2 = 0.0;
};

RiskComponents risk_components(const QuadFormEngine& engine, const CovEstimate& cov);

enum class ShrinkBranch { risk, eigenvalue };

struct RhoResult {
  double rho = 0.0;
  ShrinkBranch binding = ShrinkBranch::risk;
  bool clamped = false;  // risk branch fell outside [0, 1) and was clamped
};

/// The shrinkage weight: the larger of the unconstrained risk minimizer
/// (gamma2 - beta2) / (alpha2 + gamma2 - 2 beta2) and the positive-definiteness
/// floor (1+kappa)|lambda_min| / (1 + (1+kappa)|lambda_min|). The floor is
/// zero when lambda_min >= -1e-10 (eigenvalues that small in magnitude are
/// floating noise, not genuine indefiniteness).
RhoResult rho_of_kappa(double alpha2, double beta2, double gamma2, double lambda_min,
                       double kappa);

/// Smallest eigenvalue of a symmetric matrix.
double lambda_min(const Eigen::MatrixXd& sym);

/// Convex combination toward the diagonal:
///   sigma_sh = rho diag(sigma) + (1 - rho) sigma,
/// renormalized to a correlation matrix. The diagonal is preserved exactly,
/// so off-diagonal correlations scale by exactly (1 - rho). Requires every
/// sigma_ll > 0.
struct Shrunk {
  Eigen::MatrixXd sigma_sh;
  Eigen::MatrixXd r_sh;
};

Shrunk shrink(const CovEstimate& cov, double rho);

struct ShrinkageResult {
  double kappa = 0.0;
  double rho = 0.0;
  ShrinkBranch binding = ShrinkBranch::risk;
  bool rho_clamped = false;
  double alpha2 = 0.0, beta2 = 0.0, gamma2 = 0.0;
  double lambda_min_dir = 0.0;
  double lambda_min_sh = 0.0;
  Eigen::MatrixXd sigma_sh;
  Eigen::MatrixXd r_sh;
};

/// Full pipeline for a fixed kappa: risk components, weight, shrink, and
/// the before/after minimum-eigenvalue audit.
ShrinkageResult shrink_with_kappa(const QuadFormEngine& engine, const CovEstimate& cov,
                                  double kappa);

struct CvReport {
  std::vector<double> grid;
  std::vector<double> scores;
  int B = 0;
  int n1 = 0;
  int n2 = 0;
  double chosen_kappa = 0.0;
  std::vector<int> skipped_splits;  // splits whose first part had a non-positive variance
};

/// Split-sample cross-validation of kappa: for each of B random splits,
/// shrink the first part's estimate and score it against the second part's
/// direct estimate in squared Frobenius norm; average; pick the minimizing
/// kappa (ties toward the smaller value). Deterministic given the seed, with
/// per-split derived seeds so the split order never matters.
CvReport cross_validate_kappa(const SampleMatrix& z, const UniqueSets& sets,
                              std::vector<double> grid, int B, double split_ratio,
                              std::uint64_t seed,
                              VDenominator vden = VDenominator::paper);

std::vector<double> default_kappa_grid();

} // namespace latcor
