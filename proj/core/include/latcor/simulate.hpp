#pragma once

#include "latcor/aggregate.hpp"
#include "latcor/binding.hpp"
#include "latcor/samples.hpp"
#include "latcor/shrinkage.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace latcor {

/// A synthetic ground truth: the latent covariance/correlation and a binding
/// map with a fixed number of unique members per higher-level variable; the
/// remaining lower-level variables are shared by 2 or 3 parents each.
struct GroundTruth {
  int p = 0;
  int q = 0;
  int unique_per_higher = 0;
  Eigen::MatrixXd Sigma;
  Eigen::MatrixXd R;
  BindingMap map;
  Eigen::VectorXd gamma_diag;
};

/// Draws a positive-definite covariance: constant diagonal `diag_value`,
/// each off-diagonal entry nonzero with probability `density`, drawn
/// uniformly from [corr_lo, corr_hi]. Redraws on indefiniteness, up to 100
/// attempts. `noise` only records the intended noise variance in gamma_diag.
GroundTruth generate_truth(int p, int q, int unique_per_higher, double density,
                           double corr_lo, double corr_hi, double diag_value,
                           std::uint64_t seed, double noise = 0.3);

/// n draws of z = A x + eps with x ~ N(0, Sigma), eps ~ N(0, noise I); the
/// latent-space construction avoids factoring the q x q covariance.
SampleMatrix generate_data(const GroundTruth& truth, int n, double noise,
                           std::uint64_t seed);

double frobenius_error(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth);

struct StudyConfig {
  int p = 20;
  int q = 150;
  int n = 100;
  int reps = 100;
  int unique_per_higher = 5;
  double xi = 0.1;
  double alpha = 0.05;
  double density = 0.7;
  double corr_lo = 0.2;
  double corr_hi = 0.5;
  double diag = 1.5;
  double noise = 0.3;
  std::vector<std::string> methods;  // DIR, DIR_sh, and aggregation names
  std::uint64_t seed = 12345;
  // shrinkage controls for DIR_sh
  bool cv_kappa = true;
  double fixed_kappa = 1.0;
  std::vector<double> kappa_grid = default_kappa_grid();
  int cv_splits = 20;
  double split_ratio = 0.5;
  int threads = 0;  // <= 0: one worker per hardware thread
};

StudyConfig load_study_config(const std::filesystem::path& path);

struct MethodOutcome {
  std::vector<double> fne;          // one per replication (NaN on failure)
  std::vector<double> type1_rate;   // per replication, across true-null pairs
  std::vector<double> power_rate;   // per replication, across true-alternative pairs
  int failures = 0;

  double fne_median() const;
  double fne_mean() const;
  double type1() const;  // pooled over replications
  double power() const;
};

struct SimReport {
  StudyConfig config;
  int null_pairs = 0;
  int alt_pairs = 0;
  std::map<std::string, MethodOutcome> outcomes;
};

/// Runs the replication study: one ground truth per study, fresh data per
/// replication, every requested estimator with its test, FNE per method,
/// and rejection rates split by the true null/alternative status of each
/// pair. Per-replication seeds derive from the master seed by index, so
/// results are identical for any thread count.
SimReport run_study(const StudyConfig& config);

void write_sim_results(const std::filesystem::path& csv_path, const SimReport& report);

} // namespace latcor
