#pragma once

#include "latcor/binding.hpp"
#include "latcor/samples.hpp"

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace latcor {

/// Aggregation-based baselines: each first compresses the lower-level data
/// to one score per higher-level variable per sample, then correlates the
/// score columns.
enum class AggMethod { SUV, MUV, SAV, MAV, TMP_ALL, TMP_UNI, SVD_ALL, SVD_UNI, STI, MT50 };

const std::vector<AggMethod>& all_agg_methods();
std::string to_string(AggMethod m);
std::optional<AggMethod> agg_method_from_string(const std::string& name);

struct SkipRecord {
  int higher = 0;
  std::string reason;
};

struct AggregateScores {
  AggMethod method = AggMethod::SUV;
  Eigen::MatrixXd scores;       // n x retained-column count
  std::vector<int> columns;     // higher-level indices actually scored
  std::vector<SkipRecord> skipped;
};

AggregateScores aggregate(const SampleMatrix& z, const BindingMap& map,
                          const UniqueSets& sets, AggMethod method);

/// Tukey two-way median polish. Returns the overall effect plus the column
/// (sample) effects of the member x sample matrix; alternates row-then-column
/// median sweeps from the raw values, at most `max_sweeps` sweeps, stopping
/// once the largest adjustment of a sweep falls below `tol`.
struct MedianPolish {
  double overall = 0.0;
  Eigen::VectorXd row_effects;
  Eigen::VectorXd col_effects;
  Eigen::MatrixXd residuals;
  int sweeps = 0;
  bool converged = false;
};

MedianPolish median_polish(const Eigen::MatrixXd& values, int max_sweeps = 10,
                           double tol = 1e-6);

/// Pearson correlation of the score columns. Zero-variance columns produce
/// NaN entries and are listed in `zero_variance`.
struct BaselineCorrelation {
  Eigen::MatrixXd r;
  std::vector<int> zero_variance;  // positions within scores.columns
};

BaselineCorrelation baseline_correlation(const AggregateScores& scores);

/// Fisher-transform test of H0: |r| <= xi using
///   p = 2 P(Z > sqrt(n-3) max(atanh|r| - atanh(xi), 0));
/// reduces to the classical two-sided test of zero correlation at xi = 0.
/// |r| = 1 yields p = 0; requires n >= 4.
double fisher_test(double r_hat, int n, double xi);

} // namespace latcor
