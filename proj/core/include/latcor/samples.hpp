#pragma once

#include "latcor/binding.hpp"

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace latcor {

/// n x q measurement matrix. Columns follow the binding map's lower-level
/// order. `col_means` always records the pre-centering column means, so
/// intensity-based rankings (STI, MT50) see raw abundances even when the
/// working values are centered.
class SampleMatrix {
public:
  SampleMatrix(Eigen::MatrixXd values, std::vector<std::string> names, bool center);

  int n() const { return static_cast<int>(values_.rows()); }
  int q() const { return static_cast<int>(values_.cols()); }
  bool centered() const { return centered_; }
  const Eigen::MatrixXd& values() const { return values_; }
  const Eigen::VectorXd& col_means() const { return col_means_; }
  const std::vector<std::string>& names() const { return names_; }

  /// Rows `keep` only; used by cross-validation splits.
  SampleMatrix subset_rows(const std::vector<int>& keep) const;

  /// Columns `keep` only, preserving the recorded pre-centering means; used
  /// when the UVC drop policy removes lower-level variables.
  SampleMatrix subset_columns(const std::vector<int>& keep) const;

private:
  Eigen::MatrixXd values_;
  Eigen::VectorXd col_means_;
  std::vector<std::string> names_;
  bool centered_;
};

/// Reads a sample table (header of lower-level names, optional leading
/// `sample_id` column) and aligns columns to the binding map by name.
/// Missing or extra columns relative to the map are errors.
SampleMatrix load_samples(const std::filesystem::path& path, const BindingMap& map,
                          bool center);

} // namespace latcor
