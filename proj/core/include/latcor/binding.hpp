#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace latcor {

/// Binary membership map from q lower-level variables (rows) to p
/// higher-level variables (columns). Immutable after construction.
///
/// Construction validates that every entry is 0/1, every row and every
/// column has at least one 1, and names are unique.
class BindingMap {
public:
  BindingMap(Eigen::MatrixXi entries, std::vector<std::string> lower_names,
             std::vector<std::string> higher_names);

  int q() const { return static_cast<int>(entries_.rows()); }
  int p() const { return static_cast<int>(entries_.cols()); }
  bool bound(int lower, int higher) const { return entries_(lower, higher) != 0; }
  int row_degree(int lower) const { return row_degree_[static_cast<std::size_t>(lower)]; }
  const Eigen::MatrixXi& entries() const { return entries_; }
  const std::vector<std::string>& lower_names() const { return lower_names_; }
  const std::vector<std::string>& higher_names() const { return higher_names_; }

  /// Row indices of all members of higher-level variable `higher`.
  std::vector<int> members_of(int higher) const;

  bool operator==(const BindingMap& other) const = default;

private:
  Eigen::MatrixXi entries_;
  std::vector<std::string> lower_names_;
  std::vector<std::string> higher_names_;
  std::vector<int> row_degree_;
};

/// The unique-member index sets S_1..S_p and the shared-variable list.
/// S_l holds the rows whose only 1 is in column l; `shared` holds all rows
/// with row-sum >= 2. Sets are pairwise disjoint by construction.
struct UniqueSets {
  std::vector<std::vector<int>> sets;
  std::vector<int> shared;

  int size_of(int l) const { return static_cast<int>(sets[static_cast<std::size_t>(l)].size()); }
  int p() const { return static_cast<int>(sets.size()); }
  bool uvc_holds() const;
  /// Higher-level indices with fewer than two unique members.
  std::vector<int> uvc_violations() const;
};

enum class UvcPolicy { strict, drop };

/// Result of check_uvc with the `drop` policy: the reduced problem plus the
/// names that were removed. Under `strict` the drop lists are empty.
struct UvcResult {
  BindingMap map;
  UniqueSets sets;
  std::vector<std::string> dropped_higher;
  std::vector<std::string> dropped_lower;
};

UniqueSets derive_unique_sets(const BindingMap& map);

/// strict: throws ValidationError naming every higher-level variable with
/// fewer than two unique members. drop: removes those columns, then removes
/// lower-level variables left with no memberships, and re-derives the sets.
UvcResult check_uvc(const BindingMap& map, const UniqueSets& sets, UvcPolicy policy);

/// Reads either encoding: a dense 0/1 table (header of higher names, first
/// column of lower names) or a sparse two-column membership list with header
/// `lower,higher`. Both encodings of the same memberships produce equal maps.
BindingMap load_binding_map(const std::filesystem::path& path);

/// Writes the sparse two-column encoding.
void write_binding_map_sparse(const std::filesystem::path& path, const BindingMap& map);

} // namespace latcor
