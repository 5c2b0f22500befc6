#pragma once

#include "latcor/binding.hpp"
#include "latcor/samples.hpp"

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace latcor {

/// Sample cross-product matrix, c_hat(j,k) = (n-1)^{-1} sum_i z_ij z_ik.
struct CrossProducts {
  Eigen::MatrixXd c_hat;
  int n = 0;
};

CrossProducts cross_products(const SampleMatrix& z);

/// A set of ordered index pairs (i,j) over the lower-level variables,
/// selecting entries of a q x q matrix:
///   diag(l)      = {(i,j): i,j in S_l, i != j}
///   offdiag(l,k) = {(i,j): i in S_l, j in S_k}
/// plus an explicit-list form used by tests. The diag/offdiag kinds resolve
/// their members through a UniqueSets at evaluation time.
struct PairIndexSet {
  enum class Kind { diag, offdiag, explicit_list };
  Kind kind = Kind::diag;
  int l = -1;
  int k = -1;
  std::vector<std::pair<int, int>> list;

  static PairIndexSet diag(int l) { return {Kind::diag, l, l, {}}; }
  static PairIndexSet offdiag(int l, int k) { return {Kind::offdiag, l, k, {}}; }
  static PairIndexSet explicit_pairs(std::vector<std::pair<int, int>> pairs) {
    return {Kind::explicit_list, -1, -1, std::move(pairs)};
  }

  std::vector<std::pair<int, int>> enumerate(const UniqueSets& sets) const;
  std::size_t cardinality(const UniqueSets& sets) const;
};

struct QuadFormKey {
  PairIndexSet a;
  PairIndexSet b;
};

/// Denominator convention for the fourth-moment plug-in: `paper` keeps the
/// mixed convention (first term over n, cross-products over n-1); `uniform_n`
/// rescales the cross-product term to denominator n as well, which makes
/// every quad_form(a, a) an empirical variance and hence nonnegative.
enum class VDenominator { paper, uniform_n };

/// Sum of c_hat over the index pairs of `key`; equals m_a' vec(C_hat).
double pair_sum(const CrossProducts& c, const UniqueSets& sets, const PairIndexSet& key);

/// Evaluates quadratic forms m_a' V_hat m_b of the fourth-moment matrix
///   V_hat = n^{-1} sum_i vec(z_i z_i') vec(z_i z_i')' - vec(C_hat) vec(C_hat)'
/// without materializing the q^2 x q^2 object, via
///   m_a' V_hat m_b = n^{-1} sum_i g_a(z_i) g_b(z_i) - G_a G_b,
/// where g_a(z) = sum_{(i,j) in I_a} z_i z_j and G_a = pair_sum(C_hat, a).
/// Group sums t_l(i) and square sums are precomputed once; each quadratic
/// form is then O(n). Accumulation is sequential in sample order, so results
/// are deterministic regardless of caller-side parallelism.
///
/// The engine borrows `z`, `c` and `sets`; they must outlive it.
class QuadFormEngine {
public:
  QuadFormEngine(const SampleMatrix& z, const CrossProducts& c, const UniqueSets& sets,
                 VDenominator vden = VDenominator::paper);

  double quad_form(const PairIndexSet& a, const PairIndexSet& b) const;

  /// pair_sum of the borrowed cross-products (vden scaling applied).
  double g_total(const PairIndexSet& key) const;

  int n() const { return n_; }
  const UniqueSets& sets() const { return *sets_; }

private:
  double g_sample(const PairIndexSet& key, int i) const;

  const Eigen::MatrixXd* z_ = nullptr;
  const CrossProducts* c_ = nullptr;
  const UniqueSets* sets_ = nullptr;
  int n_ = 0;
  double vden_scale_ = 1.0;
  Eigen::MatrixXd group_sums_;    // n x p: t_l(i) = sum_{j in S_l} z_ij
  Eigen::MatrixXd group_sqsums_;  // n x p: sum_{j in S_l} z_ij^2
};

/// One-off evaluation; builds the precomputation for a single form.
double quad_form(const SampleMatrix& z, const CrossProducts& c, const UniqueSets& sets,
                 const QuadFormKey& key, VDenominator vden = VDenominator::paper);

/// Shares one precomputation across all keys.
std::vector<double> quad_form_batch(const SampleMatrix& z, const CrossProducts& c,
                                    const UniqueSets& sets,
                                    const std::vector<QuadFormKey>& keys,
                                    VDenominator vden = VDenominator::paper);

} // namespace latcor
