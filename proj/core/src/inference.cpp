#include "latcor/inference.hpp"

#include "latcor/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace latcor {

double normal_upper_tail(double t) {
  return 0.5 * std::erfc(t / std::sqrt(2.0));
}

std::vector<double> bh_adjust(const std::vector<double>& p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

  std::vector<double> adjusted(m);
  double running_min = 1.0;
  for (std::size_t rank = m; rank-- > 0;) {
    double candidate = p[order[rank]] * double(m) / double(rank + 1);
    running_min = std::min(running_min, candidate);
    adjusted[order[rank]] = running_min;
  }
  return adjusted;
}

Eigen::Matrix3d upsilon(const QuadFormEngine& engine, int l, int k) {
  const UniqueSets& sets = engine.sets();
  if (l == k) throw ValidationError("upsilon requires two distinct higher-level variables");
  const double sl = sets.size_of(l);
  const double sk = sets.size_of(k);
  if (sl < 2 || sk < 2) throw ValidationError("upsilon requires UVC for both variables");

  const auto off = PairIndexSet::offdiag(l, k);
  const auto dl = PairIndexSet::diag(l);
  const auto dk = PairIndexSet::diag(k);

  Eigen::Matrix3d u;
  u(0, 0) = engine.quad_form(off, off) / (sl * sl * sk * sk);
  u(0, 1) = engine.quad_form(off, dl) / (sl * sl * sk * (sl - 1.0));
  u(0, 2) = engine.quad_form(off, dk) / (sk * sk * sl * (sk - 1.0));
  u(1, 1) = engine.quad_form(dl, dl) / (sl * sl * (sl - 1.0) * (sl - 1.0));
  u(1, 2) = engine.quad_form(dl, dk) / (sl * sk * (sl - 1.0) * (sk - 1.0));
  u(2, 2) = engine.quad_form(dk, dk) / (sk * sk * (sk - 1.0) * (sk - 1.0));
  u(1, 0) = u(0, 1);
  u(2, 0) = u(0, 2);
  u(2, 1) = u(1, 2);
  return u;
}

Eigen::Matrix3d upsilon(const SampleMatrix& z, const CrossProducts& c,
                        const UniqueSets& sets, int l, int k, VDenominator vden) {
  QuadFormEngine engine(z, c, sets, vden);
  return upsilon(engine, l, k);
}

namespace {

// f' Upsilon f before the clamp; NaN when a diagonal is non-positive
double delta2_raw(const CovEstimate& cov, int l, int k, const Eigen::Matrix3d& ups) {
  const double sll = cov.sigma(l, l);
  const double skk = cov.sigma(k, k);
  if (sll <= 0.0 || skk <= 0.0)
    return std::numeric_limits<double>::quiet_NaN();
  const double r = cov.r(l, k);
  Eigen::Vector3d f(1.0 / std::sqrt(sll * skk), -r / (2.0 * sll), -r / (2.0 * skk));
  return f.dot(ups * f);
}

} // namespace

double delta2(const CovEstimate& cov, int l, int k, const Eigen::Matrix3d& ups) {
  double v = delta2_raw(cov, l, k, ups);
  return v < 0.0 ? 0.0 : v;
}

PairInference test_pair(int l, int k, double r_hat, double delta2_hat, int n, double xi) {
  if (xi < 0.0) throw ValidationError("xi must be nonnegative");
  if (n < 2) throw ValidationError("test_pair needs n >= 2");

  PairInference out;
  out.l = l;
  out.k = k;
  out.r_hat = r_hat;
  out.delta2 = delta2_hat;
  if (std::abs(r_hat) > 1.0) out.flags |= pair_r_out_of_range;

  const double sqrt_n = std::sqrt(double(n));
  if (delta2_hat > 0.0) {
    const double delta = std::sqrt(delta2_hat);
    out.t_plus = sqrt_n * std::max(r_hat - xi, 0.0) / delta;
    out.t_minus = sqrt_n * std::min(r_hat + xi, 0.0) / delta;
    out.p_value = std::min(1.0, 2.0 * normal_upper_tail(
                                     std::max(out.t_plus, std::abs(out.t_minus))));
    if (out.p_value < 1e-300) {
      out.p_value = 0.0;
      out.flags |= pair_p_underflow;
    }
  } else {
    // degenerate variance: the statistic is +-infinity off the null, 0 on it
    out.flags |= pair_degenerate_variance;
    out.p_value = std::abs(r_hat) > xi ? 0.0 : 1.0;
  }
  out.p_bh = out.p_value;
  return out;
}

double theta_entry(const QuadFormEngine& engine, int l1, int k1, int l2, int k2) {
  const UniqueSets& sets = engine.sets();
  if (l1 != k1 && l2 == k2)  // theta is symmetric; canonicalize to case 2
    return theta_entry(engine, l2, k2, l1, k1);

  const double sl1 = sets.size_of(l1);
  const double sl2 = sets.size_of(l2);
  if (l1 == k1 && l2 == k2) {
    return engine.quad_form(PairIndexSet::diag(l1), PairIndexSet::diag(l2)) /
           (sl1 * sl2 * (sl1 - 1.0) * (sl2 - 1.0));
  }
  if (l1 == k1) {
    const double sk2 = sets.size_of(k2);
    return engine.quad_form(PairIndexSet::diag(l1), PairIndexSet::offdiag(l2, k2)) /
           (sl1 * sl2 * (sl1 - 1.0) * sk2);
  }
  const double sk1 = sets.size_of(k1);
  const double sk2 = sets.size_of(k2);
  return engine.quad_form(PairIndexSet::offdiag(l1, k1), PairIndexSet::offdiag(l2, k2)) /
         (sl1 * sl2 * sk1 * sk2);
}

InferenceTable infer_all(const QuadFormEngine& engine, const CovEstimate& cov, double xi) {
  const int p = static_cast<int>(cov.sigma.rows());
  InferenceTable table;
  table.xi = xi;

  for (int l = 0; l < p; ++l)
    if (!cov.diag_valid[static_cast<std::size_t>(l)]) table.invalid_variables.push_back(l);

  for (int l = 0; l < p; ++l) {
    for (int k = l + 1; k < p; ++k) {
      const bool valid = cov.diag_valid[static_cast<std::size_t>(l)] &&
                         cov.diag_valid[static_cast<std::size_t>(k)];
      if (!valid) {
        // nothing can be rejected without a variance estimate
        PairInference rec;
        rec.l = l;
        rec.k = k;
        rec.r_hat = cov.r(l, k);
        rec.delta2 = std::numeric_limits<double>::quiet_NaN();
        rec.p_value = 1.0;
        rec.p_bh = 1.0;
        rec.flags |= pair_invalid_diagonal;
        table.pairs.push_back(rec);
        continue;
      }
      Eigen::Matrix3d ups = upsilon(engine, l, k);
      double raw = delta2_raw(cov, l, k, ups);
      PairInference rec = test_pair(l, k, cov.r(l, k), raw < 0.0 ? 0.0 : raw, cov.n, xi);
      if (raw < 0.0) rec.flags |= pair_delta2_clamped;
      table.pairs.push_back(rec);
    }
  }

  std::vector<double> p_values;
  p_values.reserve(table.pairs.size());
  for (const auto& rec : table.pairs) p_values.push_back(rec.p_value);
  auto adjusted = bh_adjust(p_values);
  for (std::size_t i = 0; i < table.pairs.size(); ++i) table.pairs[i].p_bh = adjusted[i];
  return table;
}

} // namespace latcor
