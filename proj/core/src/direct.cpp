#include "latcor/direct.hpp"

#include "latcor/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace latcor {

Eigen::MatrixXd estimate_sigma(const CrossProducts& c, const UniqueSets& sets) {
  auto violations = sets.uvc_violations();
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "UVC violated for higher-level variable index(es):";
    for (int l : violations) msg << ' ' << l;
    throw ValidationError(msg.str());
  }

  const int p = sets.p();
  Eigen::MatrixXd sigma(p, p);
  for (int l = 0; l < p; ++l) {
    const double sl = sets.size_of(l);
    sigma(l, l) = pair_sum(c, sets, PairIndexSet::diag(l)) / (sl * (sl - 1.0));
    for (int k = l + 1; k < p; ++k) {
      const double sk = sets.size_of(k);
      double v = pair_sum(c, sets, PairIndexSet::offdiag(l, k)) / (sl * sk);
      sigma(l, k) = v;
      sigma(k, l) = v;
    }
  }
  return sigma;
}

CovEstimate estimate_correlation(const Eigen::MatrixXd& sigma, int n) {
  const int p = static_cast<int>(sigma.rows());
  const double nan = std::numeric_limits<double>::quiet_NaN();

  CovEstimate out;
  out.sigma = sigma;
  out.n = n;
  out.diag_valid.resize(static_cast<std::size_t>(p));
  out.r = Eigen::MatrixXd::Constant(p, p, nan);

  for (int l = 0; l < p; ++l)
    out.diag_valid[static_cast<std::size_t>(l)] = sigma(l, l) > 0.0;

  for (int l = 0; l < p; ++l) {
    if (!out.diag_valid[static_cast<std::size_t>(l)]) continue;
    out.r(l, l) = 1.0;
    for (int k = l + 1; k < p; ++k) {
      if (!out.diag_valid[static_cast<std::size_t>(k)]) continue;
      double v = sigma(l, k) / std::sqrt(sigma(l, l) * sigma(k, k));
      out.r(l, k) = v;
      out.r(k, l) = v;
      if (std::abs(v) > 1.0) out.out_of_range_pairs.emplace_back(l, k);
    }
  }
  return out;
}

CovEstimate direct_estimate(const CrossProducts& c, const UniqueSets& sets) {
  return estimate_correlation(estimate_sigma(c, sets), c.n);
}

} // namespace latcor
