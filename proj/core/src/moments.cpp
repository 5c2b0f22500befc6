#include "latcor/moments.hpp"

#include "latcor/errors.hpp"

namespace latcor {

CrossProducts cross_products(const SampleMatrix& z) {
  const auto& v = z.values();
  CrossProducts out;
  out.n = z.n();
  out.c_hat = Eigen::MatrixXd::Zero(z.q(), z.q());
  out.c_hat.selfadjointView<Eigen::Lower>().rankUpdate(v.transpose(), 1.0 / (z.n() - 1));
  out.c_hat = out.c_hat.selfadjointView<Eigen::Lower>();
  return out;
}

std::vector<std::pair<int, int>> PairIndexSet::enumerate(const UniqueSets& sets) const {
  std::vector<std::pair<int, int>> out;
  switch (kind) {
    case Kind::diag: {
      const auto& s = sets.sets[static_cast<std::size_t>(l)];
      for (int i : s)
        for (int j : s)
          if (i != j) out.emplace_back(i, j);
      break;
    }
    case Kind::offdiag: {
      const auto& sl = sets.sets[static_cast<std::size_t>(l)];
      const auto& sk = sets.sets[static_cast<std::size_t>(k)];
      for (int i : sl)
        for (int j : sk) out.emplace_back(i, j);
      break;
    }
    case Kind::explicit_list:
      out = list;
      break;
  }
  return out;
}

std::size_t PairIndexSet::cardinality(const UniqueSets& sets) const {
  switch (kind) {
    case Kind::diag: {
      auto s = static_cast<std::size_t>(sets.size_of(l));
      return s * (s - (s > 0 ? 1 : 0));
    }
    case Kind::offdiag:
      return static_cast<std::size_t>(sets.size_of(l)) *
             static_cast<std::size_t>(sets.size_of(k));
    case Kind::explicit_list:
      return list.size();
  }
  return 0;
}

double pair_sum(const CrossProducts& c, const UniqueSets& sets, const PairIndexSet& key) {
  const auto& m = c.c_hat;
  switch (key.kind) {
    case PairIndexSet::Kind::diag: {
      const auto& s = sets.sets[static_cast<std::size_t>(key.l)];
      double total = 0.0, trace = 0.0;
      for (int i : s) {
        for (int j : s) total += m(i, j);
        trace += m(i, i);
      }
      return total - trace;
    }
    case PairIndexSet::Kind::offdiag: {
      const auto& sl = sets.sets[static_cast<std::size_t>(key.l)];
      const auto& sk = sets.sets[static_cast<std::size_t>(key.k)];
      double total = 0.0;
      for (int i : sl)
        for (int j : sk) total += m(i, j);
      return total;
    }
    case PairIndexSet::Kind::explicit_list: {
      double total = 0.0;
      for (auto [i, j] : key.list) total += m(i, j);
      return total;
    }
  }
  return 0.0;
}

QuadFormEngine::QuadFormEngine(const SampleMatrix& z, const CrossProducts& c,
                               const UniqueSets& sets, VDenominator vden)
    : z_(&z.values()), c_(&c), sets_(&sets), n_(z.n()) {
  if (c.n != z.n())
    throw ValidationError("cross-products were computed from a different sample count");
  vden_scale_ = vden == VDenominator::paper ? 1.0 : double(n_ - 1) / double(n_);

  const int p = sets.p();
  group_sums_ = Eigen::MatrixXd::Zero(n_, p);
  group_sqsums_ = Eigen::MatrixXd::Zero(n_, p);
  for (int l = 0; l < p; ++l) {
    for (int j : sets.sets[static_cast<std::size_t>(l)]) {
      group_sums_.col(l) += z_->col(j);
      group_sqsums_.col(l) += z_->col(j).cwiseAbs2();
    }
  }
}

double QuadFormEngine::g_sample(const PairIndexSet& key, int i) const {
  switch (key.kind) {
    case PairIndexSet::Kind::diag: {
      double t = group_sums_(i, key.l);
      return t * t - group_sqsums_(i, key.l);
    }
    case PairIndexSet::Kind::offdiag:
      return group_sums_(i, key.l) * group_sums_(i, key.k);
    case PairIndexSet::Kind::explicit_list: {
      double g = 0.0;
      for (auto [a, b] : key.list) g += (*z_)(i, a) * (*z_)(i, b);
      return g;
    }
  }
  return 0.0;
}

double QuadFormEngine::g_total(const PairIndexSet& key) const {
  return vden_scale_ * pair_sum(*c_, *sets_, key);
}

double QuadFormEngine::quad_form(const PairIndexSet& a, const PairIndexSet& b) const {
  double mean_product = 0.0;
  for (int i = 0; i < n_; ++i) mean_product += g_sample(a, i) * g_sample(b, i);
  mean_product /= double(n_);
  return mean_product - g_total(a) * g_total(b);
}

double quad_form(const SampleMatrix& z, const CrossProducts& c, const UniqueSets& sets,
                 const QuadFormKey& key, VDenominator vden) {
  QuadFormEngine engine(z, c, sets, vden);
  return engine.quad_form(key.a, key.b);
}

std::vector<double> quad_form_batch(const SampleMatrix& z, const CrossProducts& c,
                                    const UniqueSets& sets,
                                    const std::vector<QuadFormKey>& keys,
                                    VDenominator vden) {
  QuadFormEngine engine(z, c, sets, vden);
  std::vector<double> out;
  out.reserve(keys.size());
  for (const auto& key : keys) out.push_back(engine.quad_form(key.a, key.b));
  return out;
}

} // namespace latcor
