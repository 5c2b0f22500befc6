#include "latcor/aggregate.hpp"

#include "latcor/errors.hpp"
#include "latcor/inference.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace latcor {

const std::vector<AggMethod>& all_agg_methods() {
  static const std::vector<AggMethod> methods = {
      AggMethod::SUV,     AggMethod::MUV,     AggMethod::SAV,     AggMethod::MAV,
      AggMethod::TMP_ALL, AggMethod::TMP_UNI, AggMethod::SVD_ALL, AggMethod::SVD_UNI,
      AggMethod::STI,     AggMethod::MT50};
  return methods;
}

std::string to_string(AggMethod m) {
  switch (m) {
    case AggMethod::SUV: return "SUV";
    case AggMethod::MUV: return "MUV";
    case AggMethod::SAV: return "SAV";
    case AggMethod::MAV: return "MAV";
    case AggMethod::TMP_ALL: return "TMP-all";
    case AggMethod::TMP_UNI: return "TMP-uni";
    case AggMethod::SVD_ALL: return "SVD-all";
    case AggMethod::SVD_UNI: return "SVD-uni";
    case AggMethod::STI: return "STI";
    case AggMethod::MT50: return "MT50";
  }
  return "?";
}

std::optional<AggMethod> agg_method_from_string(const std::string& name) {
  std::string s;
  for (char c : name)
    s.push_back(c == '_' ? '-' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  for (AggMethod m : all_agg_methods()) {
    std::string t;
    for (char c : to_string(m))
      t.push_back(c == '_' ? '-' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (s == t) return m;
  }
  return std::nullopt;
}

namespace {

double median_of(std::vector<double>& buf) {
  const std::size_t n = buf.size();
  auto mid = buf.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(buf.begin(), mid, buf.end());
  if (n % 2 == 1) return *mid;
  double hi = *mid;
  double lo = *std::max_element(buf.begin(), mid);
  return 0.5 * (lo + hi);
}

Eigen::MatrixXd submatrix_cols(const Eigen::MatrixXd& values, const std::vector<int>& cols) {
  Eigen::MatrixXd out(values.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = values.col(cols[c]);
  return out;
}

/// First principal direction of the column-centered submatrix; samples are
/// projected onto it. Sign fixed so the loading sum is nonnegative, ties
/// resolved by making the first nonzero loading positive.
Eigen::VectorXd svd_scores(const Eigen::MatrixXd& member_values) {
  Eigen::MatrixXd centered = member_values.rowwise() - member_values.colwise().mean();
  Eigen::MatrixXd gram = centered.transpose() * centered;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success)
    throw NumericError("principal-direction computation failed");
  Eigen::VectorXd loading = solver.eigenvectors().col(gram.cols() - 1);
  double s = loading.sum();
  if (s < 0.0) {
    loading = -loading;
  } else if (s == 0.0) {
    for (Eigen::Index j = 0; j < loading.size(); ++j) {
      if (loading(j) != 0.0) {
        if (loading(j) < 0.0) loading = -loading;
        break;
      }
    }
  }
  return centered * loading;
}

/// Members ranked by pre-centering column mean, descending; ties keep the
/// smaller column index first.
std::vector<int> rank_by_intensity(const Eigen::VectorXd& col_means,
                                   const std::vector<int>& members) {
  std::vector<int> ranked = members;
  std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) {
    if (col_means(a) != col_means(b)) return col_means(a) > col_means(b);
    return a < b;
  });
  return ranked;
}

} // namespace

MedianPolish median_polish(const Eigen::MatrixXd& values, int max_sweeps, double tol) {
  const Eigen::Index nr = values.rows();
  const Eigen::Index nc = values.cols();
  MedianPolish mp;
  mp.residuals = values;
  mp.row_effects = Eigen::VectorXd::Zero(nr);
  mp.col_effects = Eigen::VectorXd::Zero(nc);

  std::vector<double> buf;
  auto vec_median = [&buf](const Eigen::VectorXd& v) {
    buf.assign(v.data(), v.data() + v.size());
    return median_of(buf);
  };

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double biggest = 0.0;
    for (Eigen::Index i = 0; i < nr; ++i) {
      double med = vec_median(mp.residuals.row(i));
      mp.residuals.row(i).array() -= med;
      mp.row_effects(i) += med;
      biggest = std::max(biggest, std::abs(med));
    }
    double col_shift = vec_median(mp.col_effects);
    mp.col_effects.array() -= col_shift;
    mp.overall += col_shift;
    biggest = std::max(biggest, std::abs(col_shift));

    for (Eigen::Index j = 0; j < nc; ++j) {
      double med = vec_median(mp.residuals.col(j));
      mp.residuals.col(j).array() -= med;
      mp.col_effects(j) += med;
      biggest = std::max(biggest, std::abs(med));
    }
    double row_shift = vec_median(mp.row_effects);
    mp.row_effects.array() -= row_shift;
    mp.overall += row_shift;
    biggest = std::max(biggest, std::abs(row_shift));

    mp.sweeps = sweep + 1;
    if (biggest < tol) {
      mp.converged = true;
      break;
    }
  }
  return mp;
}

AggregateScores aggregate(const SampleMatrix& z, const BindingMap& map,
                          const UniqueSets& sets, AggMethod method) {
  if (map.q() != z.q())
    throw ValidationError("sample matrix and binding map disagree on variable count");

  const int n = z.n();
  const int p = map.p();
  AggregateScores out;
  out.method = method;

  std::vector<Eigen::VectorXd> cols;
  for (int l = 0; l < p; ++l) {
    const bool unique_based = method == AggMethod::SUV || method == AggMethod::MUV ||
                              method == AggMethod::TMP_UNI || method == AggMethod::SVD_UNI ||
                              method == AggMethod::STI;
    std::vector<int> members =
        unique_based ? sets.sets[static_cast<std::size_t>(l)] : map.members_of(l);

    if (members.empty()) {
      out.skipped.push_back({l, "no " + std::string(unique_based ? "unique " : "") + "members"});
      continue;
    }
    if (method == AggMethod::STI && members.size() < 3) {
      out.skipped.push_back({l, "STI needs at least 3 unique members"});
      continue;
    }

    Eigen::VectorXd score(n);
    switch (method) {
      case AggMethod::SUV:
      case AggMethod::SAV: {
        score.setZero();
        for (int j : members) score += z.values().col(j);
        break;
      }
      case AggMethod::MUV:
      case AggMethod::MAV: {
        score.setZero();
        for (int j : members) score += z.values().col(j);
        score /= double(members.size());
        break;
      }
      case AggMethod::TMP_ALL:
      case AggMethod::TMP_UNI: {
        // members x samples orientation: sample effects are column effects
        Eigen::MatrixXd sub = submatrix_cols(z.values(), members).transpose();
        MedianPolish mp = median_polish(sub);
        score = Eigen::VectorXd::Constant(n, mp.overall) + mp.col_effects;
        break;
      }
      case AggMethod::SVD_ALL:
      case AggMethod::SVD_UNI:
        score = svd_scores(submatrix_cols(z.values(), members));
        break;
      case AggMethod::STI: {
        auto ranked = rank_by_intensity(z.col_means(), members);
        score.setZero();
        for (std::size_t r = 0; r < 3; ++r) score += z.values().col(ranked[r]);
        break;
      }
      case AggMethod::MT50: {
        auto ranked = rank_by_intensity(z.col_means(), members);
        const std::size_t top = (members.size() + 1) / 2;  // ceil(m/2)
        score.setZero();
        for (std::size_t r = 0; r < top; ++r) score += z.values().col(ranked[r]);
        score /= double(top);
        break;
      }
    }
    out.columns.push_back(l);
    cols.push_back(std::move(score));
  }

  out.scores.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.scores.col(static_cast<Eigen::Index>(c)) = cols[c];
  return out;
}

BaselineCorrelation baseline_correlation(const AggregateScores& scores) {
  const Eigen::Index m = scores.scores.cols();
  Eigen::MatrixXd centered = scores.scores.rowwise() - scores.scores.colwise().mean();
  Eigen::VectorXd norms = centered.colwise().norm();

  BaselineCorrelation out;
  out.r = Eigen::MatrixXd::Constant(m, m, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index c = 0; c < m; ++c)
    if (norms(c) == 0.0) out.zero_variance.push_back(static_cast<int>(c));

  for (Eigen::Index a = 0; a < m; ++a) {
    if (norms(a) == 0.0) continue;
    out.r(a, a) = 1.0;
    for (Eigen::Index b = a + 1; b < m; ++b) {
      if (norms(b) == 0.0) continue;
      double v = centered.col(a).dot(centered.col(b)) / (norms(a) * norms(b));
      out.r(a, b) = v;
      out.r(b, a) = v;
    }
  }
  return out;
}

double fisher_test(double r_hat, int n, double xi) {
  if (xi < 0.0) throw ValidationError("xi must be nonnegative");
  if (n < 4) throw ValidationError("Fisher transform test needs n >= 4");
  if (std::abs(r_hat) >= 1.0) return 0.0;
  double stat = std::sqrt(double(n - 3)) *
                std::max(std::atanh(std::abs(r_hat)) - std::atanh(xi), 0.0);
  return std::min(1.0, 2.0 * normal_upper_tail(stat));
}

} // namespace latcor
