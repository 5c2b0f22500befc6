#include "latcor/shrinkage.hpp"

#include "latcor/errors.hpp"
#include "latcor/rng.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace latcor {

namespace {

constexpr double kEigenNoiseFloor = -1e-10;

std::vector<int> nonpositive_diagonal(const CovEstimate& cov) {
  std::vector<int> bad;
  for (int l = 0; l < cov.sigma.rows(); ++l)
    if (!(cov.sigma(l, l) > 0.0)) bad.push_back(l);
  return bad;
}

} // namespace

RiskComponents risk_components(const QuadFormEngine& engine, const CovEstimate& cov) {
  const UniqueSets& sets = engine.sets();
  const int p = sets.p();
  const int n = engine.n();

  RiskComponents out;
  double theta_trace = 0.0;
  for (int l = 0; l < p; ++l) {
    const double sl = sets.size_of(l);
    double qd = engine.quad_form(PairIndexSet::diag(l), PairIndexSet::diag(l)) /
                (sl * sl * (sl - 1.0) * (sl - 1.0));
    out.beta2 += qd / double(n);
    theta_trace += qd;
  }
  for (int l = 0; l < p; ++l) {
    const double sl = sets.size_of(l);
    for (int k = l + 1; k < p; ++k) {
      const double sk = sets.size_of(k);
      const auto off = PairIndexSet::offdiag(l, k);
      // (l,k) and (k,l) contribute the same diagonal Theta entry
      theta_trace += 2.0 * engine.quad_form(off, off) / (sl * sl * sk * sk);
    }
  }
  out.gamma2 = theta_trace / double(n);

  const double frob2 = cov.sigma.squaredNorm();
  const double diag_sq = cov.sigma.diagonal().squaredNorm();
  out.alpha2 = frob2 - 2.0 * diag_sq + diag_sq + out.beta2;
  return out;
}

RhoResult rho_of_kappa(double alpha2, double beta2, double gamma2, double lambda_min,
                       double kappa) {
  if (kappa <= 0.0) throw ValidationError("kappa must be positive");

  RhoResult out;
  double denom = alpha2 + gamma2 - 2.0 * beta2;
  double risk = denom > 0.0 ? (gamma2 - beta2) / denom : 0.0;
  if (risk < 0.0 || risk >= 1.0 || denom <= 0.0) {
    out.clamped = true;
    risk = std::clamp(risk, 0.0, 1.0 - 1e-12);
    if (denom <= 0.0) risk = 0.0;
  }

  double eigen = 0.0;
  if (lambda_min < kEigenNoiseFloor) {
    const double a = (1.0 + kappa) * std::abs(lambda_min);
    eigen = a / (1.0 + a);
  }

  if (eigen > risk) {
    out.rho = eigen;
    out.binding = ShrinkBranch::eigenvalue;
  } else {
    out.rho = risk;
    out.binding = ShrinkBranch::risk;
  }
  return out;
}

double lambda_min(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericError("eigenvalue computation failed");
  return solver.eigenvalues().minCoeff();
}

Shrunk shrink(const CovEstimate& cov, double rho) {
  if (rho < 0.0 || rho >= 1.0)
    throw ValidationError("shrinkage weight must lie in [0, 1)");
  auto bad = nonpositive_diagonal(cov);
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "shrinkage requires positive variance estimates; offending higher-level"
           " variable index(es):";
    for (int l : bad) msg << ' ' << l;
    throw NumericError(msg.str());
  }

  const int p = static_cast<int>(cov.sigma.rows());
  Shrunk out;
  out.sigma_sh = (1.0 - rho) * cov.sigma;
  out.sigma_sh.diagonal() = cov.sigma.diagonal();  // preserved exactly

  out.r_sh.resize(p, p);
  Eigen::VectorXd inv_sd = out.sigma_sh.diagonal().cwiseSqrt().cwiseInverse();
  out.r_sh = inv_sd.asDiagonal() * out.sigma_sh * inv_sd.asDiagonal();
  out.r_sh.diagonal().setOnes();
  return out;
}

ShrinkageResult shrink_with_kappa(const QuadFormEngine& engine, const CovEstimate& cov,
                                  double kappa) {
  auto bad = nonpositive_diagonal(cov);
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "shrinkage requires positive variance estimates; offending higher-level"
           " variable index(es):";
    for (int l : bad) msg << ' ' << l;
    throw NumericError(msg.str());
  }

  ShrinkageResult out;
  out.kappa = kappa;
  RiskComponents rc = risk_components(engine, cov);
  out.alpha2 = rc.alpha2;
  out.beta2 = rc.beta2;
  out.gamma2 = rc.gamma2;
  out.lambda_min_dir = lambda_min(cov.r);
  RhoResult rho = rho_of_kappa(rc.alpha2, rc.beta2, rc.gamma2, out.lambda_min_dir, kappa);
  out.rho = rho.rho;
  out.binding = rho.binding;
  out.rho_clamped = rho.clamped;
  Shrunk s = shrink(cov, rho.rho);
  out.sigma_sh = std::move(s.sigma_sh);
  out.r_sh = std::move(s.r_sh);
  out.lambda_min_sh = lambda_min(out.r_sh);
  return out;
}

CvReport cross_validate_kappa(const SampleMatrix& z, const UniqueSets& sets,
                              std::vector<double> grid, int B, double split_ratio,
                              std::uint64_t seed, VDenominator vden) {
  if (grid.empty()) throw ValidationError("kappa grid is empty");
  if (B < 1) throw ValidationError("need at least one cross-validation split");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double k : grid)
    if (k <= 0.0) throw ValidationError("kappa grid values must be positive");

  const int n = z.n();
  const int n1 = static_cast<int>(std::lround(double(n) * split_ratio));
  const int n2 = n - n1;
  if (n1 < 2 || n2 < 2)
    throw ValidationError("cross-validation split leaves fewer than 2 samples in a part");

  CvReport report;
  report.grid = grid;
  report.scores.assign(grid.size(), 0.0);
  report.B = B;
  report.n1 = n1;
  report.n2 = n2;

  int used = 0;
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int b = 0; b < B; ++b) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> part1(order.begin(), order.begin() + n1);
    std::vector<int> part2(order.begin() + n1, order.end());
    std::sort(part1.begin(), part1.end());
    std::sort(part2.begin(), part2.end());

    SampleMatrix z1 = z.subset_rows(part1);
    SampleMatrix z2 = z.subset_rows(part2);
    CrossProducts c1 = cross_products(z1);
    CrossProducts c2 = cross_products(z2);
    CovEstimate cov1 = direct_estimate(c1, sets);
    Eigen::MatrixXd sigma2 = estimate_sigma(c2, sets);

    if (!nonpositive_diagonal(cov1).empty()) {
      // this part cannot be shrunk; drop the split for every kappa alike
      report.skipped_splits.push_back(b);
      continue;
    }

    QuadFormEngine engine1(z1, c1, sets, vden);
    RiskComponents rc = risk_components(engine1, cov1);
    double lmin = lambda_min(cov1.r);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      RhoResult rho = rho_of_kappa(rc.alpha2, rc.beta2, rc.gamma2, lmin, grid[g]);
      Shrunk s = shrink(cov1, rho.rho);
      report.scores[g] += (s.sigma_sh - sigma2).squaredNorm();
    }
    ++used;
  }

  if (used == 0)
    throw NumericError("every cross-validation split had a non-positive variance estimate");
  for (auto& s : report.scores) s /= double(used);

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (report.scores[g] < report.scores[best]) best = g;  // ties keep the smaller kappa
  report.chosen_kappa = grid[best];
  return report;
}

std::vector<double> default_kappa_grid() {
  return {0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0};
}

} // namespace latcor
