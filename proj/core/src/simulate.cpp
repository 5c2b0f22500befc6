#include "latcor/simulate.hpp"

#include "latcor/direct.hpp"
#include "latcor/errors.hpp"
#include "latcor/inference.hpp"
#include "latcor/rng.hpp"
#include "latcor/table.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace latcor {

namespace {

std::string padded_name(const char* prefix, int index, int width) {
  std::ostringstream out;
  out << prefix;
  std::string digits = std::to_string(index + 1);
  for (int i = static_cast<int>(digits.size()); i < width; ++i) out << '0';
  out << digits;
  return out.str();
}

BindingMap random_binding_map(int p, int q, int unique_per_higher, std::mt19937_64& rng) {
  Eigen::MatrixXi entries = Eigen::MatrixXi::Zero(q, p);
  int row = 0;
  for (int l = 0; l < p; ++l)
    for (int u = 0; u < unique_per_higher; ++u) entries(row++, l) = 1;

  std::uniform_int_distribution<int> parents_dist(2, 3);
  std::vector<int> cols(static_cast<std::size_t>(p));
  std::iota(cols.begin(), cols.end(), 0);
  for (; row < q; ++row) {
    if (p == 1) {
      entries(row, 0) = 1;
      continue;
    }
    int parents = std::min(parents_dist(rng), p);
    // partial Fisher-Yates over the column list
    for (int i = 0; i < parents; ++i) {
      std::uniform_int_distribution<int> pick(i, p - 1);
      std::swap(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(pick(rng))]);
      entries(row, cols[static_cast<std::size_t>(i)]) = 1;
    }
  }

  int name_width = static_cast<int>(std::to_string(q).size());
  std::vector<std::string> lower, higher;
  for (int j = 0; j < q; ++j) lower.push_back(padded_name("v", j, name_width));
  int hwidth = static_cast<int>(std::to_string(p).size());
  for (int l = 0; l < p; ++l) higher.push_back(padded_name("H", l, hwidth));
  return BindingMap(std::move(entries), std::move(lower), std::move(higher));
}

} // namespace

GroundTruth generate_truth(int p, int q, int unique_per_higher, double density,
                           double corr_lo, double corr_hi, double diag_value,
                           std::uint64_t seed, double noise) {
  if (p < 1 || q < 1) throw ValidationError("need p >= 1 and q >= 1");
  if (unique_per_higher < 2)
    throw ValidationError("each higher-level variable needs at least 2 unique members");
  if (q < unique_per_higher * p)
    throw ValidationError("q too small for the requested unique members per higher variable");
  if (density < 0.0 || density > 1.0) throw ValidationError("density must lie in [0, 1]");
  if (corr_lo > corr_hi) throw ValidationError("corr_lo must not exceed corr_hi");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_real_distribution<double> magnitude(corr_lo, corr_hi);

  Eigen::MatrixXd sigma(p, p);
  bool pd = false;
  for (int attempt = 0; attempt < 100 && !pd; ++attempt) {
    sigma.setZero();
    sigma.diagonal().setConstant(diag_value);
    for (int l = 0; l < p; ++l) {
      for (int k = l + 1; k < p; ++k) {
        if (unif(rng) < density) {
          double v = magnitude(rng);
          sigma(l, k) = v;
          sigma(k, l) = v;
        }
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma, Eigen::EigenvaluesOnly);
    pd = solver.info() == Eigen::Success && solver.eigenvalues().minCoeff() > 1e-10;
  }
  if (!pd)
    throw NumericError("could not draw a positive-definite covariance in 100 attempts; "
                       "raise diag_value or lower density");

  GroundTruth truth{p,
                    q,
                    unique_per_higher,
                    sigma,
                    Eigen::MatrixXd(),
                    random_binding_map(p, q, unique_per_higher, rng),
                    Eigen::VectorXd::Constant(q, noise)};
  Eigen::VectorXd inv_sd = sigma.diagonal().cwiseSqrt().cwiseInverse();
  truth.R = inv_sd.asDiagonal() * sigma * inv_sd.asDiagonal();
  truth.R.diagonal().setOnes();
  return truth;
}

SampleMatrix generate_data(const GroundTruth& truth, int n, double noise,
                           std::uint64_t seed) {
  if (n < 2) throw ValidationError("need n >= 2");
  if (noise < 0.0) throw ValidationError("noise variance must be nonnegative");

  // LDLT admits semidefinite truths (e.g. an all-zero covariance in tests)
  Eigen::LDLT<Eigen::MatrixXd> ldlt(truth.Sigma);
  if (ldlt.info() != Eigen::Success)
    throw NumericError("ground-truth covariance could not be factored");
  Eigen::VectorXd d = ldlt.vectorD();
  const double tol = 1e-8 * std::max(1.0, truth.Sigma.diagonal().maxCoeff());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) < -tol)
      throw NumericError("ground-truth covariance is not positive semidefinite");
    d(i) = std::max(d(i), 0.0);
  }
  Eigen::MatrixXd chol = ldlt.transpositionsP().transpose() *
                         Eigen::MatrixXd(Eigen::MatrixXd(ldlt.matrixL()) *
                                         d.cwiseSqrt().asDiagonal());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double noise_sd = std::sqrt(noise);

  // rows of A are sparse (at most a handful of parents); apply them as lists
  std::vector<std::vector<int>> parents(static_cast<std::size_t>(truth.q));
  for (int j = 0; j < truth.q; ++j)
    for (int l = 0; l < truth.p; ++l)
      if (truth.map.bound(j, l)) parents[static_cast<std::size_t>(j)].push_back(l);

  Eigen::MatrixXd values(n, truth.q);
  Eigen::VectorXd latent(truth.p);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < truth.p; ++l) latent(l) = normal(rng);
    Eigen::VectorXd x = chol * latent;
    for (int j = 0; j < truth.q; ++j) {
      double signal = 0.0;
      for (int l : parents[static_cast<std::size_t>(j)]) signal += x(l);
      values(i, j) = signal + noise_sd * normal(rng);
    }
  }
  return SampleMatrix(std::move(values), truth.map.lower_names(), /*center=*/false);
}

double frobenius_error(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
  return (estimate - truth).norm();
}

double MethodOutcome::fne_median() const {
  std::vector<double> finite;
  for (double v : fne)
    if (std::isfinite(v)) finite.push_back(v);
  if (finite.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(finite.begin(), finite.end());
  std::size_t mid = finite.size() / 2;
  return finite.size() % 2 == 1 ? finite[mid] : 0.5 * (finite[mid - 1] + finite[mid]);
}

double MethodOutcome::fne_mean() const {
  double total = 0.0;
  int count = 0;
  for (double v : fne)
    if (std::isfinite(v)) { total += v; ++count; }
  return count ? total / count : std::numeric_limits<double>::quiet_NaN();
}

namespace {

double rate_mean(const std::vector<double>& rates) {
  double total = 0.0;
  int count = 0;
  for (double v : rates)
    if (std::isfinite(v)) { total += v; ++count; }
  return count ? total / count : std::numeric_limits<double>::quiet_NaN();
}

} // namespace

double MethodOutcome::type1() const { return rate_mean(type1_rate); }
double MethodOutcome::power() const { return rate_mean(power_rate); }

namespace {

struct RepResult {
  std::map<std::string, double> fne;
  std::map<std::string, double> type1;
  std::map<std::string, double> power;
  std::map<std::string, bool> failed;
};

struct PairClasses {
  std::vector<std::pair<int, int>> null_pairs;
  std::vector<std::pair<int, int>> alt_pairs;
};

PairClasses classify_pairs(const Eigen::MatrixXd& R, double xi) {
  PairClasses out;
  for (int l = 0; l < R.rows(); ++l)
    for (int k = l + 1; k < R.cols(); ++k)
      (std::abs(R(l, k)) <= xi ? out.null_pairs : out.alt_pairs).emplace_back(l, k);
  return out;
}

// rejection rates over the two pair classes from a matrix of p-values
std::pair<double, double> rejection_rates(const Eigen::MatrixXd& pvals,
                                          const PairClasses& classes, double alpha) {
  auto rate = [&](const std::vector<std::pair<int, int>>& pairs) {
    if (pairs.empty()) return std::numeric_limits<double>::quiet_NaN();
    int rejected = 0;
    for (auto [l, k] : pairs)
      if (pvals(l, k) < alpha) ++rejected;
    return double(rejected) / double(pairs.size());
  };
  return {rate(classes.null_pairs), rate(classes.alt_pairs)};
}

} // namespace

SimReport run_study(const StudyConfig& config) {
  if (config.reps < 1) throw ValidationError("need at least one replication");
  if (config.alpha <= 0.0 || config.alpha >= 1.0)
    throw ValidationError("alpha must lie in (0, 1)");
  if (config.xi < 0.0) throw ValidationError("xi must be nonnegative");

  std::vector<std::string> methods = config.methods;
  if (methods.empty()) methods = {"DIR", "DIR_sh"};
  for (const auto& name : methods)
    if (name != "DIR" && name != "DIR_sh" && !agg_method_from_string(name))
      throw ValidationError("unknown method in study config: " + name);

  GroundTruth truth =
      generate_truth(config.p, config.q, config.unique_per_higher, config.density,
                     config.corr_lo, config.corr_hi, config.diag, config.seed,
                     config.noise);
  UniqueSets sets = derive_unique_sets(truth.map);
  PairClasses classes = classify_pairs(truth.R, config.xi);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<RepResult> results(static_cast<std::size_t>(config.reps));

  auto run_one_replication = [&](int rep, RepResult& res) {
    SampleMatrix data = generate_data(truth, config.n, config.noise,
                                      derive_seed(config.seed, static_cast<std::uint64_t>(rep)));
    CrossProducts c = cross_products(data);
    QuadFormEngine engine(data, c, sets);
    CovEstimate cov;
    bool have_cov = false;
    try {
      cov = direct_estimate(c, sets);
      have_cov = true;
    } catch (const Error&) {
    }

    for (const auto& name : methods) {
      res.fne[name] = nan;
      res.type1[name] = nan;
      res.power[name] = nan;
      res.failed[name] = false;
      try {
        if (name == "DIR") {
          if (!have_cov) throw NumericError("direct estimate unavailable");
          res.fne[name] = frobenius_error(cov.r, truth.R);
          InferenceTable table = infer_all(engine, cov, config.xi);
          Eigen::MatrixXd pvals = Eigen::MatrixXd::Ones(config.p, config.p);
          for (const auto& rec : table.pairs) pvals(rec.l, rec.k) = rec.p_value;
          auto [t1, pow] = rejection_rates(pvals, classes, config.alpha);
          res.type1[name] = t1;
          res.power[name] = pow;
        } else if (name == "DIR_sh") {
          if (!have_cov) throw NumericError("direct estimate unavailable");
          double kappa = config.fixed_kappa;
          if (config.cv_kappa) {
            CvReport cv = cross_validate_kappa(
                data, sets, config.kappa_grid, config.cv_splits, config.split_ratio,
                derive_seed(config.seed, 0x5eed0000ULL + static_cast<std::uint64_t>(rep)));
            kappa = cv.chosen_kappa;
          }
          ShrinkageResult sh = shrink_with_kappa(engine, cov, kappa);
          res.fne[name] = frobenius_error(sh.r_sh, truth.R);
        } else {
          AggMethod method = *agg_method_from_string(name);
          AggregateScores scores = aggregate(data, truth.map, sets, method);
          if (scores.columns.size() != static_cast<std::size_t>(config.p))
            throw NumericError("aggregation skipped higher-level variables");
          BaselineCorrelation corr = baseline_correlation(scores);
          res.fne[name] = frobenius_error(corr.r, truth.R);
          Eigen::MatrixXd pvals = Eigen::MatrixXd::Ones(config.p, config.p);
          for (int a = 0; a < config.p; ++a)
            for (int b = a + 1; b < config.p; ++b)
              pvals(a, b) = std::isnan(corr.r(a, b))
                                ? 1.0
                                : fisher_test(corr.r(a, b), config.n, config.xi);
          auto [t1, pow] = rejection_rates(pvals, classes, config.alpha);
          res.type1[name] = t1;
          res.power[name] = pow;
        }
      } catch (const Error&) {
        res.failed[name] = true;
      }
    }
  };

  auto run_rep = [&](int rep) {
    RepResult& res = results[static_cast<std::size_t>(rep)];
    try {
      run_one_replication(rep, res);
    } catch (const Error&) {
      // a failure before any method ran counts against every method
      for (const auto& name : methods) {
        res.fne[name] = nan;
        res.type1[name] = nan;
        res.power[name] = nan;
        res.failed[name] = true;
      }
    }
  };

  int threads = config.threads;
  if (threads <= 0) {
    unsigned hw = std::thread::hardware_concurrency();
    threads = hw == 0 ? 1 : static_cast<int>(hw);
  }
  if (threads == 1) {
    for (int rep = 0; rep < config.reps; ++rep) run_rep(rep);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (int rep = next.fetch_add(1); rep < config.reps; rep = next.fetch_add(1))
          run_rep(rep);
      });
    }
    for (auto& worker : pool) worker.join();
  }

  SimReport report;
  report.config = config;
  report.config.methods = methods;
  report.null_pairs = static_cast<int>(classes.null_pairs.size());
  report.alt_pairs = static_cast<int>(classes.alt_pairs.size());
  for (const auto& name : methods) {
    MethodOutcome outcome;
    for (const auto& res : results) {
      outcome.fne.push_back(res.fne.at(name));
      outcome.type1_rate.push_back(res.type1.at(name));
      outcome.power_rate.push_back(res.power.at(name));
      if (res.failed.at(name)) ++outcome.failures;
    }
    report.outcomes.emplace(name, std::move(outcome));
  }
  return report;
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

} // namespace

StudyConfig load_study_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open study config: " + path.string());

  StudyConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto as_int = [&] { return static_cast<int>(parse_numeric(value, line_no, key)); };
    auto as_double = [&] { return parse_numeric(value, line_no, key); };
    if (key == "p") config.p = as_int();
    else if (key == "q") config.q = as_int();
    else if (key == "n") config.n = as_int();
    else if (key == "reps") config.reps = as_int();
    else if (key == "unique_per_higher") config.unique_per_higher = as_int();
    else if (key == "xi") config.xi = as_double();
    else if (key == "alpha") config.alpha = as_double();
    else if (key == "density") config.density = as_double();
    else if (key == "corr_lo") config.corr_lo = as_double();
    else if (key == "corr_hi") config.corr_hi = as_double();
    else if (key == "diag") config.diag = as_double();
    else if (key == "noise") config.noise = as_double();
    else if (key == "seed") {
      try {
        config.seed = std::stoull(value);
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": seed must be a nonnegative integer");
      }
    }
    else if (key == "cv_splits") config.cv_splits = as_int();
    else if (key == "split_ratio") config.split_ratio = as_double();
    else if (key == "threads") config.threads = as_int();
    else if (key == "kappa") {
      if (value == "cv") {
        config.cv_kappa = true;
      } else {
        config.cv_kappa = false;
        config.fixed_kappa = as_double();
      }
    } else if (key == "methods") {
      config.methods.clear();
      std::istringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) config.methods.push_back(item);
      }
    } else {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": unknown key '" + key + "'");
    }
  }
  return config;
}

void write_sim_results(const std::filesystem::path& csv_path, const SimReport& report) {
  std::ostringstream out;
  out << "rep,method,metric,value\n";
  for (const auto& [name, outcome] : report.outcomes) {
    for (std::size_t rep = 0; rep < outcome.fne.size(); ++rep) {
      out << rep << ',' << name << ",fne," << format_full(outcome.fne[rep]) << '\n';
      out << rep << ',' << name << ",type1," << format_full(outcome.type1_rate[rep]) << '\n';
      out << rep << ',' << name << ",power," << format_full(outcome.power_rate[rep]) << '\n';
    }
  }
  write_text(csv_path, out.str());
}

} // namespace latcor
