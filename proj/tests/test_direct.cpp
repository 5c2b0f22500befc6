#include "latcor/direct.hpp"

#include "latcor/errors.hpp"
#include "oracle.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace latcor;

namespace {

SampleMatrix make_samples(const Eigen::MatrixXd& values) {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < values.cols(); ++j) names.push_back("v" + std::to_string(j));
  return SampleMatrix(values, names, false);
}

UniqueSets paired_sets() {
  UniqueSets sets;
  sets.sets = {{0, 1}, {2, 3}};
  return sets;
}

} // namespace

TEST_CASE("the worked two-group example") {
  Eigen::MatrixXd z(2, 4);
  z << 1, 1, 1, 1, -1, -1, -1, -1;
  CrossProducts c = cross_products(make_samples(z));
  Eigen::MatrixXd sigma = estimate_sigma(c, paired_sets());
  CHECK(sigma(0, 0) == doctest::Approx(2.0));
  CHECK(sigma(1, 1) == doctest::Approx(2.0));
  CHECK(sigma(0, 1) == doctest::Approx(2.0));
  CHECK(sigma(1, 0) == sigma(0, 1));

  CovEstimate cov = estimate_correlation(sigma, 2);
  CHECK(cov.r(0, 0) == doctest::Approx(1.0));
  CHECK(cov.r(0, 1) == doctest::Approx(1.0));
  CHECK(cov.r(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("zero unique columns zero the touched entries") {
  Eigen::MatrixXd z(3, 4);
  z << 0, 0, 1, 2, 0, 0, -1, 1, 0, 0, 2, -3;
  CrossProducts c = cross_products(make_samples(z));
  Eigen::MatrixXd sigma = estimate_sigma(c, paired_sets());
  CHECK(sigma(0, 0) == doctest::Approx(0.0));
  CHECK(sigma(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("a single higher-level variable averages the off-diagonal cross products") {
  Eigen::MatrixXd z(3, 2);
  z << 1, 2, -1, 1, 2, -1;
  CrossProducts c = cross_products(make_samples(z));
  UniqueSets sets;
  sets.sets = {{0, 1}};
  Eigen::MatrixXd sigma = estimate_sigma(c, sets);
  CHECK(sigma(0, 0) == doctest::Approx(c.c_hat(0, 1)));
}

TEST_CASE("estimate_sigma requires UVC") {
  Eigen::MatrixXd z = Eigen::MatrixXd::Random(4, 3);
  CrossProducts c = cross_products(make_samples(z));
  UniqueSets sets;
  sets.sets = {{0, 1}, {2}};
  CHECK_THROWS_AS(estimate_sigma(c, sets), ValidationError);
}

TEST_CASE("correlation normalization and invalid diagonals") {
  SUBCASE("diagonal covariance gives the identity") {
    Eigen::MatrixXd sigma = Eigen::Vector3d(2.0, 0.5, 7.0).asDiagonal();
    CovEstimate cov = estimate_correlation(sigma, 10);
    CHECK(cov.r.isApprox(Eigen::MatrixXd::Identity(3, 3)));
    CHECK(cov.out_of_range_pairs.empty());
  }

  SUBCASE("non-positive variances mark rows undefined") {
    Eigen::MatrixXd sigma(2, 2);
    sigma << -0.1, 0.3, 0.3, 2.0;
    CovEstimate cov = estimate_correlation(sigma, 10);
    CHECK_FALSE(cov.diag_valid[0]);
    CHECK(cov.diag_valid[1]);
    CHECK(std::isnan(cov.r(0, 1)));
    CHECK(std::isnan(cov.r(0, 0)));
    CHECK(cov.r(1, 1) == doctest::Approx(1.0));
  }

  SUBCASE("out-of-range correlations are reported raw") {
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1.0, 1.5, 1.5, 1.0;
    CovEstimate cov = estimate_correlation(sigma, 10);
    CHECK(cov.r(0, 1) == doctest::Approx(1.5));
    REQUIRE(cov.out_of_range_pairs.size() == 1);
    CHECK(cov.out_of_range_pairs[0] == std::pair<int, int>{0, 1});
  }
}

TEST_CASE("population cross-products recover the latent covariance exactly") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    oracle::PopulationInstance inst = oracle::random_population(rng);
    CrossProducts c;
    c.c_hat = inst.population_c;
    c.n = 1000;  // irrelevant to the identities
    Eigen::MatrixXd recovered = estimate_sigma(c, inst.sets);
    CHECK((recovered - inst.sigma).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("permutation equivariance over higher-level order") {
  std::mt19937_64 rng(123);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(8, 6);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 6; ++j) z(i, j) = normal(rng);
  CrossProducts c = cross_products(make_samples(z));

  UniqueSets sets;
  sets.sets = {{0, 1}, {2, 3}, {4, 5}};
  Eigen::MatrixXd sigma = estimate_sigma(c, sets);

  UniqueSets permuted;
  permuted.sets = {{4, 5}, {0, 1}, {2, 3}};  // order (2, 0, 1)
  Eigen::MatrixXd sigma_perm = estimate_sigma(c, permuted);

  const int perm[3] = {2, 0, 1};
  for (int l = 0; l < 3; ++l)
    for (int k = 0; k < 3; ++k)
      CHECK(sigma_perm(l, k) == doctest::Approx(sigma(perm[l], perm[k])));
}

TEST_CASE("scale equivariance in the unique variables") {
  std::mt19937_64 rng(321);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(10, 4);
  for (int i = 0; i < 10; ++i) {
    double x0 = normal(rng), x1 = normal(rng);
    z(i, 0) = x0 + 0.3 * normal(rng);
    z(i, 1) = x0 + 0.3 * normal(rng);
    z(i, 2) = x1 + 0.3 * normal(rng);
    z(i, 3) = x1 + 0.3 * normal(rng);
  }

  const double s = 3.7;
  Eigen::MatrixXd scaled = z;
  scaled.col(0) *= s;
  scaled.col(1) *= s;

  UniqueSets sets = paired_sets();
  CovEstimate base = direct_estimate(cross_products(make_samples(z)), sets);
  CovEstimate mult = direct_estimate(cross_products(make_samples(scaled)), sets);

  CHECK(mult.sigma(0, 0) == doctest::Approx(s * s * base.sigma(0, 0)));
  CHECK(mult.sigma(0, 1) == doctest::Approx(s * base.sigma(0, 1)));
  CHECK(mult.r(0, 1) == doctest::Approx(base.r(0, 1)));
}
