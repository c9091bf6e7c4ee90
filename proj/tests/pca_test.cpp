#include <catch_amalgamated.hpp>

#include "htforge/pca.hpp"
#include "htforge/prng.hpp"
#include "support/eigen_oracle.hpp"

using namespace htforge;
using namespace htforge::testing;

namespace {
Matrix random_matrix(uint64_t seed, size_t n, size_t d) {
  SplitMix64 rng(seed);
  Matrix x(n, std::vector<double>(d));
  for (auto& row : x)
    for (auto& v : row) v = rng.unit() * 2.0 - 1.0;
  return x;
}

Matrix covariance_of(const Matrix& x) {
  size_t n = x.size(), d = x[0].size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : x)
    for (size_t j = 0; j < d; ++j) mean[j] += r[j] / double(n);
  Matrix c(d, std::vector<double>(d, 0.0));
  for (const auto& r : x)
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < d; ++j) c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
  for (auto& row : c)
    for (auto& v : row) v /= double(n - 1);
  return c;
}
}  // namespace

TEST_CASE("points on a line: first component explains all variance") {
  Matrix x;
  for (int i = -5; i <= 5; ++i) x.push_back({double(i), 2.0 * double(i)});
  PcaModel m = pca_fit(x, 2);
  CHECK(m.explained_ratio[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(m.explained_variance[1] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("isotropic square has two equal eigenvalues") {
  Matrix x = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  PcaModel m = pca_fit(x, 2);
  CHECK(m.explained_variance[0] == Catch::Approx(m.explained_variance[1]).margin(1e-12));
  CHECK(m.explained_ratio[0] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("jacobi reconstruction and oracle eigenvalues on random covariances") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    Matrix x = random_matrix(seed, 10, 5);
    Matrix cov = covariance_of(x);
    EigenResult e = jacobi_eigen_symmetric(cov);
    // reconstruction: || C - V diag(l) V^T ||_inf < 1e-9
    size_t d = cov.size();
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < d; ++j) {
        double s = 0;
        for (size_t k = 0; k < d; ++k) s += e.vectors[i][k] * e.values[k] * e.vectors[j][k];
        REQUIRE(std::abs(s - cov[i][j]) < 1e-9);
      }
    // eigenvalues match the independent solver
    std::vector<double> oracle = oracle_symmetric_eigenvalues(cov);
    std::vector<double> mine = e.values;
    std::sort(oracle.begin(), oracle.end());
    std::sort(mine.begin(), mine.end());
    for (size_t k = 0; k < d; ++k)
      REQUIRE(std::abs(mine[k] - oracle[k]) <= 1e-8 * std::max(1.0, std::abs(oracle[k])));
  }
}

TEST_CASE("components are orthonormal, eigenvalues descending, trace conserved") {
  Matrix x = random_matrix(77, 24, 8);
  PcaModel m = pca_fit(x, 8);
  for (size_t a = 0; a < 8; ++a)
    for (size_t b = 0; b < 8; ++b) {
      double dot = 0;
      for (size_t j = 0; j < 8; ++j) dot += m.components[a][j] * m.components[b][j];
      CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-9);
    }
  for (size_t k = 1; k < 8; ++k) CHECK(m.explained_variance[k - 1] >= m.explained_variance[k]);
  for (double v : m.explained_variance) CHECK(v >= -1e-12);
  Matrix cov = covariance_of(x);
  double trace = 0, sum = 0;
  for (size_t j = 0; j < 8; ++j) trace += cov[j][j];
  for (double v : m.explained_variance) sum += v;
  CHECK(std::abs(sum - trace) < 1e-9);
  double ratios = 0;
  for (double r : m.explained_ratio) ratios += r;
  CHECK(ratios == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("fit is deterministic including component signs") {
  Matrix x = random_matrix(99, 20, 6);
  PcaModel a = pca_fit(x, 4);
  PcaModel b = pca_fit(x, 4);
  CHECK(a.components == b.components);
  for (const auto& comp : a.components) {
    size_t arg = 0;
    for (size_t j = 1; j < comp.size(); ++j)
      if (std::abs(comp[j]) > std::abs(comp[arg])) arg = j;
    CHECK(comp[arg] > 0.0);
  }
}

TEST_CASE("projection: the mean maps to zero; score variances equal eigenvalues") {
  Matrix x = random_matrix(123, 30, 5);
  PcaModel m = pca_fit(x, 4);
  Matrix mean_row = {m.mean};
  Matrix z = pca_project(m, mean_row);
  for (double v : z[0]) CHECK(std::abs(v) < 1e-12);

  Matrix scores = pca_project(m, x);
  for (size_t k = 0; k < 4; ++k) {
    double mu = 0, var = 0;
    for (const auto& r : scores) mu += r[k] / double(scores.size());
    for (const auto& r : scores) var += (r[k] - mu) * (r[k] - mu);
    var /= double(scores.size() - 1);
    CHECK(var == Catch::Approx(m.explained_variance[k]).margin(1e-9));
  }
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(pca_fit({{1.0, 2.0}}, 1), DegenerateInput);
  Matrix x = random_matrix(4, 6, 3);
  CHECK_THROWS_AS(pca_fit(x, 4), DegenerateInput);
  PcaModel m = pca_fit(x, 2);
  CHECK_THROWS_AS(pca_project(m, {{1.0, 2.0}}), DimensionMismatch);
}

TEST_CASE("csv emission schema") {
  Matrix x = random_matrix(5, 8, 4);
  PcaModel m = pca_fit(x, 2);
  Matrix scores = pca_project(m, x);
  std::vector<std::string> ids;
  std::vector<std::string> classes;
  for (size_t i = 0; i < x.size(); ++i) {
    ids.push_back("i" + std::to_string(i));
    classes.push_back(i % 2 ? "infected" : "clean");
  }
  std::string tagged = scatter_csv(ids, scores, classes);
  CHECK(tagged.find("instance_id,pc1,pc2,class\n") == 0);
  CHECK(std::count(tagged.begin(), tagged.end(), '\n') == 9);
  std::string plain = scatter_csv(ids, scores);
  CHECK(plain.find("instance_id,pc1,pc2\n") == 0);
  std::string ev = explained_csv(m);
  CHECK(ev.find("component,eigenvalue,explained_ratio\n") == 0);
  CHECK(ev.find("pc1,") != std::string::npos);
}
