#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "htforge/common.hpp"

namespace htforge {

HTFORGE_DEFINE_ERROR(DegenerateInput)
HTFORGE_DEFINE_ERROR(DimensionMismatch)

using Matrix = std::vector<std::vector<double>>;

struct EigenResult {
  std::vector<double> values;  // unsorted, values[j] for column j of vectors
  Matrix vectors;              // vectors[r][j]: component r of eigenvector j
};

// Cyclic Jacobi rotations on a symmetric matrix, iterated until the
// off-diagonal Frobenius norm drops below tol (with a sweep cap: each sweep
// converges quadratically, so the cap only guards pathological scaling).
inline EigenResult jacobi_eigen_symmetric(Matrix a, double tol = 1e-12, int max_sweeps = 60) {
  size_t n = a.size();
  for (const auto& row : a)
    if (row.size() != n) throw DimensionMismatch("matrix is not square");
  Matrix v(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) v[i][i] = 1.0;

  auto off_norm = [&] {
    double s = 0.0;
    for (size_t p = 0; p < n; ++p)
      for (size_t q = p + 1; q < n; ++q) s += 2.0 * a[p][q] * a[p][q];
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < max_sweeps && off_norm() >= tol; ++sweep) {
    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        double apq = a[p][q];
        if (apq == 0.0) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        double app = a[p][p], aqq = a[q][q];
        a[p][p] = app - t * apq;
        a[q][q] = aqq + t * apq;
        a[p][q] = a[q][p] = 0.0;
        for (size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          double arp = a[r][p], arq = a[r][q];
          a[r][p] = a[p][r] = c * arp - s * arq;
          a[r][q] = a[q][r] = s * arp + c * arq;
        }
        for (size_t r = 0; r < n; ++r) {
          double vrp = v[r][p], vrq = v[r][q];
          v[r][p] = c * vrp - s * vrq;
          v[r][q] = s * vrp + c * vrq;
        }
      }
    }
  }

  EigenResult res;
  res.values.resize(n);
  for (size_t i = 0; i < n; ++i) res.values[i] = a[i][i];
  res.vectors = std::move(v);
  return res;
}

struct PcaModel {
  std::vector<double> mean;        // length D
  Matrix components;               // m rows of length D, orthonormal
  std::vector<double> explained_variance;  // top-m eigenvalues, descending
  std::vector<double> explained_ratio;     // eigenvalue / total variance

  size_t dim() const { return mean.size(); }
  size_t n_components() const { return components.size(); }
};

// Covariance PCA: center by column means, covariance with 1/(n-1), Jacobi
// eigendecomposition, eigenpairs sorted by descending eigenvalue. Sign
// convention: the largest-magnitude entry of each component is positive.
inline PcaModel pca_fit(const Matrix& x, size_t m) {
  size_t n = x.size();
  if (n < 2) throw DegenerateInput("PCA needs at least 2 rows");
  size_t d = x[0].size();
  for (const auto& row : x)
    if (row.size() != d) throw DimensionMismatch("ragged input matrix");
  if (m < 1 || m > std::min(n - 1, d))
    throw DegenerateInput("component count must be in [1, min(n-1, D)]");

  PcaModel model;
  model.mean.assign(d, 0.0);
  for (const auto& row : x)
    for (size_t j = 0; j < d; ++j) model.mean[j] += row[j] / double(n);

  Matrix cov(d, std::vector<double>(d, 0.0));
  for (const auto& row : x) {
    for (size_t i = 0; i < d; ++i) {
      double ci = row[i] - model.mean[i];
      for (size_t j = i; j < d; ++j) cov[i][j] += ci * (row[j] - model.mean[j]);
    }
  }
  for (size_t i = 0; i < d; ++i)
    for (size_t j = i; j < d; ++j) {
      cov[i][j] /= double(n - 1);
      cov[j][i] = cov[i][j];
    }

  EigenResult eig = jacobi_eigen_symmetric(cov);
  std::vector<size_t> order(d);
  std::iota(order.begin(), order.end(), size_t(0));
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return eig.values[a] > eig.values[b];
  });
  double total = 0.0;
  for (double v : eig.values) total += v;

  for (size_t k = 0; k < m; ++k) {
    size_t j = order[k];
    std::vector<double> comp(d);
    for (size_t r = 0; r < d; ++r) comp[r] = eig.vectors[r][j];
    size_t arg = 0;
    for (size_t r = 1; r < d; ++r)
      if (std::abs(comp[r]) > std::abs(comp[arg])) arg = r;
    if (comp[arg] < 0)
      for (double& c : comp) c = -c;
    model.components.push_back(std::move(comp));
    model.explained_variance.push_back(eig.values[j]);
    model.explained_ratio.push_back(total > 0 ? eig.values[j] / total : 0.0);
  }
  return model;
}

// Scores: (X - mean) * components^T, one row per input row.
inline Matrix pca_project(const PcaModel& model, const Matrix& x) {
  Matrix out;
  out.reserve(x.size());
  for (const auto& row : x) {
    if (row.size() != model.dim())
      throw DimensionMismatch("row width " + std::to_string(row.size()) +
                              " != model dimension " + std::to_string(model.dim()));
    std::vector<double> score(model.n_components(), 0.0);
    for (size_t k = 0; k < model.n_components(); ++k)
      for (size_t j = 0; j < model.dim(); ++j)
        score[k] += (row[j] - model.mean[j]) * model.components[k][j];
    out.push_back(std::move(score));
  }
  return out;
}

namespace detail {
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}
}  // namespace detail

// Plot-ready PC1/PC2 scatter rows; `classes` may be empty when labels are
// not revealed.
inline std::string scatter_csv(const std::vector<std::string>& ids, const Matrix& scores,
                               const std::vector<std::string>& classes = {}) {
  if (!classes.empty() && classes.size() != ids.size())
    throw DimensionMismatch("class column length mismatch");
  if (scores.size() != ids.size()) throw DimensionMismatch("score row count mismatch");
  std::string out = classes.empty() ? "instance_id,pc1,pc2\n" : "instance_id,pc1,pc2,class\n";
  for (size_t i = 0; i < ids.size(); ++i) {
    if (scores[i].size() < 2) throw DimensionMismatch("scatter needs at least 2 components");
    out += ids[i] + "," + detail::fmt_double(scores[i][0]) + "," + detail::fmt_double(scores[i][1]);
    if (!classes.empty()) out += "," + classes[i];
    out += "\n";
  }
  return out;
}

inline std::string explained_csv(const PcaModel& model) {
  std::string out = "component,eigenvalue,explained_ratio\n";
  for (size_t k = 0; k < model.n_components(); ++k)
    out += "pc" + std::to_string(k + 1) + "," + detail::fmt_double(model.explained_variance[k]) +
           "," + detail::fmt_double(model.explained_ratio[k]) + "\n";
  return out;
}

}  // namespace htforge
