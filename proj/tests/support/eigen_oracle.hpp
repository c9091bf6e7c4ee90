#pragma once

// Independent symmetric eigensolver used as a test oracle: Householder
// tridiagonalization followed by implicit-shift QL iteration. Shares no
// code path with the library's Jacobi implementation.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace htforge::testing {

// Returns the eigenvalues of a symmetric matrix, unsorted.
inline std::vector<double> oracle_symmetric_eigenvalues(std::vector<std::vector<double>> a) {
  size_t n = a.size();
  std::vector<double> d(n, 0.0), e(n, 0.0);

  // Householder reduction to tridiagonal form (tred2-style, values only).
  for (size_t i = n; i-- > 1;) {
    size_t l = i - 1;
    double h = 0.0, scale = 0.0;
    if (l > 0) {
      for (size_t k = 0; k <= l; ++k) scale += std::abs(a[i][k]);
      if (scale == 0.0) {
        e[i] = a[i][l];
      } else {
        for (size_t k = 0; k <= l; ++k) {
          a[i][k] /= scale;
          h += a[i][k] * a[i][k];
        }
        double f = a[i][l];
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        a[i][l] = f - g;
        f = 0.0;
        for (size_t j = 0; j <= l; ++j) {
          g = 0.0;
          for (size_t k = 0; k <= j; ++k) g += a[j][k] * a[i][k];
          for (size_t k = j + 1; k <= l; ++k) g += a[k][j] * a[i][k];
          e[j] = g / h;
          f += e[j] * a[i][j];
        }
        double hh = f / (h + h);
        for (size_t j = 0; j <= l; ++j) {
          f = a[i][j];
          e[j] = g = e[j] - hh * f;
          for (size_t k = 0; k <= j; ++k) a[j][k] -= f * e[k] + g * a[i][k];
        }
      }
    } else {
      e[i] = a[i][l];
    }
    d[i] = h;
  }
  for (size_t i = 0; i < n; ++i) d[i] = a[i][i];

  // Implicit QL with shifts (tqli-style, values only).
  for (size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  for (size_t l = 0; l < n; ++l) {
    int iter = 0;
    size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= 1e-300 || std::abs(e[m]) <= 1e-15 * dd) break;
      }
      if (m != l) {
        if (++iter == 50) throw std::runtime_error("oracle QL failed to converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
        double s = 1.0, c = 1.0, p = 0.0;
        for (size_t i = m; i-- > l;) {
          double f = s * e[i];
          double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
        }
        if (r == 0.0 && m >= l + 2) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  return d;
}

}  // namespace htforge::testing
