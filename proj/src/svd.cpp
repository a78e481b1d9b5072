#include <algorithm>
#include <cmath>
#include <numeric>

#include "normsep/space.hpp"

namespace normsep {

// One-sided (Hestenes) Jacobi: orthogonalize the columns of A V.
Svd jacobi_svd(std::span<const double> a, int rows, int cols, double tol) {
  const int k = cols;
  std::vector<double> w(a.begin(), a.end());  // rows x cols
  std::vector<double> v(static_cast<std::size_t>(cols) * cols, 0.0);
  for (int i = 0; i < cols; ++i) v[i * cols + i] = 1.0;

  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (int i = 0; i < cols - 1; ++i) {
      for (int j = i + 1; j < cols; ++j) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (int r = 0; r < rows; ++r) {
          const double wi = w[r * cols + i], wj = w[r * cols + j];
          alpha += wi * wi;
          beta += wj * wj;
          gamma += wi * wj;
        }
        if (gamma == 0.0 || std::fabs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int r = 0; r < rows; ++r) {
          const double wi = w[r * cols + i], wj = w[r * cols + j];
          w[r * cols + i] = c * wi - s * wj;
          w[r * cols + j] = s * wi + c * wj;
        }
        for (int r = 0; r < cols; ++r) {
          const double vi = v[r * cols + i], vj = v[r * cols + j];
          v[r * cols + i] = c * vi - s * vj;
          v[r * cols + j] = s * vi + c * vj;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sig(k);
  for (int i = 0; i < k; ++i) {
    double s = 0.0;
    for (int r = 0; r < rows; ++r) s += w[r * cols + i] * w[r * cols + i];
    sig[i] = std::sqrt(s);
  }
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return sig[x] > sig[y]; });

  Svd out;
  out.rows = rows;
  out.cols = cols;
  out.k = k;
  out.s.resize(k);
  out.u.assign(static_cast<std::size_t>(rows) * k, 0.0);
  out.v.assign(static_cast<std::size_t>(cols) * k, 0.0);
  for (int c = 0; c < k; ++c) {
    const int src = order[c];
    out.s[c] = sig[src];
    for (int r = 0; r < cols; ++r) out.v[r * k + c] = v[r * cols + src];
    if (sig[src] > 0.0)
      for (int r = 0; r < rows; ++r) out.u[r * k + c] = w[r * cols + src] / sig[src];
  }
  return out;
}

}  // namespace normsep
