// Exact 1-D total-variation denoising with the direct (taut-string family)
// non-iterative scan: a segment is grown while the running dual stays inside
// [-lambda, lambda]; when it leaves, the segment is emitted at the violated
// bound and the scan restarts from the segment's end.
#include <algorithm>
#include <cmath>

#include "fdr/error.hpp"
#include "fdr/regularizers.hpp"

namespace fdr::prox {

Vector tv1d(const Vector& y, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidInput("tv1d prox: negative weight");
  const std::size_t n = y.size();
  Vector out(n);
  if (n == 0) return out;
  if (n == 1 || lambda == 0.0) return y;

  using idx = std::ptrdiff_t;
  const idx last = static_cast<idx>(n) - 1;
  idx k = 0, k0 = 0, kplus = 0, kminus = 0;
  double umin = lambda, umax = -lambda;
  double vmin = y[0] - lambda, vmax = y[0] + lambda;
  const double two_lambda = 2.0 * lambda;

  auto fill = [&](idx upto, double v) {
    do {
      out[static_cast<std::size_t>(k0++)] = v;
    } while (k0 <= upto);
  };

  for (;;) {
    while (k == last) {
      if (umin < 0.0) {
        fill(kminus, vmin);
        k = kminus = k0;
        vmin = y[static_cast<std::size_t>(k)];
        umin = lambda;
        umax = vmin + umin - vmax;
      } else if (umax > 0.0) {
        fill(kplus, vmax);
        k = kplus = k0;
        vmax = y[static_cast<std::size_t>(k)];
        umax = -lambda;
        umin = vmax + umax - vmin;
      } else {
        vmin += umin / static_cast<double>(k - k0 + 1);
        fill(k, vmin);
        return out;
      }
    }
    const double next = y[static_cast<std::size_t>(k + 1)];
    umin += next - vmin;
    if (umin < -lambda) {
      fill(kminus, vmin);
      k = kplus = kminus = k0;
      vmin = y[static_cast<std::size_t>(k)];
      vmax = vmin + two_lambda;
      umin = lambda;
      umax = -lambda;
      continue;
    }
    umax += next - vmax;
    if (umax > lambda) {
      fill(kplus, vmax);
      k = kplus = kminus = k0;
      vmax = y[static_cast<std::size_t>(k)];
      vmin = vmax - two_lambda;
      umin = lambda;
      umax = -lambda;
      continue;
    }
    ++k;
    if (umin >= lambda) {
      kminus = k;
      vmin += (umin - lambda) / static_cast<double>(kminus - k0 + 1);
      umin = lambda;
    }
    if (umax <= -lambda) {
      kplus = k;
      vmax += (umax + lambda) / static_cast<double>(kplus - k0 + 1);
      umax = -lambda;
    }
  }
}

Vector project_l1_ball(const Vector& x, double radius) {
  if (!(radius >= 0.0)) throw InvalidInput("project_l1_ball: negative radius");
  if (norm1(x) <= radius) return x;
  const std::size_t n = x.size();
  if (radius == 0.0) return Vector(n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::fabs(x[a]) > std::fabs(x[b]); });
  double cum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double a = std::fabs(x[order[j]]);
    cum += a;
    const double t = (cum - radius) / static_cast<double>(j + 1);
    if (a - t > 0.0) theta = t;
    else break;
  }
  Vector w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::fabs(x[i]) - theta;
    w[i] = a > 0.0 ? std::copysign(a, x[i]) : 0.0;
  }
  return w;
}

}  // namespace fdr::prox
