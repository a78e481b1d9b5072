#include "normsep/sphere_opt.hpp"

#include <cmath>

#include "normsep/estimate.hpp"
#include "normsep/rng.hpp"

namespace normsep {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(std::vector<double>& v) {
  const double nv = std::sqrt(dot(v, v));
  for (double& x : v) x /= nv;
}

std::vector<std::vector<double>> structured(int n) {
  std::vector<std::vector<double>> out;
  const int coords = n <= 64 ? n : 8;
  for (int i = 0; i < coords; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    out.push_back(e);
  }
  if (n > 1) {
    out.emplace_back(n, 1.0);
    std::vector<double> alt(n);
    for (int i = 0; i < n; ++i) alt[i] = (i % 2) ? -1.0 : 1.0;
    out.push_back(alt);
    std::vector<double> half(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) half[i] = 1.0;
    out.push_back(half);
  }
  for (auto& v : out) normalize(v);
  return out;
}

struct Ascent {
  std::vector<double> u;
  double value;
};

Ascent ascend(int n, std::vector<double> u, const SphereObjective& f, const SphereMaxOptions& o) {
  std::vector<double> g(n), cand(n), gc(n);
  double fu = f(u, g);
  double step = 0.5;
  for (int it = 0; it < o.max_iterations && step > o.tolerance; ++it) {
    const double radial = dot(g, u);
    double tn = 0.0;
    for (int i = 0; i < n; ++i) {
      g[i] -= radial * u[i];
      tn += g[i] * g[i];
    }
    tn = std::sqrt(tn);
    if (!(tn > 1e-14)) break;
    for (int i = 0; i < n; ++i) cand[i] = u[i] + step * g[i] / tn;
    normalize(cand);
    const double fc = f(cand, gc);
    if (fc > fu) {
      u.swap(cand);
      g.swap(gc);
      fu = fc;
      step = std::min(2.0 * step, 1.0);
    } else {
      step *= 0.5;
      f(u, g);
    }
  }
  return {std::move(u), fu};
}

}  // namespace

SphereMaxResult maximize_on_sphere(int n, const SphereObjective& f, const SphereMaxOptions& o,
                                   std::uint64_t seed) {
  std::vector<std::vector<double>> starts;
  if (o.structured_starts) starts = structured(n);
  for (int r = 0; r < o.restarts; ++r) {
    Rng rng = Rng::stream(seed, {0x5EA7ull, static_cast<std::uint64_t>(r)});
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    normalize(v);
    starts.push_back(std::move(v));
  }
  std::vector<Ascent> results(starts.size());
  parallel_for_chunks(starts.size(), [&](std::size_t i) { results[i] = ascend(n, starts[i], f, o); });

  SphereMaxResult out;
  std::size_t best = 0;
  MeanAccumulator spread;
  for (std::size_t i = 0; i < results.size(); ++i) {
    out.start_values.push_back(results[i].value);
    spread.add(results[i].value);
    if (results[i].value > results[best].value) best = i;
  }
  out.argmax = results[best].u;
  out.value = results[best].value;
  out.dispersion = spread.stderr() * std::sqrt(static_cast<double>(spread.count()));
  return out;
}

}  // namespace normsep
