#include <cmath>

#include "normsep/errors.hpp"
#include "normsep/geometry.hpp"

namespace normsep {

namespace {

// log P(Poisson(beta) >= m)
double log_poisson_tail(int m, double beta) {
  if (m <= 0) return 0.0;
  auto log_term = [&](int j) { return -beta + j * std::log(beta) - std::lgamma(j + 1.0); };
  if (m > beta) {
    const double first = log_term(m);
    double sum = 0.0, t = 1.0;
    for (int j = m; t > 1e-18 * sum || j == m; ++j) {
      sum += t;
      t *= beta / (j + 1.0);
    }
    return first + std::log(sum);
  }
  double lower = 0.0;
  for (int j = 0; j < m; ++j) lower += std::exp(log_term(j));
  return std::log1p(-lower);
}

}  // namespace

double log_volume_exact(const NormedSpace& space) {
  const auto& d = space.descriptor();
  switch (d.kind) {
    case SpaceKind::lp: {
      if (d.p.is_infinite()) return d.n * std::log(2.0);
      const double p = d.p.value();
      return d.n * (std::log(2.0) + std::lgamma(1.0 + 1.0 / p)) - std::lgamma(1.0 + d.n / p);
    }
    case SpaceKind::orlicz_beta:
      return d.n * std::log(2.0) + log_poisson_tail(d.n, d.beta);
    case SpaceKind::block_lp: {
      double s = 0.0;
      const double ip = d.p.reciprocal();
      for (const auto& c : space.children()) {
        if (!c.capabilities().has_exact_volume)
          throw UnsupportedError("has_exact_volume", "block without an exact volume formula");
        s += log_volume_exact(c) + std::lgamma(1.0 + c.dim() * ip);
      }
      return s - std::lgamma(1.0 + d.n * ip);
    }
    case SpaceKind::schatten:
    case SpaceKind::intersect_ball:
      break;
  }
  throw UnsupportedError("has_exact_volume",
                         std::string("no exact volume for kind ") + kind_name(d.kind) + "; use volume_mc");
}

double volume_exact(const NormedSpace& space) {
  const auto& d = space.descriptor();
  if (d.kind == SpaceKind::lp && d.p.is_infinite()) return std::ldexp(1.0, d.n);
  return std::exp(log_volume_exact(space));
}

MonteCarloEstimate volume_mc(const NormedSpace& space, std::uint64_t trials, std::uint64_t seed,
                             bool allow_high_dim) {
  const int n = space.dim();
  if (n > 20 && !allow_high_dim)
    throw UnsupportedError("hit_rate", "hit-or-miss volume refused for dimension > 20 (override to proceed)");
  if (trials == 0) throw InputError("trials must be positive");
  std::vector<double> half(n);
  double box = 1.0;
  for (int i = 0; i < n; ++i) {
    half[i] = space.coordinate_bound(i);
    box *= 2.0 * half[i];
  }
  const ChunkPlan plan{trials, kDefaultChunk};
  auto acc = chunked_reduce<MeanAccumulator>(plan, [&](std::size_t c, std::uint64_t size) {
    Rng rng = Rng::stream(seed, {0x701ull, c});
    std::vector<double> x(n);
    MeanAccumulator a;
    for (std::uint64_t t = 0; t < size; ++t) {
      for (int i = 0; i < n; ++i) x[i] = half[i] * (2.0 * rng.uniform() - 1.0);
      a.add(space.norm(x) <= 1.0 ? box : 0.0);
    }
    return a;
  });
  return acc.estimate(seed);
}

MonteCarloEstimate volume_any(const NormedSpace& space, std::uint64_t trials, std::uint64_t seed) {
  if (space.capabilities().has_exact_volume) return MonteCarloEstimate::exact(volume_exact(space));
  return volume_mc(space, trials, seed);
}

}  // namespace normsep
