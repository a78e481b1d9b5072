#include <cmath>

#include "normsep/errors.hpp"
#include "normsep/geometry.hpp"

namespace normsep {

namespace {

constexpr std::uint64_t kHitAndRunChunk = 1024;

// Radius R of a block with density proportional to r^{m-1} e^{-r^p}
// (or uniform-ball radius at p = inf).
double block_radius(Rng& rng, int m, const Exponent& p) {
  if (p.is_infinite()) return std::pow(rng.uniform_open(), 1.0 / m);
  const double q = p.value();
  return std::pow(rng.gamma(m / q), 1.0 / q);
}

}  // namespace

double draw_cone(const NormedSpace& space, Rng& rng, std::span<double> out) {
  const auto& d = space.descriptor();
  const int n = d.n;
  switch (d.kind) {
    case SpaceKind::lp: {
      if (d.p.is_infinite()) {
        for (int i = 0; i < n; ++i) out[i] = 2.0 * rng.uniform() - 1.0;
      } else {
        const double p = d.p.value();
        for (int i = 0; i < n; ++i) {
          double s;
          if (p == 2.0)
            s = rng.normal();
          else if (p == 1.0)
            s = rng.sign() * rng.exponential();
          else
            s = rng.sign() * std::pow(rng.gamma(1.0 / p), 1.0 / p);
          out[i] = s;
        }
      }
      const double r = space.norm(out);
      for (int i = 0; i < n; ++i) out[i] /= r;
      return 1.0;
    }
    case SpaceKind::orlicz_beta: {
      // tau ~ cone measure of l1, mapped onto the Orlicz sphere.
      double l1 = 0.0;
      for (int i = 0; i < n; ++i) {
        out[i] = rng.sign() * rng.exponential();
        l1 += std::fabs(out[i]);
      }
      double w = 0.0;
      for (int i = 0; i < n; ++i) {
        const double a = std::fabs(out[i]) / l1;
        w += std::expm1(d.beta * a);
        const double t = -std::expm1(-d.beta * a);
        out[i] = out[i] < 0 ? -t : t;
      }
      return w;
    }
    case SpaceKind::block_lp: {
      double w = 1.0;
      const auto& kids = space.children();
      const auto& off = space.offsets();
      std::vector<double> radii(kids.size());
      for (std::size_t j = 0; j < kids.size(); ++j) {
        auto slice = out.subspan(off[j], kids[j].dim());
        w *= draw_cone(kids[j], rng, slice);
        radii[j] = block_radius(rng, kids[j].dim(), d.p);
      }
      double total = 0.0;
      if (d.p.is_infinite()) {
        for (double r : radii) total = std::max(total, r);
      } else {
        const double p = d.p.value();
        for (double r : radii) total += std::pow(r, p);
        total = std::pow(total, 1.0 / p);
      }
      for (std::size_t j = 0; j < kids.size(); ++j)
        for (int i = off[j]; i < off[j + 1]; ++i) out[i] *= radii[j] / total;
      return w;
    }
    case SpaceKind::schatten:
    case SpaceKind::intersect_ball:
      break;
  }
  throw UnsupportedError("has_cone_sampler", std::string("no direct cone sampler for ") + kind_name(d.kind));
}

// ---- hit-and-run ------------------------------------------------------------

HitAndRunChain::HitAndRunChain(const NormedSpace& space, std::uint64_t key, const HitAndRunOptions& options)
    : space_(space), rng_(key), options_(options), x_(space.dim(), 0.0), u_(space.dim()), y_(space.dim()) {
  if (options_.burn_in == 0) options_.burn_in = 100ull * space.dim();
  if (options_.thinning == 0) options_.thinning = 1;
  for (std::uint64_t i = 0; i < options_.burn_in; ++i) step();
}

void HitAndRunChain::step() {
  const int n = space_.dim();
  double un = 0.0;
  for (int i = 0; i < n; ++i) {
    u_[i] = rng_.normal();
    un += u_[i] * u_[i];
  }
  un = std::sqrt(un);
  for (int i = 0; i < n; ++i) u_[i] /= un;
  const double nu = space_.norm(u_);
  const double nx = space_.norm(x_);
  // Largest t with |x + t s u| <= 1, by bisection on a convex function.
  auto chord = [&](double s) {
    double lo = 0.0, hi = (1.0 + nx) / nu;
    while (hi - lo > 1e-12 * hi) {
      const double mid = 0.5 * (lo + hi);
      for (int i = 0; i < n; ++i) y_[i] = x_[i] + s * mid * u_[i];
      if (space_.norm(y_) <= 1.0)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  };
  const double tp = chord(1.0);
  const double tm = chord(-1.0);
  const double t = -tm + (tp + tm) * rng_.uniform();
  for (int i = 0; i < n; ++i) x_[i] += t * u_[i];
}

std::span<const double> HitAndRunChain::next() {
  for (std::uint64_t i = 0; i < options_.thinning; ++i) step();
  return x_;
}

namespace {

// Per-chunk weighted accumulation, with batch-means error for Markov chains.
MonteCarloEstimate reduce_samples(const NormedSpace& space, std::uint64_t count, std::uint64_t seed, bool on_sphere,
                                  const std::function<double(std::span<const double>)>& f) {
  if (count == 0) throw InputError("sample count must be positive");
  const int n = space.dim();
  const bool direct = space.capabilities().has_cone_sampler;
  const ChunkPlan plan{count, direct ? kDefaultChunk : kHitAndRunChunk};
  std::vector<WeightedAccumulator> parts(plan.count());
  parallel_for_chunks(parts.size(), [&](std::size_t c) {
    std::vector<double> x(n);
    WeightedAccumulator a;
    const std::uint64_t size = plan.size(c);
    if (direct) {
      Rng rng = Rng::stream(seed, {0xC0E5ull, c});
      for (std::uint64_t t = 0; t < size; ++t) {
        const double w = draw_cone(space, rng, x);
        if (!on_sphere) {
          const double r = std::pow(rng.uniform_open(), 1.0 / n);
          for (double& v : x) v *= r;
        }
        a.add(w, f(x));
      }
    } else {
      HitAndRunChain chain(space, derive_key(seed, {0x4852ull, c}));
      for (std::uint64_t t = 0; t < size; ++t) {
        auto p = chain.next();
        std::copy(p.begin(), p.end(), x.begin());
        if (on_sphere) {
          const double r = space.norm(x);
          if (r == 0.0) continue;
          for (double& v : x) v /= r;
        }
        a.add(1.0, f(x));
      }
    }
    parts[c] = a;
  });
  WeightedAccumulator total;
  for (const auto& p : parts) total.merge(p);
  MonteCarloEstimate est = total.estimate(seed);
  if (!direct && parts.size() >= 2) {
    MeanAccumulator batches;
    for (const auto& p : parts) batches.add(p.mean());
    est.stderr = std::max(est.stderr, batches.stderr());
  }
  return est;
}

}  // namespace

MonteCarloEstimate cone_expectation(const NormedSpace& space, std::uint64_t count, std::uint64_t seed,
                                    const std::function<double(std::span<const double>)>& f) {
  return reduce_samples(space, count, seed, true, f);
}

MonteCarloEstimate ball_expectation(const NormedSpace& space, std::uint64_t count, std::uint64_t seed,
                                    const std::function<double(std::span<const double>)>& f) {
  return reduce_samples(space, count, seed, false, f);
}

namespace {

std::vector<ConeSample> collect(const NormedSpace& space, std::uint64_t count, std::uint64_t seed, bool on_sphere) {
  const int n = space.dim();
  const bool direct = space.capabilities().has_cone_sampler;
  const ChunkPlan plan{count, direct ? kDefaultChunk : kHitAndRunChunk};
  std::vector<ConeSample> out(count);
  parallel_for_chunks(plan.count(), [&](std::size_t c) {
    const std::uint64_t b = plan.begin(c), size = plan.size(c);
    if (direct) {
      Rng rng = Rng::stream(seed, {0xC0E5ull, c});
      for (std::uint64_t t = 0; t < size; ++t) {
        ConeSample& s = out[b + t];
        s.point.resize(n);
        s.weight = draw_cone(space, rng, s.point);
        if (!on_sphere) {
          const double r = std::pow(rng.uniform_open(), 1.0 / n);
          for (double& v : s.point) v *= r;
        }
      }
    } else {
      HitAndRunChain chain(space, derive_key(seed, {0x4852ull, c}));
      for (std::uint64_t t = 0; t < size; ++t) {
        auto p = chain.next();
        ConeSample& s = out[b + t];
        s.point.assign(p.begin(), p.end());
        if (on_sphere) {
          const double r = space.norm(s.point);
          for (double& v : s.point) v /= r;
        }
      }
    }
  });
  return out;
}

}  // namespace

std::vector<ConeSample> cone_sample(const NormedSpace& space, std::uint64_t count, std::uint64_t seed) {
  return collect(space, count, seed, true);
}

std::vector<ConeSample> uniform_ball_sample(const NormedSpace& space, std::uint64_t count, std::uint64_t seed) {
  return collect(space, count, seed, false);
}

HitAndRunResult hit_and_run_sample(const NormedSpace& space, std::uint64_t count, std::uint64_t burn_in,
                                   std::uint64_t seed) {
  if (count == 0) throw InputError("sample count must be positive");
  const int n = space.dim();
  const ChunkPlan plan{count, kHitAndRunChunk};
  HitAndRunResult res;
  res.points.resize(count);
  std::vector<MeanAccumulator> parts(plan.count());
  HitAndRunOptions opt;
  opt.burn_in = burn_in;
  parallel_for_chunks(plan.count(), [&](std::size_t c) {
    HitAndRunChain chain(space, derive_key(seed, {0x4852ull, c}), opt);
    for (std::uint64_t t = 0; t < plan.size(c); ++t) {
      auto p = chain.next();
      auto& dst = res.points[plan.begin(c) + t];
      dst.assign(p.begin(), p.end());
      parts[c].add(space.norm(dst));
    }
  });
  MeanAccumulator all;
  MeanAccumulator batches;
  for (const auto& p : parts) {
    all.merge(p);
    batches.add(p.mean());
  }
  res.radial_mean = all.estimate(seed);
  if (parts.size() >= 2) res.radial_mean.stderr = std::max(res.radial_mean.stderr, batches.stderr());
  res.expected_radial_mean = static_cast<double>(n) / (n + 1.0);
  res.converged =
      std::fabs(res.radial_mean.value - res.expected_radial_mean) <= 4.0 * res.radial_mean.stderr + 0.01;
  return res;
}

}  // namespace normsep
