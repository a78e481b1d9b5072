#include <cmath>
#include <cstring>
#include <numbers>

#include "normsep/errors.hpp"
#include "normsep/geometry.hpp"
#include "normsep/sphere_opt.hpp"

namespace normsep {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

bool is_lp(const NormedSpace& s, double p) {
  const auto& d = s.descriptor();
  return d.kind == SpaceKind::lp && !d.p.is_infinite() && d.p.value() == p;
}
bool is_linf(const NormedSpace& s) {
  const auto& d = s.descriptor();
  return d.kind == SpaceKind::lp && d.p.is_infinite();
}

// vol(B_2^{n-1}) / vol(B_2^n)
double euclid_shadow_ratio(int n) {
  return std::exp(std::lgamma(n / 2.0 + 1.0) - std::lgamma((n + 1) / 2.0)) / std::sqrt(std::numbers::pi);
}

// Relative error of a product of independent estimates raised to powers.
MonteCarloEstimate combine(double value, std::initializer_list<std::pair<MonteCarloEstimate, double>> parts,
                           std::uint64_t seed) {
  double rel2 = 0.0;
  std::uint64_t trials = 1;
  for (const auto& [e, power] : parts) {
    if (e.value != 0.0) rel2 += std::pow(power * e.stderr / e.value, 2);
    trials = std::max(trials, e.trials);
  }
  return {value, std::fabs(value) * std::sqrt(rel2), trials, seed};
}

}  // namespace

MonteCarloEstimate surface_ratio(const NormedSpace& space, std::uint64_t samples, std::uint64_t seed, bool force_mc) {
  const int n = space.dim();
  if (!force_mc) {
    if (is_lp(space, 2.0) || is_linf(space)) return MonteCarloEstimate::exact(n);
    if (is_lp(space, 1.0)) return MonteCarloEstimate::exact(n * std::sqrt(static_cast<double>(n)));
  }
  MonteCarloEstimate e = cone_expectation(space, samples, seed, [&](std::span<const double> t) {
    std::vector<double> g(n);
    space.gradient_into(t, g);
    return n * l2(g);
  });
  return e;
}

double iq_euclidean_ball(int n) {
  return n * std::sqrt(std::numbers::pi) / std::exp(std::lgamma(n / 2.0 + 1.0) / n);
}

MonteCarloEstimate iq(const NormedSpace& space, std::uint64_t samples, std::uint64_t seed, bool force_mc) {
  const int n = space.dim();
  const MonteCarloEstimate ratio = surface_ratio(space, samples, seed, force_mc);
  if (space.capabilities().has_exact_volume) {
    const double root = std::exp(log_volume_exact(space) / n);
    return {ratio.value * root, ratio.stderr * root, ratio.trials, seed};
  }
  const MonteCarloEstimate vol = volume_mc(space, samples, derive_key(seed, {0x766F6Cull}), true);
  return combine(ratio.value * std::pow(vol.value, 1.0 / n), {{ratio, 1.0}, {vol, 1.0 / n}}, seed);
}

std::optional<double> psi_closed_form(const NormedSpace& space, std::span<const double> w) {
  const int n = space.dim();
  if (is_linf(space) || (space.kind() == SpaceKind::lp && n == 1)) {
    double s = 0.0;
    for (double v : w) s += std::fabs(v);
    return s / 2.0;
  }
  if (is_lp(space, 2.0)) return l2(w) * euclid_shadow_ratio(n);
  return std::nullopt;
}

MonteCarloEstimate psi(const NormedSpace& space, std::span<const double> w, std::uint64_t samples, std::uint64_t seed,
                       bool allow_closed_form) {
  const int n = space.dim();
  if (static_cast<int>(w.size()) != n) throw InputError("direction length does not match dimension");
  if (l2(w) == 0.0) return MonteCarloEstimate::exact(0.0);
  if (allow_closed_form)
    if (auto c = psi_closed_form(space, w)) return MonteCarloEstimate::exact(*c);
  std::vector<double> wv(w.begin(), w.end());
  return cone_expectation(space, samples, seed, [&, wv](std::span<const double> t) {
    std::vector<double> g(n);
    space.gradient_into(t, g);
    return 0.5 * n * std::fabs(dot(wv, g));
  });
}

PsiEvaluator::PsiEvaluator(const NormedSpace& space, std::uint64_t samples, std::uint64_t seed, bool allow_closed_form)
    : space_(&space), n_(space.dim()) {
  if (allow_closed_form && (is_linf(space) || is_lp(space, 2.0) || (space.kind() == SpaceKind::lp && n_ == 1))) {
    closed_ = true;
    return;
  }
  const auto pts = cone_sample(space, samples, seed);
  grads_.resize(pts.size() * n_);
  weights_.resize(pts.size());
  parallel_for_chunks((pts.size() + kDefaultChunk - 1) / kDefaultChunk, [&](std::size_t c) {
    const std::size_t end = std::min(pts.size(), (c + 1) * kDefaultChunk);
    for (std::size_t i = c * kDefaultChunk; i < end; ++i)
      space.gradient_into(pts[i].point, std::span<double>(grads_.data() + i * n_, n_));
  });
  CompensatedSum ws;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    weights_[i] = pts[i].weight;
    ws.add(pts[i].weight);
  }
  weight_sum_ = ws.value();
}

double PsiEvaluator::operator()(std::span<const double> w) const {
  if (closed_) return *psi_closed_form(*space_, w);
  double s = 0.0;
  const std::size_t m = weights_.size();
  for (std::size_t i = 0; i < m; ++i) {
    const double* g = grads_.data() + i * n_;
    double d = 0.0;
    for (int k = 0; k < n_; ++k) d += g[k] * w[k];
    s += weights_[i] * std::fabs(d);
  }
  return 0.5 * n_ * s / weight_sum_;
}

double PsiEvaluator::value_and_gradient(std::span<const double> w, std::span<double> grad) const {
  if (closed_) {
    if (is_linf(*space_) || n_ == 1) {
      for (int k = 0; k < n_; ++k) grad[k] = w[k] > 0 ? 0.5 : (w[k] < 0 ? -0.5 : 0.0);
    } else {
      const double c = euclid_shadow_ratio(n_), nw = l2(w);
      for (int k = 0; k < n_; ++k) grad[k] = nw > 0 ? c * w[k] / nw : 0.0;
    }
    return *psi_closed_form(*space_, w);
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  double s = 0.0;
  const std::size_t m = weights_.size();
  for (std::size_t i = 0; i < m; ++i) {
    const double* g = grads_.data() + i * n_;
    double d = 0.0;
    for (int k = 0; k < n_; ++k) d += g[k] * w[k];
    s += weights_[i] * std::fabs(d);
    const double sw = d > 0 ? weights_[i] : (d < 0 ? -weights_[i] : 0.0);
    if (sw != 0.0)
      for (int k = 0; k < n_; ++k) grad[k] += sw * g[k];
  }
  const double scale = 0.5 * n_ / weight_sum_;
  for (double& g : grad) g *= scale;
  return s * scale;
}

MonteCarloEstimate hyperplane_projection_volume(const NormedSpace& space, std::span<const double> w,
                                                std::uint64_t samples, std::uint64_t seed) {
  const double nw = l2(w);
  if (nw == 0.0) throw DomainError("projection direction must be nonzero");
  const MonteCarloEstimate p = psi(space, w, samples, seed);
  const MonteCarloEstimate vol = volume_any(space, samples, derive_key(seed, {0x766F6Cull}));
  return combine(p.value * vol.value / nw, {{p, 1.0}, {vol, 1.0}}, seed);
}

MaxProjResult maxproj(const NormedSpace& space, int restarts, std::uint64_t samples, std::uint64_t seed) {
  const int n = space.dim();
  const std::uint64_t search = std::max<std::uint64_t>(samples / 4, 1000);
  PsiEvaluator ev(space, search, derive_key(seed, {0x5EA4ull}));
  SphereMaxOptions o;
  o.restarts = restarts;
  SphereObjective f = [&](std::span<const double> u, std::span<double> g) { return ev.value_and_gradient(u, g); };
  const SphereMaxResult r = maximize_on_sphere(n, f, o, seed);
  const MonteCarloEstimate vol = volume_any(space, samples, derive_key(seed, {0x766F6Cull}));
  const MonteCarloEstimate p = psi(space, r.argmax, samples, derive_key(seed, {0xF1ull}));
  MaxProjResult out;
  out.direction = r.argmax;
  out.value = combine(p.value * vol.value, {{p, 1.0}, {vol, 1.0}}, seed);
  out.dispersion = r.dispersion * vol.value;
  out.heuristic = !ev.is_closed_form();
  return out;
}

MonteCarloEstimate cone_volume(const NormedSpace& space, std::span<const double> z, std::uint64_t samples,
                               std::uint64_t seed) {
  const double nz = space.norm(z);
  if (std::fabs(nz - 1.0) > 1e-9) throw InputError("cone apex must lie on the unit sphere of the space");
  const int n = space.dim();
  const MonteCarloEstimate p = psi(space, z, samples, seed);
  const MonteCarloEstimate vol = volume_any(space, samples, derive_key(seed, {0x766F6Cull}));
  return combine(p.value * vol.value / n, {{p, 1.0}, {vol, 1.0}}, seed);
}

ConeMaxResult max_cone_volume(const NormedSpace& space, int restarts, std::uint64_t samples, std::uint64_t seed) {
  const int n = space.dim();
  const std::uint64_t search = std::max<std::uint64_t>(samples / 4, 1000);
  PsiEvaluator ev(space, search, derive_key(seed, {0x5EA4ull}));
  SphereObjective f = [&](std::span<const double> u, std::span<double> g) {
    std::vector<double> gn(n);
    const double nu = space.norm(u);
    space.gradient_into(u, gn);
    const double pv = ev.value_and_gradient(u, g);
    for (int i = 0; i < n; ++i) g[i] = g[i] / nu - pv * gn[i] / (nu * nu);
    return pv / nu;
  };
  SphereMaxOptions o;
  o.restarts = restarts;
  const SphereMaxResult r = maximize_on_sphere(n, f, o, seed);
  ConeMaxResult out;
  out.point = r.argmax;
  const double nz = space.norm(out.point);
  for (double& v : out.point) v /= nz;
  out.volume = cone_volume(space, out.point, samples, derive_key(seed, {0xF1ull}));
  const MonteCarloEstimate vol = volume_any(space, samples, derive_key(seed, {0x766F6Cull}));
  out.volume_ratio = out.volume.value / vol.value;
  out.lower_bound_ratio =
      std::exp(std::lgamma(n / 2.0) - std::lgamma((n + 1) / 2.0)) / (2.0 * std::sqrt(std::numbers::pi));
  return out;
}

MonteCarloEstimate mean_width_dual(const NormedSpace& space, std::uint64_t samples, std::uint64_t seed) {
  const int n = space.dim();
  if (is_lp(space, 2.0)) return MonteCarloEstimate::exact(1.0);
  const ChunkPlan plan{samples, kDefaultChunk};
  auto acc = chunked_reduce<WeightedAccumulator>(plan, [&](std::size_t c, std::uint64_t size) {
    Rng rng = Rng::stream(seed, {0x6A55ull, c});
    std::vector<double> g(n);
    WeightedAccumulator a;
    for (std::uint64_t t = 0; t < size; ++t) {
      for (double& v : g) v = rng.normal();
      const double e = l2(g);
      a.add(e, space.norm(g) / e);
    }
    return a;
  });
  return acc.estimate(seed);
}

CauchyCheck cauchy_surface_identity_check(const NormedSpace& space, std::uint64_t samples, std::uint64_t seed) {
  const int n = space.dim();
  const MonteCarloEstimate vol = volume_any(space, samples, derive_key(seed, {0x766F6Cull}));
  const MonteCarloEstimate ratio = surface_ratio(space, samples, derive_key(seed, {1}));
  CauchyCheck out;
  out.surface = combine(ratio.value * vol.value, {{ratio, 1.0}, {vol, 1.0}}, seed);

  // Average shadow over uniform directions z: psi(z) vol for unit z.
  const double cn = 2.0 * std::sqrt(std::numbers::pi) * std::exp(std::lgamma((n + 1) / 2.0) - std::lgamma(n / 2.0));
  MonteCarloEstimate avg;
  std::vector<double> probe(n, 1.0);
  if (psi_closed_form(space, probe)) {
    const ChunkPlan plan{samples, kDefaultChunk};
    auto acc = chunked_reduce<MeanAccumulator>(plan, [&](std::size_t c, std::uint64_t size) {
      Rng rng = Rng::stream(seed, {0xCA0Cull, c});
      std::vector<double> z(n);
      MeanAccumulator a;
      for (std::uint64_t t = 0; t < size; ++t) {
        for (double& v : z) v = rng.normal();
        const double nz = l2(z);
        for (double& v : z) v /= nz;
        a.add(*psi_closed_form(space, z));
      }
      return a;
    });
    avg = acc.estimate(seed);
    if (is_lp(space, 2.0)) avg = MonteCarloEstimate::exact(euclid_shadow_ratio(n));
  } else {
    // Joint draw of (z, theta): E_z psi(z) = (n/2) E |<z, grad(theta)>|.
    const std::uint64_t zseed = derive_key(seed, {0xCA0Cull});
    avg = cone_expectation(space, samples, derive_key(seed, {2}), [&](std::span<const double> t) {
      std::vector<double> g(n), z(n);
      space.gradient_into(t, g);
      // Direction drawn from a stream keyed by the gradient sample itself.
      std::uint64_t key = zseed;
      for (double v : t) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        key = derive_key(key, {bits});
      }
      Rng rng(key);
      for (double& v : z) v = rng.normal();
      const double nz = l2(z);
      return 0.5 * n * std::fabs(dot(z, g)) / nz;
    });
  }
  out.projection_side = combine(cn * avg.value * vol.value, {{avg, 1.0}, {vol, 1.0}}, seed);
  // vol cancels between the two sides; compare the reduced quantities.
  const double a = ratio.value, b = cn * avg.value;
  out.residual = (a - b) / b;
  const double sa = ratio.stderr / a, sb = avg.value != 0.0 ? avg.stderr / avg.value : 0.0;
  out.combined_stderr = std::sqrt(sa * sa + sb * sb);
  out.within_3sigma = std::fabs(out.residual) <= 3.0 * out.combined_stderr + 1e-12;
  return out;
}

IntersectReport intersect_construction(const NormedSpace& space, std::optional<double> r, std::uint64_t samples,
                                       std::uint64_t seed, int restarts) {
  const int n = space.dim();
  const MonteCarloEstimate m = mean_width_dual(space, samples, derive_key(seed, {0x3ull}));
  const double radius = r ? *r : 1.0 / (2.0 * m.value);
  if (!(radius > 0.0)) throw InputError("intersection radius must be positive");
  IntersectReport rep{NormedSpace(SpaceDescriptor::intersect_ball(space.descriptor(), radius)), radius, m, {}, 0.0,
                      {}};
  rep.volume = volume_mc(rep.space, samples, derive_key(seed, {0x4ull}), true);
  rep.volume_root_times_m_sqrt_n = std::pow(rep.volume.value, 1.0 / n) * m.value * std::sqrt(static_cast<double>(n));
  const MaxProjResult mp = maxproj(rep.space, restarts, samples, derive_key(seed, {0x5ull}));
  const double denom = std::pow(rep.volume.value, (n - 1.0) / n);
  rep.maxproj_ratio = combine(mp.value.value / denom, {{mp.value, 1.0}, {rep.volume, -(n - 1.0) / n}}, seed);
  return rep;
}

std::vector<IqScanPoint> iq_radius_scan(const NormedSpace& base, const std::vector<double>& radii,
                                        std::uint64_t samples, std::uint64_t seed) {
  std::vector<IqScanPoint> out;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    NormedSpace l(SpaceDescriptor::intersect_ball(base.descriptor(), radii[i]));
    out.push_back({radii[i], iq(l, samples, derive_key(seed, {i}))});
  }
  return out;
}

}  // namespace normsep
