#include "normsep/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "normsep/errors.hpp"
#include "normsep/sphere_opt.hpp"

namespace normsep {

const char* kind_name(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::lp: return "lp";
    case SpaceKind::block_lp: return "block_lp";
    case SpaceKind::orlicz_beta: return "orlicz_beta";
    case SpaceKind::schatten: return "schatten";
    case SpaceKind::intersect_ball: return "intersect_ball";
  }
  return "?";
}

Exponent Exponent::finite(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InputError("exponent must lie in [1, inf)");
  return Exponent(false, p);
}

double Exponent::value() const {
  if (inf_) throw DomainError("finite value requested for an infinite exponent");
  return p_;
}

SpaceDescriptor SpaceDescriptor::lp(int n, Exponent p) {
  SpaceDescriptor d;
  d.kind = SpaceKind::lp;
  d.n = n;
  d.p = p;
  d.validate();
  return d;
}

SpaceDescriptor SpaceDescriptor::block_lp(Exponent p, std::vector<SpaceDescriptor> blocks) {
  SpaceDescriptor d;
  d.kind = SpaceKind::block_lp;
  d.p = p;
  d.n = 0;
  for (const auto& b : blocks) d.n += b.n;
  d.blocks = std::move(blocks);
  d.validate();
  return d;
}

SpaceDescriptor SpaceDescriptor::orlicz(int m, double beta) {
  SpaceDescriptor d;
  d.kind = SpaceKind::orlicz_beta;
  d.n = m;
  d.beta = beta;
  d.validate();
  return d;
}

SpaceDescriptor SpaceDescriptor::schatten(int rows, Exponent p) {
  SpaceDescriptor d;
  d.kind = SpaceKind::schatten;
  d.n = rows * rows;
  d.p = p;
  d.validate();
  return d;
}

SpaceDescriptor SpaceDescriptor::intersect_ball(SpaceDescriptor base, double r) {
  SpaceDescriptor d;
  d.kind = SpaceKind::intersect_ball;
  d.n = base.n;
  d.r = r;
  d.base.push_back(std::move(base));
  d.validate();
  return d;
}

void SpaceDescriptor::validate(const std::string& path) const {
  if (n < 1) throw InputError(path + ".n: must be positive");
  switch (kind) {
    case SpaceKind::lp:
      break;
    case SpaceKind::block_lp: {
      if (blocks.empty()) throw InputError(path + ".blocks: must be nonempty");
      int total = 0;
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        blocks[i].validate(path + ".blocks[" + std::to_string(i) + "]");
        total += blocks[i].n;
      }
      if (total != n) throw InputError(path + ".n: block dimensions do not sum to n");
      break;
    }
    case SpaceKind::orlicz_beta:
      if (!(beta > 0.0) || !std::isfinite(beta)) throw InputError(path + ".beta: must be positive");
      break;
    case SpaceKind::schatten: {
      const int rows = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
      if (rows * rows != n) throw InputError(path + ".n: schatten dimension must be a perfect square");
      break;
    }
    case SpaceKind::intersect_ball:
      if (base.size() != 1) throw InputError(path + ".base: exactly one base space required");
      base[0].validate(path + ".base");
      if (base[0].n != n) throw InputError(path + ".n: does not match base dimension");
      if (!(r > 0.0) || !std::isfinite(r)) throw InputError(path + ".r: must be positive");
      break;
  }
}

bool operator==(const SpaceDescriptor& a, const SpaceDescriptor& b) {
  if (a.kind != b.kind || a.n != b.n) return false;
  switch (a.kind) {
    case SpaceKind::lp:
    case SpaceKind::schatten:
      return a.p == b.p;
    case SpaceKind::block_lp:
      return a.p == b.p && a.blocks == b.blocks;
    case SpaceKind::orlicz_beta:
      return a.beta == b.beta;
    case SpaceKind::intersect_ball:
      return a.r == b.r && a.base == b.base;
  }
  return false;
}

// ---------------------------------------------------------------------------

NormedSpace::NormedSpace(SpaceDescriptor descriptor) : desc_(std::move(descriptor)) {
  desc_.validate();
  caps_.has_gradient = true;
  switch (desc_.kind) {
    case SpaceKind::lp:
      caps_.has_cone_sampler = caps_.has_exact_volume = caps_.is_canonically_positioned = true;
      break;
    case SpaceKind::orlicz_beta:
      caps_.has_cone_sampler = caps_.has_exact_volume = caps_.is_canonically_positioned = true;
      break;
    case SpaceKind::schatten:
      rows_ = static_cast<int>(std::lround(std::sqrt(static_cast<double>(desc_.n))));
      caps_.is_canonically_positioned = true;
      break;
    case SpaceKind::block_lp: {
      offsets_.push_back(0);
      bool sampler = true, exact = true, canonical = true;
      for (const auto& b : desc_.blocks) {
        children_.emplace_back(b);
        offsets_.push_back(offsets_.back() + b.n);
        sampler = sampler && children_.back().caps_.has_cone_sampler;
        exact = exact && children_.back().caps_.has_exact_volume;
        canonical = canonical && children_.back().caps_.is_canonically_positioned && b == desc_.blocks.front();
      }
      caps_.has_cone_sampler = sampler;
      caps_.has_exact_volume = exact;
      caps_.is_canonically_positioned = canonical;
      break;
    }
    case SpaceKind::intersect_ball:
      children_.emplace_back(desc_.base.front());
      break;
  }
}

namespace {

double lp_norm(std::span<const double> x, const Exponent& p) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  if (p.is_infinite() || m == 0.0) return m;
  const double q = p.value();
  double s = 0.0;
  if (q == 1.0) {
    for (double v : x) s += std::fabs(v);
    return s;
  }
  if (q == 2.0) {
    for (double v : x) s += (v / m) * (v / m);
    return m * std::sqrt(s);
  }
  for (double v : x) s += std::pow(std::fabs(v) / m, q);
  return m * std::pow(s, 1.0 / q);
}

// Writes the lp gradient of x (norm nx). Returns false at non-smooth points.
bool lp_gradient(std::span<const double> x, const Exponent& p, double nx, std::span<double> out) {
  const std::size_t n = x.size();
  if (p.is_infinite()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::fabs(x[i]) > std::fabs(x[best])) best = i;
    bool tie = false;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = 0.0;
      if (i != best && std::fabs(x[i]) == std::fabs(x[best])) tie = true;
    }
    out[best] = x[best] > 0 ? 1.0 : -1.0;
    return !tie;
  }
  const double q = p.value();
  if (q == 1.0) {
    bool smooth = true;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0);
      if (x[i] == 0.0) smooth = false;
    }
    return smooth;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::fabs(x[i]) / nx;
    const double g = q == 2.0 ? a : std::pow(a, q - 1.0);
    out[i] = x[i] < 0 ? -g : g;
  }
  return true;
}

}  // namespace

double NormedSpace::orlicz_norm(std::span<const double> x) const {
  const double beta = desc_.beta;
  const double m = static_cast<double>(desc_.n);
  double amax = 0.0;
  for (double v : x) amax = std::max(amax, std::fabs(v));
  if (amax == 0.0) return 0.0;
  // F(s) = sum psi(|x_i|/s) - 1 is decreasing on (amax, inf); root is the norm.
  auto F = [&](double s, double* dF) {
    double f = 0.0, d = 0.0;
    for (double v : x) {
      const double a = std::fabs(v);
      if (a == 0.0) continue;
      f -= std::log1p(-a / s);
      d -= a / (s * (s - a));
    }
    if (dF) *dF = d / beta;
    return f / beta - 1.0;
  };
  double lo = amax;
  double hi = amax / (-std::expm1(-beta / m));
  double s = hi;
  // Safeguarded Newton inside the monotone bisection bracket.
  for (int it = 0; it < 200; ++it) {
    double dF = 0.0;
    const double f = F(s, &dF);
    if (f > 0.0)
      lo = s;
    else
      hi = s;
    if (f == 0.0 || hi - lo <= 1e-15 * hi) break;
    double next = s - f / dF;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - s) <= 1e-15 * s) {
      s = next;
      break;
    }
    s = next;
  }
  return s;
}

double NormedSpace::norm(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != desc_.n)
    throw InputError("vector length " + std::to_string(x.size()) + " does not match dimension " +
                     std::to_string(desc_.n));
  return norm_unchecked(x);
}

double NormedSpace::norm_unchecked(std::span<const double> x) const {
  switch (desc_.kind) {
    case SpaceKind::lp:
      return lp_norm(x, desc_.p);
    case SpaceKind::orlicz_beta:
      return orlicz_norm(x);
    case SpaceKind::block_lp: {
      double buf[64];
      std::vector<double> heap;
      double* v = buf;
      if (children_.size() > 64) {
        heap.resize(children_.size());
        v = heap.data();
      }
      for (std::size_t j = 0; j < children_.size(); ++j)
        v[j] = children_[j].norm_unchecked(x.subspan(offsets_[j], children_[j].dim()));
      return lp_norm(std::span<const double>(v, children_.size()), desc_.p);
    }
    case SpaceKind::schatten: {
      const Svd svd = jacobi_svd(x, rows_, rows_);
      return lp_norm(svd.s, desc_.p);
    }
    case SpaceKind::intersect_ball: {
      double e = 0.0, m = 0.0;
      for (double v : x) m = std::max(m, std::fabs(v));
      if (m > 0.0) {
        for (double v : x) e += (v / m) * (v / m);
        e = m * std::sqrt(e);
      }
      return std::max(children_[0].norm_unchecked(x), e / desc_.r);
    }
  }
  return 0.0;
}

bool NormedSpace::gradient_into(std::span<const double> x, std::span<double> out) const {
  const double nx = norm(x);
  if (static_cast<int>(out.size()) != desc_.n) throw InputError("gradient buffer has the wrong length");
  if (nx == 0.0) throw DomainError("norm gradient is undefined at the origin");
  return gradient_unchecked(x, nx, out);
}

bool NormedSpace::gradient_unchecked(std::span<const double> x, double nx, std::span<double> out) const {
  const int n = desc_.n;
  switch (desc_.kind) {
    case SpaceKind::lp:
      return lp_gradient(x, desc_.p, nx, out);
    case SpaceKind::orlicz_beta: {
      // On the boundary: g_i = sign(t_i)/(1-|t_i|) / sum_j |t_j|/(1-|t_j|), t = x/|x|.
      double denom = 0.0;
      bool smooth = true;
      for (int i = 0; i < n; ++i) {
        const double t = std::fabs(x[i]) / nx;
        if (x[i] == 0.0) smooth = false;
        const double g = 1.0 / (1.0 - t);
        out[i] = x[i] > 0 ? g : (x[i] < 0 ? -g : 0.0);
        denom += t * g;
      }
      for (int i = 0; i < n; ++i) out[i] /= denom;
      return smooth;
    }
    case SpaceKind::block_lp: {
      const std::size_t k = children_.size();
      std::vector<double> v(k);
      for (std::size_t j = 0; j < k; ++j)
        v[j] = children_[j].norm_unchecked(x.subspan(offsets_[j], children_[j].dim()));
      std::vector<double> w(k);
      bool smooth = lp_gradient(v, desc_.p, nx, w);
      for (std::size_t j = 0; j < k; ++j) {
        auto xs = x.subspan(offsets_[j], children_[j].dim());
        auto os = out.subspan(offsets_[j], children_[j].dim());
        if (w[j] == 0.0 || v[j] == 0.0) {
          std::fill(os.begin(), os.end(), 0.0);
          continue;
        }
        smooth = children_[j].gradient_unchecked(xs, v[j], os) && smooth;
        for (double& g : os) g *= w[j];
      }
      return smooth;
    }
    case SpaceKind::schatten: {
      const Svd svd = jacobi_svd(x, rows_, rows_);
      const int k = svd.k;
      std::vector<double> coef(k, 0.0);
      bool smooth = true;
      const double s0 = svd.s[0];
      if (desc_.p.is_infinite()) {
        coef[0] = 1.0;
        if (k > 1 && svd.s[1] >= s0 * (1.0 - 1e-12)) smooth = false;
      } else {
        const double q = desc_.p.value();
        for (int i = 0; i < k; ++i) {
          if (q == 1.0) {
            coef[i] = svd.s[i] > 0.0 ? 1.0 : 0.0;
            if (!(svd.s[i] > 1e-14 * s0)) smooth = false;
          } else {
            coef[i] = std::pow(svd.s[i] / nx, q - 1.0);
          }
        }
        if (q != 2.0)
          for (int i = 0; i + 1 < k; ++i)
            if (svd.s[i] - svd.s[i + 1] <= 1e-12 * s0) smooth = false;
      }
      std::fill(out.begin(), out.end(), 0.0);
      for (int i = 0; i < k; ++i) {
        if (coef[i] == 0.0) continue;
        for (int a = 0; a < rows_; ++a)
          for (int b = 0; b < rows_; ++b)
            out[a * rows_ + b] += coef[i] * svd.u[a * k + i] * svd.v[b * k + i];
      }
      return smooth;
    }
    case SpaceKind::intersect_ball: {
      const double nb = children_[0].norm_unchecked(x);
      double e = 0.0;
      for (double v : x) e += v * v;
      e = std::sqrt(e) / desc_.r;
      if (nb >= e) {
        const bool smooth = children_[0].gradient_unchecked(x, nb, out);
        return smooth && nb != e;
      }
      const double scale = 1.0 / (desc_.r * desc_.r * e);
      for (int i = 0; i < n; ++i) out[i] = x[i] * scale;
      return true;
    }
  }
  return false;
}

Gradient NormedSpace::gradient(std::span<const double> x) const {
  Gradient g;
  g.g.assign(desc_.n, 0.0);
  g.smooth = gradient_into(x, g.g);
  return g;
}

double NormedSpace::coordinate_bound(int i) const {
  switch (desc_.kind) {
    case SpaceKind::lp:
    case SpaceKind::schatten:
      return 1.0;
    case SpaceKind::orlicz_beta:
      return -std::expm1(-desc_.beta);
    case SpaceKind::block_lp: {
      const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), i);
      const std::size_t j = static_cast<std::size_t>(it - offsets_.begin()) - 1;
      return children_[j].coordinate_bound(i - offsets_[j]);
    }
    case SpaceKind::intersect_ball:
      return std::min(children_[0].coordinate_bound(i), desc_.r);
  }
  return 1.0;
}

double norm_eval(const NormedSpace& space, std::span<const double> x) { return space.norm(x); }

Gradient norm_gradient(const NormedSpace& space, std::span<const double> x) { return space.gradient(x); }

namespace {

double euclidean_factor(double count, const Exponent& p) {
  const double e = std::max(0.5 - p.reciprocal(), 0.0);
  return std::pow(count, e);
}

// max |z|_2 / |z|_X on the sphere, by ascent on log|z|_2 - log|z|_X.
double numeric_circumradius(const NormedSpace& space) {
  const int n = space.dim();
  SphereObjective f = [&](std::span<const double> u, std::span<double> g) {
    const double nu = space.norm(u);
    space.gradient_into(u, g);
    for (int i = 0; i < n; ++i) g[i] = u[i] - g[i] / nu;
    return 1.0 / nu;
  };
  SphereMaxOptions o;
  o.restarts = 8;
  return maximize_on_sphere(n, f, o, 0xC14Cull).value;
}

}  // namespace

double circumradius(const NormedSpace& space) {
  const auto& d = space.descriptor();
  if (!space.capabilities().is_canonically_positioned)
    throw UnsupportedError("is_canonically_positioned",
                           std::string("circumradius needs a canonically positioned space; got ") +
                               kind_name(d.kind));
  switch (d.kind) {
    case SpaceKind::lp:
      return euclidean_factor(d.n, d.p);
    case SpaceKind::schatten:
      return euclidean_factor(space.schatten_rows(), d.p);
    case SpaceKind::block_lp:
      return euclidean_factor(static_cast<double>(d.blocks.size()), d.p) * circumradius(space.children()[0]);
    case SpaceKind::orlicz_beta: {
      // Extreme points with k equal nonzero coordinates 1 - e^{-beta/k}.
      double closed = 0.0;
      for (int k = 1; k <= d.n; ++k) {
        const double t = -std::expm1(-d.beta / k);
        closed = std::max(closed, std::sqrt(static_cast<double>(k)) * t);
      }
      return std::max(closed, numeric_circumradius(space));
    }
    case SpaceKind::intersect_ball:
      break;
  }
  throw UnsupportedError("is_canonically_positioned", "circumradius unavailable");
}

}  // namespace normsep
