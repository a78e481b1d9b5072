#include "normsep/extension.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <sstream>

#include "normsep/errors.hpp"
#include "normsep/estimate.hpp"
#include "normsep/geometry.hpp"
#include "normsep/rng.hpp"
#include "normsep/serialize.hpp"

namespace normsep {

double bump(double t) {
  if (t <= 1.0 || t >= 4.0) return 0.0;
  if (t < 2.0) return t - 1.0;
  if (t <= 3.0) return 1.0;
  return 4.0 - t;
}

std::vector<int> active_scales(double d) {
  std::vector<int> ks;
  if (!(d > 0.0) || !std::isfinite(d)) return ks;
  // bump(2^{-k} d) > 0 iff log2(d) - 2 < k < log2(d).
  const int top = static_cast<int>(std::floor(std::log2(d))) + 1;
  for (int k = top - 3; k <= top; ++k)
    if (bump(std::ldexp(d, -k)) > 0.0) ks.push_back(k);
  return ks;
}

double bump_weight(double d, int k) {
  const double phi = bump(std::ldexp(d, -k));
  if (phi == 0.0) return 0.0;
  double total = 0.0;
  for (int j : active_scales(d)) total += bump(std::ldexp(d, -j));
  return phi / total;
}

namespace {

double distance_to(const NormedSpace& space, std::span<const double> x, const std::vector<Point>& anchors,
                   std::size_t* arg = nullptr) {
  std::vector<double> diff(x.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - anchors[a][i];
    const double d = space.norm(diff);
    if (d < best) {
      best = d;
      if (arg) *arg = a;
    }
  }
  return best;
}

}  // namespace

double bump_weights(const NormedSpace& space, std::span<const double> x, const std::vector<Point>& anchors, int k) {
  if (anchors.empty()) throw InputError("anchor set must be nonempty");
  return bump_weight(distance_to(space, x, anchors), k);
}

ExtensionOperator build_extension(const SpaceDescriptor& space, const std::vector<Point>& anchors,
                                  const std::vector<Point>& values, int mc_rounds, std::uint64_t seed,
                                  const SpaceDescriptor* target) {
  if (anchors.empty()) throw InputError("anchor set must be nonempty");
  if (anchors.size() != values.size()) throw InputError("anchors and values differ in count");
  if (mc_rounds < 1) throw InputError("mc_rounds must be positive");
  space.validate("$");
  const NormedSpace x(space);
  const std::size_t m = values[0].size();
  if (m == 0) throw InputError("values must be nonempty vectors");
  ExtensionOperator op;
  op.space = space;
  op.target = target ? *target : SpaceDescriptor::lp(static_cast<int>(m), Exponent::finite(2.0));
  if (op.target.n != static_cast<int>(m)) throw InputError("target dimension differs from value length");
  op.mc_rounds = mc_rounds;
  op.seed = seed;
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    if (static_cast<int>(anchors[a].size()) != space.n) throw InputError("anchor has wrong dimension");
    if (values[a].size() != m) throw InputError("values have unequal lengths");
    for (double v : anchors[a])
      if (!std::isfinite(v)) throw InputError("anchor coordinates must be finite");
    const auto dup = std::find(op.anchors.begin(), op.anchors.end(), anchors[a]);
    if (dup != op.anchors.end()) {
      op.warnings.push_back("duplicate anchor " + std::to_string(a) + " dropped (keeps index " +
                            std::to_string(dup - op.anchors.begin()) + ")");
      continue;
    }
    op.anchors.push_back(anchors[a]);
    op.values.push_back(values[a]);
  }
  double gap = std::numeric_limits<double>::infinity(), diam = 0.0;
  std::vector<double> diff(space.n);
  for (std::size_t a = 0; a < op.anchors.size(); ++a)
    for (std::size_t b = a + 1; b < op.anchors.size(); ++b) {
      for (int i = 0; i < space.n; ++i) diff[i] = op.anchors[a][i] - op.anchors[b][i];
      const double d = x.norm(diff);
      gap = std::min(gap, d);
      diam = std::max(diam, d);
    }
  if (op.anchors.size() > 1) {
    op.k_min = static_cast<int>(std::floor(std::log2(gap))) - 2;
    op.k_max = static_cast<int>(std::ceil(std::log2(diam))) + 2;
  }
  return op;
}

Extension::Extension(ExtensionOperator op)
    : op_(std::move(op)), space_(op_.space), target_(op_.target) {}

double Extension::distance_to_anchors(std::span<const double> x) const {
  return distance_to(space_, x, op_.anchors);
}

std::size_t Extension::nearest_anchor(std::span<const double> x) const {
  std::size_t arg = 0;
  distance_to(space_, x, op_.anchors, &arg);  // strict < keeps the lowest index on ties
  return arg;
}

Evaluation Extension::evaluate(std::span<const double> x) const {
  const std::size_t na = op_.anchors.size(), m = op_.values[0].size();
  Evaluation ev;
  ev.weights.assign(na, 0.0);
  ev.stderr.assign(m, 0.0);
  std::size_t near = 0;
  const double d = distance_to(space_, x, op_.anchors, &near);
  if (d == 0.0 && std::equal(x.begin(), x.end(), op_.anchors[near].begin())) {
    ev.weights[near] = 1.0;
    ev.value = op_.values[near];
    return ev;
  }
  const std::vector<int> ks = active_scales(d);
  std::vector<double> lambda(ks.size());
  double total = 0.0;
  for (std::size_t j = 0; j < ks.size(); ++j) total += (lambda[j] = bump(std::ldexp(d, -ks[j])));
  for (double& l : lambda) l /= total;

  const int rounds = op_.mc_rounds;
  // Per round, the selected anchor at each active scale.
  std::vector<std::vector<std::size_t>> pick(ks.size(), std::vector<std::size_t>(rounds));
  for (std::size_t j = 0; j < ks.size(); ++j) {
    const double delta = std::ldexp(1.0, ks[j]);
    for (int r = 0; r < rounds; ++r) {
      const std::uint64_t key =
          derive_key(op_.seed, {0xE7ull, static_cast<std::uint64_t>(static_cast<std::int64_t>(ks[j])),
                                static_cast<std::uint64_t>(r)});
      const PoissonPartition part(space_, delta, key);
      pick[j][r] = nearest_anchor(part.center_of(x));
    }
  }
  std::vector<CompensatedSum> w(na);
  for (std::size_t j = 0; j < ks.size(); ++j)
    for (int r = 0; r < rounds; ++r) w[pick[j][r]].add(lambda[j] / rounds);
  for (std::size_t a = 0; a < na; ++a) ev.weights[a] = w[a].value();

  ev.value.assign(m, 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    CompensatedSum s;
    bool same = true;
    const double first = op_.values[pick[0][0]][c];
    for (std::size_t a = 0; a < na; ++a)
      if (ev.weights[a] != 0.0) {
        s.add(ev.weights[a] * op_.values[a][c]);
        same = same && op_.values[a][c] == first;
      }
    // Weights sum to one only up to rounding; a shared value is returned as is.
    ev.value[c] = same ? first : s.value();
  }
  if (rounds > 1) {
    for (std::size_t c = 0; c < m; ++c) {
      MeanAccumulator acc;
      for (int r = 0; r < rounds; ++r) {
        double v = 0.0;
        for (std::size_t j = 0; j < ks.size(); ++j) v += lambda[j] * op_.values[pick[j][r]][c];
        acc.add(v);
      }
      ev.stderr[c] = acc.stderr();
    }
  }
  return ev;
}

LipschitzScan lipschitz_ratio_scan(const Extension& ext, std::size_t pair_count, std::uint64_t seed,
                                   std::uint64_t psi_samples) {
  const NormedSpace& space = ext.space();
  const int n = space.dim();
  const auto& anchors = ext.op().anchors;
  const PsiEvaluator psi_x(space, psi_samples, derive_key(seed, {0xD1ull}));
  LipschitzScan out;
  std::vector<double> diff(n), fd(ext.op().values[0].size());

  auto consider = [&](const Point& x, const Point& y, const Point& fx, const Point& fy) {
    for (int i = 0; i < n; ++i) diff[i] = x[i] - y[i];
    const double prof = 4.0 * psi_x(diff);
    if (!(prof > 0.0)) return;
    for (std::size_t c = 0; c < fd.size(); ++c) fd[c] = fx[c] - fy[c];
    const double ratio = ext.target().norm(fd) / prof;
    ++out.pairs;
    if (ratio > out.max_ratio) {
      out.max_ratio = ratio;
      out.x = x;
      out.y = y;
    }
  };

  for (std::size_t a = 0; a < anchors.size(); ++a)
    for (std::size_t b = a + 1; b < anchors.size(); ++b)
      consider(anchors[a], anchors[b], ext.op().values[a], ext.op().values[b]);

  // Sampling window: anchor bounding box grown by half its width (or 1).
  Point lo = anchors[0], hi = anchors[0];
  for (const auto& a : anchors)
    for (int i = 0; i < n; ++i) {
      lo[i] = std::min(lo[i], a[i]);
      hi[i] = std::max(hi[i], a[i]);
    }
  double width = 0.0;
  for (int i = 0; i < n; ++i) width = std::max(width, hi[i] - lo[i]);
  if (width == 0.0) width = 1.0;
  for (int i = 0; i < n; ++i) {
    lo[i] -= width / 2;
    hi[i] += width / 2;
  }

  for (std::size_t t = 0; t < pair_count; ++t) {
    Rng rng = Rng::stream(seed, {0x5CA7ull, t});
    Point x(n);
    if (t % 4 == 0) {
      x = anchors[rng.below(anchors.size())];
    } else {
      for (int i = 0; i < n; ++i) x[i] = rng.uniform(lo[i], hi[i]);
    }
    const double dx = ext.distance_to_anchors(x);
    Point u(n);
    for (int i = 0; i < n; ++i) u[i] = rng.normal();
    const double nu = space.norm(u);
    const double base = dx > 0.0 ? dx : width * std::ldexp(1.0, -static_cast<int>(rng.below(6)));
    const double s = base * std::exp2(rng.uniform(-3.0, 1.0));
    Point y(n);
    for (int i = 0; i < n; ++i) y[i] = x[i] + s * u[i] / nu;
    const double dy = ext.distance_to_anchors(y);
    if (s < std::max(dx, dy) / 8.0) continue;
    consider(x, y, ext.evaluate(x).value, ext.evaluate(y).value);
  }
  return out;
}

ExtensionInstance extension_instance(std::uint64_t seed) {
  Rng rng = Rng::stream(seed, {0x1A57ull});
  ExtensionInstance inst;
  switch (rng.below(5)) {
    case 0: inst.space = SpaceDescriptor::lp(1, Exponent::finite(2.0)); break;
    case 1: inst.space = SpaceDescriptor::lp(2, Exponent::finite(2.0)); break;
    case 2: inst.space = SpaceDescriptor::lp(3, Exponent::infinity()); break;
    case 3: inst.space = SpaceDescriptor::lp(2, Exponent::finite(1.0)); break;
    default: inst.space = SpaceDescriptor::lp(3, Exponent::finite(2.0)); break;
  }
  const int n = inst.space.n;
  const NormedSpace x(inst.space);
  const std::size_t count = 2 + rng.below(7);
  const double side = 4.0;
  for (std::size_t a = 0; a < count; ++a) {
    Point p(n);
    for (int i = 0; i < n; ++i) p[i] = rng.uniform(0.0, side);
    inst.anchors.push_back(p);
  }
  // f(c) = (d(c, p1), d(c, p2)) / sqrt 2 is 1-Lipschitz into l2^2.
  Point p1(n), p2(n), diff(n);
  for (int i = 0; i < n; ++i) {
    p1[i] = rng.uniform(0.0, side);
    p2[i] = rng.uniform(0.0, side);
  }
  for (const auto& c : inst.anchors) {
    for (int i = 0; i < n; ++i) diff[i] = c[i] - p1[i];
    const double a = x.norm(diff);
    for (int i = 0; i < n; ++i) diff[i] = c[i] - p2[i];
    const double b = x.norm(diff);
    inst.values.push_back({a / std::sqrt(2.0), b / std::sqrt(2.0)});
  }
  return inst;
}

nlohmann::json extension_to_json(const ExtensionOperator& op) {
  return {{"space", descriptor_to_json(op.space)},
          {"target", descriptor_to_json(op.target)},
          {"anchors", op.anchors},
          {"values", op.values},
          {"k_min", op.k_min},
          {"k_max", op.k_max},
          {"mc_rounds", op.mc_rounds},
          {"seed", op.seed},
          {"warnings", op.warnings}};
}

ExtensionOperator extension_from_json(const nlohmann::json& j) {
  try {
    const SpaceDescriptor space = descriptor_from_json(j.at("space"), "$.space");
    const SpaceDescriptor target = descriptor_from_json(j.at("target"), "$.target");
    ExtensionOperator op = build_extension(space, j.at("anchors").get<std::vector<Point>>(),
                                           j.at("values").get<std::vector<Point>>(), j.at("mc_rounds").get<int>(),
                                           j.at("seed").get<std::uint64_t>(), &target);
    if (j.contains("warnings")) op.warnings = j["warnings"].get<std::vector<std::string>>();
    return op;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("$: malformed extension state: ") + e.what());
  }
}

void read_anchor_json(const nlohmann::json& j, std::vector<Point>& anchors, std::vector<Point>& values) {
  try {
    anchors = j.at("anchors").get<std::vector<Point>>();
    values = j.at("values").get<std::vector<Point>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("$: expected arrays \"anchors\" and \"values\": ") + e.what());
  }
}

void read_anchor_csv(std::istream& is, int n, std::vector<Point>& anchors, std::vector<Point>& values) {
  anchors.clear();
  values.clear();
  std::string line;
  std::size_t ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw InputError("anchor csv line " + std::to_string(ln) + ": bad number \"" + cell + "\"");
      }
    }
    if (static_cast<int>(row.size()) <= n)
      throw InputError("anchor csv line " + std::to_string(ln) + ": needs more than " + std::to_string(n) + " fields");
    anchors.emplace_back(row.begin(), row.begin() + n);
    values.emplace_back(row.begin() + n, row.end());
  }
  if (anchors.empty()) throw InputError("anchor csv: no rows");
}

}  // namespace normsep
