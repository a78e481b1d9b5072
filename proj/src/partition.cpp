#include "normsep/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

#include "normsep/errors.hpp"
#include "normsep/geometry.hpp"
#include "normsep/rng.hpp"

namespace normsep {

void QuerySet::validate(const NormedSpace& space) const {
  if (points.empty()) throw InputError("query set must be nonempty");
  for (std::size_t i = 0; i < points.size(); ++i)
    if (static_cast<int>(points[i].size()) != space.dim())
      throw InputError("query " + std::to_string(i) + " has the wrong length");
}

namespace {

bool has_orlicz(const SpaceDescriptor& d) {
  if (d.kind == SpaceKind::orlicz_beta) return true;
  for (const auto& b : d.blocks)
    if (has_orlicz(b)) return true;
  for (const auto& b : d.base)
    if (has_orlicz(b)) return true;
  return false;
}

// Exact uniform draw from the unit ball.
class BallSampler {
 public:
  explicit BallSampler(const NormedSpace& s) : space_(s), n_(s.dim()), half_(s.dim()) {
    direct_ = s.capabilities().has_cone_sampler && !has_orlicz(s.descriptor());
    for (int i = 0; i < n_; ++i) half_[i] = s.coordinate_bound(i);
  }
  void draw(Rng& rng, std::span<double> out) const {
    if (direct_) {
      draw_cone(space_, rng, out);
      const double r = std::pow(rng.uniform_open(), 1.0 / n_);
      for (double& v : out) v *= r;
      return;
    }
    for (int attempt = 0; attempt < 100'000'000; ++attempt) {
      for (int i = 0; i < n_; ++i) out[i] = half_[i] * (2.0 * rng.uniform() - 1.0);
      if (space_.norm(out) <= 1.0) return;
    }
    throw DiagnosticError("rejection sampler for the unit ball did not terminate");
  }

 private:
  const NormedSpace& space_;
  int n_;
  std::vector<double> half_;
  bool direct_ = false;
};

double dist(const NormedSpace& s, std::span<const double> a, std::span<const double> b, std::vector<double>& buf) {
  for (std::size_t i = 0; i < a.size(); ++i) buf[i] = a[i] - b[i];
  return s.norm(buf);
}

}  // namespace

PartitionSample sample_partition(const NormedSpace& space, double delta, const QuerySet& queries, std::uint64_t seed,
                                 const PartitionOptions& options) {
  if (!(delta > 0.0)) throw InputError("delta must be positive");
  queries.validate(space);
  const int n = space.dim();
  const double r = delta / 2.0;
  const auto& q = queries.points;

  PartitionSample out;
  out.delta = delta;
  out.seed = seed;
  out.window_lo.assign(n, 0.0);
  out.window_hi.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double lo = q[0][i], hi = q[0][i];
    for (const auto& p : q) {
      lo = std::min(lo, p[i]);
      hi = std::max(hi, p[i]);
    }
    const double pad = r * space.coordinate_bound(i) + options.window_margin;
    out.window_lo[i] = lo - pad;
    out.window_hi[i] = hi + pad;
  }
  out.assignment.assign(q.size(), static_cast<std::size_t>(-1));

  Rng rng = Rng::stream(seed, {0x9A27ull});
  std::vector<std::size_t> open(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) open[i] = i;
  std::vector<double> c(n), buf(n);
  std::vector<std::size_t> hit;

  auto capture = [&]() {
    hit.clear();
    for (std::size_t idx : open)
      if (dist(space, c, q[idx], buf) <= r) hit.push_back(idx);
  };
  auto commit = [&]() {
    const std::size_t id = out.centers.size();
    out.centers.push_back(c);
    for (std::size_t idx : hit) out.assignment[idx] = id;
    std::erase_if(open, [&](std::size_t idx) { return out.assignment[idx] == id; });
  };

  if (options.mode == ProposalMode::box) {
    while (!open.empty()) {
      if (++out.proposals > options.max_proposals) throw DiagnosticError("partition proposal cap exceeded");
      for (int i = 0; i < n; ++i) c[i] = rng.uniform(out.window_lo[i], out.window_hi[i]);
      capture();
      if (!hit.empty()) commit();
    }
    return out;
  }

  const BallSampler ball(space);
  std::vector<double> y(n);
  while (!open.empty()) {
    if (++out.proposals > options.max_proposals) throw DiagnosticError("partition proposal cap exceeded");
    // Uniform on the union of open balls: pick a ball, draw in it, thin by multiplicity.
    const std::size_t pick = open[rng.below(open.size())];
    ball.draw(rng, y);
    for (int i = 0; i < n; ++i) c[i] = q[pick][i] + r * y[i];
    capture();
    if (rng.uniform() * static_cast<double>(hit.size()) >= 1.0) continue;
    commit();
  }
  return out;
}

nlohmann::json partition_to_json(const PartitionSample& s) {
  nlohmann::json j;
  j["delta"] = s.delta;
  j["centers"] = s.centers;
  j["assignment"] = s.assignment;
  j["window"] = {{"lo", s.window_lo}, {"hi", s.window_hi}};
  j["seed"] = s.seed;
  return j;
}

PartitionSample partition_from_json(const nlohmann::json& j) {
  try {
    PartitionSample s;
    s.delta = j.at("delta").get<double>();
    s.centers = j.at("centers").get<std::vector<Point>>();
    s.assignment = j.at("assignment").get<std::vector<std::size_t>>();
    s.window_lo = j.at("window").at("lo").get<Point>();
    s.window_hi = j.at("window").at("hi").get<Point>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("$: malformed partition sample: ") + e.what());
  }
}

MonteCarloEstimate separation_prob_mc(const NormedSpace& space, std::span<const double> u, std::span<const double> v,
                                      double delta, std::uint64_t trials, std::uint64_t seed,
                                      const PartitionOptions& options) {
  QuerySet qs{{Point(u.begin(), u.end()), Point(v.begin(), v.end())}};
  qs.validate(space);
  if (qs.points[0] == qs.points[1]) return {0.0, 0.0, trials, seed};
  const ChunkPlan plan{trials, kDefaultChunk};
  auto acc = chunked_reduce<MeanAccumulator>(plan, [&](std::size_t c, std::uint64_t size) {
    MeanAccumulator a;
    for (std::uint64_t t = 0; t < size; ++t) {
      const auto s = sample_partition(space, delta, qs, derive_key(seed, {c, t}), options);
      a.add(s.assignment[0] != s.assignment[1] ? 1.0 : 0.0);
    }
    return a;
  });
  return acc.estimate(seed);
}

double separation_from_overlap(double t) { return (2.0 - 2.0 * t) / (2.0 - t); }

SeparationExact separation_prob_exact(const NormedSpace& space, std::span<const double> u, std::span<const double> v,
                                      double delta, std::uint64_t trials, std::uint64_t seed) {
  if (!(delta > 0.0)) throw InputError("delta must be positive");
  const int n = space.dim();
  if (static_cast<int>(u.size()) != n || static_cast<int>(v.size()) != n)
    throw InputError("points must have the space dimension");
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = (2.0 / delta) * (v[i] - u[i]);
  const double nw = space.norm(w);
  if (nw == 0.0) return {MonteCarloEstimate::exact(0.0), MonteCarloEstimate::exact(1.0)};
  if (nw > 2.0) return {MonteCarloEstimate::exact(1.0), MonteCarloEstimate::exact(0.0)};
  const MonteCarloEstimate t = ball_expectation(space, trials, seed, [&](std::span<const double> x) {
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) d[i] = x[i] - w[i];
    return space.norm(d) <= 1.0 ? 1.0 : 0.0;
  });
  const double deriv = 2.0 / ((2.0 - t.value) * (2.0 - t.value));
  return {{separation_from_overlap(t.value), deriv * t.stderr, t.trials, seed}, t};
}

double padding_prob_exact(int n, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw InputError("rho must lie in [0, 1]");
  return std::pow((1.0 - rho) / (1.0 + rho), n);
}

MonteCarloEstimate padding_prob_mc(const NormedSpace& space, double rho, double delta, std::uint64_t trials,
                                   std::uint64_t seed, const PartitionOptions& options) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw InputError("rho must lie in [0, 1]");
  // The first center to hit u + (1+rho)(delta/2)B decides the event.
  const int n = space.dim();
  const QuerySet qs{{Point(n, 0.0)}};
  const ChunkPlan plan{trials, kDefaultChunk};
  auto acc = chunked_reduce<MeanAccumulator>(plan, [&](std::size_t c, std::uint64_t size) {
    MeanAccumulator a;
    for (std::uint64_t t = 0; t < size; ++t) {
      const auto s = sample_partition(space, (1.0 + rho) * delta, qs, derive_key(seed, {c, t}), options);
      a.add(space.norm(s.centers[0]) <= (1.0 - rho) * delta / 2.0 ? 1.0 : 0.0);
    }
    return a;
  });
  return acc.estimate(seed);
}

Bracket schmuckenschlager_bracket(const NormedSpace& space, std::span<const double> w, std::uint64_t samples,
                                  std::uint64_t seed) {
  const int n = space.dim();
  Bracket b;
  b.psi = psi(space, w, samples, derive_key(seed, {1}));
  b.lower = 1.0 - b.psi.value;
  b.upper = std::exp(-b.psi.value);
  std::vector<double> zero(n, 0.0);
  // Relative overlap of B and w + B: same integral as the separation formula at delta = 2.
  b.t = separation_prob_exact(space, zero, w, 2.0, samples, derive_key(seed, {2})).overlap;
  const double s_lo = std::hypot(b.psi.stderr, b.t.stderr);
  const double s_hi = std::hypot(b.upper * b.psi.stderr, b.t.stderr);
  b.holds = b.lower <= b.t.value + 3.0 * s_lo + 1e-12 && b.t.value <= b.upper + 3.0 * s_hi + 1e-12;
  return b;
}

MonteCarloEstimate separation_profile(const NormedSpace& space, std::span<const double> u, std::span<const double> v,
                                      std::uint64_t samples, std::uint64_t seed) {
  std::vector<double> d(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) d[i] = u[i] - v[i];
  MonteCarloEstimate e = psi(space, d, samples, seed);
  e.value *= 4.0;
  e.stderr *= 4.0;
  return e;
}

std::pair<double, double> product_deltas(double delta, double sigma1, double sigma2, double s) {
  const double tot = sigma1 + sigma2;
  return {delta * std::pow(sigma1 / tot, 1.0 / s), delta * std::pow(sigma2 / tot, 1.0 / s)};
}

PartitionSample product_partition(const PartitionSample& a, const PartitionSample& b, double s) {
  PartitionSample out;
  out.delta = std::pow(std::pow(a.delta, s) + std::pow(b.delta, s), 1.0 / s);
  out.seed = derive_key(a.seed, {b.seed});
  out.window_lo = a.window_lo;
  out.window_lo.insert(out.window_lo.end(), b.window_lo.begin(), b.window_lo.end());
  out.window_hi = a.window_hi;
  out.window_hi.insert(out.window_hi.end(), b.window_hi.begin(), b.window_hi.end());
  out.proposals = a.proposals + b.proposals;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> ids;
  for (std::size_t i = 0; i < a.assignment.size(); ++i) {
    for (std::size_t j = 0; j < b.assignment.size(); ++j) {
      const auto key = std::make_pair(a.assignment[i], b.assignment[j]);
      auto it = ids.find(key);
      if (it == ids.end()) {
        Point c = a.centers[key.first];
        c.insert(c.end(), b.centers[key.second].begin(), b.centers[key.second].end());
        it = ids.emplace(key, out.centers.size()).first;
        out.centers.push_back(std::move(c));
      }
      out.assignment.push_back(it->second);
    }
  }
  return out;
}

// ---- Poisson realization ----------------------------------------------------

PoissonPartition::PoissonPartition(const NormedSpace& space, double delta, std::uint64_t key)
    : space_(&space), delta_(delta), key_(key), bound_(space.dim()) {
  if (!(delta > 0.0)) throw InputError("delta must be positive");
  for (int i = 0; i < space.dim(); ++i) bound_[i] = space.coordinate_bound(i);
}

Point PoissonPartition::center_of(std::span<const double> x) const {
  const int n = space_->dim();
  const double r = delta_ / 2.0, side = delta_;
  std::vector<long long> lo(n), hi(n);
  std::size_t cells = 1;
  for (int i = 0; i < n; ++i) {
    lo[i] = static_cast<long long>(std::floor((x[i] - r * bound_[i]) / side));
    hi[i] = static_cast<long long>(std::floor((x[i] + r * bound_[i]) / side));
    cells *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
  }
  struct Cell {
    std::vector<long long> idx;
    Rng rng;
    double time = 0.0;
    Point pos;
  };
  std::vector<Cell> state(cells);
  std::vector<long long> idx = lo;
  auto advance = [&](Cell& c) {
    c.time += c.rng.exponential();
    for (int i = 0; i < n; ++i) c.pos[i] = side * (static_cast<double>(c.idx[i]) + c.rng.uniform());
  };
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  for (std::size_t k = 0; k < cells; ++k) {
    Cell& c = state[k];
    c.idx = idx;
    std::uint64_t h = key_;
    for (long long v : idx) h = derive_key(h, {static_cast<std::uint64_t>(v)});
    c.rng.reseed(h);
    c.pos.assign(n, 0.0);
    advance(c);
    pq.emplace(c.time, k);
    for (int i = 0; i < n; ++i) {
      if (++idx[i] <= hi[i]) break;
      idx[i] = lo[i];
    }
  }
  std::vector<double> buf(n);
  for (std::uint64_t steps = 0; steps < 100'000'000ull; ++steps) {
    const auto [t, k] = pq.top();
    pq.pop();
    Cell& c = state[k];
    if (dist(*space_, c.pos, x, buf) <= r) return c.pos;
    advance(c);
    pq.emplace(c.time, k);
  }
  throw DiagnosticError("Poisson partition search exceeded its step cap");
}

// ---- Loomis-Whitney -----------------------------------------------------------

LoomisWhitneyReport loomis_whitney_boundary(const std::vector<GridPoint>& grid_set) {
  if (grid_set.empty()) throw InputError("grid set must be nonempty");
  const std::size_t n = grid_set[0].size();
  std::set<GridPoint> g(grid_set.begin(), grid_set.end());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& x : g) {
      GridPoint y = x;
      ++y[i];
      if (!g.count(y)) total += 1.0;
    }
  }
  LoomisWhitneyReport r;
  r.boundary_average = total / static_cast<double>(n);
  r.bound = std::pow(static_cast<double>(g.size()), (n - 1.0) / n);
  r.holds = r.boundary_average >= r.bound * (1.0 - 1e-12);
  return r;
}

PartitionBoundReport deterministic_partition_bound_check(const std::vector<GridPoint>& omega,
                                                         const std::vector<int>& labels, int max_part) {
  if (omega.empty() || labels.size() != omega.size()) throw InputError("omega and labels must match and be nonempty");
  if (max_part < 1) throw InputError("M must be positive");
  const std::size_t n = omega[0].size();
  std::map<GridPoint, int> part;
  for (std::size_t k = 0; k < omega.size(); ++k) part[omega[k]] = labels[k];
  std::map<int, int> sizes;
  for (const auto& [p, l] : part) ++sizes[l];
  PartitionBoundReport r;
  r.max_part_ok = true;
  for (const auto& [l, c] : sizes)
    if (c > max_part) r.max_part_ok = false;
  double cut = 0.0, edge = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [x, l] : part) {
      GridPoint y = x;
      ++y[i];
      auto it = part.find(y);
      if (it == part.end())
        edge += 1.0;
      else if (it->second != l)
        cut += 1.0;
    }
  }
  r.cut_average = cut / static_cast<double>(n);
  r.rhs = static_cast<double>(part.size()) / std::pow(static_cast<double>(max_part), 1.0 / n) - edge / n;
  r.holds = r.cut_average >= r.rhs - 1e-12 * std::max(1.0, std::fabs(r.rhs));
  return r;
}

namespace {

void rgs(int pos, int m, int max_part, std::vector<int>& labels, std::vector<int>& sizes, std::uint64_t& count,
         const std::function<void(const std::vector<int>&)>& fn) {
  if (pos == m) {
    ++count;
    fn(labels);
    return;
  }
  const int parts = static_cast<int>(sizes.size());
  for (int l = 0; l <= parts; ++l) {
    if (l == parts)
      sizes.push_back(0);
    else if (sizes[l] >= max_part)
      continue;
    ++sizes[l];
    labels[pos] = l;
    rgs(pos + 1, m, max_part, labels, sizes, count, fn);
    --sizes[l];
    if (l == parts) sizes.pop_back();
  }
}

}  // namespace

std::uint64_t enumerate_set_partitions(int m, int max_part, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> labels(m, 0), sizes;
  std::uint64_t count = 0;
  rgs(0, m, max_part, labels, sizes, count, fn);
  return count;
}

}  // namespace normsep
