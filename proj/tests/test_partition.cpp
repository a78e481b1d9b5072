#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "normsep/errors.hpp"
#include "normsep/geometry.hpp"
#include "normsep/partition.hpp"
#include "test_util.hpp"

using namespace normsep;
using testutil::within_sigma;

namespace {

constexpr double kPi = std::numbers::pi;
// Relative area of two unit disks at distance 1.
const double kLens = 2.0 / 3.0 - std::sqrt(3.0) / (2.0 * kPi);
const double kLensSep = (2.0 - 2.0 * kLens) / (2.0 - kLens);

double dist(const NormedSpace& s, const Point& a, const Point& b) {
  Point d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return s.norm(d);
}

bool two_sample_agree(const MonteCarloEstimate& a, const MonteCarloEstimate& b) {
  // |z| below the two-sided 1e-3 quantile.
  return std::fabs(a.value - b.value) <= 3.29 * std::hypot(a.stderr, b.stderr) + 1e-12;
}

}  // namespace

TEST_CASE("oracle constants") {
  CHECK(kLens == doctest::Approx(0.39100).epsilon(1e-4));
  CHECK(kLensSep == doctest::Approx(0.75699).epsilon(1e-4));
}

TEST_CASE("partition sample invariants") {
  Rng rng(31);
  for (auto d : {SpaceDescriptor::lp(2, Exponent::finite(2.0)), SpaceDescriptor::lp(3, Exponent::finite(1.0)),
                 SpaceDescriptor::orlicz(2, 2.0), SpaceDescriptor::schatten(2, Exponent::infinity())}) {
    const NormedSpace s(d);
    for (int rep = 0; rep < 20; ++rep) {
      QuerySet q;
      for (int i = 0; i < 6; ++i) q.points.push_back(testutil::random_vector(rng, s.dim()));
      const double delta = 0.5 + 2.0 * rng.uniform();
      for (ProposalMode mode : {ProposalMode::box, ProposalMode::conditioned}) {
        PartitionOptions o;
        o.mode = mode;
        const PartitionSample p = sample_partition(s, delta, q, rng.below(1u << 30), o);
        REQUIRE(p.assignment.size() == q.points.size());
        for (std::size_t i = 0; i < q.points.size(); ++i) {
          const std::size_t c = p.assignment[i];
          CHECK(dist(s, q.points[i], p.centers[c]) <= delta / 2 * (1 + 1e-12));
          for (std::size_t e = 0; e < c; ++e) CHECK(dist(s, q.points[i], p.centers[e]) > delta / 2);
          for (std::size_t j = 0; j < i; ++j)
            if (p.assignment[j] == c) CHECK(dist(s, q.points[i], q.points[j]) <= delta * (1 + 1e-12));
        }
      }
    }
  }
}

TEST_CASE("partition sample json round trip") {
  const NormedSpace s(SpaceDescriptor::lp(2, Exponent::finite(2.0)));
  QuerySet q;
  q.points = {{0.0, 0.0}, {0.7, 0.1}, {3.0, -1.0}};
  const PartitionSample p = sample_partition(s, 2.0, q, 5);
  const PartitionSample b = partition_from_json(partition_to_json(p));
  CHECK(b.centers == p.centers);
  CHECK(b.assignment == p.assignment);
  CHECK(b.delta == p.delta);
  CHECK(b.seed == p.seed);
  QuerySet empty;
  CHECK_THROWS_AS(sample_partition(s, 2.0, empty, 1), InputError);
  CHECK_THROWS_AS(sample_partition(s, -1.0, q, 1), InputError);
}

TEST_CASE("separation probability") {
  const NormedSpace l2(SpaceDescriptor::lp(2, Exponent::finite(2.0)));
  const Point u{0.3, -0.2}, v{0.3 + std::cos(1.0), -0.2 + std::sin(1.0)}, far{5.0, 0.0};
  CHECK(separation_prob_mc(l2, u, u, 2.0, 1000, 1).value == 0.0);
  CHECK(separation_prob_mc(l2, u, far, 2.0, 1000, 1).value == 1.0);
  const auto mc = separation_prob_mc(l2, u, v, 2.0, 100'000, 2);
  CHECK(within_sigma(mc.value, kLensSep, mc.stderr));
  const auto ex = separation_prob_exact(l2, u, v, 2.0, 400'000, 3);
  CHECK(within_sigma(ex.overlap.value, kLens, ex.overlap.stderr));
  CHECK(separation_prob_exact(l2, u, u, 2.0, 1000, 1).probability.value == 0.0);
  CHECK(separation_prob_exact(l2, u, far, 2.0, 1000, 1).probability.value == 1.0);

  const NormedSpace cube(SpaceDescriptor::lp(3, Exponent::infinity()));
  const Point a{0.0, 0.0, 0.0}, b{1.0, 0.0, 0.0};
  const auto cm = separation_prob_mc(cube, a, b, 2.0, 100'000, 4);
  CHECK(within_sigma(cm.value, 2.0 / 3.0, cm.stderr));
  const auto ce = separation_prob_exact(cube, a, b, 2.0, 100'000, 5);
  CHECK(within_sigma(ce.overlap.value, 0.5, ce.overlap.stderr));
  CHECK(separation_from_overlap(0.5) == doctest::Approx(2.0 / 3.0));

  // Monotone in delta: exact separation probability decreases.
  double prev = 2.0;
  for (double delta : {1.2, 2.0, 4.0, 8.0}) {
    const Point w{0.5, 0.0};
    const auto e = separation_prob_exact(l2, Point{0.0, 0.0}, w, delta, 20000, 6);
    CHECK(e.probability.value < prev);
    prev = e.probability.value;
  }
}

TEST_CASE("exact and monte carlo separation agree on random instances") {
  Rng rng(37);
  const SpaceKind kinds[] = {SpaceKind::lp, SpaceKind::block_lp, SpaceKind::orlicz_beta, SpaceKind::schatten,
                             SpaceKind::intersect_ball};
  int agree = 0;
  const int total = 25;
  for (int t = 0; t < total; ++t) {
    const NormedSpace s(testutil::random_descriptor(rng, kinds[t % 5], 3));
    const Point u = testutil::random_vector(rng, s.dim(), 0.5), v = testutil::random_vector(rng, s.dim(), 0.5);
    const double delta = 1.0 + 2.0 * rng.uniform();
    const auto mc = separation_prob_mc(s, u, v, delta, 5'000, 100 + t);
    const auto ex = separation_prob_exact(s, u, v, delta, 20'000, 200 + t);
    if (within_sigma(mc.value, ex.probability.value, std::hypot(mc.stderr, ex.probability.stderr))) ++agree;
  }
  // Each comparison fails with probability about 0.003.
  CHECK(agree >= total - 1);
}

TEST_CASE("box and conditioned proposals have the same law") {
  const NormedSpace s(SpaceDescriptor::lp(2, Exponent::finite(1.0)));
  const Point u{0.0, 0.0}, v{0.6, 0.3};
  PartitionOptions box, cond, wide;
  box.mode = ProposalMode::box;
  cond.mode = ProposalMode::conditioned;
  wide.mode = ProposalMode::box;
  wide.window_margin = 2.0;
  const auto a = separation_prob_mc(s, u, v, 2.0, 40'000, 1, box);
  const auto b = separation_prob_mc(s, u, v, 2.0, 40'000, 2, cond);
  const auto c = separation_prob_mc(s, u, v, 2.0, 40'000, 3, wide);
  CHECK(two_sample_agree(a, b));
  CHECK(two_sample_agree(a, c));
  // Translating both points leaves the law unchanged.
  const Point u2{10.0, -7.5}, v2{10.6, -7.2};
  const auto d = separation_prob_mc(s, u2, v2, 2.0, 40'000, 4);
  CHECK(two_sample_agree(b, d));
}

TEST_CASE("padding probability") {
  CHECK(padding_prob_exact(1, 1.0 / 3.0) == doctest::Approx(0.5));
  CHECK(padding_prob_exact(3, 0.25) == doctest::Approx(0.216));
  CHECK(padding_prob_exact(4, 0.0) == 1.0);
  CHECK(padding_prob_exact(4, 1.0) == 0.0);
  for (auto d : {SpaceDescriptor::lp(2, Exponent::finite(2.0)), SpaceDescriptor::lp(3, Exponent::infinity()),
                 SpaceDescriptor::orlicz(2, 1.0)}) {
    const NormedSpace s(d);
    const auto mc = padding_prob_mc(s, 0.3, 2.0, 40'000, 7);
    CHECK(within_sigma(mc.value, padding_prob_exact(s.dim(), 0.3), mc.stderr));
  }
}

TEST_CASE("schmuckenschlager bracket") {
  const NormedSpace l2(SpaceDescriptor::lp(2, Exponent::finite(2.0)));
  const Bracket b = schmuckenschlager_bracket(l2, std::vector<double>{1.0, 0.0}, 200'000, 1);
  CHECK(b.psi.value == doctest::Approx(2.0 / kPi));
  CHECK(b.lower == doctest::Approx(1.0 - 2.0 / kPi));
  CHECK(b.upper == doctest::Approx(std::exp(-2.0 / kPi)));
  CHECK(b.lower == doctest::Approx(0.3634).epsilon(1e-3));
  CHECK(b.upper == doctest::Approx(0.5291).epsilon(1e-3));
  CHECK(within_sigma(b.t.value, kLens, b.t.stderr));
  CHECK(b.holds);

  const Bracket z = schmuckenschlager_bracket(l2, std::vector<double>{0.0, 0.0}, 1000, 1);
  CHECK(z.lower == 1.0);
  CHECK(z.upper == 1.0);
  CHECK(z.t.value == 1.0);

  const NormedSpace cube(SpaceDescriptor::lp(3, Exponent::infinity()));
  const Bracket c = schmuckenschlager_bracket(cube, std::vector<double>{0.8, 0.0, 0.0}, 100'000, 2);
  CHECK(c.lower == doctest::Approx(0.6));
  CHECK(within_sigma(c.t.value, 0.6, c.t.stderr));
  CHECK(c.holds);
}

TEST_CASE("separation profile") {
  const NormedSpace cube(SpaceDescriptor::lp(3, Exponent::infinity()));
  const Point u{0.1, 0.5, -1.0}, v{0.4, -0.5, 0.0};
  CHECK(separation_profile(cube, u, v).value == doctest::Approx(2.0 * (0.3 + 1.0 + 1.0)));
  CHECK(separation_profile(cube, u, u).value == 0.0);
  const NormedSpace om(SpaceDescriptor::orlicz(2, 1.0));
  const Point a{0.2, 0.1}, b{0.5, -0.3}, a2{0.4, 0.2}, b2{1.0, -0.6};
  CHECK(separation_profile(om, a2, b2, 20'000, 3).value ==
        doctest::Approx(2.0 * separation_profile(om, a, b, 20'000, 3).value).epsilon(1e-12));

  // Delta Pr_Delta[separated] <= profile, for several scales.
  const NormedSpace l1(SpaceDescriptor::lp(2, Exponent::finite(1.0)));
  const Point p{0.0, 0.0}, q{0.3, 0.2};
  const double prof = separation_profile(l1, p, q, 100'000, 4).value;
  for (double delta : {0.6, 1.0, 3.0, 10.0}) {
    const auto e = separation_prob_exact(l1, p, q, delta, 100'000, 5);
    CHECK(delta * e.probability.value <= prof + 3.0 * delta * e.probability.stderr);
  }
}

TEST_CASE("product partitions") {
  auto [d1, d2] = product_deltas(2.0, 1.0, 3.0, 2.0);
  CHECK(d1 * d1 + d2 * d2 == doctest::Approx(4.0));
  CHECK(d1 / d2 == doctest::Approx(std::sqrt(1.0 / 3.0)));

  const NormedSpace line(SpaceDescriptor::lp(1, Exponent::finite(2.0)));
  QuerySet qa, qb;
  qa.points = {{0.0}, {0.5}};
  qb.points = {{0.0}, {0.8}};
  int sep = 0, sep_a = 0, sep_b = 0;
  const int trials = 40'000;
  for (int t = 0; t < trials; ++t) {
    const PartitionSample a = sample_partition(line, 2.0, qa, derive_key(1, {static_cast<std::uint64_t>(t)}));
    const PartitionSample b = sample_partition(line, 2.0, qb, derive_key(2, {static_cast<std::uint64_t>(t)}));
    const PartitionSample ab = product_partition(a, b);
    REQUIRE(ab.assignment.size() == 4);
    // Query (0, 0) has index 0 and (1, 1) has index 3.
    sep += ab.assignment[0] != ab.assignment[3];
    sep_a += a.assignment[0] != a.assignment[1];
    sep_b += b.assignment[0] != b.assignment[1];
  }
  const double pa = static_cast<double>(sep_a) / trials, pb = static_cast<double>(sep_b) / trials;
  const double p = static_cast<double>(sep) / trials;
  // 1D: separation probability of distance s at delta 2 is (2 - 2t)/(2 - t), t = 1 - s/2.
  CHECK(within_sigma(pa, separation_from_overlap(0.75), std::sqrt(pa * (1 - pa) / trials)));
  const double expect = 1.0 - (1.0 - pa) * (1.0 - pb);
  CHECK(within_sigma(p, expect, 3.0 * std::sqrt(p * (1 - p) / trials)));
  CHECK(p <= pa + pb + 1e-12);
}

TEST_CASE("lazy Poisson partition") {
  const NormedSpace l2(SpaceDescriptor::lp(2, Exponent::finite(2.0)));
  const PoissonPartition part(l2, 2.0, 77);
  const Point x{0.3, 0.4};
  CHECK(part.center_of(x) == part.center_of(x));
  CHECK(dist(l2, part.center_of(x), x) <= 1.0);
  // Same law as the finite-window model: the lens separation probability.
  const Point u{0.0, 0.0}, v{1.0, 0.0};
  int sep = 0;
  const int trials = 40'000;
  for (int t = 0; t < trials; ++t) {
    const PoissonPartition p(l2, 2.0, derive_key(5, {static_cast<std::uint64_t>(t)}));
    sep += p.center_of(u) != p.center_of(v);
  }
  const double f = static_cast<double>(sep) / trials;
  CHECK(within_sigma(f, kLensSep, std::sqrt(f * (1 - f) / trials)));
}

TEST_CASE("discrete Loomis-Whitney") {
  std::vector<GridPoint> box;
  for (long long i = 0; i < 4; ++i)
    for (long long j = 0; j < 4; ++j)
      for (long long k = 0; k < 4; ++k) box.push_back({i, j, k});
  const auto rb = loomis_whitney_boundary(box);
  CHECK(rb.boundary_average == doctest::Approx(16.0));
  CHECK(rb.bound == doctest::Approx(16.0));
  CHECK(rb.holds);
  const auto rs = loomis_whitney_boundary({{3, -2}});
  CHECK(rs.boundary_average == 1.0);
  CHECK(rs.holds);

  Rng rng(41);
  for (int t = 0; t < 50; ++t) {
    std::set<GridPoint> s;
    while (s.size() < 20) s.insert({static_cast<long long>(rng.below(8)), static_cast<long long>(rng.below(8))});
    // Independent count of directed boundary points.
    double total = 0.0;
    for (int i = 0; i < 2; ++i)
      for (const auto& x : s) {
        GridPoint y = x;
        ++y[i];
        total += !s.count(y);
      }
    const auto r = loomis_whitney_boundary(std::vector<GridPoint>(s.begin(), s.end()));
    CHECK(r.boundary_average == doctest::Approx(total / 2.0));
    CHECK(r.holds);
  }
}

TEST_CASE("deterministic partition bound") {
  std::vector<GridPoint> grid;
  for (long long i = 0; i < 3; ++i)
    for (long long j = 0; j < 3; ++j) grid.push_back({i, j});
  std::uint64_t bad = 0;
  const std::uint64_t count = enumerate_set_partitions(9, 3, [&](const std::vector<int>& labels) {
    if (!deterministic_partition_bound_check(grid, labels, 3).holds) ++bad;
  });
  CHECK(bad == 0);
  // Partitions of a 9-set into blocks of size <= 3 (recurrence over the block holding the first element).
  CHECK(count == 12644);
  std::uint64_t all = enumerate_set_partitions(5, 5, [](const std::vector<int>&) {});
  CHECK(all == 52);  // Bell number

  std::vector<int> singletons(9);
  for (int i = 0; i < 9; ++i) singletons[i] = i;
  CHECK(deterministic_partition_bound_check(grid, singletons, 1).holds);
  const std::vector<GridPoint> row{{0}, {1}, {2}, {3}};
  CHECK(deterministic_partition_bound_check(row, {0, 0, 1, 1}, 2).holds);
  CHECK_FALSE(deterministic_partition_bound_check(row, {0, 0, 0, 1}, 2).max_part_ok);
}
