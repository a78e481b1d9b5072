#include <cmath>
#include <numbers>

#include "doctest.h"
#include "normsep/errors.hpp"
#include "normsep/geometry.hpp"
#include "test_util.hpp"

using namespace normsep;
using testutil::within_sigma;

namespace {

constexpr double kPi = std::numbers::pi;

double ball_volume(int n) { return std::exp(0.5 * n * std::log(kPi) - std::lgamma(0.5 * n + 1.0)); }

// E f(theta) under the cone measure of a planar ball, by quadrature over the polar angle:
// the cone over an arc has area r(phi)^2 / 2 dphi with r the radial function.
double planar_cone_expectation(const NormedSpace& s, const std::function<double(std::span<const double>)>& f) {
  const int steps = 200000;
  double num = 0.0, den = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double phi = 2.0 * kPi * (k + 0.5) / steps;
    const std::vector<double> u{std::cos(phi), std::sin(phi)};
    const double r = 1.0 / s.norm(u);
    const std::vector<double> theta{r * u[0], r * u[1]};
    num += f(theta) * r * r;
    den += r * r;
  }
  return num / den;
}

// E max_i |g_i| for n standard Gaussians.
double expected_gaussian_max_abs(int n) {
  const int steps = 200000;
  const double top = 12.0, h = top / steps;
  double acc = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double t = k * h;
    const double w = (k == 0 || k == steps) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += w * (1.0 - std::pow(std::erf(t / std::sqrt(2.0)), n));
  }
  return acc * h / 3.0;
}

double expected_gaussian_norm(int n) {
  return std::sqrt(2.0) * std::exp(std::lgamma((n + 1) / 2.0) - std::lgamma(n / 2.0));
}

double grad_norm_sq(const NormedSpace& s, std::span<const double> x) {
  std::vector<double> g(s.dim());
  s.gradient_into(x, g);
  double a = 0.0;
  for (double v : g) a += v * v;
  return a;
}

}  // namespace

TEST_CASE("exact volumes") {
  CHECK(volume_exact(NormedSpace(SpaceDescriptor::lp(3, Exponent::finite(1.0)))) == doctest::Approx(4.0 / 3.0));
  CHECK(volume_exact(NormedSpace(SpaceDescriptor::lp(2, Exponent::finite(2.0)))) == doctest::Approx(kPi));
  CHECK(volume_exact(NormedSpace(SpaceDescriptor::lp(5, Exponent::infinity()))) == doctest::Approx(32.0));
  CHECK(volume_exact(NormedSpace(SpaceDescriptor::orlicz(1, std::log(2.0)))) == doctest::Approx(1.0).epsilon(1e-14));

  // l1(l1^2, l1^3) = l1^5 and l2(l2^2, l2^1) = l2^3.
  const auto l1b = SpaceDescriptor::block_lp(Exponent::finite(1.0), {SpaceDescriptor::lp(2, Exponent::finite(1.0)),
                                                                     SpaceDescriptor::lp(3, Exponent::finite(1.0))});
  CHECK(volume_exact(NormedSpace(l1b)) == doctest::Approx(32.0 / 120.0).epsilon(1e-13));
  const auto l2b = SpaceDescriptor::block_lp(Exponent::finite(2.0), {SpaceDescriptor::lp(2, Exponent::finite(2.0)),
                                                                     SpaceDescriptor::lp(1, Exponent::finite(2.0))});
  CHECK(volume_exact(NormedSpace(l2b)) == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-13));
  // linf(linf^2, linf^2) is the 4-cube.
  const auto cube = SpaceDescriptor::block_lp(Exponent::infinity(), {SpaceDescriptor::lp(2, Exponent::infinity()),
                                                                     SpaceDescriptor::lp(2, Exponent::infinity())});
  CHECK(volume_exact(NormedSpace(cube)) == doctest::Approx(16.0).epsilon(1e-13));

  CHECK_THROWS_AS(volume_exact(NormedSpace(SpaceDescriptor::schatten(2, Exponent::finite(2.0)))), UnsupportedError);
  CHECK_THROWS_AS(volume_mc(NormedSpace(SpaceDescriptor::lp(21, Exponent::finite(2.0))), 1000, 0), UnsupportedError);
}

TEST_CASE("monte carlo volume") {
  const auto e = volume_mc(NormedSpace(SpaceDescriptor::lp(2, Exponent::finite(2.0))), 1'000'000, 1);
  CHECK(within_sigma(e.value, kPi, e.stderr));
  const NormedSpace om(SpaceDescriptor::orlicz(3, 5.0));
  const auto o = volume_mc(om, 1'000'000, 2);
  CHECK(within_sigma(o.value, volume_exact(om), o.stderr));
  // Schatten-2 on 2x2 matrices is the Euclidean 4-ball.
  const auto s2 = volume_mc(NormedSpace(SpaceDescriptor::schatten(2, Exponent::finite(2.0))), 1'000'000, 3);
  CHECK(within_sigma(s2.value, ball_volume(4), s2.stderr));
}

TEST_CASE("estimates do not depend on the worker count") {
  const NormedSpace s(SpaceDescriptor::orlicz(3, 2.0));
  set_worker_count(1);
  const auto a = volume_mc(s, 100'000, 9);
  const auto pa = psi(s, std::vector<double>{1.0, 0.5, -0.2}, 50'000, 9);
  set_worker_count(3);
  const auto b = volume_mc(s, 100'000, 9);
  const auto pb = psi(s, std::vector<double>{1.0, 0.5, -0.2}, 50'000, 9);
  set_worker_count(1);
  CHECK(a.value == b.value);
  CHECK(a.stderr == b.stderr);
  CHECK(pa.value == pb.value);
}

TEST_CASE("cone measure moments") {
  for (int m : {2, 5}) {
    const NormedSpace l1(SpaceDescriptor::lp(m, Exponent::finite(1.0)));
    const auto e = cone_expectation(l1, 200'000, 4, [](std::span<const double> t) { return std::fabs(t[0]); });
    CHECK(within_sigma(e.value, 1.0 / m, e.stderr));
  }
  const NormedSpace l2(SpaceDescriptor::lp(4, Exponent::finite(2.0)));
  const auto e2 = cone_expectation(l2, 200'000, 5, [](std::span<const double> t) { return t[0] * t[0]; });
  CHECK(within_sigma(e2.value, 0.25, e2.stderr));

  const auto samples = cone_sample(NormedSpace(SpaceDescriptor::orlicz(3, 2.0)), 1000, 6);
  const NormedSpace om3(SpaceDescriptor::orlicz(3, 2.0));
  for (const auto& s : samples) CHECK(om3.norm(s.point) == doctest::Approx(1.0).epsilon(1e-10));

  const NormedSpace om(SpaceDescriptor::orlicz(2, 3.0));
  auto f = [&](std::span<const double> t) { return grad_norm_sq(om, t); };
  const double oracle = planar_cone_expectation(om, f);
  const auto mc = cone_expectation(om, 400'000, 7, f);
  CHECK(within_sigma(mc.value, oracle, mc.stderr));

  // Block sampler against the same planar oracle.
  const NormedSpace blk(SpaceDescriptor::block_lp(
      Exponent::finite(3.0), {SpaceDescriptor::lp(1, Exponent::finite(2.0)), SpaceDescriptor::lp(1, Exponent::finite(2.0))}));
  auto g = [](std::span<const double> t) { return t[0] * t[0]; };
  const auto bmc = cone_expectation(blk, 400'000, 8, g);
  CHECK(within_sigma(bmc.value, planar_cone_expectation(blk, g), bmc.stderr));
}

TEST_CASE("uniform ball radial law") {
  for (auto d : {SpaceDescriptor::lp(2, Exponent::finite(2.0)), SpaceDescriptor::lp(2, Exponent::finite(1.0)),
                 SpaceDescriptor::orlicz(3, 1.5)}) {
    const NormedSpace s(d);
    const auto e = ball_expectation(s, 200'000, 10, [&](std::span<const double> x) { return s.norm(x); });
    CHECK(within_sigma(e.value, s.dim() / (s.dim() + 1.0), e.stderr));
  }
}

TEST_CASE("hit and run") {
  const auto r3 = hit_and_run_sample(NormedSpace(SpaceDescriptor::lp(3, Exponent::finite(2.0))), 40'000, 0, 11);
  CHECK(within_sigma(r3.radial_mean.value, 0.75, r3.radial_mean.stderr));
  const auto s = hit_and_run_sample(NormedSpace(SpaceDescriptor::schatten(2, Exponent::infinity())), 40'000, 0, 12);
  CHECK(std::fabs(s.radial_mean.value - 0.8) < 0.02);
  CHECK(s.converged);
  // Cube inside a big ball: coordinates are uniform on [-1, 1].
  const NormedSpace cube(SpaceDescriptor::intersect_ball(SpaceDescriptor::lp(3, Exponent::infinity()), 10.0));
  const auto c = ball_expectation(cube, 40'000, 13, [](std::span<const double> x) { return x[1] * x[1]; });
  CHECK(within_sigma(c.value, 1.0 / 3.0, c.stderr, 4.0));
}

TEST_CASE("surface ratio and iq") {
  for (int n : {2, 3, 6}) {
    const NormedSpace l2(SpaceDescriptor::lp(n, Exponent::finite(2.0)));
    const NormedSpace cube(SpaceDescriptor::lp(n, Exponent::infinity()));
    CHECK(surface_ratio(l2, 1000, 0).value == doctest::Approx(n));
    CHECK(surface_ratio(cube, 1000, 0).value == doctest::Approx(n));
    const auto mc = surface_ratio(cube, 50'000, 1, true);
    CHECK(mc.value == doctest::Approx(n).epsilon(1e-12));
    CHECK(iq(cube, 1000, 0).value == doctest::Approx(2.0 * n));
    const auto b = iq(l2, 50'000, 2, true);
    CHECK(within_sigma(b.value, iq_euclidean_ball(n), b.stderr));
  }
  CHECK(iq_euclidean_ball(2) == doctest::Approx(2.0 * std::sqrt(kPi)).epsilon(1e-14));
  CHECK(iq_euclidean_ball(2) == doctest::Approx(3.54491).epsilon(1e-5));
}

TEST_CASE("quadratic gradient identity for block sums") {
  const int n = 3, m = 2;
  const double p = 3.0;
  const auto x = SpaceDescriptor::lp(m, Exponent::finite(3.0));
  const NormedSpace inner(x);
  const NormedSpace outer(SpaceDescriptor::block_lp(Exponent::finite(p), {x, x, x}));
  const auto lhs = cone_expectation(outer, 400'000, 14, [&](std::span<const double> t) { return grad_norm_sq(outer, t); });
  const auto rhs = cone_expectation(inner, 400'000, 15, [&](std::span<const double> t) { return grad_norm_sq(inner, t); });
  const double factor = n * std::exp(std::lgamma(n * m / p) + std::lgamma((m + 2 * p - 2) / p) - std::lgamma(m / p) -
                                     std::lgamma((n * m + 2 * p - 2) / p));
  const double se = std::hypot(lhs.stderr, factor * rhs.stderr);
  CHECK(within_sigma(lhs.value, factor * rhs.value, se));
}

TEST_CASE("psi closed forms and homogeneity") {
  const NormedSpace c2(SpaceDescriptor::lp(2, Exponent::infinity()));
  CHECK(psi(c2, std::vector<double>{1.0, 1.0}, 1000, 0).value == doctest::Approx(1.0));
  const NormedSpace l2(SpaceDescriptor::lp(2, Exponent::finite(2.0)));
  CHECK(psi(l2, std::vector<double>{1.0, 0.0}, 1000, 0).value == doctest::Approx(2.0 / kPi));
  CHECK(psi(l2, std::vector<double>{0.0, 0.0}, 1000, 0).value == 0.0);

  const NormedSpace c3(SpaceDescriptor::lp(3, Exponent::infinity()));
  const std::vector<double> w{0.3, -1.2, 0.7};
  const auto mc = psi(c3, w, 200'000, 1, false);
  CHECK(within_sigma(mc.value, 1.1, mc.stderr));
  const NormedSpace l23(SpaceDescriptor::lp(3, Exponent::finite(2.0)));
  const auto mc2 = psi(l23, w, 200'000, 2, false);
  double nw = 0.0;
  for (double v : w) nw += v * v;
  CHECK(within_sigma(mc2.value, std::sqrt(nw) * ball_volume(2) / ball_volume(3), mc2.stderr));

  const NormedSpace om(SpaceDescriptor::orlicz(3, 2.0));
  std::vector<double> w2(3);
  for (int i = 0; i < 3; ++i) w2[i] = 2.0 * w[i];
  CHECK(psi(om, w2, 50'000, 3).value == doctest::Approx(2.0 * psi(om, w, 50'000, 3).value).epsilon(1e-12));
}

TEST_CASE("psi sandwich on random spaces") {
  Rng rng(21);
  const SpaceKind kinds[] = {SpaceKind::lp, SpaceKind::block_lp, SpaceKind::orlicz_beta, SpaceKind::schatten,
                             SpaceKind::intersect_ball};
  for (int t = 0; t < 60; ++t) {
    const NormedSpace s(testutil::random_descriptor(rng, kinds[t % 5], 4));
    const auto x = testutil::random_vector(rng, s.dim());
    const auto e = psi(s, x, 20'000, static_cast<std::uint64_t>(t));
    const double nx = s.norm(x);
    CHECK(nx <= 2.0 * e.value + 6.0 * e.stderr + 1e-12);
    CHECK(2.0 * e.value <= s.dim() * nx + 6.0 * e.stderr + 1e-12);
  }
}

TEST_CASE("projections") {
  for (int n : {2, 3, 5}) {
    const NormedSpace cube(SpaceDescriptor::lp(n, Exponent::infinity()));
    std::vector<double> e1(n, 0.0);
    e1[0] = 1.0;
    CHECK(hyperplane_projection_volume(cube, e1, 1000, 0).value == doctest::Approx(std::ldexp(1.0, n - 1)));
    const auto mp = maxproj(cube, 8, 20'000, 1);
    CHECK(mp.value.value == doctest::Approx(std::ldexp(1.0, n - 1) * std::sqrt(n)).epsilon(1e-6));
    for (double v : mp.direction) CHECK(std::fabs(v) == doctest::Approx(1.0 / std::sqrt(n)).epsilon(1e-4));
    const NormedSpace l2(SpaceDescriptor::lp(n, Exponent::finite(2.0)));
    CHECK(maxproj(l2, 4, 1000, 2).value.value == doctest::Approx(ball_volume(n - 1)));
  }
}

TEST_CASE("cone volumes") {
  const NormedSpace l2(SpaceDescriptor::lp(2, Exponent::finite(2.0)));
  const std::vector<double> z{std::cos(0.4), std::sin(0.4)};
  CHECK(cone_volume(l2, z, 1000, 0).value == doctest::Approx(1.0));
  const auto m2 = max_cone_volume(l2, 4, 1000, 0);
  CHECK(m2.volume_ratio == doctest::Approx(1.0 / kPi));
  CHECK(m2.lower_bound_ratio == doctest::Approx(1.0 / kPi));

  for (int n : {2, 3, 4}) {
    const NormedSpace cube(SpaceDescriptor::lp(n, Exponent::infinity()));
    const std::vector<double> corner(n, 1.0);
    const double vol = std::ldexp(1.0, n);
    CHECK(cone_volume(cube, corner, 1000, 0).value <= vol / 2.0 + 1e-12);
    const auto m = max_cone_volume(cube, 4, 20'000, 1);
    CHECK(m.volume.value <= vol / 2.0 + 1e-9);
    CHECK(m.volume_ratio >= m.lower_bound_ratio);
  }
  const NormedSpace om(SpaceDescriptor::orlicz(3, 1.0));
  const auto mo = max_cone_volume(om, 4, 20'000, 2);
  CHECK(mo.volume_ratio <= 0.5 + 3.0 * mo.volume.stderr / volume_exact(om));
  CHECK(mo.volume_ratio >= mo.lower_bound_ratio - 3.0 * mo.volume.stderr / volume_exact(om));
}

TEST_CASE("mean width") {
  CHECK(mean_width_dual(NormedSpace(SpaceDescriptor::lp(5, Exponent::finite(2.0))), 1000, 0).value ==
        doctest::Approx(1.0));
  const auto l1 = mean_width_dual(NormedSpace(SpaceDescriptor::lp(2, Exponent::finite(1.0))), 400'000, 1);
  CHECK(within_sigma(l1.value, 4.0 / kPi, l1.stderr));
  for (int n : {3, 8}) {
    const auto li = mean_width_dual(NormedSpace(SpaceDescriptor::lp(n, Exponent::infinity())), 400'000, 2);
    CHECK(within_sigma(li.value, expected_gaussian_max_abs(n) / expected_gaussian_norm(n), li.stderr));
  }
}

TEST_CASE("cauchy surface identity") {
  for (auto d : {SpaceDescriptor::lp(3, Exponent::finite(2.0)), SpaceDescriptor::lp(3, Exponent::finite(1.0)),
                 SpaceDescriptor::lp(4, Exponent::infinity())}) {
    const auto c = cauchy_surface_identity_check(NormedSpace(d), 100'000, 3);
    CHECK(c.within_3sigma);
  }
}

TEST_CASE("ball intersections") {
  const int n = 3;
  const NormedSpace big(SpaceDescriptor::intersect_ball(SpaceDescriptor::lp(n, Exponent::infinity()), 2.0));
  const auto v = volume_mc(big, 400'000, 4);
  CHECK(within_sigma(v.value, 8.0, v.stderr));
  const auto q = iq(big, 40'000, 5);
  CHECK(within_sigma(q.value, 2.0 * n, q.stderr, 4.0));
  const NormedSpace small(SpaceDescriptor::intersect_ball(SpaceDescriptor::lp(n, Exponent::infinity()), 0.8));
  const auto vs = volume_mc(small, 400'000, 6);
  CHECK(within_sigma(vs.value, ball_volume(n) * 0.8 * 0.8 * 0.8, vs.stderr));

  const auto rep = intersect_construction(NormedSpace(SpaceDescriptor::lp(n, Exponent::infinity())), std::nullopt,
                                          20'000, 7, 4);
  CHECK(rep.r == doctest::Approx(0.5 / rep.mean_width.value));
  CHECK(rep.volume_root_times_m_sqrt_n > 0.0);
  CHECK(rep.maxproj_ratio.value > 0.0);
}
