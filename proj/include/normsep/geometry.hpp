#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "normsep/estimate.hpp"
#include "normsep/rng.hpp"
#include "normsep/space.hpp"

namespace normsep {

// A point of the unit sphere of the space (cone samples) or of its ball
// (uniform samples), with a self-normalized importance weight.
struct ConeSample {
  std::vector<double> point;
  double weight = 1.0;
};

// ---- volume -------------------------------------------------------------

double volume_exact(const NormedSpace& space);
double log_volume_exact(const NormedSpace& space);

// Hit-or-miss over the coordinate bounding box. Dimensions above 20 throw
// UnsupportedError unless allow_high_dim is set.
MonteCarloEstimate volume_mc(const NormedSpace& space, std::uint64_t trials, std::uint64_t seed,
                             bool allow_high_dim = false);

// Exact when available, Monte Carlo otherwise.
MonteCarloEstimate volume_any(const NormedSpace& space, std::uint64_t trials, std::uint64_t seed);

// ---- sampling -----------------------------------------------------------

// Direct cone-measure draw into out; returns the importance weight.
// Requires has_cone_sampler.
double draw_cone(const NormedSpace& space, Rng& rng, std::span<double> out);

struct HitAndRunOptions {
  std::uint64_t burn_in = 0;  // 0 means 100 * dim
  std::uint64_t thinning = 1;
};

// Stateful hit-and-run chain started at the origin.
class HitAndRunChain {
 public:
  HitAndRunChain(const NormedSpace& space, std::uint64_t key, const HitAndRunOptions& options = {});
  // Advances the chain and returns the current point.
  std::span<const double> next();

 private:
  void step();
  const NormedSpace& space_;
  Rng rng_;
  HitAndRunOptions options_;
  std::vector<double> x_, u_, y_;
};

std::vector<ConeSample> cone_sample(const NormedSpace& space, std::uint64_t count, std::uint64_t seed);
std::vector<ConeSample> uniform_ball_sample(const NormedSpace& space, std::uint64_t count, std::uint64_t seed);

struct HitAndRunResult {
  std::vector<std::vector<double>> points;
  MonteCarloEstimate radial_mean;  // batch-means standard error over chains
  double expected_radial_mean = 0.0;  // n / (n + 1)
  bool converged = true;              // radial mean within 4 standard errors + 0.01
};
HitAndRunResult hit_and_run_sample(const NormedSpace& space, std::uint64_t count, std::uint64_t burn_in,
                                   std::uint64_t seed);

// E f(theta) under the cone measure. Uses the direct sampler when present,
// otherwise radial projection of hit-and-run chains (batch-means stderr).
MonteCarloEstimate cone_expectation(const NormedSpace& space, std::uint64_t count, std::uint64_t seed,
                                    const std::function<double(std::span<const double>)>& f);
// E f(x) for x uniform in the unit ball.
MonteCarloEstimate ball_expectation(const NormedSpace& space, std::uint64_t count, std::uint64_t seed,
                                    const std::function<double(std::span<const double>)>& f);

// ---- surface, iq, psi -----------------------------------------------------

// vol_{n-1}(boundary) / vol_n(ball) = n E |grad|_2. Closed forms for lp with
// p in {1, 2, inf} unless force_mc.
MonteCarloEstimate surface_ratio(const NormedSpace& space, std::uint64_t samples, std::uint64_t seed,
                                 bool force_mc = false);
MonteCarloEstimate iq(const NormedSpace& space, std::uint64_t samples, std::uint64_t seed,
                      bool force_mc = false);
double iq_euclidean_ball(int n);

// Closed-form psi where the space admits one (lp with p = 2 or inf, or n = 1).
std::optional<double> psi_closed_form(const NormedSpace& space, std::span<const double> w);
MonteCarloEstimate psi(const NormedSpace& space, std::span<const double> w, std::uint64_t samples,
                       std::uint64_t seed, bool allow_closed_form = true);

// Reusable psi evaluator backed by a frozen gradient sample (or a closed form),
// so that psi can be maximized and evaluated at many points consistently.
class PsiEvaluator {
 public:
  PsiEvaluator(const NormedSpace& space, std::uint64_t samples, std::uint64_t seed,
               bool allow_closed_form = true);
  double operator()(std::span<const double> w) const;
  // psi(w) and a supergradient in w.
  double value_and_gradient(std::span<const double> w, std::span<double> grad) const;
  bool is_closed_form() const { return closed_; }
  int dim() const { return n_; }

 private:
  const NormedSpace* space_;
  int n_;
  bool closed_ = false;
  std::vector<double> grads_;  // samples x n
  std::vector<double> weights_;
  double weight_sum_ = 0.0;
};

MonteCarloEstimate hyperplane_projection_volume(const NormedSpace& space, std::span<const double> w,
                                                std::uint64_t samples, std::uint64_t seed);

struct MaxProjResult {
  std::vector<double> direction;
  MonteCarloEstimate value;
  double dispersion = 0.0;  // spread of the per-start maxima
  bool heuristic = true;
};
MaxProjResult maxproj(const NormedSpace& space, int restarts, std::uint64_t samples, std::uint64_t seed);

// vol(Cone_z(B)) = psi(z) vol(B) / n for z on the unit sphere of the space.
MonteCarloEstimate cone_volume(const NormedSpace& space, std::span<const double> z, std::uint64_t samples,
                               std::uint64_t seed);
struct ConeMaxResult {
  std::vector<double> point;
  MonteCarloEstimate volume;
  double volume_ratio = 0.0;  // cone volume / ball volume
  double lower_bound_ratio = 0.0;  // Gamma(n/2) / (2 sqrt(pi) Gamma((n+1)/2))
};
ConeMaxResult max_cone_volume(const NormedSpace& space, int restarts, std::uint64_t samples, std::uint64_t seed);

// M(X) = E|G|_X / E|G|_2 for a standard Gaussian G.
MonteCarloEstimate mean_width_dual(const NormedSpace& space, std::uint64_t samples, std::uint64_t seed);

struct CauchyCheck {
  MonteCarloEstimate surface;         // vol_{n-1}(boundary)
  MonteCarloEstimate projection_side; // Cauchy average of shadows
  double residual = 0.0;              // relative difference
  double combined_stderr = 0.0;       // relative
  bool within_3sigma = false;
};
CauchyCheck cauchy_surface_identity_check(const NormedSpace& space, std::uint64_t samples, std::uint64_t seed);

struct IntersectReport {
  NormedSpace space;
  double r = 0.0;
  MonteCarloEstimate mean_width;           // M(X)
  MonteCarloEstimate volume;               // vol(L)
  double volume_root_times_m_sqrt_n = 0.0; // vol(L)^{1/n} M(X) sqrt(n), bounded below
  MonteCarloEstimate maxproj_ratio;        // MaxProj(L) / vol(L)^{(n-1)/n}, bounded above
};
// L = B_X intersected with r B_2; r defaults to 1 / (2 M(X)).
IntersectReport intersect_construction(const NormedSpace& space, std::optional<double> r, std::uint64_t samples,
                                       std::uint64_t seed, int restarts = 8);

struct IqScanPoint {
  double r;
  MonteCarloEstimate iq;
};
std::vector<IqScanPoint> iq_radius_scan(const NormedSpace& base, const std::vector<double>& radii,
                                        std::uint64_t samples, std::uint64_t seed);

}  // namespace normsep
