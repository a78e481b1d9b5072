#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "json.hpp"
#include "normsep/estimate.hpp"
#include "normsep/space.hpp"

namespace normsep {

using Point = std::vector<double>;

struct QuerySet {
  std::vector<Point> points;
  // Throws InputError when empty or when a point has the wrong length.
  void validate(const NormedSpace& space) const;
};

// One realization of iterative ball partitioning restricted to a query set.
// Only centers that captured at least one query are stored, in arrival order.
struct PartitionSample {
  double delta = 0.0;
  std::vector<Point> centers;
  std::vector<std::size_t> assignment;  // query index -> center index
  Point window_lo, window_hi;
  std::uint64_t seed = 0;
  std::uint64_t proposals = 0;  // proposals drawn (capturing draws in conditioned mode)
};

nlohmann::json partition_to_json(const PartitionSample& s);
PartitionSample partition_from_json(const nlohmann::json& j);

// box: literal i.i.d. uniform proposals in the window.
// conditioned: proposals drawn from the window law conditioned on hitting the
// balls of still-unassigned queries. Both give the same assignment law;
// the conditioned mode skips draws that capture nothing.
enum class ProposalMode { automatic, box, conditioned };

struct PartitionOptions {
  ProposalMode mode = ProposalMode::automatic;
  double window_margin = 0.0;  // extra inflation of the window on every side
  std::uint64_t max_proposals = 1'000'000'000ull;
};

PartitionSample sample_partition(const NormedSpace& space, double delta, const QuerySet& queries, std::uint64_t seed,
                                 const PartitionOptions& options = {});

MonteCarloEstimate separation_prob_mc(const NormedSpace& space, std::span<const double> u, std::span<const double> v,
                                      double delta, std::uint64_t trials, std::uint64_t seed,
                                      const PartitionOptions& options = {});

// Pr = (2 - 2t) / (2 - t), with t the relative overlap of B and w + B, w = (2/delta)(v - u).
struct SeparationExact {
  MonteCarloEstimate probability;
  MonteCarloEstimate overlap;  // t
};
SeparationExact separation_prob_exact(const NormedSpace& space, std::span<const double> u, std::span<const double> v,
                                      double delta, std::uint64_t trials, std::uint64_t seed);
double separation_from_overlap(double t);

// Pr[u + rho (delta/2) B inside the cluster of u] = ((1 - rho)/(1 + rho))^n.
double padding_prob_exact(int n, double rho);
MonteCarloEstimate padding_prob_mc(const NormedSpace& space, double rho, double delta, std::uint64_t trials,
                                   std::uint64_t seed, const PartitionOptions& options = {});

struct Bracket {
  MonteCarloEstimate psi;
  double lower = 0.0;  // 1 - psi
  MonteCarloEstimate t;
  double upper = 0.0;  // exp(-psi)
  bool holds = false;  // with 3 sigma slack
};
Bracket schmuckenschlager_bracket(const NormedSpace& space, std::span<const double> w, std::uint64_t samples,
                                  std::uint64_t seed);

// 4 psi(u - v).
MonteCarloEstimate separation_profile(const NormedSpace& space, std::span<const double> u, std::span<const double> v,
                                      std::uint64_t samples = 100000, std::uint64_t seed = 0);

// Scale split for a product under the s-sum metric: D1^s + D2^s = D^s.
std::pair<double, double> product_deltas(double delta, double sigma1, double sigma2, double s);

// Product partition on the query grid A x B; query (i, j) has index i * |B| + j.
PartitionSample product_partition(const PartitionSample& a, const PartitionSample& b, double s = 1.0);

// Iterative ball partitioning of all of R^n, realized lazily: a unit-rate
// Poisson process in space-time on a grid of cells with per-cell streams.
// Restricted to any window its arrival order is i.i.d. uniform, so it has the
// same law as the finite-window model while staying consistent across queries.
class PoissonPartition {
 public:
  PoissonPartition(const NormedSpace& space, double delta, std::uint64_t key);
  // Center of the cluster containing x.
  Point center_of(std::span<const double> x) const;
  double delta() const { return delta_; }

 private:
  const NormedSpace* space_;
  double delta_;
  std::uint64_t key_;
  std::vector<double> bound_;
};

// ---- discrete Loomis-Whitney --------------------------------------------

using GridPoint = std::vector<long long>;

struct LoomisWhitneyReport {
  double boundary_average = 0.0;  // (1/n) sum_i |G \ (G - e_i)|
  double bound = 0.0;             // |G|^{(n-1)/n}
  bool holds = false;
};
LoomisWhitneyReport loomis_whitney_boundary(const std::vector<GridPoint>& grid_set);

struct PartitionBoundReport {
  double cut_average = 0.0;       // (1/n) sum_i |{x in O and O - e_i : P(x) != P(x + e_i)}|
  double rhs = 0.0;               // |O| / M^{1/n} - (1/n) sum_i |O \ (O - e_i)|
  bool max_part_ok = false;       // every part has at most M points
  bool holds = false;
};
// labels[k] is the part of omega[k].
PartitionBoundReport deterministic_partition_bound_check(const std::vector<GridPoint>& omega,
                                                         const std::vector<int>& labels, int max_part);

// Calls fn(labels) for every set partition of {0..m-1} with parts of size <= max_part
// (restricted growth strings). Returns the number visited.
std::uint64_t enumerate_set_partitions(int m, int max_part, const std::function<void(const std::vector<int>&)>& fn);

}  // namespace normsep
