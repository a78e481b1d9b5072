#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "normsep/partition.hpp"
#include "normsep/space.hpp"

namespace normsep {

// Bump supported on [1, 4], equal to 1 on [2, 3], 1-Lipschitz.
double bump(double t);

// phi_k(x) / sum_j phi_j(x) with phi_k(x) = bump(2^{-k} d(x, C)); 0 on C.
double bump_weight(double dist_to_anchors, int k);
// Scales with a nonzero weight, ascending (empty when the distance is 0).
std::vector<int> active_scales(double dist_to_anchors);
double bump_weights(const NormedSpace& space, std::span<const double> x, const std::vector<Point>& anchors, int k);

struct ExtensionOperator {
  SpaceDescriptor space;
  SpaceDescriptor target;  // norm on the value space
  std::vector<Point> anchors;
  std::vector<Point> values;
  int k_min = 0, k_max = 0;  // scales where anchor geometry changes; others are realized on demand
  int mc_rounds = 64;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

// Anchors are deduplicated (first occurrence wins). target defaults to lp(m, 2).
ExtensionOperator build_extension(const SpaceDescriptor& space, const std::vector<Point>& anchors,
                                  const std::vector<Point>& values, int mc_rounds = 64, std::uint64_t seed = 0,
                                  const SpaceDescriptor* target = nullptr);

struct Evaluation {
  Point value;
  std::vector<double> weights;  // convex weights over anchors
  Point stderr;                 // per-coordinate spread of the per-round values
};

// Stateless given the operator; safe to call concurrently.
class Extension {
 public:
  explicit Extension(ExtensionOperator op);
  Evaluation evaluate(std::span<const double> x) const;
  double distance_to_anchors(std::span<const double> x) const;
  std::size_t nearest_anchor(std::span<const double> x) const;
  const ExtensionOperator& op() const { return op_; }
  const NormedSpace& space() const { return space_; }
  const NormedSpace& target() const { return target_; }

 private:
  ExtensionOperator op_;
  NormedSpace space_;
  NormedSpace target_;
};

struct LipschitzScan {
  double max_ratio = 0.0;
  Point x, y;
  std::size_t pairs = 0;
};
// max |F(x) - F(y)|_Z / (4 psi(x - y)) over sampled pairs with
// |x - y| >= max(d(x, C), d(y, C)) / 8, plus all anchor pairs.
LipschitzScan lipschitz_ratio_scan(const Extension& ext, std::size_t pair_count, std::uint64_t seed,
                                   std::uint64_t psi_samples = 20000);

// Instance generator for calibrating and checking the Lipschitz constant.
struct ExtensionInstance {
  SpaceDescriptor space;
  std::vector<Point> anchors;
  std::vector<Point> values;  // 1-Lipschitz from the space into l2^2
};
ExtensionInstance extension_instance(std::uint64_t seed);

nlohmann::json extension_to_json(const ExtensionOperator& op);
ExtensionOperator extension_from_json(const nlohmann::json& j);
// {"anchors": [[...]], "values": [[...]]} or CSV rows "x_1..x_n,f_1..f_m".
void read_anchor_json(const nlohmann::json& j, std::vector<Point>& anchors, std::vector<Point>& values);
void read_anchor_csv(std::istream& is, int n, std::vector<Point>& anchors, std::vector<Point>& values);

}  // namespace normsep
