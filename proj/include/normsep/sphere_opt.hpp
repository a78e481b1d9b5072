#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace normsep {

// Objective on the unit sphere: returns f(u) and writes a (super)gradient.
using SphereObjective = std::function<double(std::span<const double> u, std::span<double> grad)>;

struct SphereMaxOptions {
  int restarts = 32;           // random starts in addition to the structured ones
  bool structured_starts = true;
  double tolerance = 1e-8;     // final step size
  int max_iterations = 2000;
};

struct SphereMaxResult {
  std::vector<double> argmax;
  double value = 0.0;
  std::vector<double> start_values;  // best value reached from each start
  double dispersion = 0.0;           // standard deviation of start_values
};

// Multi-start spherical projected gradient ascent with step halving.
SphereMaxResult maximize_on_sphere(int n, const SphereObjective& f, const SphereMaxOptions& options,
                                   std::uint64_t seed);

}  // namespace normsep
