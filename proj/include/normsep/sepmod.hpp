#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "normsep/estimate.hpp"
#include "normsep/space.hpp"

namespace normsep {

// evr(X) 2 (n!)^{1/(2n)} Gamma(1+n/2)^{1/n} / sqrt(pi n); needs a canonically positioned space.
double sep_lower_evr(const NormedSpace& space);
double external_volume_ratio(const NormedSpace& space);
// The dimension-only factor multiplying evr(X).
double sep_lower_constant(int n);

struct TwoNormBound {
  MonteCarloEstimate value;       // 4 M sup_{boundary of B_X} psi_Y
  double scale = 1.0;             // M = sup |z|_X / |z|_Y
  std::vector<double> argmax;     // maximizing point on the unit sphere of X
  double dispersion = 0.0;        // spread of per-start maxima of psi_Y / |.|_X
  bool heuristic = true;          // false when every supremum came from a closed form
};
TwoNormBound sep_upper_two_norm(const NormedSpace& x, const NormedSpace& y, int restarts, std::uint64_t samples,
                                std::uint64_t seed);

struct Companion {
  SpaceDescriptor descriptor;
  int block_dim = 0;   // m, or 0 when the space is its own companion
  double beta = 0.0;
  double lower = 1.0;  // lower |x|_X <= |x|_Y
  double upper = 1.0;  // |x|_Y <= upper |x|_X
};
// lp spaces only (UnsupportedError otherwise).
Companion companion_space(const NormedSpace& x);

struct SweepRecord {
  std::string kind;
  int n = 0;
  std::optional<Exponent> p;
  std::optional<Exponent> q;
  std::optional<double> beta;
  std::string quantity;
  double value = 0.0;
  double stderr = 0.0;
  std::optional<double> lower;
  std::optional<double> upper;
  std::uint64_t seed = 0;

  friend bool operator==(const SweepRecord&, const SweepRecord&) = default;
};

struct SweepConfig {
  // lp family: fixed exponent, or p = log n when p_log_n is set.
  std::optional<Exponent> p;
  bool p_log_n = false;
  std::vector<int> dims;
  std::vector<std::string> quantities;  // sep_lower_evr, sep_upper_companion, sep_upper_self, iq, psi_diagonal
  std::uint64_t samples = 100000;
  int restarts = 8;
  std::uint64_t seed = 0;
};
SweepConfig sweep_config_from_json(const nlohmann::json& j);

struct SweepResult {
  std::vector<SweepRecord> records;
  std::map<std::string, double> slopes;  // least-squares log-log slope per quantity
};
SweepResult sweep(const SweepConfig& config);

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Leading lines starting with # are skipped on read.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records);
std::vector<SweepRecord> read_sweep_csv(std::istream& is);
nlohmann::json sweep_to_json(const SweepResult& r);

}  // namespace normsep
