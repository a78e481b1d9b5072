#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace normsep {

enum class SpaceKind { lp, block_lp, orlicz_beta, schatten, intersect_ball };

const char* kind_name(SpaceKind kind);

// Exponent in [1, inf]. Infinity is a distinct state, not a large number.
class Exponent {
 public:
  Exponent() = default;
  static Exponent finite(double p);
  static Exponent infinity() { return Exponent(true, 0.0); }

  bool is_infinite() const { return inf_; }
  // Finite value; calling this on infinity throws.
  double value() const;
  // 1/p, zero at infinity.
  double reciprocal() const { return inf_ ? 0.0 : 1.0 / p_; }

  friend bool operator==(const Exponent& a, const Exponent& b) {
    return a.inf_ == b.inf_ && (a.inf_ || a.p_ == b.p_);
  }

 private:
  Exponent(bool inf, double p) : inf_(inf), p_(p) {}
  bool inf_ = false;
  double p_ = 2.0;
};

struct SpaceDescriptor {
  SpaceKind kind = SpaceKind::lp;
  int n = 1;
  Exponent p;                            // lp, block_lp (outer), schatten
  std::vector<SpaceDescriptor> blocks;   // block_lp
  double beta = 0.0;                     // orlicz_beta
  std::vector<SpaceDescriptor> base;     // intersect_ball: exactly one entry
  double r = 0.0;                        // intersect_ball

  static SpaceDescriptor lp(int n, Exponent p);
  static SpaceDescriptor block_lp(Exponent p, std::vector<SpaceDescriptor> blocks);
  static SpaceDescriptor orlicz(int m, double beta);
  // Square rows x rows matrices, flattened row-major.
  static SpaceDescriptor schatten(int rows, Exponent p);
  static SpaceDescriptor intersect_ball(SpaceDescriptor base, double r);

  // Throws InputError naming the offending path.
  void validate(const std::string& path = "$") const;

  friend bool operator==(const SpaceDescriptor& a, const SpaceDescriptor& b);
};

struct Capabilities {
  bool has_gradient = false;
  bool has_cone_sampler = false;
  bool has_exact_volume = false;
  bool is_canonically_positioned = false;
};

struct Gradient {
  std::vector<double> g;
  bool smooth = true;
};

// Immutable normed space built from a descriptor.
class NormedSpace {
 public:
  explicit NormedSpace(SpaceDescriptor descriptor);

  const SpaceDescriptor& descriptor() const { return desc_; }
  SpaceKind kind() const { return desc_.kind; }
  int dim() const { return desc_.n; }
  const Capabilities& capabilities() const { return caps_; }
  const std::vector<NormedSpace>& children() const { return children_; }
  // Offsets of block slices (block_lp only), size = blocks + 1.
  const std::vector<int>& offsets() const { return offsets_; }

  // Throws InputError on length mismatch.
  double norm(std::span<const double> x) const;
  // Writes a (sub)gradient into out and returns false at non-smooth points.
  // Throws DomainError at x = 0.
  bool gradient_into(std::span<const double> x, std::span<double> out) const;
  Gradient gradient(std::span<const double> x) const;

  // max |x_i| over the unit ball.
  double coordinate_bound(int i) const;

  int schatten_rows() const { return rows_; }

 private:
  double norm_unchecked(std::span<const double> x) const;
  bool gradient_unchecked(std::span<const double> x, double nx, std::span<double> out) const;
  double orlicz_norm(std::span<const double> x) const;

  SpaceDescriptor desc_;
  Capabilities caps_;
  std::vector<NormedSpace> children_;
  std::vector<int> offsets_;
  int rows_ = 0;
};

double norm_eval(const NormedSpace& space, std::span<const double> x);
Gradient norm_gradient(const NormedSpace& space, std::span<const double> x);

// max of the Euclidean norm on the unit sphere of the space.
// Requires a canonically positioned space (else UnsupportedError).
double circumradius(const NormedSpace& space);

struct Decomposition {
  std::vector<long long> factors;
  long long remainder = 0;
};

// n = n_1 ... n_k + remainder with n_1 in {6,7}, increasing factors and
// n_{i+1} <= 2^{n_i} <= n_{i+1}^3. Throws InputError for n < 3.
Decomposition loglacunary_decompose(long long n);
bool decomposition_is_valid(const Decomposition& d, long long n);

// Singular values (descending) of a rows x cols row-major matrix, with the
// thin factors A = U diag(s) V^T stored row-major (U: rows x k, V: cols x k).
struct Svd {
  int rows = 0, cols = 0, k = 0;
  std::vector<double> u, s, v;
};
Svd jacobi_svd(std::span<const double> a, int rows, int cols, double tol = 1e-13);

}  // namespace normsep
