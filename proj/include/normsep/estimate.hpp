#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace normsep {

struct MonteCarloEstimate {
  double value = 0.0;
  double stderr = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;

  static MonteCarloEstimate exact(double v) { return {v, 0.0, 1, 0}; }
};

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  void add(const CompensatedSum& o) {
    add(o.sum_);
    add(o.comp_);
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Running sums for an i.i.d. mean.
class MeanAccumulator {
 public:
  void add(double x) {
    s1_.add(x);
    s2_.add(x * x);
    ++n_;
  }
  void merge(const MeanAccumulator& o) {
    s1_.add(o.s1_);
    s2_.add(o.s2_);
    n_ += o.n_;
  }
  std::uint64_t count() const { return n_; }
  double mean() const { return n_ ? s1_.value() / static_cast<double>(n_) : 0.0; }
  double stderr() const;
  MonteCarloEstimate estimate(std::uint64_t seed) const { return {mean(), stderr(), n_, seed}; }

 private:
  CompensatedSum s1_, s2_;
  std::uint64_t n_ = 0;
};

// Self-normalized importance-weighted mean, delta-method standard error.
class WeightedAccumulator {
 public:
  void add(double w, double f) {
    sw_.add(w);
    swf_.add(w * f);
    sw2_.add(w * w);
    sw2f_.add(w * w * f);
    sw2f2_.add(w * w * f * f);
    ++n_;
  }
  void merge(const WeightedAccumulator& o) {
    sw_.add(o.sw_);
    swf_.add(o.swf_);
    sw2_.add(o.sw2_);
    sw2f_.add(o.sw2f_);
    sw2f2_.add(o.sw2f2_);
    n_ += o.n_;
  }
  std::uint64_t count() const { return n_; }
  double mean() const;
  double stderr() const;
  // Kish effective sample size.
  double effective_sample_size() const;
  MonteCarloEstimate estimate(std::uint64_t seed) const { return {mean(), stderr(), n_, seed}; }

 private:
  CompensatedSum sw_, swf_, sw2_, sw2f_, sw2f2_;
  std::uint64_t n_ = 0;
};

// Worker pool size used by all estimators. Results never depend on it.
void set_worker_count(unsigned workers);
unsigned worker_count();

// Runs body(chunk_index) for chunk_index in [0, chunks) across workers.
// Callers store per-chunk results by index and merge them in order.
void parallel_for_chunks(std::size_t chunks, const std::function<void(std::size_t)>& body);

// Fixed decomposition of `total` trials into chunks of at most `chunk` trials.
struct ChunkPlan {
  std::uint64_t total;
  std::uint64_t chunk;
  std::size_t count() const { return static_cast<std::size_t>((total + chunk - 1) / chunk); }
  std::uint64_t begin(std::size_t i) const { return i * chunk; }
  std::uint64_t size(std::size_t i) const {
    const std::uint64_t b = begin(i);
    return (b + chunk <= total) ? chunk : total - b;
  }
};

inline constexpr std::uint64_t kDefaultChunk = 4096;

// Map-reduce over a chunk plan with a fixed merge order.
template <class Acc, class Fn>
Acc chunked_reduce(const ChunkPlan& plan, Fn&& per_chunk) {
  std::vector<Acc> parts(plan.count());
  parallel_for_chunks(parts.size(), [&](std::size_t i) { parts[i] = per_chunk(i, plan.size(i)); });
  Acc total{};
  for (const auto& p : parts) total.merge(p);
  return total;
}

}  // namespace normsep
