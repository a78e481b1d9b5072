#include "normsep/estimate.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace normsep {

double MeanAccumulator::stderr() const {
  if (n_ < 2) return 0.0;
  const double n = static_cast<double>(n_);
  const double m = s1_.value() / n;
  const double var = std::max(0.0, (s2_.value() - n * m * m) / (n - 1.0));
  return std::sqrt(var / n);
}

double WeightedAccumulator::mean() const {
  const double sw = sw_.value();
  return sw > 0.0 ? swf_.value() / sw : 0.0;
}

double WeightedAccumulator::stderr() const {
  const double sw = sw_.value();
  if (n_ < 2 || sw <= 0.0) return 0.0;
  const double r = mean();
  const double num = sw2f2_.value() - 2.0 * r * sw2f_.value() + r * r * sw2_.value();
  const double n = static_cast<double>(n_);
  return std::sqrt(std::max(0.0, num) * n / (n - 1.0)) / sw;
}

double WeightedAccumulator::effective_sample_size() const {
  const double sw2 = sw2_.value();
  return sw2 > 0.0 ? sw_.value() * sw_.value() / sw2 : 0.0;
}

namespace {
std::atomic<unsigned> g_workers{1};
}

void set_worker_count(unsigned workers) { g_workers.store(std::max(1u, workers)); }
unsigned worker_count() { return g_workers.load(); }

void parallel_for_chunks(std::size_t chunks, const std::function<void(std::size_t)>& body) {
  const unsigned w = static_cast<unsigned>(std::min<std::size_t>(worker_count(), chunks));
  if (w <= 1) {
    for (std::size_t i = 0; i < chunks; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(w);
    for (unsigned t = 0; t < w; ++t)
      pool.emplace_back([&] {
        try {
          for (std::size_t i = next++; i < chunks; i = next++) body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = chunks;
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace normsep
