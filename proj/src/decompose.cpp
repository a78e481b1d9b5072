#include <algorithm>
#include <cmath>

#include "normsep/errors.hpp"
#include "normsep/space.hpp"

namespace normsep {

namespace {

// 2^e capped so that comparisons against values <= 2^62 stay exact.
long double pow2(long long e) { return e >= 100 ? 1e30L : std::ldexp(1.0L, static_cast<int>(e)); }

bool links_ok(long long a, long long b) {
  // b <= 2^a <= b^3
  const long double p = pow2(a);
  const long double b3 = static_cast<long double>(b) * b * b;
  return a < b && static_cast<long double>(b) <= p && p <= b3;
}

long long product(const std::vector<long long>& f, std::size_t upto) {
  long long p = 1;
  for (std::size_t i = 0; i < upto; ++i) p *= f[i];
  return p;
}

// Next element of the sequence y_1 = 7, y_2 = 48, ... as a factor chain.
std::vector<long long> next_chain(const std::vector<long long>& n) {
  const std::size_t k = n.size();
  std::vector<long long> m(k);
  m[k - 1] = n[k - 1] + 1;
  for (std::size_t j = k - 1; j-- > 0;) {
    const long double sq = static_cast<long double>(m[j + 1]) * m[j + 1];
    m[j] = (sq <= pow2(n[j])) ? n[j] : n[j] + 1;
  }
  if (m[0] == 6 || m[0] == 7) return m;
  std::vector<long long> out{6};
  out.insert(out.end(), m.begin(), m.end());
  return out;
}

// Smallest b > a with 2^a <= b^3.
long long min_next(long long a) {
  long long b = std::max<long long>(a + 1, static_cast<long long>(std::cbrt(static_cast<double>(pow2(a)))) - 1);
  while (static_cast<long double>(b) * b * b < pow2(a)) ++b;
  return b;
}

// Best chain over all admissible prefixes, closing each with the largest
// admissible last factor (the one that leaves the least remainder).
void refine(long long n, std::vector<long long>& chain, long long prod, Decomposition& best) {
  if (n - prod < best.remainder) {
    best.factors = chain;
    best.remainder = n - prod;
  }
  const long long last = chain.back();
  const long long lo = min_next(last);
  const long long hi = std::min<long long>(n / prod, last >= 62 ? n : (1LL << last));
  if (lo > hi) return;
  if (n - prod * hi < best.remainder) {
    best.factors = chain;
    best.factors.push_back(hi);
    best.remainder = n - prod * hi;
  }
  for (long long b = lo; b < hi; ++b) {
    // Room for one more factor; the condition is monotone in b.
    if (static_cast<long double>(prod) * b * min_next(b) > n) break;
    chain.push_back(b);
    refine(n, chain, prod * b, best);
    chain.pop_back();
  }
}

}  // namespace

bool decomposition_is_valid(const Decomposition& d, long long n) {
  if (d.factors.empty()) return d.remainder == n && n < 6;
  if (d.factors.front() != 6 && d.factors.front() != 7) return false;
  for (std::size_t i = 0; i + 1 < d.factors.size(); ++i)
    if (!links_ok(d.factors[i], d.factors[i + 1])) return false;
  return d.remainder >= 0 && product(d.factors, d.factors.size()) + d.remainder == n;
}

Decomposition loglacunary_decompose(long long n) {
  if (n < 3) throw InputError("loglacunary_decompose needs n >= 3");
  if (n < 6) return {{}, n};

  Decomposition d{{}, n};
  // y_i <= n < y_{i+1}
  std::vector<long long> y{7};
  for (; n >= 7;) {
    std::vector<long long> nxt = next_chain(y);
    if (product(nxt, nxt.size()) > n) break;
    y = std::move(nxt);
  }
  if (n >= 7) {
    const long long yv = product(y, y.size());
    const long long prefix = product(y, y.size() - 1);
    Decomposition c{y, 0};
    if (yv < n - prefix) c.factors.back() = n / prefix;
    c.remainder = n - product(c.factors, c.factors.size());
    if (decomposition_is_valid(c, n)) d = c;
  }

  // Refinement: an exact search over admissible prefixes. It keeps the
  // inductive answer unless some chain leaves a strictly smaller remainder.
  for (long long first : {6LL, 7LL}) {
    if (first > n) continue;
    std::vector<long long> chain{first};
    refine(n, chain, first, d);
  }
  return d;
}

}  // namespace normsep
