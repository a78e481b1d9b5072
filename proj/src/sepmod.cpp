#include "normsep/sepmod.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "normsep/errors.hpp"
#include "normsep/geometry.hpp"
#include "normsep/serialize.hpp"
#include "normsep/sphere_opt.hpp"

namespace normsep {

double sep_lower_constant(int n) {
  const double dn = n;
  return 2.0 * std::exp(std::lgamma(dn + 1.0) / (2.0 * dn) + std::lgamma(1.0 + dn / 2.0) / dn) /
         std::sqrt(std::numbers::pi * dn);
}

double external_volume_ratio(const NormedSpace& space) {
  const int n = space.dim();
  const double r = circumradius(space);
  const double log_ball = n * std::log(r) + (n / 2.0) * std::log(std::numbers::pi) - std::lgamma(n / 2.0 + 1.0);
  double log_vol;
  if (space.capabilities().has_exact_volume)
    log_vol = log_volume_exact(space);
  else
    log_vol = std::log(volume_mc(space, 1'000'000, 0, true).value);
  return std::exp((log_ball - log_vol) / n);
}

double sep_lower_evr(const NormedSpace& space) {
  if (!space.capabilities().is_canonically_positioned)
    throw UnsupportedError("is_canonically_positioned",
                           "the volume-ratio lower bound needs a canonically positioned space "
                           "(lp, equal-block block_lp, orlicz_beta or schatten)");
  return external_volume_ratio(space) * sep_lower_constant(space.dim());
}

TwoNormBound sep_upper_two_norm(const NormedSpace& x, const NormedSpace& y, int restarts, std::uint64_t samples,
                                std::uint64_t seed) {
  const int n = x.dim();
  if (y.dim() != n) throw InputError("the two spaces must have equal dimension");
  SphereMaxOptions o;
  o.restarts = restarts;

  // M = sup |z|_X / |z|_Y, so that M |.|_Y dominates |.|_X.
  double scale = 1.0;
  if (!(x.descriptor() == y.descriptor())) {
    SphereObjective ratio = [&](std::span<const double> u, std::span<double> g) {
      std::vector<double> gx(n), gy(n);
      const double a = x.norm(u), b = y.norm(u);
      x.gradient_into(u, gx);
      y.gradient_into(u, gy);
      for (int i = 0; i < n; ++i) g[i] = gx[i] / a - gy[i] / b;  // gradient of log ratio
      return a / b;
    };
    scale = maximize_on_sphere(n, ratio, o, derive_key(seed, {0x5CA1ull})).value;
  }

  const std::uint64_t search = std::max<std::uint64_t>(samples / 4, 1000);
  PsiEvaluator ev(y, search, derive_key(seed, {0x5EA4ull}));
  SphereObjective f = [&](std::span<const double> u, std::span<double> g) {
    std::vector<double> gx(n);
    const double nu = x.norm(u);
    x.gradient_into(u, gx);
    const double pv = ev.value_and_gradient(u, g);
    for (int i = 0; i < n; ++i) g[i] = g[i] / nu - pv * gx[i] / (nu * nu);
    return pv / nu;
  };
  const SphereMaxResult best = maximize_on_sphere(n, f, o, seed);

  TwoNormBound out;
  out.scale = scale;
  out.argmax = best.argmax;
  const double nz = x.norm(out.argmax);
  for (double& v : out.argmax) v /= nz;
  const MonteCarloEstimate p = psi(y, out.argmax, samples, derive_key(seed, {0xF1ull}));
  out.value = {4.0 * scale * p.value, 4.0 * scale * p.stderr, p.trials, seed};
  out.dispersion = 4.0 * scale * best.dispersion;
  out.heuristic = !(ev.is_closed_form() && x.descriptor() == y.descriptor());
  return out;
}

Companion companion_space(const NormedSpace& x) {
  const auto& d = x.descriptor();
  if (d.kind != SpaceKind::lp) throw UnsupportedError("lp", "companion spaces are defined for lp spaces only");
  const int n = d.n;
  Companion c;
  c.descriptor = d;
  const bool inf = d.p.is_infinite();
  if (n == 1 || (!inf && d.p.value() <= std::max(2.0, std::log(2.0 * n)))) return c;

  // Largest divisor m of n with max(2, min(p, n)) <= m <= min(n, e^p).
  const double lo = inf ? 2.0 : std::max(2.0, std::min(d.p.value(), static_cast<double>(n)));
  const double hi = inf ? n : std::min<double>(n, std::exp(d.p.value()));
  int m = 0;
  for (int cand = n; cand >= 2; --cand)
    if (n % cand == 0 && cand >= lo && cand <= hi) {
      m = cand;
      break;
    }
  if (m == 0) {
    // Unreachable with the bracket above; kept as the nested-lp fallback.
    const double q = std::max(1.0, std::log(static_cast<double>(n)));
    c.descriptor = SpaceDescriptor::lp(n, Exponent::finite(q));
    const double f = std::pow(static_cast<double>(n), 1.0 / q - d.p.reciprocal());
    c.lower = std::min(1.0, f);
    c.upper = std::max(1.0, f);
    return c;
  }
  const int k = n / m;
  c.block_dim = m;
  c.beta = (m - 1) / 2.0;
  const SpaceDescriptor omega = SpaceDescriptor::orlicz(m, c.beta);
  c.descriptor = k == 1 ? omega : SpaceDescriptor::block_lp(d.p, std::vector<SpaceDescriptor>(k, omega));
  // Per block: m^{-1/p} |x|_p <= |x|_inf <= |x|_Omega <= |x|_inf / (1 - e^{-beta/m}) <= |x|_p / (...).
  c.lower = std::pow(static_cast<double>(m), -d.p.reciprocal());
  c.upper = 1.0 / (-std::expm1(-c.beta / m));
  return c;
}

// ---- sweeps -------------------------------------------------------------------

SweepConfig sweep_config_from_json(const nlohmann::json& j) {
  SweepConfig c;
  try {
    if (j.contains("p")) {
      if (j["p"].is_string() && j["p"].get<std::string>() == "log_n")
        c.p_log_n = true;
      else
        c.p = exponent_from_json(j["p"], "$.p");
    }
    c.dims = j.at("dims").get<std::vector<int>>();
    c.quantities = j.at("quantities").get<std::vector<std::string>>();
    if (j.contains("samples")) c.samples = j["samples"].get<std::uint64_t>();
    if (j.contains("restarts")) c.restarts = j["restarts"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("$: malformed sweep config: ") + e.what());
  }
  if (!c.p && !c.p_log_n) throw InputError("$.p: missing exponent");
  for (int n : c.dims)
    if (n < 1) throw InputError("$.dims: dimensions must be positive");
  static const std::vector<std::string> known{"sep_lower_evr", "sep_upper_companion", "sep_upper_self", "iq",
                                              "psi_diagonal"};
  for (const auto& q : c.quantities)
    if (std::find(known.begin(), known.end(), q) == known.end()) throw InputError("$.quantities: unknown " + q);
  return c;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  if (m < 2 || y.size() != m) return std::nan("");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

SweepResult sweep(const SweepConfig& cfg) {
  SweepResult res;
  auto wants = [&](const char* q) { return std::find(cfg.quantities.begin(), cfg.quantities.end(), q) != cfg.quantities.end(); };
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;
  std::uint64_t row = 0;
  for (int n : cfg.dims) {
    const Exponent p = cfg.p_log_n ? Exponent::finite(std::max(1.0, std::log(static_cast<double>(n)))) : *cfg.p;
    const NormedSpace x(SpaceDescriptor::lp(n, p));
    auto base = [&](const std::string& q) {
      SweepRecord r;
      r.kind = "lp";
      r.n = n;
      r.p = p;
      r.quantity = q;
      r.seed = derive_key(cfg.seed, {row++});
      return r;
    };
    std::optional<double> lower;
    std::optional<TwoNormBound> up_comp, up_self;
    std::optional<Companion> comp;
    std::uint64_t s_comp = 0, s_self = 0, s_low = 0;
    if (wants("sep_lower_evr")) {
      s_low = derive_key(cfg.seed, {row});
      lower = sep_lower_evr(x);
    }
    if (wants("sep_upper_companion")) {
      comp = companion_space(x);
      const NormedSpace y(comp->descriptor);
      s_comp = derive_key(cfg.seed, {row + 1});
      up_comp = sep_upper_two_norm(x, y, cfg.restarts, cfg.samples, s_comp);
    }
    if (wants("sep_upper_self")) {
      s_self = derive_key(cfg.seed, {row + 2});
      up_self = sep_upper_two_norm(x, x, cfg.restarts, cfg.samples, s_self);
    }
    std::optional<double> best_upper;
    for (const auto* u : {&up_comp, &up_self})
      if (*u) best_upper = best_upper ? std::min(*best_upper, (*u)->value.value) : (*u)->value.value;

    if (lower) {
      SweepRecord r = base("sep_lower_evr");
      r.seed = s_low;
      r.value = *lower;
      r.lower = lower;
      r.upper = best_upper;
      res.records.push_back(r);
    } else {
      ++row;
    }
    if (up_comp) {
      SweepRecord r = base("sep_upper_companion");
      r.seed = s_comp;
      if (comp->block_dim) r.beta = comp->beta;
      r.value = up_comp->value.value;
      r.stderr = up_comp->value.stderr;
      r.lower = lower;
      r.upper = r.value;
      res.records.push_back(r);
    } else {
      ++row;
    }
    if (up_self) {
      SweepRecord r = base("sep_upper_self");
      r.seed = s_self;
      r.value = up_self->value.value;
      r.stderr = up_self->value.stderr;
      r.lower = lower;
      r.upper = r.value;
      res.records.push_back(r);
    } else {
      ++row;
    }
    if (wants("iq")) {
      SweepRecord r = base("iq");
      const MonteCarloEstimate e = iq(x, cfg.samples, r.seed);
      r.value = e.value;
      r.stderr = e.stderr;
      res.records.push_back(r);
    }
    if (wants("psi_diagonal")) {
      SweepRecord r = base("psi_diagonal");
      const std::vector<double> one(n, 1.0);
      const MonteCarloEstimate e = psi(x, one, cfg.samples, r.seed);
      r.value = e.value;
      r.stderr = e.stderr;
      res.records.push_back(r);
    }
  }
  for (const auto& r : res.records) {
    series[r.quantity].first.push_back(r.n);
    series[r.quantity].second.push_back(r.value);
  }
  for (const auto& [q, xy] : series) res.slopes[q] = loglog_slope(xy.first, xy.second);
  return res;
}

// ---- CSV / JSON ------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string fmt(const std::optional<Exponent>& p) {
  if (!p) return {};
  return p->is_infinite() ? std::string("inf") : fmt(p->value());
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw InputError("csv line " + std::to_string(line) + ": bad number \"" + s + "\"");
  return v;
}

std::optional<double> parse_opt(const std::string& s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, line);
}

std::optional<Exponent> parse_exp(const std::string& s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  if (s == "inf") return Exponent::infinity();
  return Exponent::finite(parse_double(s, line));
}

const char* kHeader = "kind,n,p,q,beta,quantity,value,stderr,lower,upper,seed";

}  // namespace

void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records) {
  os << kHeader << '\n';
  for (const auto& r : records)
    os << r.kind << ',' << r.n << ',' << fmt(r.p) << ',' << fmt(r.q) << ',' << fmt(r.beta) << ',' << r.quantity << ','
       << fmt(r.value) << ',' << fmt(r.stderr) << ',' << fmt(r.lower) << ',' << fmt(r.upper) << ',' << r.seed << '\n';
}

std::vector<SweepRecord> read_sweep_csv(std::istream& is) {
  std::string line;
  while (std::getline(is, line) && !line.empty() && line[0] == '#') {
  }
  if (line != kHeader) throw InputError("csv: missing or unexpected header");
  std::vector<SweepRecord> out;
  std::size_t ln = 1;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 11) throw InputError("csv line " + std::to_string(ln) + ": expected 11 fields");
    SweepRecord r;
    r.kind = f[0];
    r.n = static_cast<int>(parse_double(f[1], ln));
    r.p = parse_exp(f[2], ln);
    r.q = parse_exp(f[3], ln);
    r.beta = parse_opt(f[4], ln);
    r.quantity = f[5];
    r.value = parse_double(f[6], ln);
    r.stderr = parse_double(f[7], ln);
    r.lower = parse_opt(f[8], ln);
    r.upper = parse_opt(f[9], ln);
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(f[10].data(), f[10].data() + f[10].size(), seed);
    if (ec != std::errc() || ptr != f[10].data() + f[10].size())
      throw InputError("csv line " + std::to_string(ln) + ": bad seed");
    r.seed = seed;
    out.push_back(r);
  }
  return out;
}

nlohmann::json sweep_to_json(const SweepResult& res) {
  using nlohmann::json;
  json rows = json::array();
  auto opt = [](const auto& v) -> json { return v ? json(*v) : json(nullptr); };
  for (const auto& r : res.records) {
    rows.push_back({{"kind", r.kind},
                    {"n", r.n},
                    {"p", r.p ? exponent_to_json(*r.p) : json(nullptr)},
                    {"q", r.q ? exponent_to_json(*r.q) : json(nullptr)},
                    {"beta", opt(r.beta)},
                    {"quantity", r.quantity},
                    {"value", r.value},
                    {"stderr", r.stderr},
                    {"lower", opt(r.lower)},
                    {"upper", opt(r.upper)},
                    {"seed", r.seed}});
  }
  return {{"records", rows}, {"slopes", res.slopes}};
}

}  // namespace normsep
