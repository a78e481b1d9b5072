// normsep: command-line front end for the normsep library.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "normsep/errors.hpp"
#include "normsep/estimate.hpp"
#include "normsep/extension.hpp"
#include "normsep/geometry.hpp"
#include "normsep/partition.hpp"
#include "normsep/rng.hpp"
#include "normsep/sepmod.hpp"
#include "normsep/serialize.hpp"
#include "normsep/space.hpp"

using namespace normsep;
using ojson = nlohmann::ordered_json;

namespace {

struct Config {
  std::string space, space_y;
  double delta = 2.0, rho = 0.25;
  std::optional<double> r;
  std::uint64_t trials = 0;
  int restarts = 8;
  int mc_rounds = 64;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out;
  std::string format = "table";
  bool exact = false, force_mc = false;
  std::string w, u, v, z, at, config, anchors, set;
  long long n = 0;
  int dim = 2, partitions = 0;
  std::uint64_t scan = 0;
  bool seed_given = false, restarts_given = false;
};

// Text given as "@path" is read from the file.
std::string slurp(const std::string& text) {
  if (text.empty() || text[0] != '@') return text;
  std::ifstream f(text.substr(1));
  if (!f) throw InputError("cannot open " + text.substr(1));
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

nlohmann::json parse_json(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(slurp(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(what + ": " + e.what());
  }
}

SpaceDescriptor need_space(const std::string& text, const char* flag) {
  if (text.empty()) throw InputError(std::string(flag) + " is required");
  return parse_descriptor(slurp(text));
}

Point parse_point(const std::string& text, const std::string& flag, int n) {
  const nlohmann::json j = parse_json(text, flag);
  Point p;
  try {
    p = j.get<Point>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(flag + ": expected a JSON array of numbers");
  }
  if (static_cast<int>(p.size()) != n)
    throw InputError(flag + ": expected " + std::to_string(n) + " coordinates, got " + std::to_string(p.size()));
  return p;
}

ojson estimate_json(const MonteCarloEstimate& e) {
  return {{"value", e.value}, {"stderr", e.stderr}, {"trials", e.trials}};
}

std::uint64_t trials_or(const Config& c, std::uint64_t fallback) { return c.trials ? c.trials : fallback; }

// Flattens nested objects into dotted keys.
void flatten(const ojson& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_string()) {
    out.emplace_back(prefix, j.get<std::string>());
  } else {
    out.emplace_back(prefix, j.dump());
  }
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void emit(const Config& c, const std::string& command, const ojson& result, const std::string* csv_override = nullptr) {
  std::ostringstream os;
  if (c.format == "json") {
    ojson doc = {{"command", command}, {"seed", c.seed}, {"result", result}};
    os << doc.dump(2) << '\n';
  } else if (c.format == "csv") {
    os << "# normsep " << command << " seed=" << c.seed << '\n';
    if (csv_override) {
      os << *csv_override;
    } else {
      std::vector<std::pair<std::string, std::string>> rows;
      flatten(result, "", rows);
      for (std::size_t i = 0; i < rows.size(); ++i) os << (i ? "," : "") << csv_cell(rows[i].first);
      os << '\n';
      for (std::size_t i = 0; i < rows.size(); ++i) os << (i ? "," : "") << csv_cell(rows[i].second);
      os << '\n';
    }
  } else {
    os << "# normsep " << command << " seed=" << c.seed << '\n';
    std::vector<std::pair<std::string, std::string>> rows;
    flatten(result, "", rows);
    std::size_t width = 0;
    for (const auto& r : rows) width = std::max(width, r.first.size());
    for (const auto& [k, v] : rows) os << k << std::string(width - k.size() + 2, ' ') << v << '\n';
  }
  std::cout << os.str();
  if (!c.out.empty()) {
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw InputError("cannot write " + c.out);
    f << os.str();
  }
}

// ---- commands ---------------------------------------------------------------------

void cmd_vol(const Config& c) {
  const NormedSpace s(need_space(c.space, "--space"));
  ojson r;
  if (!c.force_mc && s.capabilities().has_exact_volume) {
    r["volume"] = volume_exact(s);
    r["method"] = "exact";
  } else {
    const auto e = volume_mc(s, trials_or(c, 1'000'000), c.seed, true);
    r["volume"] = e.value;
    r["stderr"] = e.stderr;
    r["trials"] = e.trials;
    r["method"] = "monte_carlo";
  }
  emit(c, "vol", r);
}

void cmd_iq(const Config& c) {
  const NormedSpace s(need_space(c.space, "--space"));
  const auto e = iq(s, trials_or(c, 200'000), c.seed, c.force_mc);
  const auto sr = surface_ratio(s, trials_or(c, 200'000), c.seed, c.force_mc);
  emit(c, "iq", {{"iq", estimate_json(e)}, {"surface_ratio", estimate_json(sr)}});
}

void cmd_psi(const Config& c) {
  const NormedSpace s(need_space(c.space, "--space"));
  const Point w = c.w.empty() ? Point(s.dim(), 1.0) : parse_point(c.w, "--w", s.dim());
  const auto e = psi(s, w, trials_or(c, 200'000), c.seed, !c.force_mc);
  emit(c, "psi", {{"w", w}, {"psi", estimate_json(e)}, {"profile", 4.0 * e.value}});
}

void cmd_maxproj(const Config& c) {
  const NormedSpace s(need_space(c.space, "--space"));
  const auto m = maxproj(s, c.restarts, trials_or(c, 100'000), c.seed);
  emit(c, "maxproj", {{"maxproj", estimate_json(m.value)},
                      {"direction", m.direction},
                      {"dispersion", m.dispersion},
                      {"heuristic", m.heuristic}});
}

void cmd_cone(const Config& c) {
  const NormedSpace s(need_space(c.space, "--space"));
  if (!c.z.empty()) {
    const Point z = parse_point(c.z, "--z", s.dim());
    emit(c, "cone", {{"z", z}, {"cone_volume", estimate_json(cone_volume(s, z, trials_or(c, 200'000), c.seed))}});
    return;
  }
  const auto m = max_cone_volume(s, c.restarts, trials_or(c, 100'000), c.seed);
  emit(c, "cone", {{"point", m.point},
                   {"cone_volume", estimate_json(m.volume)},
                   {"volume_ratio", m.volume_ratio},
                   {"lower_bound_ratio", m.lower_bound_ratio}});
}

void cmd_meanwidth(const Config& c) {
  const NormedSpace s(need_space(c.space, "--space"));
  if (!c.r) {
    emit(c, "meanwidth", {{"mean_width", estimate_json(mean_width_dual(s, trials_or(c, 200'000), c.seed))}});
    return;
  }
  const auto rep = intersect_construction(s, *c.r, trials_or(c, 100'000), c.seed, c.restarts);
  emit(c, "meanwidth", {{"r", rep.r},
                        {"mean_width", estimate_json(rep.mean_width)},
                        {"volume", estimate_json(rep.volume)},
                        {"volume_root_times_m_sqrt_n", rep.volume_root_times_m_sqrt_n},
                        {"maxproj_ratio", estimate_json(rep.maxproj_ratio)}});
}

void cmd_sep_prob(const Config& c) {
  const NormedSpace s(need_space(c.space, "--space"));
  const Point u = c.u.empty() ? Point(s.dim(), 0.0) : parse_point(c.u, "--u", s.dim());
  if (c.v.empty()) throw InputError("--v is required");
  const Point v = parse_point(c.v, "--v", s.dim());
  ojson r = {{"delta", c.delta}};
  if (c.exact) {
    const auto e = separation_prob_exact(s, u, v, c.delta, trials_or(c, 1'000'000), c.seed);
    r["probability"] = estimate_json(e.probability);
    r["overlap"] = estimate_json(e.overlap);
    r["method"] = "overlap";
  } else {
    r["probability"] = estimate_json(separation_prob_mc(s, u, v, c.delta, trials_or(c, 100'000), c.seed));
    r["method"] = "partitions";
  }
  emit(c, "sep-prob", r);
}

void cmd_pad_prob(const Config& c) {
  const NormedSpace s(need_space(c.space, "--space"));
  if (!(c.rho >= 0.0 && c.rho < 1.0)) throw InputError("--rho must lie in [0, 1)");
  ojson r = {{"rho", c.rho}};
  if (c.exact) {
    r["probability"] = padding_prob_exact(s.dim(), c.rho);
    r["method"] = "exact";
  } else {
    r["probability"] = estimate_json(padding_prob_mc(s, c.rho, c.delta, trials_or(c, 100'000), c.seed));
    r["exact"] = padding_prob_exact(s.dim(), c.rho);
    r["method"] = "partitions";
  }
  emit(c, "pad-prob", r);
}

void cmd_sep_bounds(const Config& c) {
  const NormedSpace x(need_space(c.space, "--space"));
  ojson r;
  r["lower"] = sep_lower_evr(x);
  SpaceDescriptor yd;
  if (!c.space_y.empty()) {
    yd = need_space(c.space_y, "--space-y");
  } else {
    const Companion comp = companion_space(x);
    yd = comp.descriptor;
    r["companion"] = {{"block_dim", comp.block_dim}, {"beta", comp.beta}, {"lower", comp.lower}, {"upper", comp.upper}};
  }
  const NormedSpace y(yd);
  const auto b = sep_upper_two_norm(x, y, c.restarts, trials_or(c, 100'000), c.seed);
  r["space_y"] = ojson::parse(dump_descriptor(yd));
  r["upper"] = estimate_json(b.value);
  r["scale"] = b.scale;
  r["dispersion"] = b.dispersion;
  r["heuristic"] = b.heuristic;
  emit(c, "sep-bounds", r);
}

void cmd_sweep(Config c) {
  if (c.config.empty()) throw InputError("--config is required");
  SweepConfig cfg = sweep_config_from_json(parse_json(c.config, "--config"));
  // Flags given on the command line take precedence over the config.
  if (c.seed_given) cfg.seed = c.seed;
  if (c.trials) cfg.samples = c.trials;
  if (c.restarts_given) cfg.restarts = c.restarts;
  c.seed = cfg.seed;
  const SweepResult res = sweep(cfg);
  std::ostringstream csv;
  write_sweep_csv(csv, res.records);
  const std::string body = csv.str();
  if (c.format == "json") {
    emit(c, "sweep", ojson::parse(sweep_to_json(res).dump()));
  } else if (c.format == "csv") {
    emit(c, "sweep", {}, &body);
  } else {
    ojson slopes = ojson::object();
    for (const auto& [q, s] : res.slopes) slopes[q] = s;
    std::cout << "# normsep sweep seed=" << c.seed << '\n' << body;
    for (const auto& [q, s] : res.slopes) std::cout << "# slope " << q << " " << ojson(s).dump() << '\n';
    if (!c.out.empty()) {
      std::ofstream f(c.out, std::ios::binary);
      f << "# normsep sweep seed=" << c.seed << '\n' << body;
    }
  }
}

void cmd_extend(const Config& c) {
  const SpaceDescriptor sd = need_space(c.space, "--space");
  if (c.anchors.empty()) throw InputError("--anchors is required");
  std::vector<Point> anchors, values;
  const std::string text = slurp(c.anchors);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    read_anchor_json(parse_json(text, "--anchors"), anchors, values);
  } else {
    std::istringstream is(text);
    read_anchor_csv(is, sd.n, anchors, values);
  }
  const SpaceDescriptor* target = nullptr;
  SpaceDescriptor td;
  if (!c.space_y.empty()) {
    td = need_space(c.space_y, "--space-y");
    target = &td;
  }
  const Extension ext(build_extension(sd, anchors, values, c.mc_rounds, c.seed, target));
  for (const auto& w : ext.op().warnings) std::cerr << "warning: " << w << '\n';
  ojson r;
  r["anchors"] = ext.op().anchors.size();
  r["scale_range"] = {ext.op().k_min, ext.op().k_max};
  if (!c.at.empty()) {
    const nlohmann::json pts = parse_json(c.at, "--at");
    ojson evals = ojson::array();
    try {
      for (const auto& p : pts) {
        const Point x = p.get<Point>();
        if (static_cast<int>(x.size()) != sd.n) throw InputError("--at: point has wrong dimension");
        const Evaluation e = ext.evaluate(x);
        evals.push_back({{"x", x}, {"value", e.value}, {"weights", e.weights}, {"stderr", e.stderr}});
      }
    } catch (const nlohmann::json::exception&) {
      throw InputError("--at: expected a JSON array of points");
    }
    r["evaluations"] = evals;
  }
  if (c.scan) {
    const LipschitzScan s = lipschitz_ratio_scan(ext, c.scan, c.seed);
    r["lipschitz"] = {{"max_ratio", s.max_ratio}, {"x", s.x}, {"y", s.y}, {"pairs", s.pairs}};
  }
  if (c.format == "json") r["operator"] = ojson::parse(extension_to_json(ext.op()).dump());
  emit(c, "extend", r);
}

void cmd_lw_check(const Config& c) {
  ojson r;
  if (c.partitions > 0) {
    std::vector<GridPoint> grid;
    for (long long i = 0; i < 3; ++i)
      for (long long j = 0; j < 3; ++j) grid.push_back({i, j});
    std::uint64_t bad = 0;
    double min_slack = INFINITY;
    const std::uint64_t count = enumerate_set_partitions(9, c.partitions, [&](const std::vector<int>& labels) {
      const auto rep = deterministic_partition_bound_check(grid, labels, c.partitions);
      if (!rep.holds) ++bad;
      min_slack = std::min(min_slack, rep.cut_average - rep.rhs);
    });
    r["partition_check"] = {{"partitions", count}, {"violations", bad}, {"min_slack", min_slack}};
  }
  if (!c.set.empty()) {
    std::vector<GridPoint> g;
    try {
      g = parse_json(c.set, "--set").get<std::vector<GridPoint>>();
    } catch (const nlohmann::json::exception&) {
      throw InputError("--set: expected a JSON array of integer points");
    }
    const auto rep = loomis_whitney_boundary(g);
    r["boundary_average"] = rep.boundary_average;
    r["bound"] = rep.bound;
    r["holds"] = rep.holds;
  } else {
    const std::uint64_t count = trials_or(c, 1000);
    if (c.dim < 1 || c.dim > 6) throw InputError("--dim must lie in [1, 6]");
    std::uint64_t bad = 0;
    double min_ratio = INFINITY;
    for (std::uint64_t t = 0; t < count; ++t) {
      Rng rng = Rng::stream(c.seed, {0x1D5ull, t});
      const long long side = 2 + static_cast<long long>(rng.below(5));
      const double keep = rng.uniform(0.1, 0.9);
      std::vector<GridPoint> g;
      GridPoint p(c.dim, 0);
      while (true) {
        if (rng.uniform() < keep) g.push_back(p);
        int i = 0;
        while (i < c.dim && ++p[i] == side) p[i++] = 0;
        if (i == c.dim) break;
      }
      if (g.empty()) g.push_back(GridPoint(c.dim, 0));
      const auto rep = loomis_whitney_boundary(g);
      if (!rep.holds) ++bad;
      min_ratio = std::min(min_ratio, rep.boundary_average / rep.bound);
    }
    r["random_sets"] = count;
    r["dim"] = c.dim;
    r["violations"] = bad;
    r["min_ratio"] = min_ratio;
  }
  emit(c, "lw-check", r);
}

void cmd_decompose(const Config& c) {
  if (c.n < 1) throw InputError("--n must be positive");
  const Decomposition d = loglacunary_decompose(c.n);
  emit(c, "decompose",
       {{"n", c.n}, {"factors", d.factors}, {"remainder", d.remainder}, {"valid", decomposition_is_valid(d, c.n)}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"normsep: random partitions and separation moduli of finite-dimensional normed spaces"};
  app.require_subcommand(1);
  Config c;

  auto common = [&](CLI::App* s) {
    s->add_option("--seed", c.seed, "master seed (default 0)");
    s->add_option("--workers", c.workers, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
    s->add_option("--out", c.out, "also write the output to this file");
    s->add_option("--format", c.format, "table, csv or json")->check(CLI::IsMember({"table", "csv", "json"}));
    s->add_option("--trials", c.trials, "Monte Carlo sample count");
  };
  auto spaced = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    common(s);
    s->add_option("--space", c.space, "space descriptor (JSON or @file)");
    return s;
  };

  CLI::App* vol = spaced("vol", "volume of the unit ball");
  vol->add_flag("--mc", c.force_mc, "force Monte Carlo");
  CLI::App* iqc = spaced("iq", "isoperimetric quotient");
  iqc->add_flag("--mc", c.force_mc, "skip closed forms");
  CLI::App* psic = spaced("psi", "polar projection body norm");
  psic->add_option("--w", c.w, "direction (JSON array); default all ones");
  psic->add_flag("--mc", c.force_mc, "skip closed forms");
  CLI::App* mp = spaced("maxproj", "largest hyperplane shadow");
  mp->add_option("--restarts", c.restarts, "optimizer restarts");
  CLI::App* cone = spaced("cone", "cone volume at a boundary point, or its maximum");
  cone->add_option("--z", c.z, "boundary point (JSON array)");
  cone->add_option("--restarts", c.restarts, "optimizer restarts");
  CLI::App* mw = spaced("meanwidth", "mean width of the dual ball; with --r the intersection construction");
  mw->add_option("--r", c.r, "Euclidean radius of the intersection");
  mw->add_option("--restarts", c.restarts, "optimizer restarts");
  CLI::App* sp = spaced("sep-prob", "probability that u and v are separated");
  sp->add_option("--u", c.u, "first point (default origin)");
  sp->add_option("--v", c.v, "second point");
  sp->add_option("--delta", c.delta, "partition scale")->check(CLI::PositiveNumber);
  sp->add_flag("--exact", c.exact, "use the overlap formula");
  CLI::App* pp = spaced("pad-prob", "probability that a ball of radius rho delta / 2 is padded");
  pp->add_option("--rho", c.rho, "padding radius as a fraction of delta / 2");
  pp->add_option("--delta", c.delta, "partition scale")->check(CLI::PositiveNumber);
  pp->add_flag("--exact", c.exact, "closed form");
  CLI::App* sb = spaced("sep-bounds", "lower and upper bounds on the separation modulus");
  sb->add_option("--space-y", c.space_y, "auxiliary norm (default: companion space)");
  sb->add_option("--restarts", c.restarts, "optimizer restarts");
  CLI::App* sw = app.add_subcommand("sweep", "dimension sweep writing SweepRecord rows");
  common(sw);
  sw->add_option("--config", c.config, "sweep config (JSON or @file)");
  sw->add_option("--restarts", c.restarts, "optimizer restarts");
  CLI::App* ex = spaced("extend", "Lipschitz extension from anchors");
  ex->add_option("--anchors", c.anchors, "anchor file (@path, JSON or CSV) or inline JSON");
  ex->add_option("--space-y", c.space_y, "target norm (default l2)");
  ex->add_option("--at", c.at, "points to evaluate (JSON array of arrays)");
  ex->add_option("--scan", c.scan, "number of pairs for the Lipschitz scan");
  ex->add_option("--mc-rounds", c.mc_rounds, "partitions per scale")->check(CLI::PositiveNumber);
  CLI::App* lw = app.add_subcommand("lw-check", "discrete Loomis-Whitney checks");
  common(lw);
  lw->add_option("--set", c.set, "grid set (JSON array of integer points)");
  lw->add_option("--dim", c.dim, "dimension of random sets");
  lw->add_option("--partitions", c.partitions, "also check all partitions of the 3x3 grid with parts of at most this size");
  CLI::App* dc = app.add_subcommand("decompose", "log-lacunary factorization of n");
  common(dc);
  dc->add_option("--n", c.n, "integer to decompose")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    set_worker_count(static_cast<unsigned>(c.workers));
    const CLI::App* sub = app.get_subcommands().front();
    c.seed_given = sub->count("--seed") > 0;
    c.restarts_given = sub->get_option_no_throw("--restarts") && sub->count("--restarts") > 0;
    const std::string name = sub->get_name();
    if (name == "vol") cmd_vol(c);
    else if (name == "iq") cmd_iq(c);
    else if (name == "psi") cmd_psi(c);
    else if (name == "maxproj") cmd_maxproj(c);
    else if (name == "cone") cmd_cone(c);
    else if (name == "meanwidth") cmd_meanwidth(c);
    else if (name == "sep-prob") cmd_sep_prob(c);
    else if (name == "pad-prob") cmd_pad_prob(c);
    else if (name == "sep-bounds") cmd_sep_bounds(c);
    else if (name == "sweep") cmd_sweep(c);
    else if (name == "extend") cmd_extend(c);
    else if (name == "lw-check") cmd_lw_check(c);
    else if (name == "decompose") cmd_decompose(c);
  } catch (const UnsupportedError& e) {
    std::cerr << "unsupported: missing capability " << e.capability() << ": " << e.what() << '\n';
    return 3;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
