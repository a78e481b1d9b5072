#include "normsep/serialize.hpp"

#include <map>
#include <set>

#include "normsep/errors.hpp"

namespace normsep {

using nlohmann::json;

json exponent_to_json(const Exponent& p) {
  if (p.is_infinite()) return "inf";
  return p.value();
}

Exponent exponent_from_json(const json& j, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return Exponent::infinity();
    throw InputError(path + ": exponent string must be \"inf\"");
  }
  if (!j.is_number()) throw InputError(path + ": exponent must be a number or \"inf\"");
  const double p = j.get<double>();
  if (!(p >= 1.0) || !std::isfinite(p)) throw InputError(path + ": exponent must lie in [1, inf)");
  return Exponent::finite(p);
}

json descriptor_to_json(const SpaceDescriptor& d) {
  json j;
  j["kind"] = kind_name(d.kind);
  j["n"] = d.n;
  switch (d.kind) {
    case SpaceKind::lp:
    case SpaceKind::schatten:
      j["p"] = exponent_to_json(d.p);
      break;
    case SpaceKind::block_lp: {
      j["p"] = exponent_to_json(d.p);
      json arr = json::array();
      for (const auto& b : d.blocks) arr.push_back(descriptor_to_json(b));
      j["blocks"] = std::move(arr);
      break;
    }
    case SpaceKind::orlicz_beta:
      j["beta"] = d.beta;
      break;
    case SpaceKind::intersect_ball:
      j["base"] = descriptor_to_json(d.base.at(0));
      j["r"] = d.r;
      break;
  }
  return j;
}

namespace {

const json& require(const json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw InputError(path + ": missing key \"" + key + "\"");
  return *it;
}

double positive_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw InputError(path + ": expected a number");
  const double v = j.get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) throw InputError(path + ": expected a positive finite number");
  return v;
}

}  // namespace

SpaceDescriptor descriptor_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw InputError(path + ": descriptor must be a JSON object");
  static const std::set<std::string> allowed{"kind", "n", "p", "blocks", "beta", "base", "r"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw InputError(path + "." + it.key() + ": unknown key");

  const json& kj = require(j, "kind", path);
  if (!kj.is_string()) throw InputError(path + ".kind: expected a string");
  const std::string kind = kj.get<std::string>();

  static const std::map<std::string, std::set<std::string>> used{
      {"lp", {"kind", "n", "p"}},
      {"block_lp", {"kind", "n", "p", "blocks"}},
      {"orlicz_beta", {"kind", "n", "beta"}},
      {"schatten", {"kind", "n", "p"}},
      {"intersect_ball", {"kind", "n", "base", "r"}}};
  if (auto u = used.find(kind); u != used.end())
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!u->second.count(it.key()))
        throw InputError(path + "." + it.key() + ": not used by kind \"" + kind + "\"");

  auto read_n = [&]() -> int {
    const json& nj = require(j, "n", path);
    if (!nj.is_number_integer() || nj.get<long long>() < 1 || nj.get<long long>() > 1'000'000)
      throw InputError(path + ".n: expected a positive integer");
    return nj.get<int>();
  };

  SpaceDescriptor d;
  if (kind == "lp") {
    d = SpaceDescriptor::lp(read_n(), exponent_from_json(require(j, "p", path), path + ".p"));
  } else if (kind == "block_lp") {
    const json& bj = require(j, "blocks", path);
    if (!bj.is_array() || bj.empty()) throw InputError(path + ".blocks: expected a nonempty array");
    std::vector<SpaceDescriptor> blocks;
    for (std::size_t i = 0; i < bj.size(); ++i)
      blocks.push_back(descriptor_from_json(bj[i], path + ".blocks[" + std::to_string(i) + "]"));
    d = SpaceDescriptor::block_lp(exponent_from_json(require(j, "p", path), path + ".p"), std::move(blocks));
    if (j.contains("n") && read_n() != d.n)
      throw InputError(path + ".n: does not equal the sum of block dimensions");
  } else if (kind == "orlicz_beta") {
    const int n = read_n();
    d = SpaceDescriptor::orlicz(n, positive_number(require(j, "beta", path), path + ".beta"));
  } else if (kind == "schatten") {
    const int n = read_n();
    int rows = 0;
    while ((rows + 1) * (rows + 1) <= n) ++rows;
    if (rows * rows != n) throw InputError(path + ".n: schatten dimension must be a perfect square");
    d = SpaceDescriptor::schatten(rows, exponent_from_json(require(j, "p", path), path + ".p"));
  } else if (kind == "intersect_ball") {
    SpaceDescriptor base = descriptor_from_json(require(j, "base", path), path + ".base");
    const double r = positive_number(require(j, "r", path), path + ".r");
    d = SpaceDescriptor::intersect_ball(std::move(base), r);
    if (j.contains("n") && read_n() != d.n) throw InputError(path + ".n: does not match base dimension");
  } else {
    throw InputError(path + ".kind: unknown kind \"" + kind + "\"");
  }
  d.validate(path);
  return d;
}

SpaceDescriptor parse_descriptor(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("$: malformed JSON: ") + e.what());
  }
  return descriptor_from_json(j);
}

std::string dump_descriptor(const SpaceDescriptor& d) { return descriptor_to_json(d).dump(); }

}  // namespace normsep
