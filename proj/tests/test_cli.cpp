#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "normsep/sepmod.hpp"

using namespace normsep;

namespace {

struct Run {
  std::string out;
  int status = -1;
};

// Runs the tool with stderr discarded.
Run run(const std::string& args) {
  const std::string cmd = std::string(NORMSEP_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int st = pclose(pipe);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

const std::string kL1 = R"('{"kind":"lp","n":3,"p":1}')";
const std::string kL2 = R"('{"kind":"lp","n":2,"p":2}')";

}  // namespace

TEST_CASE("exact outputs") {
  const Run v = run("vol --space " + kL1);
  CHECK(v.status == 0);
  CHECK(v.out.starts_with("# normsep vol seed=0\n"));
  CHECK(v.out.find("1.3333333333333333") != std::string::npos);

  const Run p = run("pad-prob --space " + kL1 + " --rho 0.25 --exact");
  CHECK(p.status == 0);
  CHECK(p.out.find("0.21599999999999997") != std::string::npos);

  const Run d = run("decompose --n 42 --format json");
  REQUIRE(d.status == 0);
  const auto j = nlohmann::json::parse(d.out);
  CHECK(j["result"]["factors"] == nlohmann::json::array({6, 7}));
  CHECK(j["result"]["remainder"] == 0);
  CHECK(j["result"]["valid"] == true);
}

TEST_CASE("exit codes") {
  CHECK(run(R"(vol --space '{"kind":"lp","n":3,"q":1}')").status == 2);
  CHECK(run(R"(vol --space '{"kind":"lp","n":0,"p":1}')").status == 2);
  CHECK(run("vol --space 'not json'").status == 2);
  CHECK(run("pad-prob --space " + kL1 + " --rho 1.5 --exact").status == 2);
  CHECK(run(R"(sep-bounds --space '{"kind":"orlicz_beta","n":3,"beta":1}')").status == 3);
  CHECK(run("decompose --n 2").status == 2);
  CHECK(run("lw-check --dim 2").status == 0);
}

TEST_CASE("output does not depend on the worker count") {
  const std::string sep = "sep-prob --space " + kL2 + " --v '[1,0]' --delta 2 --trials 30000 --seed 5 --format csv";
  const Run a = run(sep + " --workers 1"), b = run(sep + " --workers 3");
  CHECK(a.status == 0);
  CHECK(a.out == b.out);

  const std::string vol = R"(vol --space '{"kind":"orlicz_beta","n":3,"beta":2}' --mc --trials 50000 --seed 9)";
  CHECK(run(vol + " --workers 1").out == run(vol + " --workers 3").out);
}

TEST_CASE("sweep csv parses back to the library result") {
  const std::string cfg =
      R"({"p":2,"dims":[2,4,8],"quantities":["sep_lower_evr","sep_upper_self","iq"],"samples":4000,"seed":3})";
  const Run r = run("sweep --config '" + cfg + "' --format csv --workers 2");
  REQUIRE(r.status == 0);
  std::istringstream is(r.out);
  const auto rows = read_sweep_csv(is);
  const SweepResult direct = sweep(sweep_config_from_json(nlohmann::json::parse(cfg)));
  REQUIRE(rows.size() == 9);
  CHECK(rows == direct.records);
  CHECK(r.out.starts_with("# normsep sweep seed=3\n"));
  // A command-line seed overrides the config.
  CHECK(run("sweep --config '" + cfg + "' --format csv --seed 4").out.starts_with("# normsep sweep seed=4\n"));
  for (const auto& row : rows) {
    if (row.quantity == "iq") continue;
    REQUIRE(row.lower.has_value());
    REQUIRE(row.upper.has_value());
    CHECK(*row.lower <= *row.upper);
  }
}

TEST_CASE("--out mirrors stdout") {
  const auto path = std::filesystem::temp_directory_path() / "normsep_cli_out.txt";
  const Run r = run("decompose --n 1000 --out " + path.string());
  CHECK(r.status == 0);
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str() == r.out);
  std::filesystem::remove(path);
}

TEST_CASE("extend interpolates and reports convex weights") {
  const Run r = run(R"(extend --space '{"kind":"lp","n":1,"p":2}' --anchors '{"anchors":[[0],[2]],"values":[[0],[1]]}')"
                    R"( --at '[[0],[0.7],[2],[9]]' --format json)");
  REQUIRE(r.status == 0);
  const auto ev = nlohmann::json::parse(r.out)["result"]["evaluations"];
  REQUIRE(ev.size() == 4);
  CHECK(ev[0]["value"][0] == 0.0);
  CHECK(ev[2]["value"][0] == 1.0);
  for (const auto& e : ev) {
    double s = 0.0;
    for (double w : e["weights"]) {
      CHECK(w >= 0.0);
      s += w;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    const double v = e["value"][0];
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}
