#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "minlor/config.hpp"
#include "minlor/errors.hpp"

using namespace minlor;

namespace {

std::filesystem::path write_temp(const std::string& name,
                                 const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream out(p);
  out << body;
  return p;
}

}  // namespace

TEST_CASE("an empty file yields the documented defaults") {
  const auto p = write_temp("minlor_empty.ini", "# nothing but a comment\n");
  const RunConfig c = parse_config(p.string());
  CHECK(c.metric_type == "minkowski");
  CHECK(c.dimension == 3);
  CHECK(c.curve_type == "circle");
  CHECK(c.radius == 1.0);
  CHECK(c.conformalize);
  CHECK(!c.project_orthogonal);
  CHECK(c.n == 256);
  CHECK(c.t_target == 1.0);
  CHECK(c.tol == 1e-10);
  CHECK(c.delta == 0.0);
  CHECK(c.mode == StudyMode::Single);
  CHECK(c.levels == 3);
  CHECK(c.epsilons == std::vector<double>{1e-3});
  CHECK(c.surface_format == "tsv");
}

TEST_CASE("sections and keys parse with comments and whitespace") {
  const auto p = write_temp("minlor_full.ini",
                            "[metric]\n"
                            "type = flrw-exponential  # Hubble drag\n"
                            "param = 0.25\n"
                            "dimension = 4\n"
                            "\n"
                            "[curve]\n"
                            "type = ellipse\n"
                            "semi_a = 2.0\n"
                            "semi_b = 0.5\n"
                            "k1_time = 1.5\n"
                            "project_orthogonal = on\n"
                            "conformalize = off\n"
                            "\n"
                            "[solver]\n"
                            "n = 128\n"
                            "t_target = 2.5\n"
                            "delta = auto\n"
                            "max_iter = 30\n"
                            "\n"
                            "[run]\n"
                            "mode = stability\n"
                            "epsilons = 1e-2, 1e-3, 1e-4\n"
                            "output_dir = /tmp/minlor_out\n"
                            "surface_format = json\n");
  const RunConfig c = parse_config(p.string());
  CHECK(c.metric_type == "flrw-exponential");
  CHECK(c.metric_param == 0.25);
  CHECK(c.dimension == 4);
  CHECK(c.curve_type == "ellipse");
  CHECK(c.semi_a == 2.0);
  CHECK(c.semi_b == 0.5);
  CHECK(c.k1_time == 1.5);
  CHECK(c.project_orthogonal);
  CHECK(!c.conformalize);
  CHECK(c.n == 128);
  CHECK(c.t_target == 2.5);
  CHECK(c.delta == 0.0);
  CHECK(c.max_iter == 30);
  CHECK(c.mode == StudyMode::Stability);
  CHECK(c.epsilons == std::vector<double>{1e-2, 1e-3, 1e-4});
  CHECK(c.output_dir == "/tmp/minlor_out");
  CHECK(c.surface_format == "json");
}

TEST_CASE("schema violations name the file, line, and key") {
  SUBCASE("misspelled key") {
    const auto p =
        write_temp("minlor_badkey.ini", "[metric]\ntype = minkowski\nmetricc = 3\n");
    try {
      parse_config(p.string());
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("metricc") != std::string::npos);
      CHECK(msg.find(":3") != std::string::npos);  // line number
      CHECK(msg.find("minlor_badkey.ini") != std::string::npos);
    }
  }
  SUBCASE("unknown section") {
    const auto p = write_temp("minlor_badsec.ini", "[metrics]\ntype = x\n");
    CHECK_THROWS_AS(parse_config(p.string()), ConfigError);
  }
  SUBCASE("key outside a section") {
    const auto p = write_temp("minlor_nosec.ini", "type = minkowski\n");
    CHECK_THROWS_AS(parse_config(p.string()), ConfigError);
  }
  SUBCASE("malformed numbers and booleans") {
    const auto a = write_temp("minlor_badnum.ini", "[solver]\ntol = fast\n");
    CHECK_THROWS_AS(parse_config(a.string()), ConfigError);
    const auto b =
        write_temp("minlor_badbool.ini", "[curve]\nconformalize = yes\n");
    CHECK_THROWS_AS(parse_config(b.string()), ConfigError);
    const auto c =
        write_temp("minlor_trail.ini", "[solver]\nn = 128x\n");
    CHECK_THROWS_AS(parse_config(c.string()), ConfigError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(parse_config("/nonexistent/minlor.ini"), ConfigError);
  }
}

TEST_CASE("semantic checks reject inconsistent configurations") {
  SUBCASE("n must be a power of two >= 16") {
    CHECK_THROWS_AS(config_from_overrides({"solver.n=100"}), ConfigError);
    CHECK_THROWS_AS(config_from_overrides({"solver.n=8"}), ConfigError);
    CHECK(config_from_overrides({"solver.n=16"}).n == 16);
  }
  SUBCASE("metric and curve types come from the catalogs") {
    CHECK_THROWS_AS(config_from_overrides({"metric.type=schwarzschild"}),
                    ConfigError);
    CHECK_THROWS_AS(config_from_overrides({"curve.type=square"}), ConfigError);
  }
  SUBCASE("file curves need a path") {
    CHECK_THROWS_AS(config_from_overrides({"curve.type=file"}), ConfigError);
  }
  SUBCASE("tolerances must be positive and targets finite") {
    CHECK_THROWS_AS(config_from_overrides({"solver.tol=0"}), ConfigError);
    CHECK_THROWS_AS(config_from_overrides({"solver.tol=-1e-8"}), ConfigError);
    CHECK_THROWS_AS(config_from_overrides({"solver.t_target=inf"}),
                    ConfigError);
    CHECK_THROWS_AS(config_from_overrides({"solver.max_iter=0"}), ConfigError);
    CHECK_THROWS_AS(config_from_overrides({"solver.delta=-0.5"}), ConfigError);
  }
  SUBCASE("surface format catalog") {
    CHECK_THROWS_AS(config_from_overrides({"run.surface_format=csv"}),
                    ConfigError);
  }
  SUBCASE("epsilons must be positive") {
    CHECK_THROWS_AS(config_from_overrides({"run.epsilons=1e-3,-1e-4"}),
                    ConfigError);
  }
}

TEST_CASE("overrides behave exactly like file entries") {
  const auto p = write_temp("minlor_base.ini", "[solver]\nn = 64\n");
  const RunConfig c =
      parse_config(p.string(), {"solver.n=512", "metric.type=flrw-constant",
                                "metric.param=2.0"});
  CHECK(c.n == 512);  // override wins over the file
  CHECK(c.metric_type == "flrw-constant");
  CHECK(c.metric_param == 2.0);

  SUBCASE("malformed override strings") {
    CHECK_THROWS_AS(config_from_overrides({"solver.n"}), ConfigError);
    CHECK_THROWS_AS(config_from_overrides({"n=64"}), ConfigError);
    CHECK_THROWS_AS(config_from_overrides({"solver.bogus=1"}), ConfigError);
  }
}

TEST_CASE("the environment can redirect output") {
  setenv("MINLOR_OUTPUT_DIR", "/tmp/minlor_env", 1);
  const RunConfig c = config_from_overrides({});
  CHECK(c.output_dir == "/tmp/minlor_env");
  // Explicit overrides still win over the environment.
  const RunConfig d = config_from_overrides({"run.output_dir=elsewhere"});
  CHECK(d.output_dir == "elsewhere");
  unsetenv("MINLOR_OUTPUT_DIR");
  const RunConfig e = config_from_overrides({});
  CHECK(e.output_dir == "out");
}

TEST_CASE("echoed configuration parses back to itself") {
  const RunConfig c = config_from_overrides(
      {"metric.type=flrw-polynomial", "metric.param=0.7", "solver.n=128",
       "solver.t_target=1.75", "solver.delta=0.3", "run.mode=convergence",
       "run.levels=4", "run.epsilons=1e-2,5e-3", "curve.k1_time=1.25",
       "curve.project_orthogonal=true"});
  const std::string first = echo_config(c);
  const auto p = write_temp("minlor_echo.ini", first);
  const RunConfig back = parse_config(p.string());
  CHECK(echo_config(back) == first);

  SUBCASE("auto delta round-trips through the word, not a number") {
    const RunConfig a = config_from_overrides({"solver.delta=auto"});
    CHECK(a.delta == 0.0);
    CHECK(echo_config(a).find("delta = auto") != std::string::npos);
  }
}
