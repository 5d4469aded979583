#include <doctest.h>

#include <string>

#include "homlab/config.hpp"

using namespace homlab;

namespace {

bool mentions(const ConfigErrors& e, const std::string& what) {
  for (const auto& s : e.errors())
    if (s.find(what) != std::string::npos) return true;
  return false;
}

ConfigErrors errors_of(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const ConfigErrors& e) {
    return e;
  }
  FAIL("config was accepted: " << text);
  return ConfigErrors({});
}

}  // namespace

TEST_CASE("defaults fill omitted keys") {
  const RunConfig c = parse_config(R"({"command": "estimate-fhom", "field": {"dimension": 2,
      "isotropic": true, "diagonal": {"law": "uniform", "lo": 1, "hi": 2}}})");
  CHECK(c.command == Command::estimate_fhom);
  CHECK(c.field.dim == 2);
  CHECK(c.components == 1);
  CHECK(c.realizations == 50);
  CHECK(c.t_list == std::vector<double>{16.0, 64.0, 256.0});
  REQUIRE(c.xi.size() == 1);
  CHECK(c.xi[0] == Matrix(1, 2, std::vector<double>{1.0, 0.0}));
  CHECK(c.workers == 0);
  CHECK(c.solve.tol == doctest::Approx(1e-5));
}

TEST_CASE("slope notations") {
  const RunConfig c = parse_config(R"({"command": "verify-bounds", "field": {"dimension": 2,
      "isotropic": true, "diagonal": {"law": "constant", "value": 1}},
      "xi": ["2e1-e2", [0.5, 0.25], [[1, 1]]], "t_list": [4]})");
  REQUIRE(c.xi.size() == 3);
  CHECK(c.xi[0] == Matrix(1, 2, std::vector<double>{2.0, -1.0}));
  CHECK(c.xi[1] == Matrix(1, 2, std::vector<double>{0.5, 0.25}));
  CHECK(c.xi[2] == Matrix(1, 2, std::vector<double>{1.0, 1.0}));
}

TEST_CASE("invalid values name the offending key") {
  CHECK(mentions(errors_of(R"({"command": "estimate-fhom", "field": {"dimension": 1,
      "diagonal": {"law": "uniform", "lo": 1, "hi": 2}}, "t_list": [-4]})"),
                 "t_list"));
  CHECK(mentions(errors_of(R"({"command": "estimate-fhom", "field": {"dimension": 1,
      "diagonal": {"law": "pareto", "x_m": 1, "alpha": 0}}})"),
                 "pareto"));
  CHECK(mentions(errors_of(R"({"command": "fly", "field": {"dimension": 1,
      "diagonal": {"law": "constant", "value": 1}}})"),
                 "command"));
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK(mentions(errors_of(R"({"command": "estimate-fhom", "colour": 1, "field": {"dimension": 1,
      "diagonal": {"law": "constant", "value": 1}}})"),
                 "colour"));
  CHECK(mentions(errors_of(R"({"command": "estimate-fhom", "field": {"dimension": 1, "shape": 2,
      "diagonal": {"law": "constant", "value": 1}}})"),
                 "shape"));
  CHECK(mentions(errors_of(R"({"command": "estimate-fhom", "field": {"dimension": 1,
      "diagonal": {"law": "constant", "value": 1, "spread": 0}}})"),
                 "spread"));
}

TEST_CASE("every problem is reported at once") {
  const ConfigErrors e = errors_of(R"({"command": "estimate-fhom", "field": {"dimension": 1,
      "diagonal": {"law": "constant", "value": 1}}, "N": 0, "tol": 2, "t_list": []})");
  CHECK(e.errors().size() >= 3);
  CHECK(mentions(e, "N"));
  CHECK(mentions(e, "tol"));
  CHECK(mentions(e, "t_list"));
}

TEST_CASE("malformed json and command names") {
  CHECK_THROWS_AS((void)parse_config("{"), ConfigErrors);
  CHECK_THROWS_AS((void)parse_config("[]"), ConfigErrors);
  CHECK(command_from_string("glue-check") == Command::glue_check);
  CHECK_FALSE(command_from_string("glue_check").has_value());
  CHECK(to_string(Command::degenerate_divergence) == "degenerate-divergence");
}

TEST_CASE("canonical form ignores output location and workers") {
  const std::string base = R"({"command": "estimate-fhom", "field": {"dimension": 1,
      "diagonal": {"law": "constant", "value": 1}})";
  const RunConfig a = parse_config(base + "}");
  const RunConfig b = parse_config(base + R"(, "workers": 4, "output": {"dir": "elsewhere"}})");
  CHECK(canonical_config(a) == canonical_config(b));
  const RunConfig c = parse_config(base + R"(, "seed": 9})");
  CHECK(canonical_config(a) != canonical_config(c));
}
