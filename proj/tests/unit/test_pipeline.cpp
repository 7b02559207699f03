#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hsp/errors.hpp"
#include "hsp/pipeline.hpp"

using namespace hsp;

namespace {

Json minimal_config() {
  return Json::parse(R"({
    "schema_version": 1,
    "system": "horseshoe",
    "measure": {"kind": "bernoulli", "p": 0.5},
    "schedule": [{"rho": 0.4, "s": 1, "n": 6}],
    "sample_size": 2000,
    "spanning_sample_size": 2000
  })");
}

const CheckResult* find(const std::vector<CheckResult>& checks, const std::string& name) {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("config parsing is strict") {
  CHECK_NOTHROW(parse_run_config(minimal_config()));

  Json j = minimal_config();
  j["surprise"] = 1;
  CHECK_THROWS_AS(parse_run_config(j), ConfigError);

  j = minimal_config();
  j.erase("schema_version");
  CHECK_THROWS_AS(parse_run_config(j), ConfigError);

  j = minimal_config();
  j["schedule"] = Json::parse(R"([{"rho": 0.2, "s": 1}, {"rho": 0.3, "s": 1}])");
  CHECK_THROWS_AS(parse_run_config(j), ConfigError);

  j = minimal_config();
  j["schedule"] = Json::parse(R"([{"rho": 0.2, "s": 2}, {"rho": 0.1, "s": 1}])");
  CHECK_THROWS_AS(parse_run_config(j), ConfigError);

  j = minimal_config();
  j["schedule"][0]["s"] = 9;
  CHECK_THROWS_AS(parse_run_config(j), ConfigError);

  j = minimal_config();
  j["system"] = "pendulum";
  CHECK_THROWS(parse_run_config(j));

  j = minimal_config();
  j["measure"]["kind"] = "lebesgue";
  CHECK_THROWS_AS(run_theorem_a(parse_run_config(j)), ConfigError);
}

TEST_CASE("config hash") {
  const auto a = config_hash(minimal_config());
  CHECK(a.size() == 16);
  CHECK(a == config_hash(minimal_config()));
  Json j = minimal_config();
  j["seed"] = 2;
  CHECK(a != config_hash(j));
}

TEST_CASE("potentials from specs") {
  PotentialSpec lin;
  lin.kind = "linear";
  lin.a = 1.0;
  lin.b = -2.0;
  lin.c = 0.5;
  const Potential p = make_potential(lin, Box{});
  CHECK(p({0.25, 0.5}) == doctest::Approx(-0.25));
  CHECK(p.inf == doctest::Approx(-1.5));
  CHECK(p.sup == doctest::Approx(1.5));
  CHECK(p.lipschitz == doctest::Approx(3.0));
  PotentialSpec c;
  c.value = 0.7;
  CHECK(make_potential(c, Box{}).is_constant());
}

TEST_CASE("constant checklist") {
  ValidationInput in;
  in.n = 20;
  in.rho = 0.3;
  in.rectangles = 100;
  auto checks = validate_constants(in);
  REQUIRE(find(checks, "rectangle_count_budget"));
  CHECK(find(checks, "rectangle_count_budget")->passed);
  CHECK(find(checks, "rectangle_count_budget")->measured == doctest::Approx(std::exp(6.0)));

  in.n = 5;
  in.rho = 0.1;
  checks = validate_constants(in);
  CHECK_FALSE(find(checks, "rectangle_count_budget")->passed);

  in.max_lipschitz_psi = 2.0 * std::numbers::pi;
  in.lipschitz_phi = 0.0;
  in.delta = 1.0;
  checks = validate_constants(in);
  REQUIRE(find(checks, "continuity_scale"));
  CHECK_FALSE(find(checks, "continuity_scale")->passed);
  CHECK(find(checks, "continuity_scale")->bound == doctest::Approx(0.1 / (4.0 * std::numbers::pi)));

  CHECK(continuity_delta(0.2, 1.0, 4.0) == doctest::Approx(0.05));
  CHECK(continuity_delta(0.2, 1.0, 0.0) == doctest::Approx(0.1));
}

TEST_CASE("small horseshoe run") {
  const RunConfig cfg = parse_run_config(minimal_config());
  const RunReport rep = run_theorem_a(cfg);
  REQUIRE(rep.stages.size() == 1);
  const auto& s = rep.stages[0];
  REQUIRE(s.ok);
  CHECK(s.branches > 0);
  CHECK(s.model->system_id == "horseshoe");
  CHECK(s.model->bank_id == "trig8");
  CHECK(s.json["checks"].size() >= 6);
  CHECK(rep.json["config_hash"] == rep.config_hash);
  CHECK(run_theorem_a(cfg).json.dump() == rep.json.dump());
}

TEST_CASE("family parsing") {
  const Json fam = Json::parse(R"({"schema_version": 1, "family": [
    {"label": "a", "synthetic": {"return_times": [1, 1], "weights": [0, 0]}}]})");
  const auto members = parse_family(fam);
  REQUIRE(members.size() == 1);
  CHECK(members[0].label == "a");
  const auto rep = run_theorem_b(members);
  CHECK(rep.estimate == doctest::Approx(std::log(2.0)));

  const Json neg = Json::parse(R"({"schema_version": 1, "family": [
    {"synthetic": {"return_times": [1], "weights": [0.5]}}]})");
  CHECK_THROWS_AS(run_theorem_b(parse_family(neg)), CertificateNegative);
}
