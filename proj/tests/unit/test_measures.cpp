#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hsp/dynamics.hpp"
#include "hsp/errors.hpp"
#include "hsp/measures.hpp"
#include "hsp/random.hpp"

using namespace hsp;

namespace {

// Fourier coefficient of the uniform Cantor measure: with X = sum 2 e_k 3^-k,
// E exp(i t X) = exp(i t / 2) prod_k cos(t / 3^k).
double cantor_cos_moment(double t) {
  double prod = 1.0;
  for (int k = 1; k < 60; ++k) prod *= std::cos(t / std::pow(3.0, k));
  return std::cos(t / 2.0) * prod;
}

std::vector<Point> uniform_points(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back({uniform01(rng), uniform01(rng)});
  return out;
}

}  // namespace

TEST_CASE("trig8 bank") {
  const auto bank = TestFunctionBank::trig8();
  REQUIRE(bank.size() == 8);
  CHECK(bank.id() == "trig8");
  CHECK(bank[0].fn({0.25, 0.0}) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(bank[6].fn({0.5, 0.0}) == doctest::Approx(1.0));
  CHECK(bank.max_lipschitz(6) == doctest::Approx(2.0 * std::numbers::pi));
  CHECK(bank.max_lipschitz(8) == doctest::Approx(4.0 * std::numbers::pi));
  CHECK_THROWS_AS(TestFunctionBank::by_id("nope"), ConfigError);
}

TEST_CASE("empirical measures") {
  auto cat = make_cat_map();
  const auto bank = TestFunctionBank::trig8();
  const EmpiricalMeasure e(iterate(*cat, {0.31, 0.77}, 200), bank);
  CHECK(e.integrate([](const Point&) { return 3.5; }) == doctest::Approx(3.5).epsilon(1e-12));
  const auto lin = e.integrate([&](const Point& p) { return 2.0 * bank[0].fn(p) - 3.0 * bank[2].fn(p); });
  CHECK(lin == doctest::Approx(2.0 * e.moments()[0] - 3.0 * e.moments()[2]).epsilon(1e-12));
  for (double m : e.moments()) CHECK(std::abs(m) <= 1.0);
}

TEST_CASE("Bernoulli(1/2) moments match the Cantor oracle") {
  const auto bank = TestFunctionBank::trig8();
  const auto mu = bernoulli_measure(0.5, bank);
  REQUIRE(mu.moments().size() == 8);
  const double c2 = cantor_cos_moment(2.0 * std::numbers::pi);
  const double c4 = cantor_cos_moment(4.0 * std::numbers::pi);
  CHECK(mu.moments()[0] == doctest::Approx(c2).epsilon(1e-12));
  CHECK(std::abs(mu.moments()[1]) < 1e-12);
  CHECK(mu.moments()[2] == doctest::Approx(c2).epsilon(1e-12));
  CHECK(mu.moments()[4] == doctest::Approx(c2 * c2).epsilon(1e-12));
  CHECK(mu.moments()[6] == doctest::Approx(c4).epsilon(1e-12));
  REQUIRE(mu.entropy().has_value());
  CHECK(*mu.entropy() == doctest::Approx(std::log(2.0)));

  const auto mu7 = bernoulli_measure(0.7, bank);
  CHECK(*mu7.entropy() == doctest::Approx(-(0.7 * std::log(0.7) + 0.3 * std::log(0.3))));

  // Samples lie on the invariant set and reproduce the first moment.
  auto hs = make_affine_horseshoe();
  const auto pts = mu.sample(20000, 9);
  double sum = 0.0;
  for (const Point& p : pts) {
    CHECK(hs->in_domain(p));
    sum += bank[0].fn(p);
  }
  CHECK(std::abs(sum / 20000.0 - c2) < 0.02);
}

TEST_CASE("weak-star neighbourhoods") {
  const auto bank = TestFunctionBank::trig8();
  const auto mu = lebesgue_torus(bank);
  CHECK(in_weak_star_neighborhood(mu, mu, NeighborhoodSpec(1e-9, 8), bank));
  std::vector<double> nu(8, 0.0);
  nu[0] = 0.3;
  CHECK_FALSE(in_weak_star_neighborhood(nu, "trig8", mu, NeighborhoodSpec(0.2, 1), bank));
  CHECK(in_weak_star_neighborhood(nu, "trig8", mu, NeighborhoodSpec(0.31, 1), bank));
  // Strict inequality at the boundary.
  CHECK_FALSE(in_weak_star_neighborhood(nu, "trig8", mu, NeighborhoodSpec(0.3, 1), bank));
  CHECK_THROWS_AS(in_weak_star_neighborhood(nu, "other", mu, NeighborhoodSpec(0.5, 1), bank), BankMismatch);
  CHECK_THROWS(NeighborhoodSpec(0.0, 1));
  CHECK_THROWS(NeighborhoodSpec(0.1, 0));
}

TEST_CASE("quasi-generic points") {
  auto cat = make_cat_map();
  const auto bank = TestFunctionBank::trig8();
  const auto mu = lebesgue_torus(bank);

  // The origin is fixed and sin 2pi x vanishes there, matching its mean.
  const TestFunctionBank sine("sine", {{"sin2pix", [](const Point& p) { return std::sin(2.0 * std::numbers::pi * p.x); },
                                        2.0 * std::numbers::pi}});
  const ReferenceMeasure zero(ReferenceMeasure::Kind::analytic, "zero", "sine", {0.0});
  CHECK(is_quasi_generic(*cat, {0.0, 0.0}, 10, NeighborhoodSpec(1e-12, 1), zero, sine));
  CHECK(is_quasi_generic(*cat, {0.0, 0.0}, 1000, NeighborhoodSpec(1e-12, 1), zero, sine));

  // cos 2pi x cos 2pi y averages to 1 on the fixed point, 0 under Lebesgue.
  const TestFunctionBank prod("prod", {bank[4]});
  const ReferenceMeasure leb(ReferenceMeasure::Kind::analytic, "lebesgue", "prod", {0.0});
  CHECK_FALSE(is_quasi_generic(*cat, {0.0, 0.0}, 10, NeighborhoodSpec(0.5, 1), leb, prod));
  const auto orbit = iterate(*cat, {0.0, 0.0}, 5);
  CHECK(quasi_generic_discrepancy(orbit.points(), 5, 1, mu, bank) == doctest::Approx(1.0));

  const double d = quasi_generic_discrepancy(iterate(*cat, {0.1234, 0.5678}, 10000).points(), 10000, 4, mu, bank);
  CHECK(d < 0.05);
  CHECK(is_quasi_generic(*cat, {0.1234, 0.5678}, 10000, NeighborhoodSpec(0.05, 4), mu, bank));
  // Nesting in (rho, s).
  CHECK(is_quasi_generic(*cat, {0.1234, 0.5678}, 10000, NeighborhoodSpec(0.1, 2), mu, bank));
}

TEST_CASE("quasi-generic filter") {
  auto cat = make_cat_map();
  const auto bank = TestFunctionBank::trig8();
  const auto mu = lebesgue_torus(bank);
  std::vector<Point> none;
  CHECK(filter_quasi_generic_set(none, 5, 10, NeighborhoodSpec(0.1, 1), mu, *cat, bank).survivors.empty());

  const auto pts = uniform_points(200, 5);
  const auto f = filter_quasi_generic_set(pts, 2000, 4000, NeighborhoodSpec(0.1, 4), mu, *cat, bank);
  CHECK(f.survivors.size() == 200);
  CHECK(f.n0 == 2000);
  CHECK(f.n_max == 4000);

  // Subset, order preserving and idempotent.
  const auto g = filter_quasi_generic_set(pts, 10, 12, NeighborhoodSpec(0.2, 2), mu, *cat, bank);
  for (std::size_t k = 1; k < g.survivor_indices.size(); ++k) {
    CHECK(g.survivor_indices[k - 1] < g.survivor_indices[k]);
  }
  const auto again = filter_quasi_generic_set(g.survivors, 10, 12, NeighborhoodSpec(0.2, 2), mu, *cat, bank);
  CHECK(again.survivors.size() == g.survivors.size());
}

TEST_CASE("finite-horizon Pesin sets") {
  auto cat = make_cat_map();
  CHECK(pesin_window_check(*cat, {0.37, 0.81}, 2.0, 0.9, 30));
  CHECK_FALSE(pesin_window_check(*cat, {0.37, 0.81}, 2.0, 1.0, 30));
  auto rot = make_rotation(0.7);
  CHECK_THROWS_AS(pesin_window_check(*rot, {0.6, 0.5}, 2.0, 0.1, 10), DegenerateSplitting);
}

TEST_CASE("long-orbit reference measure") {
  auto cat = make_cat_map();
  const auto bank = TestFunctionBank::trig8();
  const auto mu = long_orbit_measure(*cat, {0.1, 0.2}, 20000, bank);
  CHECK(mu.kind() == ReferenceMeasure::Kind::long_orbit);
  CHECK(mu.can_sample());
  const auto a = mu.sample(10, 4);
  const auto b = mu.sample(10, 4);
  for (std::size_t i = 0; i < 10; ++i) CHECK(a[i] == b[i]);
  for (double m : mu.moments()) CHECK(std::abs(m) < 0.05);
}
