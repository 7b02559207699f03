#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "hsp/errors.hpp"
#include "hsp/symbolic.hpp"

using namespace hsp;

namespace {

// Log of the real root of psi^3 = psi + 1 (Cardano).
double log_plastic() {
  const double r = std::sqrt(69.0);
  return std::log(std::cbrt((9.0 + r) / 18.0) + std::cbrt((9.0 - r) / 18.0));
}

// Independent enumeration: C[N] summed in linear space over all words.
std::vector<double> enumerate_counts(const std::vector<std::size_t>& times, const std::vector<double>& weights,
                                     std::size_t n_max) {
  std::vector<double> c(n_max + 1, 0.0);
  std::function<void(std::size_t, double)> walk = [&](std::size_t len, double w) {
    c[len] += std::exp(w);
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (len + times[i] <= n_max) walk(len + times[i], w + weights[i]);
    }
  };
  walk(0, 0.0);
  return c;
}

}  // namespace

TEST_CASE("admissible periods") {
  const auto m = SymbolicModel::make_synthetic({2, 3}, {0.0, 0.0});
  CHECK(admissible_periods(m, 2).periods == std::vector<std::size_t>{4, 5, 6});
  CHECK(admissible_periods(m, 4).periods == std::vector<std::size_t>{8, 9, 10, 11, 12});
  const auto one = SymbolicModel::make_synthetic({5}, {0.0});
  CHECK(admissible_periods(one, 3).periods == std::vector<std::size_t>{15});
}

TEST_CASE("word count bounds") {
  CHECK(word_count_bounds(12, 2, 0.5) == std::pair<std::size_t, std::size_t>{4, 6});
  CHECK(word_count_bounds(10, 10, 0.0) == std::pair<std::size_t, std::size_t>{1, 1});
  CHECK_THROWS_AS(word_count_bounds(7, 4, 0.1), InfeasiblePeriod);
}

TEST_CASE("periodic sum table") {
  const auto one = periodic_sum_table(SymbolicModel::make_synthetic({1}, {0.0}), 12);
  for (double v : one.log_c) CHECK(v == doctest::Approx(0.0));

  const auto two = periodic_sum_table(SymbolicModel::make_synthetic({1, 1}, {0.0, 0.0}), 30);
  for (std::size_t N = 0; N <= 30; ++N) CHECK(two.log_c[N] == doctest::Approx(N * std::log(2.0)));

  const auto pad = periodic_sum_table(SymbolicModel::make_synthetic({2, 3}, {0.0, 0.0}), 12);
  const std::vector<double> expected{1, 0, 1, 1, 1, 2, 2, 3, 4, 5, 7, 9, 12};
  for (std::size_t N = 0; N <= 12; ++N) {
    if (expected[N] == 0.0) {
      CHECK(std::isinf(pad.log_c[N]));
    } else {
      CHECK(std::exp(pad.log_c[N]) == doctest::Approx(expected[N]).epsilon(1e-12));
    }
  }
}

TEST_CASE("table agrees with enumeration") {
  const std::vector<std::size_t> times{1, 2, 4};
  const std::vector<double> weights{0.3, -0.7, 0.9};
  const auto model = SymbolicModel::make_synthetic(times, weights);
  const auto table = periodic_sum_table(model, 16);
  const auto brute = brute_force_log_counts(model, 16);
  const auto oracle = enumerate_counts(times, weights, 16);
  for (std::size_t N = 0; N <= 16; ++N) {
    CHECK(std::abs(table.log_c[N] - std::log(oracle[N])) < 1e-10);
    CHECK(std::abs(brute[N] - std::log(oracle[N])) < 1e-10);
  }
  const std::string csv = brute_force_csv(model, 4);
  CHECK(csv.rfind("N,log_C_exact,log_C_table,diff\n", 0) == 0);
}

TEST_CASE("periodic pressure and Bowen root") {
  const auto two = SymbolicModel::make_synthetic({1, 1}, {0.0, 0.0});
  CHECK(std::abs(pressure_periodic(two, 40).value - std::log(2.0)) < 1e-9);
  CHECK(pressure_periodic(two, 40).method == PressureMethod::periodic_sum);

  const auto tilted = SymbolicModel::make_synthetic({1, 1}, {0.5, -0.2});
  const double closed = std::log(std::exp(0.5) + std::exp(-0.2));
  CHECK(std::abs(pressure_periodic(tilted, 40).value - closed) < 1e-9);
  CHECK(std::abs(bowen_root(tilted) - closed) < 1e-12);

  const auto pad = SymbolicModel::make_synthetic({2, 3}, {0.0, 0.0});
  CHECK(std::abs(bowen_root(pad) - log_plastic()) < 1e-12);
  CHECK(std::abs(pressure_periodic(pad, 60).value - log_plastic()) <= 2.0 / 60.0);
  const auto est = pressure_periodic(pad, 200);
  CHECK(est.lower <= est.value);
  CHECK(est.value <= est.upper);

  CHECK(std::abs(bowen_root(SymbolicModel::make_synthetic({1, 1, 1}, {0.0, 0.0, 0.0})) - std::log(3.0)) < 1e-12);
  CHECK_THROWS(pressure_periodic(pad, 8));
}

TEST_CASE("balance on synthetic models") {
  const auto m = SymbolicModel::make_synthetic({1, 2}, {0.1, -0.3});
  const auto r = verify_balance(m, 10, 0.1, 0.0, 20, 3);
  CHECK(r.synthetic);
  CHECK(r.lower_margin == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.upper_margin == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.passed);
  const auto z = verify_balance(m, 10, 0.0, 0.0, 20, 3);
  CHECK(std::abs(z.lower_margin) < 1e-12);
  CHECK(std::abs(z.upper_margin) < 1e-12);
  CHECK_THROWS_AS(periodic_orbit_for_word(m, {0, 1}), MissingOrbitContext);

  const auto words = sample_words(m, 7, 50, 9);
  for (const auto& w : words) {
    std::size_t total = 0;
    for (std::size_t s : w) total += m.return_times[s];
    CHECK(total == 7);
  }
}

TEST_CASE("sandwich check") {
  const auto two = SymbolicModel::make_synthetic({1, 1}, {0.0, 0.0});
  CHECK(sandwich_check(two, 0.0, 0.0, std::log(2.0), 0.1, 200).passed);
  const auto pad = SymbolicModel::make_synthetic({2, 3}, {0.0, 0.0});
  CHECK(sandwich_check(pad, 0.0, 0.0, 0.2812, 0.05, 200).passed);
  CHECK_FALSE(sandwich_check(two, 0.0, 0.0, 10.0, 0.1, 200).passed);
}

TEST_CASE("potential certificate") {
  const auto two = SymbolicModel::make_synthetic({1, 1}, {0.0, 0.0});
  const auto pos = hyperbolic_potential_certificate({certificate_member(two, "shift")});
  CHECK(pos.gap == doctest::Approx(std::log(2.0)));
  CHECK(pos.positive);

  const auto single = SymbolicModel::make_synthetic({1}, {-4.0});
  const auto neg = hyperbolic_potential_certificate({certificate_member(single, "orbit")});
  CHECK(std::abs(neg.gap) < 1e-9);
  CHECK_FALSE(neg.positive);

  const auto fam = hyperbolic_potential_certificate({{0.3, 0.0, "a"}, {0.5, 0.0, "b"}});
  CHECK(fam.pressure == 0.5);
  CHECK(fam.best_label == "b");
  CHECK(fam.sequence == std::vector<double>{0.3, 0.5});
}
