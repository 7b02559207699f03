#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsp/dynamics.hpp"
#include "hsp/random.hpp"

namespace hsp {

struct TestFunction {
  std::string name;
  std::function<double(const Point&)> fn;
  double lipschitz = 0.0;  // in the max metric
};

// Ordered observables psi_1..psi_S with sup norm <= 1.
class TestFunctionBank {
 public:
  TestFunctionBank(std::string id, std::vector<TestFunction> functions);

  // cos 2pi x, sin 2pi x, cos 2pi y, sin 2pi y, cos 2pi x cos 2pi y,
  // sin 2pi x sin 2pi y, cos 4pi x, cos 4pi y.
  static TestFunctionBank trig8();
  static TestFunctionBank by_id(const std::string& id);

  const std::string& id() const { return id_; }
  std::size_t size() const { return functions_.size(); }
  const TestFunction& operator[](std::size_t i) const { return functions_[i]; }
  double max_lipschitz(std::size_t s) const;
  // psi_i(p) for every i, written to out (size S).
  void evaluate(const Point& p, std::span<double> out) const;

 private:
  std::string id_;
  std::vector<TestFunction> functions_;
};

// Time average of a finite orbit segment.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(const OrbitSegment& orbit, const TestFunctionBank& bank);

  std::size_t length() const { return orbit_.length(); }
  const std::string& bank_id() const { return bank_id_; }
  // (1/n) sum_{k<n} psi(f^k x).
  double integrate(const std::function<double(const Point&)>& psi) const;
  const std::vector<double>& moments() const { return moments_; }

 private:
  OrbitSegment orbit_;
  std::string bank_id_;
  std::vector<double> moments_;
};

class ReferenceMeasure {
 public:
  enum class Kind { analytic, long_orbit };
  using Sampler = std::function<Point(Rng&)>;

  ReferenceMeasure(Kind kind, std::string id, std::string bank_id, std::vector<double> moments,
                   std::optional<double> entropy = std::nullopt, Sampler sampler = {});

  Kind kind() const { return kind_; }
  const std::string& id() const { return id_; }
  const std::string& bank_id() const { return bank_id_; }
  const std::vector<double>& moments() const { return moments_; }
  // Metric entropy when known in closed form.
  std::optional<double> entropy() const { return entropy_; }
  bool can_sample() const { return static_cast<bool>(sampler_); }
  // `count` mu-distributed points from a stream seeded with `seed`.
  std::vector<Point> sample(std::size_t count, std::uint64_t seed) const;

 private:
  Kind kind_;
  std::string id_;
  std::string bank_id_;
  std::vector<double> moments_;
  std::optional<double> entropy_;
  Sampler sampler_;
};

// Bernoulli(p, 1-p) on the horseshoe's invariant Cantor set; symbol 0 (left
// strip) has weight p.
ReferenceMeasure bernoulli_measure(double p, const TestFunctionBank& bank);
// Lebesgue measure on the torus (invariant for the cat map).
ReferenceMeasure lebesgue_torus(const TestFunctionBank& bank);
// Empirical measure of a long orbit, moments frozen at construction.
ReferenceMeasure long_orbit_measure(const MapSystem& system, Point x, std::size_t length,
                                    const TestFunctionBank& bank);

struct NeighborhoodSpec {
  double rho;
  std::size_t s;

  NeighborhoodSpec(double rho, std::size_t s);
};

// |int psi_i dnu - int psi_i dmu| < rho for all i <= s.
bool in_weak_star_neighborhood(std::span<const double> nu_moments, const std::string& nu_bank,
                               const ReferenceMeasure& mu, const NeighborhoodSpec& spec,
                               const TestFunctionBank& bank);
bool in_weak_star_neighborhood(const EmpiricalMeasure& nu, const ReferenceMeasure& mu,
                               const NeighborhoodSpec& spec, const TestFunctionBank& bank);
bool in_weak_star_neighborhood(const ReferenceMeasure& nu, const ReferenceMeasure& mu,
                               const NeighborhoodSpec& spec, const TestFunctionBank& bank);

// Largest |average - mu moment| over i <= s for an orbit already computed
// (length >= n).
double quasi_generic_discrepancy(std::span<const Point> orbit, std::size_t n, std::size_t s,
                                 const ReferenceMeasure& mu, const TestFunctionBank& bank);

// Birkhoff averages over n steps within rho (non-strict) of mu for i <= s.
bool is_quasi_generic(const MapSystem& system, Point x, std::size_t n, const NeighborhoodSpec& spec,
                      const ReferenceMeasure& mu, const TestFunctionBank& bank);

struct FilterResult {
  std::vector<Point> survivors;
  std::vector<std::size_t> survivor_indices;
  std::vector<std::size_t> escaped_indices;
  std::size_t n0 = 0;
  std::size_t n_max = 0;
};

// Keeps candidates that are quasi-generic at every n in [n0, n_max] for the
// given spec (callers pass rho/2 when building Lambda_N).
FilterResult filter_quasi_generic_set(std::span<const Point> candidates, std::size_t n0,
                                      std::size_t n_max, const NeighborhoodSpec& spec,
                                      const ReferenceMeasure& mu, const MapSystem& system,
                                      const TestFunctionBank& bank);

// Finite-horizon Pesin bounds at x:
//   |Df^n|E^s| <= ell e^{-n chi},  |Df^{-n}|E^u| <= ell e^{-n chi}  (n <= horizon),
//   angle(E^s, E^u) >= 1/ell.
// Norms along the splitting are products of one-step factors, with the
// splitting recomputed at each iterate from a horizon-length cocycle.
bool pesin_window_check(const MapSystem& system, Point x, double ell, double chi,
                        std::size_t horizon);

}  // namespace hsp
