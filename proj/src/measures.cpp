#include "hsp/measures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "hsp/errors.hpp"

namespace hsp {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TestFunctionBank::TestFunctionBank(std::string id, std::vector<TestFunction> functions)
    : id_(std::move(id)), functions_(std::move(functions)) {
  if (functions_.empty()) throw std::invalid_argument("test-function bank is empty");
}

TestFunctionBank TestFunctionBank::trig8() {
  using std::cos;
  using std::sin;
  std::vector<TestFunction> f;
  f.push_back({"cos2pix", [](const Point& p) { return cos(kTwoPi * p.x); }, kTwoPi});
  f.push_back({"sin2pix", [](const Point& p) { return sin(kTwoPi * p.x); }, kTwoPi});
  f.push_back({"cos2piy", [](const Point& p) { return cos(kTwoPi * p.y); }, kTwoPi});
  f.push_back({"sin2piy", [](const Point& p) { return sin(kTwoPi * p.y); }, kTwoPi});
  f.push_back({"cos2pix_cos2piy",
               [](const Point& p) { return cos(kTwoPi * p.x) * cos(kTwoPi * p.y); }, kTwoPi});
  f.push_back({"sin2pix_sin2piy",
               [](const Point& p) { return sin(kTwoPi * p.x) * sin(kTwoPi * p.y); }, kTwoPi});
  f.push_back({"cos4pix", [](const Point& p) { return cos(2.0 * kTwoPi * p.x); }, 2.0 * kTwoPi});
  f.push_back({"cos4piy", [](const Point& p) { return cos(2.0 * kTwoPi * p.y); }, 2.0 * kTwoPi});
  return TestFunctionBank("trig8", std::move(f));
}

TestFunctionBank TestFunctionBank::by_id(const std::string& id) {
  if (id == "trig8") return trig8();
  throw ConfigError("unknown test-function bank '" + id + "'");
}

double TestFunctionBank::max_lipschitz(std::size_t s) const {
  double m = 0.0;
  for (std::size_t i = 0; i < std::min(s, size()); ++i) m = std::max(m, functions_[i].lipschitz);
  return m;
}

void TestFunctionBank::evaluate(const Point& p, std::span<double> out) const {
  for (std::size_t i = 0; i < functions_.size(); ++i) out[i] = functions_[i].fn(p);
}

// ---------------------------------------------------------------------------

EmpiricalMeasure::EmpiricalMeasure(const OrbitSegment& orbit, const TestFunctionBank& bank)
    : orbit_(orbit), bank_id_(bank.id()), moments_(bank.size(), 0.0) {
  std::vector<double> row(bank.size());
  for (const Point& p : orbit_.points()) {
    bank.evaluate(p, row);
    for (std::size_t i = 0; i < row.size(); ++i) moments_[i] += row[i];
  }
  for (double& m : moments_) m /= static_cast<double>(orbit_.length());
}

double EmpiricalMeasure::integrate(const std::function<double(const Point&)>& psi) const {
  double s = 0.0;
  for (const Point& p : orbit_.points()) s += psi(p);
  return s / static_cast<double>(orbit_.length());
}

ReferenceMeasure::ReferenceMeasure(Kind kind, std::string id, std::string bank_id,
                                   std::vector<double> moments, std::optional<double> entropy,
                                   Sampler sampler)
    : kind_(kind),
      id_(std::move(id)),
      bank_id_(std::move(bank_id)),
      moments_(std::move(moments)),
      entropy_(entropy),
      sampler_(std::move(sampler)) {}

std::vector<Point> ReferenceMeasure::sample(std::size_t count, std::uint64_t seed) const {
  if (!sampler_) throw std::logic_error("measure '" + id_ + "' has no sampler");
  Rng rng(seed);
  std::vector<Point> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sampler_(rng));
  return out;
}

namespace {

constexpr int kCantorDepth = 40;

// E[exp(i t X)] where X = T_{a0} T_{a1} ... (1/2), T0 u = u/3, T1 u = 1 - u/3,
// with P(a = 0) = p.
std::complex<double> cantor_characteristic(double t, double p, int depth) {
  if (depth == 0) return std::polar(1.0, 0.5 * t);
  const std::complex<double> g = cantor_characteristic(t / 3.0, p, depth - 1);
  return p * g + (1.0 - p) * std::polar(1.0, t) * std::conj(g);
}

double cantor_coordinate(Rng& rng, double p) {
  // Innermost digit first.
  std::array<bool, kCantorDepth> digits{};
  for (auto& d : digits) d = !bernoulli_draw(rng, p);
  double u = 0.5;
  for (int k = kCantorDepth - 1; k >= 0; --k) u = digits[k] ? 1.0 - u / 3.0 : u / 3.0;
  return u;
}

}  // namespace

ReferenceMeasure bernoulli_measure(double p, const TestFunctionBank& bank) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("Bernoulli weight must lie in (0, 1)");
  if (bank.id() != "trig8") throw BankMismatch("analytic Bernoulli moments need the trig8 bank");
  // Past and future digits are independent and the y-coordinate sees the same
  // contractions as x, so both marginals share the characteristic function.
  const auto g1 = cantor_characteristic(kTwoPi, p, kCantorDepth);
  const auto g2 = cantor_characteristic(2.0 * kTwoPi, p, kCantorDepth);
  std::vector<double> m = {g1.real(), g1.imag(), g1.real(), g1.imag(),
                           g1.real() * g1.real(), g1.imag() * g1.imag(), g2.real(), g2.real()};
  const double h = -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
  auto sampler = [p](Rng& rng) {
    const double x = cantor_coordinate(rng, p);
    const double y = cantor_coordinate(rng, p);
    return Point{x, y};
  };
  return {ReferenceMeasure::Kind::analytic, "bernoulli(" + std::to_string(p) + ")", bank.id(),
          std::move(m), h, sampler};
}

ReferenceMeasure lebesgue_torus(const TestFunctionBank& bank) {
  if (bank.id() != "trig8") throw BankMismatch("analytic Lebesgue moments need the trig8 bank");
  const double h = std::log((3.0 + std::sqrt(5.0)) / 2.0);
  auto sampler = [](Rng& rng) {
    const double x = uniform01(rng);
    const double y = uniform01(rng);
    return Point{x, y};
  };
  return {ReferenceMeasure::Kind::analytic, "lebesgue", bank.id(), std::vector<double>(bank.size(), 0.0),
          h, sampler};
}

ReferenceMeasure long_orbit_measure(const MapSystem& system, Point x, std::size_t length,
                                    const TestFunctionBank& bank) {
  const OrbitSegment orbit = iterate(system, x, length);
  const EmpiricalMeasure e(orbit, bank);
  auto pts = std::make_shared<std::vector<Point>>(orbit.points().begin(), orbit.points().end());
  auto sampler = [pts](Rng& rng) {
    const auto k = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(pts->size()));
    return (*pts)[std::min(k, pts->size() - 1)];
  };
  return {ReferenceMeasure::Kind::long_orbit, "long_orbit(" + std::to_string(length) + ")", bank.id(),
          e.moments(), std::nullopt, sampler};
}

// ---------------------------------------------------------------------------

NeighborhoodSpec::NeighborhoodSpec(double rho_, std::size_t s_) : rho(rho_), s(s_) {
  if (!(rho > 0.0)) throw std::invalid_argument("neighborhood radius must be positive");
  if (s < 1) throw std::invalid_argument("neighborhood needs s >= 1");
}

namespace {

void check_bank(const std::string& a, const std::string& b, const TestFunctionBank& bank,
                std::size_t s) {
  if (a != b || a != bank.id()) throw BankMismatch("measures built against different banks");
  if (s > bank.size()) throw BankMismatch("s exceeds the bank size");
}

}  // namespace

bool in_weak_star_neighborhood(std::span<const double> nu_moments, const std::string& nu_bank,
                               const ReferenceMeasure& mu, const NeighborhoodSpec& spec,
                               const TestFunctionBank& bank) {
  check_bank(nu_bank, mu.bank_id(), bank, spec.s);
  for (std::size_t i = 0; i < spec.s; ++i) {
    if (!(std::abs(nu_moments[i] - mu.moments()[i]) < spec.rho)) return false;
  }
  return true;
}

bool in_weak_star_neighborhood(const EmpiricalMeasure& nu, const ReferenceMeasure& mu,
                               const NeighborhoodSpec& spec, const TestFunctionBank& bank) {
  return in_weak_star_neighborhood(nu.moments(), nu.bank_id(), mu, spec, bank);
}

bool in_weak_star_neighborhood(const ReferenceMeasure& nu, const ReferenceMeasure& mu,
                               const NeighborhoodSpec& spec, const TestFunctionBank& bank) {
  return in_weak_star_neighborhood(nu.moments(), nu.bank_id(), mu, spec, bank);
}

double quasi_generic_discrepancy(std::span<const Point> orbit, std::size_t n, std::size_t s,
                                 const ReferenceMeasure& mu, const TestFunctionBank& bank) {
  check_bank(mu.bank_id(), bank.id(), bank, s);
  if (n == 0 || n > orbit.size()) throw IndexOutOfRange("orbit shorter than the averaging window");
  double worst = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += bank[i].fn(orbit[j]);
    worst = std::max(worst, std::abs(sum / static_cast<double>(n) - mu.moments()[i]));
  }
  return worst;
}

bool is_quasi_generic(const MapSystem& system, Point x, std::size_t n, const NeighborhoodSpec& spec,
                      const ReferenceMeasure& mu, const TestFunctionBank& bank) {
  const OrbitSegment orbit = iterate(system, x, n);
  return quasi_generic_discrepancy(orbit.points(), n, spec.s, mu, bank) <= spec.rho;
}

FilterResult filter_quasi_generic_set(std::span<const Point> candidates, std::size_t n0,
                                      std::size_t n_max, const NeighborhoodSpec& spec,
                                      const ReferenceMeasure& mu, const MapSystem& system,
                                      const TestFunctionBank& bank) {
  if (n0 < 1 || n0 > n_max) throw std::invalid_argument("need 1 <= N0 <= Nmax");
  check_bank(mu.bank_id(), bank.id(), bank, spec.s);
  FilterResult out;
  out.n0 = n0;
  out.n_max = n_max;
  std::vector<double> sums(spec.s);
  for (std::size_t idx = 0; idx < candidates.size(); ++idx) {
    std::vector<Point> pts;
    try {
      const OrbitSegment orbit = iterate(system, candidates[idx], n_max);
      pts.assign(orbit.points().begin(), orbit.points().end());
    } catch (const OrbitEscaped&) {
      out.escaped_indices.push_back(idx);
      continue;
    }
    std::fill(sums.begin(), sums.end(), 0.0);
    bool ok = true;
    for (std::size_t n = 1; n <= n_max && ok; ++n) {
      for (std::size_t i = 0; i < spec.s; ++i) sums[i] += bank[i].fn(pts[n - 1]);
      if (n < n0) continue;
      for (std::size_t i = 0; i < spec.s; ++i) {
        if (std::abs(sums[i] / static_cast<double>(n) - mu.moments()[i]) > spec.rho) {
          ok = false;
          break;
        }
      }
    }
    if (ok) {
      out.survivors.push_back(candidates[idx]);
      out.survivor_indices.push_back(idx);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

bool pesin_window_check(const MapSystem& system, Point x, double ell, double chi,
                        std::size_t horizon) {
  if (!(ell >= 1.0) || !(chi > 0.0) || horizon < 1) {
    throw std::invalid_argument("pesin_window_check needs ell >= 1, chi > 0, horizon >= 1");
  }
  const LyapunovReport rep = finite_time_lyapunov(system, x, horizon);
  if (rep.min_abs < 1e-3) throw DegenerateSplitting("splitting degenerate: exponent near zero");

  const OrbitSegment fwd = iterate(system, x, 2 * horizon);
  const OrbitSegment back = iterate_backward(system, x, 2 * horizon);
  const double log_ell = std::log(ell);
  constexpr double kSlack = 1e-12;

  Vec2 es0;
  double acc = 0.0;
  for (std::size_t j = 0; j < horizon; ++j) {
    const Vec2 es = stable_direction(system, fwd.points().subspan(j, horizon));
    if (j == 0) es0 = es;
    acc += std::log((system.jacobian(fwd[j]) * es).norm());
    if (acc > log_ell - static_cast<double>(j + 1) * chi + kSlack) return false;
  }

  Vec2 eu0;
  acc = 0.0;
  for (std::size_t j = 0; j < horizon; ++j) {
    const Vec2 eu = unstable_direction(system, back.points().subspan(j, horizon));
    if (j == 0) eu0 = eu;
    acc += std::log((system.inverse_jacobian(back[j]) * eu).norm());
    if (acc > log_ell - static_cast<double>(j + 1) * chi + kSlack) return false;
  }

  return line_angle(es0, eu0) >= 1.0 / ell;
}

}  // namespace hsp
