#include "hsp/pressure_metric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hsp/errors.hpp"
#include "hsp/numeric.hpp"

namespace hsp {

BowenBallSpec::BowenBallSpec(double epsilon_, std::size_t n_) : epsilon(epsilon_), n(n_) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (n < 1) throw std::invalid_argument("Bowen horizon must be >= 1");
}

std::string to_string(PressureMethod m) {
  switch (m) {
    case PressureMethod::separated_sum: return "separated_sum";
    case PressureMethod::spanning_inf: return "spanning_inf";
    case PressureMethod::periodic_sum: return "periodic_sum";
    case PressureMethod::bowen_root: return "bowen_root";
  }
  return "unknown";
}

OrbitTable::OrbitTable(const MapSystem& system, std::span<const Point> points, std::size_t n)
    : n_(n), pts_(points.size() * n), ok_(points.size(), 1) {
  if (n < 1) throw std::invalid_argument("orbit horizon must be >= 1");
  for (std::size_t i = 0; i < points.size(); ++i) {
    try {
      const OrbitSegment o = iterate(system, points[i], n);
      std::copy(o.points().begin(), o.points().end(), pts_.begin() + static_cast<std::ptrdiff_t>(i * n));
    } catch (const OrbitEscaped&) {
      ok_[i] = 0;
      escaped_.push_back(i);
    }
  }
}

double orbit_distance(const MapSystem& system, std::span<const Point> a, std::span<const Point> b) {
  double d = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t k = 0; k < n; ++k) d = std::max(d, system.metric(a[k], b[k]));
  return d;
}

// ---------------------------------------------------------------------------

std::size_t BowenIndex::KeyHash::operator()(const Key& k) const {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::int64_t v : k) {
    h ^= static_cast<std::uint64_t>(v);
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

BowenIndex::BowenIndex(const MapSystem& system, const OrbitTable& table, double cell)
    : system_(system), table_(table), cell_(cell) {
  if (!(cell > 0.0)) throw std::invalid_argument("index cell must be positive");
  if (system.periodic()) {
    wrap_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(1.0 / cell)));
  }
}

std::int64_t BowenIndex::cell_of(double v) const {
  if (wrap_ > 0) {
    const auto c = static_cast<std::int64_t>(std::floor(v * static_cast<double>(wrap_)));
    return std::clamp<std::int64_t>(c, 0, wrap_ - 1);
  }
  return static_cast<std::int64_t>(std::floor(v / cell_));
}

BowenIndex::Key BowenIndex::key_of(std::span<const Point> orbit) const {
  const Point a = system_.canonical(orbit.front());
  const Point b = system_.canonical(orbit.back());
  return {cell_of(a.x), cell_of(a.y), cell_of(b.x), cell_of(b.y)};
}

std::vector<BowenIndex::Key> BowenIndex::neighbor_keys(const Key& k) const {
  std::vector<Key> out;
  out.reserve(81);
  for (int code = 0; code < 81; ++code) {
    Key q = k;
    int c = code;
    for (auto& v : q) {
      v += (c % 3) - 1;
      c /= 3;
      if (wrap_ > 0) v = ((v % wrap_) + wrap_) % wrap_;
    }
    out.push_back(q);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void BowenIndex::insert(std::size_t i) {
  if (table_.escaped(i)) throw std::invalid_argument("cannot index an escaped orbit");
  buckets_[key_of(table_.orbit(i))].push_back(i);
}

std::vector<std::size_t> BowenIndex::near(std::span<const Point> orbit, double radius,
                                          bool strict) const {
  if (radius > cell_) throw std::invalid_argument("query radius exceeds index cell");
  std::vector<std::size_t> out;
  for (const Key& k : neighbor_keys(key_of(orbit))) {
    auto it = buckets_.find(k);
    if (it == buckets_.end()) continue;
    for (std::size_t j : it->second) {
      const double d = orbit_distance(system_, orbit, table_.orbit(j));
      if (strict ? d < radius : d <= radius) out.push_back(j);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool BowenIndex::any_near(std::span<const Point> orbit, double radius, bool strict) const {
  if (radius > cell_) throw std::invalid_argument("query radius exceeds index cell");
  for (const Key& k : neighbor_keys(key_of(orbit))) {
    auto it = buckets_.find(k);
    if (it == buckets_.end()) continue;
    for (std::size_t j : it->second) {
      const double d = orbit_distance(system_, orbit, table_.orbit(j));
      if (strict ? d < radius : d <= radius) return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------

bool bowen_ball_contains(const MapSystem& system, Point x, Point y, const BowenBallSpec& spec) {
  const OrbitSegment ox = iterate(system, x, spec.n);
  const OrbitSegment oy = iterate(system, y, spec.n);
  return orbit_distance(system, ox.points(), oy.points()) < spec.epsilon;
}

bool is_separated(const MapSystem& system, std::span<const Point> E, const BowenBallSpec& spec) {
  std::vector<OrbitSegment> orbits;
  orbits.reserve(E.size());
  for (const Point& p : E) orbits.push_back(iterate(system, p, spec.n));
  for (std::size_t i = 0; i < orbits.size(); ++i) {
    for (std::size_t j = i + 1; j < orbits.size(); ++j) {
      if (!(orbit_distance(system, orbits[i].points(), orbits[j].points()) > spec.epsilon)) {
        return false;
      }
    }
  }
  return true;
}

std::vector<std::size_t> greedy_separated(const MapSystem& system, const OrbitTable& table,
                                          std::span<const std::size_t> order, double epsilon) {
  BowenIndex index(system, table, epsilon);
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    if (table.escaped(i)) continue;
    if (index.any_near(table.orbit(i), epsilon, false)) continue;
    index.insert(i);
    kept.push_back(i);
  }
  return kept;
}

SeparatedSet maximal_separated_set(const MapSystem& system, std::span<const Point> sample,
                                   const BowenBallSpec& spec) {
  const OrbitTable table(system, sample, spec.n);
  std::vector<std::size_t> order(sample.size());
  std::iota(order.begin(), order.end(), 0);
  SeparatedSet out{{}, spec, true, greedy_separated(system, table, order, spec.epsilon),
                   table.escaped_indices()};
  for (std::size_t i : out.source_indices) out.points.push_back(sample[i]);
  return out;
}

PressureEstimate separated_pressure_sum(const MapSystem& system, const SeparatedSet& E,
                                        const Potential& phi) {
  if (E.points.empty()) throw EmptySet("separated_pressure_sum: empty set");
  std::vector<double> sums;
  sums.reserve(E.points.size());
  for (const Point& p : E.points) {
    sums.push_back(birkhoff_sum(iterate(system, p, E.spec.n), phi, E.spec.n));
  }
  const double v = log_sum_exp(sums) / static_cast<double>(E.spec.n);
  return {v, E.spec.n, PressureMethod::separated_sum, v, v};
}

SpanningReport spanning_free_energy_report(const MapSystem& system, std::span<const Point> mu_sample,
                                           double alpha, const BowenBallSpec& spec,
                                           const Potential& phi) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (mu_sample.empty()) throw EmptySample("spanning_free_energy: empty sample");

  const OrbitTable table(system, mu_sample, spec.n);
  const std::size_t total = mu_sample.size();
  const double need = alpha * static_cast<double>(total);

  std::vector<double> weight(total, 0.0);
  std::vector<std::size_t> order;
  BowenIndex all(system, table, spec.epsilon);
  for (std::size_t i = 0; i < total; ++i) {
    if (table.escaped(i)) continue;
    double s = 0.0;
    for (const Point& p : table.orbit(i)) s += phi(p);
    weight[i] = s;
    order.push_back(i);
    all.insert(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weight[a] < weight[b]; });

  std::vector<char> covered(total, 0);
  std::size_t n_covered = 0;
  std::vector<std::size_t> centers;
  for (std::size_t c : order) {
    if (static_cast<double>(n_covered) >= need) break;
    std::size_t gained = 0;
    const auto ball = all.near(table.orbit(c), spec.epsilon, true);
    for (std::size_t j : ball) gained += covered[j] ? 0 : 1;
    if (gained == 0) continue;
    for (std::size_t j : ball) {
      if (!covered[j]) {
        covered[j] = 1;
        ++n_covered;
      }
    }
    centers.push_back(c);
  }
  if (static_cast<double>(n_covered) < need) {
    throw CoverageUnreachable("spanning_free_energy: covered " + std::to_string(n_covered) + " of " +
                              std::to_string(total) + " sample points, need alpha=" +
                              std::to_string(alpha));
  }

  std::vector<double> w;
  w.reserve(centers.size());
  for (std::size_t c : centers) w.push_back(weight[c]);
  const double dn = static_cast<double>(spec.n);
  const double value = log_sum_exp(w) / dn;

  const auto sep = greedy_separated(system, table, centers, 2.0 * spec.epsilon);
  std::vector<double> ws;
  ws.reserve(sep.size());
  for (std::size_t c : sep) ws.push_back(weight[c]);
  const double lower = log_sum_exp(ws) / dn;

  SpanningReport rep;
  rep.estimate = {value, spec.n, PressureMethod::spanning_inf, lower, value};
  rep.balls = centers.size();
  rep.covered = n_covered;
  rep.sample_size = total;
  rep.escaped = table.escaped_indices().size();
  rep.alpha = alpha;
  return rep;
}

PressureEstimate spanning_free_energy(const MapSystem& system, std::span<const Point> mu_sample,
                                      double alpha, const BowenBallSpec& spec, const Potential& phi) {
  return spanning_free_energy_report(system, mu_sample, alpha, spec, phi).estimate;
}

}  // namespace hsp
