#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hsp/dynamics.hpp"

namespace hsp {

struct BowenBallSpec {
  double epsilon;
  std::size_t n;

  BowenBallSpec(double epsilon, std::size_t n);
};

enum class PressureMethod { separated_sum, spanning_inf, periodic_sum, bowen_root };
std::string to_string(PressureMethod m);

struct PressureEstimate {
  double value = 0.0;
  std::size_t n = 0;
  PressureMethod method = PressureMethod::separated_sum;
  double lower = 0.0;
  double upper = 0.0;
};

struct SeparatedSet {
  std::vector<Point> points;
  BowenBallSpec spec;
  bool maximal = false;
  // Positions of the kept points in the input sample.
  std::vector<std::size_t> source_indices;
  // Sample entries whose orbit left the domain within n steps.
  std::vector<std::size_t> escaped_indices;
};

// Orbits of length n for a list of points; escaped entries are flagged.
class OrbitTable {
 public:
  OrbitTable(const MapSystem& system, std::span<const Point> points, std::size_t n);

  std::size_t size() const { return ok_.size(); }
  std::size_t horizon() const { return n_; }
  bool escaped(std::size_t i) const { return !ok_[i]; }
  std::span<const Point> orbit(std::size_t i) const {
    return std::span<const Point>(pts_).subspan(i * n_, n_);
  }
  const std::vector<std::size_t>& escaped_indices() const { return escaped_; }

 private:
  std::size_t n_;
  std::vector<Point> pts_;
  std::vector<char> ok_;
  std::vector<std::size_t> escaped_;
};

// max_{k<n} dist(a_k, b_k).
double orbit_distance(const MapSystem& system, std::span<const Point> a, std::span<const Point> b);

// Grid over (f^0 x, f^{n-1} x) with cells of side >= cell. Any two orbits at
// Bowen distance <= cell sit in adjacent cells, so queries scan 3^4 buckets.
class BowenIndex {
 public:
  BowenIndex(const MapSystem& system, const OrbitTable& table, double cell);

  void insert(std::size_t i);
  // Inserted entries j with orbit_distance(orbit, orbit_j) < radius (strict)
  // or <= radius, in insertion order per bucket. Requires radius <= cell.
  std::vector<std::size_t> near(std::span<const Point> orbit, double radius, bool strict) const;
  bool any_near(std::span<const Point> orbit, double radius, bool strict) const;

 private:
  using Key = std::array<std::int64_t, 4>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  Key key_of(std::span<const Point> orbit) const;
  std::vector<Key> neighbor_keys(const Key& k) const;
  std::int64_t cell_of(double v) const;

  const MapSystem& system_;
  const OrbitTable& table_;
  double cell_;
  std::int64_t wrap_ = 0;  // cells per unit on the torus, 0 otherwise
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> buckets_;
};

// dist(f^j x, f^j y) < epsilon for all j < n.
bool bowen_ball_contains(const MapSystem& system, Point x, Point y, const BowenBallSpec& spec);

// Every distinct pair is separated: some j < n with dist(f^j x, f^j y) > epsilon.
bool is_separated(const MapSystem& system, std::span<const Point> E, const BowenBallSpec& spec);

// Greedy pass in input order, keeping a point iff it is separated from every
// point already kept. Escaped entries are skipped and listed.
SeparatedSet maximal_separated_set(const MapSystem& system, std::span<const Point> sample,
                                   const BowenBallSpec& spec);
// Same pass over a precomputed table, visiting entries in `order`.
std::vector<std::size_t> greedy_separated(const MapSystem& system, const OrbitTable& table,
                                          std::span<const std::size_t> order, double epsilon);

// (1/n) log sum_{x in E} exp S_n phi(x).
PressureEstimate separated_pressure_sum(const MapSystem& system, const SeparatedSet& E,
                                        const Potential& phi);

struct SpanningReport {
  PressureEstimate estimate;
  std::size_t balls = 0;
  std::size_t covered = 0;
  std::size_t sample_size = 0;
  std::size_t escaped = 0;
  double alpha = 0.0;
};

// Greedy cover of an alpha fraction of the sample by Bowen balls whose centers
// are taken in ascending S_n phi order. The value (and `upper`) is
// (1/n) log sum over centers of exp S_n phi; `lower` is the separated sum over
// a maximal (2 epsilon, n)-separated subset of the centers.
SpanningReport spanning_free_energy_report(const MapSystem& system, std::span<const Point> mu_sample,
                                           double alpha, const BowenBallSpec& spec,
                                           const Potential& phi);
PressureEstimate spanning_free_energy(const MapSystem& system, std::span<const Point> mu_sample,
                                      double alpha, const BowenBallSpec& spec, const Potential& phi);

}  // namespace hsp
