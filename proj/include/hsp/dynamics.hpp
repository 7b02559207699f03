#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hsp/linalg.hpp"

namespace hsp {

struct Box {
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;
};

// A cone of half-opening `width` (radians) around a direction field.
class ConeField {
 public:
  using DirectionField = std::function<Vec2(const Point&)>;

  ConeField(DirectionField center, double width);
  static ConeField constant(Vec2 center, double width);

  Vec2 center(const Point& p) const { return center_(p).normalized(); }
  double width() const { return width_; }
  // Copy of this cone with a different opening.
  ConeField with_width(double width) const { return ConeField(center_, width); }

 private:
  DirectionField center_;
  double width_;
};

struct ConePair {
  ConeField unstable;
  ConeField stable;
};

// An invertible map of a two-dimensional phase space. Evaluation is pure.
class MapSystem {
 public:
  virtual ~MapSystem() = default;

  virtual std::string name() const = 0;
  int dimension() const { return 2; }

  virtual Point forward(Point p) const = 0;
  virtual Point backward(Point p) const = 0;
  virtual Mat2 jacobian(Point p) const = 0;
  // Derivative of the inverse map at p, i.e. Df(f^{-1} p)^{-1}.
  virtual Mat2 inverse_jacobian(Point p) const { return jacobian(backward(p)).inverse(); }

  // Points where `forward` may be applied.
  virtual bool in_domain(Point p) const = 0;
  // Points where `backward` may be applied.
  virtual bool in_backward_domain(Point p) const { return in_domain(p); }

  // Max-metric distance between two points.
  virtual double metric(Point a, Point b) const;
  // Displacement a - b (minimal representative on the torus).
  virtual Vec2 difference(Point a, Point b) const { return a - b; }
  virtual Point canonical(Point p) const { return p; }
  // True when coordinates live on the unit torus.
  virtual bool periodic() const { return false; }
  virtual Box bounds() const = 0;
  virtual bool experimental() const { return false; }
  virtual ConePair default_cones() const = 0;
};

using SystemPtr = std::shared_ptr<const MapSystem>;

// Two-branch affine horseshoe on the unit square. Vertical strips x in [0,1/3]
// and [2/3,1] are stretched by 3 horizontally and squeezed by 3 vertically;
// the second branch is rotated by pi:
//   (x, y) -> (3x, y/3)              for x <= 1/3
//   (x, y) -> (3(1 - x), 1 - y/3)    for x >= 2/3
std::shared_ptr<MapSystem> make_affine_horseshoe();
// Arnold cat map [[2,1],[1,1]] on the unit torus with the flat metric.
std::shared_ptr<MapSystem> make_cat_map();
// Henon map (x, y) -> (1 - a x^2 + y, b x) on the escape box |x|, |y| <= 10.
// Orbits leaving the box diverge, so leaving it is treated as escape.
std::shared_ptr<MapSystem> make_henon(double a = 1.4, double b = 0.3);
// Rigid rotation of the disk of radius 1/2 about (1/2, 1/2). Zero exponents.
std::shared_ptr<MapSystem> make_rotation(double angle);
// Built-in system by identifier: "horseshoe", "cat", "henon", "rotation".
std::shared_ptr<MapSystem> make_system(std::string_view id);

// Orbit x, f(x), ..., f^{n-1}(x). Immutable after construction.
class OrbitSegment {
 public:
  OrbitSegment(Point base, std::vector<Point> points);

  Point base_point() const { return base_; }
  std::size_t length() const { return points_.size(); }
  const Point& operator[](std::size_t k) const { return points_[k]; }
  std::span<const Point> points() const { return points_; }

 private:
  Point base_;
  std::vector<Point> points_;
};

// A real observable on phase space with known bounds on the domain.
struct Potential {
  std::string id;
  std::function<double(const Point&)> fn;
  double inf = 0.0;
  double sup = 0.0;
  double lipschitz = 0.0;

  double operator()(const Point& p) const { return fn(p); }
  bool is_constant() const { return inf == sup; }

  static Potential constant(double c);
  // scale * coordinate[axis] + offset; bounds taken over `box`.
  static Potential coordinate(int axis, double scale, double offset, const Box& box);
};

// Throws OrbitEscaped(k) if some f^k(x), k < n, is outside the domain.
OrbitSegment iterate(const MapSystem& system, Point x, std::size_t n);
// Orbit x, f^{-1}(x), ..., f^{-(n-1)}(x).
OrbitSegment iterate_backward(const MapSystem& system, Point x, std::size_t n);

// S_k phi(x) = sum_{j<k} phi(f^j x) along a precomputed orbit.
double birkhoff_sum(const OrbitSegment& orbit, const Potential& phi, std::size_t k);
// All partial sums S_0 .. S_n (size n + 1).
std::vector<double> birkhoff_prefix(const OrbitSegment& orbit, const Potential& phi);

struct LyapunovReport {
  std::size_t horizon = 0;
  std::vector<double> exponents;  // ascending, nats per iterate
  double min_abs = 0.0;
  // Angles (degrees, in (-90, 90]) of the computed stable and unstable
  // directions at the base point. The unstable angle is NaN when the backward
  // orbit leaves the domain.
  std::vector<double> direction_angles;
};

// Accumulates a product of 2x2 matrices as Q R with per-step
// re-orthogonalization, keeping logarithms of the triangular diagonal.
class CocycleAccumulator {
 public:
  // Left-multiplies the accumulated product by `m`.
  void push(const Mat2& m);

  std::size_t steps() const { return steps_; }
  // Logarithms of the singular values (descending) of the product.
  double log_sigma_max() const;
  double log_sigma_min() const;
  // Right singular vectors of the product.
  Vec2 max_stretch_direction() const;
  Vec2 min_stretch_direction() const;

 private:
  Svd2 normalized_svd() const;

  Mat2 q_ = Mat2::identity();
  double log_a_ = 0.0;  // sum log |r11|
  double log_d_ = 0.0;  // sum log |r22|
  double beta_ = 0.0;   // r12 / r11 of the accumulated triangle
  double sign_ratio_ = 1.0;
  std::size_t steps_ = 0;
};

LyapunovReport finite_time_lyapunov(const MapSystem& system, Point x, std::size_t n);
double rate_of_hyperbolicity_point(const MapSystem& system, Point x, std::size_t n);

struct HorizonSample {
  Point point;
  std::size_t horizon = 1;
};
double rate_of_hyperbolicity_measure(const MapSystem& system, std::span<const HorizonSample> sample);

// Direction contracted most by Df^horizon(x) (finite-time E^s).
Vec2 stable_direction(const MapSystem& system, std::span<const Point> forward_orbit);
// Direction contracted most by Df^{-horizon}(x) (finite-time E^u); the span is
// the backward orbit x, f^{-1}x, ...
Vec2 unstable_direction(const MapSystem& system, std::span<const Point> backward_orbit);

// Number of boundary-fan directions sampled per cone.
inline constexpr int kConeFanSize = 17;

// True iff for k = 1..R, Df^k maps the unstable cone at x strictly inside the
// unstable cone at f^k x expanding by >= lambda_min^k, and Df^{-k} does the
// same for the stable cone from f^R x back to f^{R-k} x.
bool cone_preservation_check(const MapSystem& system, Point x, std::size_t R,
                             const ConePair& cones, double lambda_min);
// Same check on an orbit already computed (at least R + 1 points).
bool cone_preservation_check(const MapSystem& system, std::span<const Point> orbit, std::size_t R,
                             const ConePair& cones, double lambda_min);

}  // namespace hsp
