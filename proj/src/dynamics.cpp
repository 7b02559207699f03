#include "hsp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "hsp/errors.hpp"

namespace hsp {

// ---------------------------------------------------------------------------
// Cones

ConeField::ConeField(DirectionField center, double width)
    : center_(std::move(center)), width_(width) {
  if (!(width > 0.0 && width < std::numbers::pi / 4.0)) {
    throw std::invalid_argument("cone width must lie in (0, pi/4)");
  }
}

ConeField ConeField::constant(Vec2 center, double width) {
  const Vec2 c = center.normalized();
  return ConeField([c](const Point&) { return c; }, width);
}

double MapSystem::metric(Point a, Point b) const {
  const Vec2 d = difference(a, b);
  return std::max(std::abs(d.x), std::abs(d.y));
}

namespace {

constexpr double kThird = 1.0 / 3.0;
constexpr double kTwoThirds = 2.0 / 3.0;

class AffineHorseshoe final : public MapSystem {
 public:
  std::string name() const override { return "horseshoe"; }

  Point forward(Point p) const override {
    if (p.x < 0.5) return {3.0 * p.x, p.y / 3.0};
    return {3.0 * (1.0 - p.x), 1.0 - p.y / 3.0};
  }
  Point backward(Point p) const override {
    if (p.y < 0.5) return {p.x / 3.0, 3.0 * p.y};
    return {1.0 - p.x / 3.0, 3.0 * (1.0 - p.y)};
  }
  Mat2 jacobian(Point p) const override {
    return p.x < 0.5 ? Mat2::diag(3.0, kThird) : Mat2::diag(-3.0, -kThird);
  }
  Mat2 inverse_jacobian(Point p) const override {
    return p.y < 0.5 ? Mat2::diag(kThird, 3.0) : Mat2::diag(-kThird, -3.0);
  }
  bool in_domain(Point p) const override {
    return in_unit(p.y) && (in_range(p.x, 0.0, kThird) || in_range(p.x, kTwoThirds, 1.0));
  }
  bool in_backward_domain(Point p) const override {
    return in_unit(p.x) && (in_range(p.y, 0.0, kThird) || in_range(p.y, kTwoThirds, 1.0));
  }
  Box bounds() const override { return {0.0, 1.0, 0.0, 1.0}; }
  ConePair default_cones() const override {
    return {ConeField::constant({1.0, 0.0}, 0.3), ConeField::constant({0.0, 1.0}, 0.3)};
  }

 private:
  static bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }
  static bool in_unit(double v) { return in_range(v, 0.0, 1.0); }
};

double wrap_unit(double v) {
  double r = v - std::floor(v);
  return r >= 1.0 ? 0.0 : r;
}

double wrap_half(double v) { return v - std::round(v); }

class CatMap final : public MapSystem {
 public:
  std::string name() const override { return "cat"; }

  Point forward(Point p) const override {
    return {wrap_unit(2.0 * p.x + p.y), wrap_unit(p.x + p.y)};
  }
  Point backward(Point p) const override {
    return {wrap_unit(p.x - p.y), wrap_unit(-p.x + 2.0 * p.y)};
  }
  Mat2 jacobian(Point) const override { return {2.0, 1.0, 1.0, 1.0}; }
  Mat2 inverse_jacobian(Point) const override { return {1.0, -1.0, -1.0, 2.0}; }
  bool in_domain(Point p) const override { return std::isfinite(p.x) && std::isfinite(p.y); }
  Vec2 difference(Point a, Point b) const override {
    return {wrap_half(a.x - b.x), wrap_half(a.y - b.y)};
  }
  Point canonical(Point p) const override { return {wrap_unit(p.x), wrap_unit(p.y)}; }
  bool periodic() const override { return true; }
  Box bounds() const override { return {0.0, 1.0, 0.0, 1.0}; }
  ConePair default_cones() const override {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    return {ConeField::constant({1.0, g}, 0.1), ConeField::constant({-g, 1.0}, 0.1)};
  }
};

class Henon final : public MapSystem {
 public:
  Henon(double a, double b) : a_(a), b_(b) {}

  std::string name() const override { return "henon"; }

  Point forward(Point p) const override { return {1.0 - a_ * p.x * p.x + p.y, b_ * p.x}; }
  Point backward(Point p) const override {
    const double x = p.y / b_;
    return {x, p.x - 1.0 + a_ * x * x};
  }
  Mat2 jacobian(Point p) const override { return {-2.0 * a_ * p.x, 1.0, b_, 0.0}; }
  bool in_domain(Point p) const override {
    return std::abs(p.x) <= kEscape && std::abs(p.y) <= kEscape;
  }
  Box bounds() const override { return {-kEscape, kEscape, -kEscape, kEscape}; }
  bool experimental() const override { return true; }
  ConePair default_cones() const override {
    return {ConeField::constant({1.0, 0.0}, 0.7), ConeField::constant({0.0, 1.0}, 0.7)};
  }

 private:
  static constexpr double kEscape = 10.0;
  double a_;
  double b_;
};

class Rotation final : public MapSystem {
 public:
  explicit Rotation(double angle) : c_(std::cos(angle)), s_(std::sin(angle)) {}

  std::string name() const override { return "rotation"; }

  Point forward(Point p) const override { return rotate(p, c_, s_); }
  Point backward(Point p) const override { return rotate(p, c_, -s_); }
  Mat2 jacobian(Point) const override { return {c_, -s_, s_, c_}; }
  bool in_domain(Point p) const override { return (p - kCenter).norm() <= 0.5 + 1e-12; }
  Box bounds() const override { return {0.0, 1.0, 0.0, 1.0}; }
  ConePair default_cones() const override {
    return {ConeField::constant({1.0, 0.0}, 0.3), ConeField::constant({0.0, 1.0}, 0.3)};
  }

 private:
  static constexpr Point kCenter{0.5, 0.5};
  static Point rotate(Point p, double c, double s) {
    const Vec2 d = p - kCenter;
    return kCenter + Vec2{c * d.x - s * d.y, s * d.x + c * d.y};
  }
  double c_;
  double s_;
};

}  // namespace

std::shared_ptr<MapSystem> make_affine_horseshoe() { return std::make_shared<AffineHorseshoe>(); }
std::shared_ptr<MapSystem> make_cat_map() { return std::make_shared<CatMap>(); }
std::shared_ptr<MapSystem> make_henon(double a, double b) { return std::make_shared<Henon>(a, b); }
std::shared_ptr<MapSystem> make_rotation(double angle) { return std::make_shared<Rotation>(angle); }

std::shared_ptr<MapSystem> make_system(std::string_view id) {
  if (id == "horseshoe") return make_affine_horseshoe();
  if (id == "cat") return make_cat_map();
  if (id == "henon") return make_henon();
  // Golden-mean rotation number.
  if (id == "rotation") return make_rotation(std::numbers::pi * (std::sqrt(5.0) - 1.0));
  throw ConfigError("unknown system '" + std::string(id) + "'");
}

// ---------------------------------------------------------------------------
// Orbits and Birkhoff sums

OrbitSegment::OrbitSegment(Point base, std::vector<Point> points)
    : base_(base), points_(std::move(points)) {}

Potential Potential::constant(double c) {
  Potential p;
  p.id = "constant";
  p.fn = [c](const Point&) { return c; };
  p.inf = p.sup = c;
  return p;
}

Potential Potential::coordinate(int axis, double scale, double offset, const Box& box) {
  if (axis != 0 && axis != 1) throw std::invalid_argument("axis must be 0 or 1");
  Potential p;
  p.id = axis == 0 ? "coordinate_x" : "coordinate_y";
  p.fn = [axis, scale, offset](const Point& q) { return scale * q[axis] + offset; };
  const double lo = axis == 0 ? box.x_min : box.y_min;
  const double hi = axis == 0 ? box.x_max : box.y_max;
  p.inf = std::min(scale * lo, scale * hi) + offset;
  p.sup = std::max(scale * lo, scale * hi) + offset;
  p.lipschitz = std::abs(scale);
  return p;
}

OrbitSegment iterate(const MapSystem& system, Point x, std::size_t n) {
  if (n == 0) throw std::invalid_argument("orbit length must be positive");
  std::vector<Point> pts;
  pts.reserve(n);
  Point p = x;
  for (std::size_t k = 0; k < n; ++k) {
    if (!system.in_domain(p)) throw OrbitEscaped(k);
    pts.push_back(p);
    if (k + 1 < n) p = system.forward(p);
  }
  return {x, std::move(pts)};
}

OrbitSegment iterate_backward(const MapSystem& system, Point x, std::size_t n) {
  if (n == 0) throw std::invalid_argument("orbit length must be positive");
  std::vector<Point> pts;
  pts.reserve(n);
  Point p = x;
  for (std::size_t k = 0; k < n; ++k) {
    if (!system.in_backward_domain(p)) throw OrbitEscaped(k);
    pts.push_back(p);
    if (k + 1 < n) p = system.backward(p);
  }
  return {x, std::move(pts)};
}

double birkhoff_sum(const OrbitSegment& orbit, const Potential& phi, std::size_t k) {
  if (k == 0 || k > orbit.length()) {
    throw IndexOutOfRange("birkhoff_sum: k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(orbit.length()) + "]");
  }
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) s += phi(orbit[j]);
  return s;
}

std::vector<double> birkhoff_prefix(const OrbitSegment& orbit, const Potential& phi) {
  std::vector<double> out(orbit.length() + 1, 0.0);
  for (std::size_t j = 0; j < orbit.length(); ++j) out[j + 1] = out[j] + phi(orbit[j]);
  return out;
}

// ---------------------------------------------------------------------------
// Cocycles

void CocycleAccumulator::push(const Mat2& m) {
  const Mat2 mq = m * q_;
  const Vec2 col1{mq.a, mq.c};
  const Vec2 col2{mq.b, mq.d};
  const double r11 = col1.norm();
  if (!(r11 > 0.0) || !std::isfinite(r11)) throw DegenerateCocycle("cocycle column collapsed");
  const Vec2 q1 = (1.0 / r11) * col1;
  const Vec2 q2 = perp(q1);
  const double r12 = dot(q1, col2);
  const double r22 = dot(q2, col2);
  if (r22 == 0.0 || !std::isfinite(r22)) throw DegenerateCocycle("singular value underflow");

  // New triangle = [[r11, r12], [0, r22]] * [[a, b], [0, d]].
  const double ratio = steps_ == 0 ? 1.0 : sign_ratio_ * std::exp(log_d_ - log_a_);
  beta_ = (steps_ == 0 ? 0.0 : beta_) + (r12 / r11) * ratio;
  log_a_ += std::log(r11);
  log_d_ += std::log(std::abs(r22));
  if (r22 < 0.0) sign_ratio_ = -sign_ratio_;
  q_ = {q1.x, q2.x, q1.y, q2.y};
  ++steps_;
}

// Triangle divided by its largest diagonal entry so nothing overflows.
Svd2 CocycleAccumulator::normalized_svd() const {
  const double top = std::max(log_a_, log_d_);
  const double a = std::exp(log_a_ - top);
  const double d = sign_ratio_ * std::exp(log_d_ - top);
  return svd(Mat2{a, beta_ * a, 0.0, d});
}

double CocycleAccumulator::log_sigma_max() const {
  return std::max(log_a_, log_d_) + std::log(normalized_svd().s1);
}

double CocycleAccumulator::log_sigma_min() const {
  return log_a_ + log_d_ - log_sigma_max();
}

Vec2 CocycleAccumulator::max_stretch_direction() const { return normalized_svd().v1; }
Vec2 CocycleAccumulator::min_stretch_direction() const { return normalized_svd().v2; }

namespace {

double direction_degrees(Vec2 v) {
  double a = std::atan2(v.y, v.x) * 180.0 / std::numbers::pi;
  if (a <= -90.0) a += 180.0;
  if (a > 90.0) a -= 180.0;
  return a;
}

}  // namespace

Vec2 stable_direction(const MapSystem& system, std::span<const Point> forward_orbit) {
  CocycleAccumulator acc;
  for (const Point& p : forward_orbit) acc.push(system.jacobian(p));
  return acc.min_stretch_direction();
}

Vec2 unstable_direction(const MapSystem& system, std::span<const Point> backward_orbit) {
  CocycleAccumulator acc;
  for (const Point& p : backward_orbit) acc.push(system.inverse_jacobian(p));
  return acc.min_stretch_direction();
}

LyapunovReport finite_time_lyapunov(const MapSystem& system, Point x, std::size_t n) {
  const OrbitSegment orbit = iterate(system, x, n);
  CocycleAccumulator acc;
  for (const Point& p : orbit.points()) acc.push(system.jacobian(p));

  LyapunovReport rep;
  rep.horizon = n;
  const double dn = static_cast<double>(n);
  rep.exponents = {acc.log_sigma_min() / dn, acc.log_sigma_max() / dn};
  std::sort(rep.exponents.begin(), rep.exponents.end());
  rep.min_abs = std::min(std::abs(rep.exponents[0]), std::abs(rep.exponents[1]));

  double unstable_deg = std::numeric_limits<double>::quiet_NaN();
  try {
    const OrbitSegment back = iterate_backward(system, x, n);
    unstable_deg = direction_degrees(unstable_direction(system, back.points()));
  } catch (const OrbitEscaped&) {
  }
  rep.direction_angles = {direction_degrees(acc.min_stretch_direction()), unstable_deg};
  return rep;
}

double rate_of_hyperbolicity_point(const MapSystem& system, Point x, std::size_t n) {
  return finite_time_lyapunov(system, x, n).min_abs;
}

double rate_of_hyperbolicity_measure(const MapSystem& system, std::span<const HorizonSample> sample) {
  if (sample.empty()) throw EmptySample("rate_of_hyperbolicity_measure: empty sample");
  double total = 0.0;
  for (const auto& s : sample) total += rate_of_hyperbolicity_point(system, s.point, s.horizon);
  return total / static_cast<double>(sample.size());
}

// ---------------------------------------------------------------------------
// Cone checks

namespace {

std::vector<Vec2> cone_fan(Vec2 center, double width) {
  std::vector<Vec2> fan;
  fan.reserve(kConeFanSize + 1);
  const double base = std::atan2(center.y, center.x);
  for (int i = 0; i < kConeFanSize; ++i) {
    const double t = -width + 2.0 * width * i / (kConeFanSize - 1);
    fan.push_back({std::cos(base + t), std::sin(base + t)});
  }
  fan.push_back(center);
  return fan;
}

// Pushes every fan vector through `steps` matrices; fails on the first step
// where a vector leaves the target cone or grows by less than lambda^k.
template <typename MatrixAt, typename ConeAt>
bool fan_survives(std::vector<Vec2> fan, std::size_t steps, MatrixAt matrix_at, ConeAt cone_at,
                  double width, double log_lambda) {
  std::vector<double> log_growth(fan.size(), 0.0);
  for (std::size_t k = 1; k <= steps; ++k) {
    const Mat2 m = matrix_at(k);
    const Vec2 target = cone_at(k);
    const double floor = static_cast<double>(k) * log_lambda;
    for (std::size_t i = 0; i < fan.size(); ++i) {
      const Vec2 w = m * fan[i];
      const double nw = w.norm();
      log_growth[i] += std::log(nw);
      fan[i] = (1.0 / nw) * w;
      if (log_growth[i] < floor) return false;
      if (!(line_angle(fan[i], target) < width)) return false;
    }
  }
  return true;
}

}  // namespace

bool cone_preservation_check(const MapSystem& system, std::span<const Point> orbit, std::size_t R,
                             const ConePair& cones, double lambda_min) {
  if (R == 0) throw std::invalid_argument("cone check needs R >= 1");
  if (orbit.size() < R + 1) throw std::invalid_argument("orbit shorter than R + 1");
  const double log_lambda = std::log(lambda_min);

  const auto& cu = cones.unstable;
  const bool unstable_ok = fan_survives(
      cone_fan(cu.center(orbit[0]), cu.width()), R,
      [&](std::size_t k) { return system.jacobian(orbit[k - 1]); },
      [&](std::size_t k) { return cu.center(orbit[k]); }, cu.width(), log_lambda);
  if (!unstable_ok) return false;

  const auto& cs = cones.stable;
  return fan_survives(
      cone_fan(cs.center(orbit[R]), cs.width()), R,
      [&](std::size_t k) { return system.jacobian(orbit[R - k]).inverse(); },
      [&](std::size_t k) { return cs.center(orbit[R - k]); }, cs.width(), log_lambda);
}

bool cone_preservation_check(const MapSystem& system, Point x, std::size_t R, const ConePair& cones,
                             double lambda_min) {
  const OrbitSegment orbit = iterate(system, x, R + 1);
  return cone_preservation_check(system, orbit.points(), R, cones, lambda_min);
}

}  // namespace hsp
