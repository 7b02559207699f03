#pragma once

#include <array>
#include <cmath>

namespace hsp {

// Points and tangent vectors of the two-dimensional phase spaces.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;

  double norm() const { return std::hypot(x, y); }
  Vec2 normalized() const {
    const double n = norm();
    return {x / n, y / n};
  }
  double operator[](int i) const { return i == 0 ? x : y; }
};

using Point = Vec2;

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline Vec2 perp(Vec2 v) { return {-v.y, v.x}; }

// Unsigned angle between two lines (not rays), in [0, pi/2].
inline double line_angle(Vec2 a, Vec2 b) {
  const double c = std::abs(dot(a, b)) / (a.norm() * b.norm());
  const double s = std::abs(cross(a, b)) / (a.norm() * b.norm());
  return std::atan2(s, c);
}

// Row-major 2x2 matrix.
struct Mat2 {
  double a = 1.0, b = 0.0;
  double c = 0.0, d = 1.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 diag(double p, double q) { return {p, 0.0, 0.0, q}; }

  double det() const { return a * d - b * c; }
  Mat2 inverse() const {
    const double k = 1.0 / det();
    return {d * k, -b * k, -c * k, a * k};
  }
  Mat2 transpose() const { return {a, c, b, d}; }

  friend Vec2 operator*(const Mat2& m, Vec2 v) {
    return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
  }
  friend Mat2 operator*(const Mat2& m, const Mat2& n) {
    return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
            m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
  }
};

// Singular values (descending) and right singular vectors of a 2x2 matrix.
struct Svd2 {
  double s1 = 0.0;
  double s2 = 0.0;
  Vec2 v1;  // direction of maximal stretch
  Vec2 v2;  // direction of minimal stretch
};

Svd2 svd(const Mat2& m);

}  // namespace hsp
