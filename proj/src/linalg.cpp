#include "hsp/linalg.hpp"

#include <algorithm>

namespace hsp {

Svd2 svd(const Mat2& m) {
  // Eigen-decomposition of the Gram matrix M^T M; the smaller singular value
  // is recovered from |det| so it keeps full relative accuracy.
  const double p = m.a * m.a + m.c * m.c;
  const double q = m.a * m.b + m.c * m.d;
  const double r = m.b * m.b + m.d * m.d;
  const double half_sum = 0.5 * (p + r);
  const double rad = std::hypot(0.5 * (p - r), q);

  Svd2 out;
  out.s1 = std::sqrt(half_sum + rad);
  out.s2 = out.s1 > 0.0 ? std::abs(m.det()) / out.s1 : 0.0;
  const double theta = 0.5 * std::atan2(2.0 * q, p - r);
  out.v1 = {std::cos(theta), std::sin(theta)};
  out.v2 = perp(out.v1);
  return out;
}

}  // namespace hsp
