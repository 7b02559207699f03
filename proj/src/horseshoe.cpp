#include "hsp/horseshoe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "hsp/errors.hpp"
#include "hsp/numeric.hpp"
#include "hsp/pressure_metric.hpp"

namespace hsp {

std::optional<std::size_t> RectangleCover::home(const MapSystem& system, Point x) const {
  for (std::size_t i = 0; i < rectangles.size(); ++i) {
    if (system.metric(x, rectangles[i].center) < rectangles[i].kappa) return i;
  }
  return std::nullopt;
}

RectangleCover build_rectangle_cover(const MapSystem& system, std::span<const Point> sample,
                                     double delta, double kappa, double lambda) {
  if (sample.empty()) throw EmptySample("build_rectangle_cover: empty sample");
  if (!(kappa > 0.0) || !(kappa < delta / 2.0)) {
    throw std::invalid_argument("cover needs 0 < kappa < delta/2");
  }
  RectangleCover cover;
  cover.delta = delta;
  cover.lambda = lambda;
  for (const Point& p : sample) {
    if (cover.home(system, p)) continue;
    cover.rectangles.push_back({system.canonical(p), {delta / 2.0, delta / 2.0}, kappa});
  }
  return cover;
}

namespace {

// Bucketed point set for "is some stored point within r of q" queries.
class PointGrid {
 public:
  PointGrid(const MapSystem& system, std::span<const Point> pts, double r)
      : system_(system), pts_(pts), r_(r) {
    if (system.periodic()) wrap_ = std::max<long long>(1, static_cast<long long>(std::floor(1.0 / r)));
    for (std::size_t i = 0; i < pts.size(); ++i) cells_[key(cell(pts[i]))].push_back(i);
  }

  bool any_within(Point q) const {
    const auto [cx, cy] = cell(q);
    for (long long dx = -1; dx <= 1; ++dx) {
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = cells_.find(key({wrapped(cx + dx), wrapped(cy + dy)}));
        if (it == cells_.end()) continue;
        for (std::size_t i : it->second) {
          if (system_.metric(q, pts_[i]) <= r_) return true;
        }
      }
    }
    return false;
  }

 private:
  using Cell = std::pair<long long, long long>;
  long long wrapped(long long v) const { return wrap_ > 0 ? ((v % wrap_) + wrap_) % wrap_ : v; }
  long long index(double v) const {
    if (wrap_ > 0) {
      return std::clamp(static_cast<long long>(std::floor(v * static_cast<double>(wrap_))), 0LL, wrap_ - 1);
    }
    return static_cast<long long>(std::floor(v / r_));
  }
  Cell cell(Point p) const {
    const Point c = system_.canonical(p);
    return {index(c.x), index(c.y)};
  }
  static long long key(Cell c) { return c.first * 1000003LL + c.second; }

  const MapSystem& system_;
  std::span<const Point> pts_;
  double r_;
  long long wrap_ = 0;
  std::unordered_map<long long, std::vector<std::size_t>> cells_;
};

double max_norm(Vec2 v) { return std::max(std::abs(v.x), std::abs(v.y)); }

// Linearised images of the branch's stable extent (kappa/2 along E^s at x) and
// unstable extent (kappa/2 along E^u at f^R x, pulled back) must stay within
// `bound` for j < R.
bool tube_check(const MapSystem& system, std::span<const Point> orbit, std::size_t R,
                const ConePair& cones, double kappa, double bound) {
  Vec2 ds = (kappa / 2.0) * cones.stable.center(orbit[0]);
  Vec2 du = cones.unstable.center(orbit[0]);
  double grow = 1.0;
  {
    Vec2 v = du;
    for (std::size_t j = 0; j < R; ++j) {
      const Vec2 w = system.jacobian(orbit[j]) * v;
      grow *= w.norm();
      v = w.normalized();
    }
  }
  du = (kappa / 2.0 / grow) * du;
  for (std::size_t j = 0; j < R; ++j) {
    if (max_norm(ds) > bound || max_norm(du) > bound) return false;
    const Mat2 J = system.jacobian(orbit[j]);
    ds = J * ds;
    du = J * du;
  }
  return true;
}

}  // namespace

DetectionResult detect_returns(const MapSystem& system, std::span<const Point> lambda0,
                               const RectangleCover& cover, const ReturnSearch& search,
                               const Potential& phi, const ReferenceMeasure& mu,
                               const TestFunctionBank& bank) {
  if (search.n < 1) throw std::invalid_argument("detect_returns needs n >= 1");
  if (search.rho < 0.0) throw std::invalid_argument("detect_returns needs rho >= 0");
  if (search.s > bank.size() || mu.bank_id() != bank.id()) {
    throw BankMismatch("detect_returns: bank and measure disagree");
  }
  DetectionResult out;
  out.lambda0_size = lambda0.size();
  auto& rej = out.rejections;
  for (const char* r : {"outside_cover", "escaped", "no_return", "cone", "quasi_generic", "tube"}) {
    rej[r] = 0;
  }
  if (cover.size() == 0) {
    rej["outside_cover"] = lambda0.size();
    return out;
  }
  const double kappa = cover.rectangles.front().kappa;
  const PointGrid targets(system, lambda0, kappa / 4.0);

  const std::size_t m_lo = search.n;
  const auto m_hi = static_cast<std::size_t>(
      std::floor((1.0 + search.rho) * static_cast<double>(search.n) + 1e-9));
  const double qg_tol = search.rho / 2.0;

  for (std::size_t idx = 0; idx < lambda0.size(); ++idx) {
    const Point x = lambda0[idx];
    const auto home = cover.home(system, x);
    if (!home) {
      ++rej["outside_cover"];
      continue;
    }
    const Rectangle& rect = cover.rectangles[*home];
    std::vector<Point> orbit;
    try {
      const OrbitSegment seg = iterate(system, x, m_hi + 1);
      orbit.assign(seg.points().begin(), seg.points().end());
    } catch (const OrbitEscaped&) {
      ++rej["escaped"];
      continue;
    }
    std::vector<double> phi_prefix(m_hi + 1, 0.0);
    for (std::size_t j = 0; j < m_hi; ++j) phi_prefix[j + 1] = phi_prefix[j] + phi(orbit[j]);
    std::vector<std::vector<double>> psi_prefix(search.s, std::vector<double>(m_hi + 1, 0.0));
    for (std::size_t i = 0; i < search.s; ++i) {
      for (std::size_t j = 0; j < m_hi; ++j) {
        psi_prefix[i][j + 1] = psi_prefix[i][j] + bank[i].fn(orbit[j]);
      }
    }

    bool any_hit = false;
    for (std::size_t m = m_lo; m <= m_hi; ++m) {
      const Point y = orbit[m];
      if (!(system.metric(y, rect.center) < rect.kappa) || !targets.any_within(y)) continue;
      any_hit = true;
      if (!cone_preservation_check(system, orbit, m, search.cones, cover.lambda)) {
        ++rej["cone"];
        continue;
      }
      double worst = 0.0;
      for (std::size_t i = 0; i < search.s; ++i) {
        worst = std::max(worst, std::abs(psi_prefix[i][m] / static_cast<double>(m) - mu.moments()[i]));
      }
      if (!(worst <= qg_tol)) {
        ++rej["quasi_generic"];
        continue;
      }
      if (!tube_check(system, orbit, m, search.cones, rect.kappa, cover.delta / 4.0)) {
        ++rej["tube"];
        continue;
      }
      HyperbolicBranch b;
      b.base_point = x;
      b.point_index = idx;
      b.rect_in = b.rect_out = *home;
      b.return_time = m;
      b.birkhoff_weight = phi_prefix[m];
      b.window_weight = phi_prefix[search.n];
      b.quasi_generic = true;
      b.qg_rho = search.rho;
      b.qg_s = search.s;
      b.qg_discrepancy = worst;
      b.cone_certified = true;
      out.branches.push_back(b);
    }
    if (!any_hit) ++rej["no_return"];
  }
  std::stable_sort(out.branches.begin(), out.branches.end(),
                   [](const HyperbolicBranch& a, const HyperbolicBranch& b) {
                     if (a.point_index != b.point_index) return a.point_index < b.point_index;
                     return a.return_time < b.return_time;
                   });
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> AlekseevModel::return_times() const {
  std::vector<std::size_t> r;
  r.reserve(branches.size());
  for (const auto& b : branches) r.push_back(b.return_time);
  return r;
}

std::vector<double> AlekseevModel::weights() const {
  std::vector<double> w;
  w.reserve(branches.size());
  for (const auto& b : branches) w.push_back(b.birkhoff_weight);
  return w;
}

AlekseevModel select_branch_family(const MapSystem& system, std::span<const HyperbolicBranch> candidates,
                                   const RectangleCover& cover, std::size_t n, double delta) {
  if (candidates.empty()) throw NoViableRectangle("select_branch_family: no candidates");
  if (n < 1 || !(delta > 0.0)) throw std::invalid_argument("select_branch_family needs n >= 1, delta > 0");

  std::vector<Point> bases;
  bases.reserve(candidates.size());
  for (const auto& c : candidates) bases.push_back(c.base_point);
  const OrbitTable table(system, bases, n);

  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].window_weight > candidates[b].window_weight;
  });

  // One branch per base point; its first listed candidate stands for it.
  std::vector<std::size_t> eligible;
  {
    std::unordered_map<std::size_t, char> seen;
    for (std::size_t i : order) {
      if (seen.emplace(candidates[i].point_index, 1).second) eligible.push_back(i);
    }
  }
  const auto e0 = greedy_separated(system, table, eligible, delta);
  if (e0.empty()) throw NoViableRectangle("select_branch_family: empty separated set");

  std::vector<std::vector<double>> per_rect(cover.size());
  std::vector<double> all;
  for (std::size_t i : e0) {
    const auto& c = candidates[i];
    if (c.rect_in >= per_rect.size()) per_rect.resize(c.rect_in + 1);
    per_rect[c.rect_in].push_back(c.window_weight);
    all.push_back(c.window_weight);
  }
  std::size_t best = per_rect.size();
  double best_sum = kNegInf;
  for (std::size_t r = 0; r < per_rect.size(); ++r) {
    if (per_rect[r].empty()) continue;
    const double s = log_sum_exp(per_rect[r]);
    if (best == per_rect.size() || s > best_sum) {
      best = r;
      best_sum = s;
    }
  }
  if (best == per_rect.size()) throw NoViableRectangle("select_branch_family: every group empty");

  AlekseevModel model;
  model.n = n;
  model.delta = delta;
  model.lambda = cover.lambda;
  model.rectangle = best;
  model.rectangle_count = cover.size();
  model.e0_log_sum = log_sum_exp(all);
  model.e0_size = e0.size();
  for (std::size_t i : e0) {
    if (candidates[i].rect_in == best) model.branches.push_back(candidates[i]);
  }
  model.rho = model.branches.front().qg_rho;
  model.s = model.branches.front().qg_s;
  model.system_id = system.name();
  return model;
}

std::size_t saturate_size(const AlekseevModel& model) {
  std::size_t total = 0;
  for (const auto& b : model.branches) total += b.return_time;
  return total;
}

// ---------------------------------------------------------------------------

std::string model_to_json(const AlekseevModel& model) {
  nlohmann::ordered_json j;
  j["system"] = model.system_id;
  j["n"] = model.n;
  j["rho"] = model.rho;
  j["s"] = model.s;
  j["lambda"] = model.lambda;
  j["delta"] = model.delta;
  j["rectangle"] = model.rectangle;
  j["bank_id"] = model.bank_id;
  j["mu_id"] = model.mu_id;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& b : model.branches) {
    nlohmann::ordered_json e;
    e["base"] = {b.base_point.x, b.base_point.y};
    e["R"] = b.return_time;
    e["weight"] = b.birkhoff_weight;
    e["rect"] = b.rect_in;
    e["window_weight"] = b.window_weight;
    e["qg_discrepancy"] = b.qg_discrepancy;
    arr.push_back(std::move(e));
  }
  j["branches"] = std::move(arr);
  return j.dump(2);
}

AlekseevModel model_from_json(const std::string& text) {
  AlekseevModel m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.system_id = j.value("system", std::string{});
    m.n = j.at("n").get<std::size_t>();
    m.rho = j.at("rho").get<double>();
    m.s = j.value("s", std::size_t{1});
    m.lambda = j.at("lambda").get<double>();
    m.delta = j.at("delta").get<double>();
    m.rectangle = j.value("rectangle", std::size_t{0});
    m.bank_id = j.at("bank_id").get<std::string>();
    m.mu_id = j.at("mu_id").get<std::string>();
    for (const auto& e : j.at("branches")) {
      HyperbolicBranch b;
      b.base_point = {e.at("base").at(0).get<double>(), e.at("base").at(1).get<double>()};
      b.return_time = e.at("R").get<std::size_t>();
      b.birkhoff_weight = e.at("weight").get<double>();
      b.rect_in = b.rect_out = e.at("rect").get<std::size_t>();
      b.window_weight = e.value("window_weight", 0.0);
      b.qg_discrepancy = e.value("qg_discrepancy", 0.0);
      b.quasi_generic = true;
      b.cone_certified = true;
      b.qg_rho = m.rho;
      b.qg_s = m.s;
      m.branches.push_back(b);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model JSON: ") + e.what());
  }
  return m;
}

}  // namespace hsp
