#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsp/dynamics.hpp"
#include "hsp/measures.hpp"

namespace hsp {

struct Rectangle {
  Point center;
  Vec2 half_width;  // axis-aligned half extents
  double kappa = 0.0;
};

struct RectangleCover {
  std::vector<Rectangle> rectangles;
  double delta = 0.0;   // diameter bound (max metric)
  double lambda = 2.0;  // expansion floor

  std::size_t size() const { return rectangles.size(); }
  // Lowest index i with dist(x, p_i) < kappa, if any.
  std::optional<std::size_t> home(const MapSystem& system, Point x) const;
};

// Greedy cover: walk the sample and open a rectangle of diameter delta centred
// at every point that is not yet strictly within kappa of a centre.
RectangleCover build_rectangle_cover(const MapSystem& system, std::span<const Point> sample,
                                     double delta, double kappa, double lambda = 2.0);

struct HyperbolicBranch {
  Point base_point;
  std::size_t point_index = 0;  // position in the Lambda_0 list
  std::size_t rect_in = 0;
  std::size_t rect_out = 0;
  std::size_t return_time = 0;
  double birkhoff_weight = 0.0;  // S_R phi(x)
  double window_weight = 0.0;    // S_n phi(x), used to rank candidates
  bool quasi_generic = false;
  double qg_rho = 0.0;
  std::size_t qg_s = 0;
  double qg_discrepancy = 0.0;
  bool cone_certified = false;
};

struct ReturnSearch {
  std::size_t n = 1;
  double rho = 0.0;
  std::size_t s = 1;
  ConePair cones;
};

struct DetectionResult {
  std::vector<HyperbolicBranch> branches;  // sorted by (point index, R)
  std::map<std::string, std::size_t> rejections;
  std::size_t lambda0_size = 0;
};

// Scans every m in [n, floor((1+rho) n)] for returns of x to its home kappa-ball
// that land within kappa/4 of a Lambda_0 point, then certifies each hit by
// (a) the cone check with floor cover.lambda, (b) base-point R-step averages
// within rho/2 of mu for i <= s, and (c) a linearised delta/4 tube around the
// orbit of the branch's stable and unstable extents.
DetectionResult detect_returns(const MapSystem& system, std::span<const Point> lambda0,
                               const RectangleCover& cover, const ReturnSearch& search,
                               const Potential& phi, const ReferenceMeasure& mu,
                               const TestFunctionBank& bank);

struct AlekseevModel {
  std::vector<HyperbolicBranch> branches;
  std::size_t n = 1;
  double rho = 0.0;
  std::size_t s = 1;
  double lambda = 2.0;
  double delta = 0.0;  // separation scale of E_0
  std::size_t rectangle = 0;
  std::string system_id;
  std::string bank_id;
  std::string mu_id;
  // Diagnostics of the pooled separated set E_0.
  double e0_log_sum = 0.0;  // log sum_{E_0} exp S_n phi
  std::size_t e0_size = 0;
  std::size_t rectangle_count = 0;

  std::vector<std::size_t> return_times() const;
  std::vector<double> weights() const;
};

// Builds E_0 as a maximal (delta, n)-separated set taken in descending S_n phi
// order (one branch per base point; the first listed, hence smallest R, wins),
// then keeps the rectangle with the largest sum of exp S_n phi (lowest index on
// ties). Candidates must already be sorted by (point index, R).
AlekseevModel select_branch_family(const MapSystem& system, std::span<const HyperbolicBranch> candidates,
                                   const RectangleCover& cover, std::size_t n, double delta);

// Sum of return times: the (branch, phase) slots of the saturate.
std::size_t saturate_size(const AlekseevModel& model);

std::string model_to_json(const AlekseevModel& model);
AlekseevModel model_from_json(const std::string& text);

}  // namespace hsp
