#include "hsp/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "hsp/errors.hpp"
#include "hsp/numeric.hpp"
#include "hsp/random.hpp"

namespace hsp {

std::size_t SymbolicModel::max_return_time() const {
  return return_times.empty() ? 0 : *std::max_element(return_times.begin(), return_times.end());
}

std::size_t SymbolicModel::min_return_time() const {
  return return_times.empty() ? 0 : *std::min_element(return_times.begin(), return_times.end());
}

namespace {

void validate(const SymbolicModel& m) {
  if (m.return_times.empty()) throw std::invalid_argument("symbolic model has no symbols");
  if (m.return_times.size() != m.weights.size()) {
    throw std::invalid_argument("return times and weights differ in length");
  }
  for (std::size_t t : m.return_times) {
    if (t < 1) throw std::invalid_argument("return times must be >= 1");
  }
}

// Distinct return times with the log-sum of the weights sharing each.
std::vector<std::pair<std::size_t, double>> grouped(const SymbolicModel& m) {
  std::map<std::size_t, std::vector<double>> by_time;
  for (std::size_t i = 0; i < m.return_times.size(); ++i) by_time[m.return_times[i]].push_back(m.weights[i]);
  std::vector<std::pair<std::size_t, double>> out;
  for (const auto& [t, ws] : by_time) out.emplace_back(t, log_sum_exp(ws));
  return out;
}

}  // namespace

SymbolicModel SymbolicModel::make_synthetic(std::vector<std::size_t> times, std::vector<double> weights) {
  SymbolicModel m;
  m.return_times = std::move(times);
  m.weights = std::move(weights);
  m.synthetic = true;
  validate(m);
  return m;
}

SymbolicModel SymbolicModel::from_alekseev(const AlekseevModel& model, SystemPtr system,
                                           std::optional<Potential> phi) {
  SymbolicModel m;
  m.return_times = model.return_times();
  m.weights = model.weights();
  m.synthetic = false;
  if (system && phi) {
    OrbitContext ctx{std::move(system), *phi, {}};
    for (const auto& b : model.branches) ctx.base_points.push_back(b.base_point);
    m.context = std::move(ctx);
  }
  validate(m);
  return m;
}

AdmissiblePeriodSet admissible_periods(const SymbolicModel& model, std::size_t p) {
  validate(model);
  if (p < 1) throw std::invalid_argument("word length must be >= 1");
  const std::set<std::size_t> times(model.return_times.begin(), model.return_times.end());
  std::set<std::size_t> cur = {0};
  for (std::size_t k = 0; k < p; ++k) {
    std::set<std::size_t> next;
    for (std::size_t a : cur) {
      for (std::size_t t : times) next.insert(a + t);
    }
    cur = std::move(next);
  }
  return {p, std::vector<std::size_t>(cur.begin(), cur.end())};
}

std::pair<std::size_t, std::size_t> word_count_bounds(std::size_t N, std::size_t n, double rho) {
  if (n < 1 || N < n || rho < 0.0) throw std::invalid_argument("word_count_bounds needs N >= n >= 1, rho >= 0");
  const double lo_real = static_cast<double>(N) / (static_cast<double>(n) * (1.0 + rho));
  // Guard against 12/(2*1.5) evaluating to 4.000000000000001.
  const auto p_min = static_cast<std::size_t>(std::ceil(lo_real - 1e-12));
  const std::size_t p_max = N / n;
  if (p_min > p_max) {
    throw InfeasiblePeriod("no word length fits N=" + std::to_string(N) + " with n=" +
                           std::to_string(n));
  }
  return {p_min, p_max};
}

PeriodicSumTable periodic_sum_table(const SymbolicModel& model, std::size_t n_max) {
  validate(model);
  if (n_max < 1) throw std::invalid_argument("table horizon must be >= 1");
  const auto groups = grouped(model);
  PeriodicSumTable t;
  t.n_max = n_max;
  t.log_c.assign(n_max + 1, kNegInf);
  t.log_c[0] = 0.0;
  std::vector<double> terms;
  for (std::size_t N = 1; N <= n_max; ++N) {
    terms.clear();
    for (const auto& [time, lw] : groups) {
      if (time <= N && t.log_c[N - time] != kNegInf) terms.push_back(lw + t.log_c[N - time]);
    }
    t.log_c[N] = log_sum_exp(terms);
  }
  return t;
}

std::vector<double> brute_force_log_counts(const SymbolicModel& model, std::size_t n_max) {
  validate(model);
  std::vector<std::vector<double>> terms(n_max + 1);
  terms[0].push_back(0.0);
  // Depth-first over words, one term per word.
  std::vector<std::pair<std::size_t, double>> stack = {{0, 0.0}};
  while (!stack.empty()) {
    const auto [len, w] = stack.back();
    stack.pop_back();
    for (std::size_t i = 0; i < model.alphabet_size(); ++i) {
      const std::size_t nl = len + model.return_times[i];
      if (nl > n_max) continue;
      const double nw = w + model.weights[i];
      terms[nl].push_back(nw);
      stack.emplace_back(nl, nw);
    }
  }
  std::vector<double> out(n_max + 1);
  for (std::size_t N = 0; N <= n_max; ++N) {
    std::sort(terms[N].begin(), terms[N].end());
    out[N] = log_sum_exp(terms[N]);
  }
  return out;
}

std::string brute_force_csv(const SymbolicModel& model, std::size_t n_max) {
  const auto exact = brute_force_log_counts(model, n_max);
  const auto table = periodic_sum_table(model, n_max);
  std::ostringstream os;
  os << std::setprecision(17);
  os << "N,log_C_exact,log_C_table,diff\n";
  for (std::size_t N = 0; N <= n_max; ++N) {
    const double a = exact[N];
    const double b = table.log_c[N];
    const double d = (a == kNegInf && b == kNegInf) ? 0.0 : std::abs(a - b);
    os << N << ',' << a << ',' << b << ',' << d << '\n';
  }
  return os.str();
}

PressureEstimate pressure_periodic(const SymbolicModel& model, std::size_t n_max) {
  validate(model);
  if (n_max < 4 * model.max_return_time()) {
    throw std::invalid_argument("pressure_periodic needs N_max >= 4 * max return time");
  }
  const auto t = periodic_sum_table(model, n_max);
  double best = kNegInf;
  std::vector<std::pair<std::size_t, double>> evals;
  for (std::size_t N = (n_max + 1) / 2; N <= n_max; ++N) {
    if (N == 0 || t.log_c[N] == kNegInf) continue;
    const double v = t.log_c[N] / static_cast<double>(N);
    evals.emplace_back(N, v);
    best = std::max(best, v);
  }
  if (evals.empty()) throw InfeasiblePeriod("no admissible period in the top half-window");
  PressureEstimate e;
  e.value = best;
  e.n = n_max;
  e.method = PressureMethod::periodic_sum;
  e.upper = best;
  e.lower = evals.size() >= 2 ? std::min(evals[evals.size() - 1].second, evals[evals.size() - 2].second)
                              : evals.back().second;
  return e;
}

double bowen_root(const SymbolicModel& model) {
  validate(model);
  // log sum_i exp(w_i - s n_i): strictly decreasing in s.
  auto g = [&](double s) {
    std::vector<double> terms(model.alphabet_size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
      terms[i] = model.weights[i] - s * static_cast<double>(model.return_times[i]);
    }
    return log_sum_exp(terms);
  };
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < model.alphabet_size(); ++i) {
    const double r = model.weights[i] / static_cast<double>(model.return_times[i]);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  lo -= 1.0;
  hi += std::log(static_cast<double>(model.alphabet_size())) + 1.0;
  while (hi - lo > 1e-13 * std::max(1.0, std::abs(lo) + std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

std::vector<std::vector<std::size_t>> sample_words(const SymbolicModel& model, std::size_t N,
                                                   std::size_t count, std::uint64_t seed) {
  validate(model);
  // Log word counts by total length.
  SymbolicModel flat = model;
  std::fill(flat.weights.begin(), flat.weights.end(), 0.0);
  const auto counts = periodic_sum_table(flat, N);
  if (counts.log_c[N] == kNegInf) {
    throw InfeasiblePeriod("no word has total length " + std::to_string(N));
  }
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    std::vector<std::size_t> word;
    std::size_t rem = N;
    while (rem > 0) {
      const double u = uniform01(rng);
      double acc = 0.0;
      std::size_t pick = model.alphabet_size();
      std::size_t last_ok = model.alphabet_size();
      for (std::size_t i = 0; i < model.alphabet_size(); ++i) {
        const std::size_t t = model.return_times[i];
        if (t > rem || counts.log_c[rem - t] == kNegInf) continue;
        last_ok = i;
        acc += std::exp(counts.log_c[rem - t] - counts.log_c[rem]);
        if (u < acc) {
          pick = i;
          break;
        }
      }
      if (pick == model.alphabet_size()) pick = last_ok;  // rounding at the top end
      word.push_back(pick);
      rem -= model.return_times[pick];
    }
    out.push_back(std::move(word));
  }
  return out;
}

ShadowOrbit periodic_orbit_for_word(const SymbolicModel& model, const std::vector<std::size_t>& word) {
  if (!model.context) throw MissingOrbitContext("run-derived model without cached orbits");
  const auto& ctx = *model.context;
  const MapSystem& sys = *ctx.system;

  // Concatenated branch orbits: the pseudo-orbit and the Newton seed.
  std::vector<Point> pseudo;
  for (std::size_t sym : word) {
    const OrbitSegment seg = iterate(sys, ctx.base_points[sym], model.return_times[sym]);
    pseudo.insert(pseudo.end(), seg.points().begin(), seg.points().end());
  }
  const std::size_t N = pseudo.size();
  std::vector<Point> z = pseudo;

  auto residual = [&](std::vector<Vec2>& r) {
    double worst = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      r[j] = sys.difference(sys.forward(z[j]), z[(j + 1) % N]);
      worst = std::max({worst, std::abs(r[j].x), std::abs(r[j].y)});
    }
    return worst;
  };

  std::vector<Vec2> r(N);
  double res = residual(r);
  for (int it = 0; it < 40 && res > 1e-13; ++it) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * N, 2 * N);
    Eigen::VectorXd b(2 * N);
    for (std::size_t j = 0; j < N; ++j) {
      const Mat2 D = sys.jacobian(z[j]);
      const std::size_t row = 2 * j;
      const std::size_t nxt = 2 * ((j + 1) % N);
      J(row, row) += D.a;
      J(row, row + 1) += D.b;
      J(row + 1, row) += D.c;
      J(row + 1, row + 1) += D.d;
      J(row, nxt) -= 1.0;
      J(row + 1, nxt + 1) -= 1.0;
      b(row) = -r[j].x;
      b(row + 1) = -r[j].y;
    }
    const Eigen::VectorXd dz = J.partialPivLu().solve(b);
    for (std::size_t j = 0; j < N; ++j) z[j] = sys.canonical(z[j] + Vec2{dz(2 * j), dz(2 * j + 1)});
    const double next = residual(r);
    if (!(next < res) && next > 1e-13) {
      res = next;
      break;
    }
    res = next;
  }

  ShadowOrbit out;
  out.points = z;
  out.residual = res;
  for (std::size_t j = 0; j < N; ++j) out.shadow_distance = std::max(out.shadow_distance, sys.metric(z[j], pseudo[j]));
  return out;
}

BalanceReport verify_balance(const SymbolicModel& model, std::size_t N, double rho, double phi_shift,
                             std::size_t words, std::uint64_t seed) {
  validate(model);
  if (!model.synthetic && !model.context) {
    throw MissingOrbitContext("verify_balance: run-derived model without cached orbits");
  }
  BalanceReport rep;
  rep.N = N;
  rep.rho = rho;
  rep.phi_shift = phi_shift;
  rep.synthetic = model.synthetic;
  rep.lower_margin = std::numeric_limits<double>::infinity();
  rep.upper_margin = std::numeric_limits<double>::infinity();
  const double dN = static_cast<double>(N);

  for (const auto& word : sample_words(model, N, words, seed)) {
    double weight_sum = 0.0;
    for (std::size_t sym : word) {
      weight_sum += model.weights[sym] + phi_shift * static_cast<double>(model.return_times[sym]);
    }
    double orbit_sum = 0.0;
    if (model.synthetic) {
      // Locally constant potential: the periodic point's sum is the word's weight.
      orbit_sum = weight_sum;
    } else {
      const ShadowOrbit orb = periodic_orbit_for_word(model, word);
      for (const Point& p : orb.points) orbit_sum += model.context->phi(p) + phi_shift;
      rep.max_shadow_distance = std::max(rep.max_shadow_distance, orb.shadow_distance);
      rep.max_newton_residual = std::max(rep.max_newton_residual, orb.residual);
    }
    rep.lower_margin = std::min(rep.lower_margin, orbit_sum + dN * rho - weight_sum);
    rep.upper_margin = std::min(rep.upper_margin, weight_sum - (orbit_sum - dN * rho));
    ++rep.words;
  }
  rep.passed = rep.lower_margin >= 0.0 && rep.upper_margin >= 0.0 && rep.max_newton_residual < 1e-8;
  return rep;
}

// ---------------------------------------------------------------------------

SandwichReport sandwich_check(const SymbolicModel& model, double phi_sup, double phi_inf,
                              double p_mu_hat, double rho, std::size_t n_max) {
  SandwichReport rep;
  rep.pressure = pressure_periodic(model, n_max).value;
  std::size_t sat = 0;
  for (std::size_t t : model.return_times) sat += t;
  rep.slack = 3.0 * std::log(static_cast<double>(sat)) / static_cast<double>(n_max);
  rep.lower = rho * phi_inf / (1.0 + rho) + (p_mu_hat - 3.0 * rho) / (1.0 + rho) - rep.slack;
  rep.upper = p_mu_hat + 2.0 * rho + rho * phi_sup + rep.slack;
  rep.p_mu_hat = p_mu_hat;
  rep.rho = rho;
  rep.phi_inf = phi_inf;
  rep.phi_sup = phi_sup;
  rep.passed = rep.lower <= rep.pressure && rep.pressure <= rep.upper;
  return rep;
}

CertificateMember certificate_member(const SymbolicModel& model, std::string label) {
  validate(model);
  double sup_int = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < model.alphabet_size(); ++i) {
    sup_int = std::max(sup_int, model.weights[i] / static_cast<double>(model.return_times[i]));
  }
  return {bowen_root(model), sup_int, std::move(label)};
}

CertificateReport hyperbolic_potential_certificate(const std::vector<CertificateMember>& family) {
  if (family.empty()) throw std::invalid_argument("certificate needs a nonempty family");
  CertificateReport rep;
  rep.pressure = -std::numeric_limits<double>::infinity();
  rep.sup_integral = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (family[i].free_energy > rep.pressure) {
      rep.pressure = family[i].free_energy;
      rep.best = i;
    }
    rep.sup_integral = std::max(rep.sup_integral, family[i].phi_integral);
    rep.sequence.push_back(rep.pressure);
  }
  rep.best_label = family[rep.best].label;
  rep.gap = rep.pressure - rep.sup_integral;
  rep.positive = rep.gap > 1e-9;
  return rep;
}

}  // namespace hsp
