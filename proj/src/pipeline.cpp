#include "hsp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "hsp/errors.hpp"
#include "hsp/numeric.hpp"
#include "hsp/pressure_metric.hpp"
#include "hsp/random.hpp"

namespace hsp {

namespace {

// Tracks which keys of a config object were read so leftovers can be rejected.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  std::optional<T> opt(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  template <typename T>
  T req(const std::string& key) {
    auto v = opt<T>(key);
    if (!v) throw ConfigError(where_ + ": missing required key '" + key + "'");
    return *v;
  }

  const Json* child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(where_ + ": unknown key '" + item.key() + "'");
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

Point parse_point(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(where + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

StageConfig read_stage(Reader& r, const StageConfig& base) {
  StageConfig st = base;
  if (auto v = r.opt<double>("rho")) st.rho = *v;
  if (auto v = r.opt<std::size_t>("s")) st.s = *v;
  if (auto v = r.opt<std::size_t>("n")) st.n = *v;
  if (auto v = r.opt<double>("delta")) st.delta = *v;
  if (auto v = r.opt<double>("cover_delta")) st.cover_delta = *v;
  if (auto v = r.opt<double>("kappa")) st.kappa = *v;
  if (auto v = r.opt<double>("lambda")) st.lambda = *v;
  if (auto v = r.opt<double>("alpha")) st.alpha = *v;
  if (auto v = r.opt<double>("epsilon")) st.epsilon = *v;
  return st;
}

std::uint64_t derive_seed(std::uint64_t seed, std::size_t k, std::uint64_t tag) {
  // splitmix64 finaliser over a simple combination.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (1 + k * 16 + tag);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

RunConfig parse_run_config(const Json& j) {
  RunConfig c;
  c.raw = j;
  Reader r(j, "config");
  c.schema_version = r.req<int>("schema_version");
  if (c.schema_version != 1) throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version));
  if (auto v = r.opt<std::string>("system")) c.system = *v;
  if (const Json* p = r.child("potential")) {
    Reader pr(*p, "potential");
    c.potential.kind = pr.req<std::string>("kind");
    if (c.potential.kind == "constant") {
      c.potential.value = pr.opt<double>("value").value_or(0.0);
    } else if (c.potential.kind == "coordinate") {
      c.potential.axis = pr.opt<int>("axis").value_or(0);
      c.potential.scale = pr.opt<double>("scale").value_or(1.0);
      c.potential.offset = pr.opt<double>("offset").value_or(0.0);
    } else if (c.potential.kind == "linear") {
      c.potential.a = pr.opt<double>("a").value_or(0.0);
      c.potential.b = pr.opt<double>("b").value_or(0.0);
      c.potential.c = pr.opt<double>("c").value_or(0.0);
    } else {
      throw ConfigError("potential.kind must be constant, coordinate or linear");
    }
    pr.finish();
  }
  if (const Json* m = r.child("measure")) {
    Reader mr(*m, "measure");
    c.measure.kind = mr.req<std::string>("kind");
    if (c.measure.kind == "bernoulli") {
      c.measure.p = mr.opt<double>("p").value_or(0.5);
    } else if (c.measure.kind == "long_orbit") {
      if (const Json* s = mr.child("start")) c.measure.start = parse_point(*s, "measure.start");
      c.measure.length = mr.opt<std::size_t>("length").value_or(c.measure.length);
    } else if (c.measure.kind != "lebesgue") {
      throw ConfigError("measure.kind must be bernoulli, lebesgue or long_orbit");
    }
    mr.finish();
  }
  if (auto v = r.opt<std::string>("bank")) c.bank = *v;

  StageConfig base;
  base = read_stage(r, base);
  const Json* sched = r.child("schedule");
  if (!sched || !sched->is_array() || sched->empty()) {
    throw ConfigError("config: 'schedule' must be a nonempty array");
  }
  for (std::size_t k = 0; k < sched->size(); ++k) {
    Reader sr((*sched)[k], "schedule[" + std::to_string(k) + "]");
    c.schedule.push_back(read_stage(sr, base));
    sr.finish();
  }

  if (auto v = r.opt<std::size_t>("sample_size")) c.sample_size = *v;
  if (auto v = r.opt<std::size_t>("spanning_sample_size")) c.spanning_sample_size = *v;
  if (auto v = r.opt<std::size_t>("n_max")) c.n_max = *v;
  if (auto v = r.opt<std::uint64_t>("seed")) c.seed = *v;
  if (auto v = r.opt<std::size_t>("word_length")) c.word_length = *v;
  if (auto v = r.opt<std::size_t>("strong_words")) c.strong_words = *v;
  if (auto v = r.opt<std::size_t>("balance_words")) c.balance_words = *v;
  if (const Json* w = r.child("quasi_generic_window")) {
    if (!w->is_array() || w->size() != 2) throw ConfigError("quasi_generic_window must be [N0, Nmax]");
    c.qg_window = std::make_pair((*w)[0].get<std::size_t>(), (*w)[1].get<std::size_t>());
    if (c.qg_window->first < 1 || c.qg_window->first > c.qg_window->second) {
      throw ConfigError("quasi_generic_window needs 1 <= N0 <= Nmax");
    }
  }
  if (const Json* p = r.child("pesin")) {
    Reader pr(*p, "pesin");
    PesinSpec ps;
    ps.ell = pr.opt<double>("ell").value_or(ps.ell);
    ps.chi = pr.opt<double>("chi").value_or(ps.chi);
    ps.horizon = pr.opt<std::size_t>("horizon").value_or(ps.horizon);
    pr.finish();
    c.pesin = ps;
  }
  if (const Json* cn = r.child("cones")) {
    Reader cr(*cn, "cones");
    c.unstable_width = cr.opt<double>("unstable_width");
    c.stable_width = cr.opt<double>("stable_width");
    cr.finish();
  }
  c.ambient_pressure = r.opt<double>("ambient_pressure");
  if (auto v = r.opt<std::string>("output_dir")) c.output_dir = *v;
  r.finish();

  make_system(c.system);  // rejects unknown ids
  const auto bank = TestFunctionBank::by_id(c.bank);
  for (std::size_t k = 0; k < c.schedule.size(); ++k) {
    const auto& st = c.schedule[k];
    const std::string where = "schedule[" + std::to_string(k) + "]";
    if (!(st.rho > 0.0)) throw ConfigError(where + ": rho must be positive");
    if (st.s < 1 || st.s > bank.size()) throw ConfigError(where + ": s must lie in [1, bank size]");
    if (st.n < 1) throw ConfigError(where + ": n must be >= 1");
    if (!(st.alpha > 0.0 && st.alpha < 1.0)) throw ConfigError(where + ": alpha must lie in (0, 1)");
    if (!(st.epsilon > 0.0) || !(st.delta > 0.0) || !(st.kappa > 0.0)) {
      throw ConfigError(where + ": epsilon, delta and kappa must be positive");
    }
    if (!(st.lambda > 1.0)) throw ConfigError(where + ": lambda must exceed 1");
    if (k > 0) {
      if (!(st.rho < c.schedule[k - 1].rho)) throw ConfigError("schedule: rho must strictly decrease");
      if (st.s < c.schedule[k - 1].s) throw ConfigError("schedule: s must not decrease");
    }
  }
  if (c.sample_size < 1 || c.spanning_sample_size < 1) throw ConfigError("sample sizes must be positive");
  return c;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_json_file(path)); }

Potential make_potential(const PotentialSpec& spec, const Box& box) {
  if (spec.kind == "constant") return Potential::constant(spec.value);
  if (spec.kind == "coordinate") return Potential::coordinate(spec.axis, spec.scale, spec.offset, box);
  if (spec.kind == "linear") {
    Potential p;
    std::ostringstream id;
    id << std::setprecision(17) << "linear(" << spec.a << "," << spec.b << "," << spec.c << ")";
    p.id = id.str();
    const double a = spec.a, b = spec.b, c = spec.c;
    p.fn = [a, b, c](const Point& q) { return a * q.x + b * q.y + c; };
    p.inf = std::min(a * box.x_min, a * box.x_max) + std::min(b * box.y_min, b * box.y_max) + c;
    p.sup = std::max(a * box.x_min, a * box.x_max) + std::max(b * box.y_min, b * box.y_max) + c;
    p.lipschitz = std::abs(a) + std::abs(b);
    return p;
  }
  throw ConfigError("unknown potential kind '" + spec.kind + "'");
}

ReferenceMeasure make_measure(const MeasureSpec& spec, const MapSystem& system,
                              const TestFunctionBank& bank) {
  if (spec.kind == "bernoulli") {
    if (system.name() != "horseshoe") throw ConfigError("bernoulli measure needs the horseshoe system");
    return bernoulli_measure(spec.p, bank);
  }
  if (spec.kind == "lebesgue") {
    if (system.name() != "cat") throw ConfigError("lebesgue measure needs the cat system");
    return lebesgue_torus(bank);
  }
  if (spec.kind == "long_orbit") return long_orbit_measure(system, spec.start, spec.length, bank);
  throw ConfigError("unknown measure kind '" + spec.kind + "'");
}

std::string config_hash(const Json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// ---------------------------------------------------------------------------

double continuity_delta(double rho, double max_lipschitz_psi, double lipschitz_phi) {
  double d = std::numeric_limits<double>::infinity();
  if (max_lipschitz_psi > 0.0) d = std::min(d, rho / (2.0 * max_lipschitz_psi));
  if (lipschitz_phi > 0.0) d = std::min(d, rho / lipschitz_phi);
  return d;
}

std::vector<CheckResult> validate_constants(const ValidationInput& in) {
  std::vector<CheckResult> out;
  {
    CheckResult c{"parameter_sanity", true, true, 0.0, 0.0, ""};
    std::string why;
    if (in.n < 1) why += "n < 1; ";
    if (!(in.rho > 0.0)) why += "rho <= 0; ";
    if (in.s && in.bank_size && (*in.s < 1 || *in.s > *in.bank_size)) why += "s outside bank; ";
    if (in.kappa && in.cover_delta && !(*in.kappa < *in.cover_delta / 2.0)) why += "kappa >= cover_delta/2; ";
    c.passed = why.empty();
    c.detail = why.empty() ? "ok" : why;
    out.push_back(c);
  }
  if (in.rectangles) {
    const double lhs = std::exp(static_cast<double>(in.n) * in.rho);
    out.push_back({"rectangle_count_budget", true, lhs >= static_cast<double>(*in.rectangles), lhs,
                   static_cast<double>(*in.rectangles), "exp(n*rho) >= #rectangles"});
  }
  if (in.e0_pressure && in.p_mu_hat) {
    const double d = std::abs(*in.e0_pressure - *in.p_mu_hat);
    out.push_back({"separated_sum_matches_free_energy", true, d < in.rho, d, in.rho,
                   "|(1/n) log sum_E0 exp S_n phi - P_mu_hat| < rho"});
  }
  if (in.mass_fraction) {
    out.push_back({"lambda0_mass_fraction", false, *in.mass_fraction >= 0.5, *in.mass_fraction, 0.5,
                   "sampled mu(Lambda_0)/mu(Lambda) >= 1/2"});
  }
  if (in.delta && in.max_lipschitz_psi) {
    const double bound = continuity_delta(in.rho, *in.max_lipschitz_psi, in.lipschitz_phi.value_or(0.0));
    out.push_back({"continuity_scale", false, *in.delta <= bound, *in.delta, bound,
                   "delta <= min(rho/(2 Lip psi), rho/Lip phi)"});
  }
  if (in.p_mu_hat && in.reference_free_energy) {
    const double d = std::abs(*in.p_mu_hat - *in.reference_free_energy);
    out.push_back({"spanning_pressure_proximity", false, d < in.rho / 2.0, d, in.rho / 2.0,
                   "|P_mu_hat - (h(mu) + int phi)| < rho/2"});
  }
  return out;
}

namespace {

Json check_json(const CheckResult& c) {
  Json j;
  j["name"] = c.name;
  j["required"] = c.required;
  j["passed"] = c.passed;
  j["measured"] = c.measured;
  j["bound"] = c.bound;
  j["detail"] = c.detail;
  return j;
}

Json estimate_json(const PressureEstimate& e) {
  Json j;
  j["value"] = e.value;
  j["lower"] = e.lower;
  j["upper"] = e.upper;
  j["n"] = e.n;
  j["method"] = to_string(e.method);
  return j;
}

Json stage_config_json(const StageConfig& st) {
  Json j;
  j["rho"] = st.rho;
  j["s"] = st.s;
  j["n"] = st.n;
  j["delta"] = st.delta;
  j["cover_delta"] = st.cover_delta;
  j["kappa"] = st.kappa;
  j["lambda"] = st.lambda;
  j["alpha"] = st.alpha;
  j["epsilon"] = st.epsilon;
  return j;
}

struct Context {
  const RunConfig& cfg;
  SystemPtr system;
  TestFunctionBank bank;
  ReferenceMeasure mu;
  Potential phi;
  ConePair cones;
};

// Branch orbits (R points each), computed once per model.
std::vector<std::vector<Point>> branch_orbits(const MapSystem& sys, const AlekseevModel& model) {
  std::vector<std::vector<Point>> out;
  out.reserve(model.branches.size());
  for (const auto& b : model.branches) {
    const OrbitSegment seg = iterate(sys, b.base_point, b.return_time);
    out.emplace_back(seg.points().begin(), seg.points().end());
  }
  return out;
}

// Calls visit(word) for every word of length l when there are at most
// `budget` of them, otherwise for `budget` uniformly random words.
template <typename Visit>
void for_words(std::size_t K, std::size_t l, std::size_t budget, Rng& rng, Visit visit) {
  double total = 1.0;
  for (std::size_t i = 0; i < l; ++i) total *= static_cast<double>(K);
  std::vector<std::size_t> word(l, 0);
  if (total <= static_cast<double>(budget)) {
    const auto count = static_cast<std::size_t>(total);
    for (std::size_t c = 0; c < count; ++c) {
      std::size_t v = c;
      for (std::size_t i = 0; i < l; ++i) {
        word[i] = v % K;
        v /= K;
      }
      visit(word);
    }
    return;
  }
  for (std::size_t c = 0; c < budget; ++c) {
    for (auto& w : word) {
      w = std::min(K - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(K)));
    }
    visit(word);
  }
}

StageReport run_stage(const Context& ctx, std::size_t k) {
  const RunConfig& cfg = ctx.cfg;
  const MapSystem& sys = *ctx.system;
  StageReport rep;
  rep.k = k;
  rep.stage = cfg.schedule[k];
  const StageConfig& st = rep.stage;
  Json j;
  j["k"] = k;
  j["config"] = stage_config_json(st);
  std::vector<CheckResult> checks;

  try {
    // Lambda: mu-sample, optionally restricted to a finite-horizon Pesin set.
    const auto sample = ctx.mu.sample(cfg.sample_size, derive_seed(cfg.seed, k, 1));
    std::vector<Point> lambda_set;
    std::size_t pesin_rejected = 0;
    if (cfg.pesin) {
      for (const Point& p : sample) {
        bool ok = false;
        try {
          ok = pesin_window_check(sys, p, cfg.pesin->ell, cfg.pesin->chi, cfg.pesin->horizon);
        } catch (const Error&) {
          ok = false;
        }
        if (ok) {
          lambda_set.push_back(p);
        } else {
          ++pesin_rejected;
        }
      }
    } else {
      lambda_set = sample;
    }

    // Lambda_0: quasi-generic at rho/2 over the whole window.
    const std::size_t n_hi = static_cast<std::size_t>(
        std::floor((1.0 + st.rho) * static_cast<double>(st.n) + 1e-9));
    const std::size_t w0 = cfg.qg_window ? cfg.qg_window->first : st.n;
    const std::size_t w1 = cfg.qg_window ? cfg.qg_window->second : n_hi;
    const NeighborhoodSpec half(st.rho / 2.0, st.s);
    const FilterResult filt = filter_quasi_generic_set(lambda_set, w0, w1, half, ctx.mu, sys, ctx.bank);
    const auto& lambda0 = filt.survivors;
    const double mass_fraction =
        lambda_set.empty() ? 0.0 : static_cast<double>(lambda0.size()) / static_cast<double>(lambda_set.size());
    {
      Json s;
      s["sample_size"] = sample.size();
      s["pesin_rejected"] = pesin_rejected;
      s["lambda_size"] = lambda_set.size();
      s["lambda0_size"] = lambda0.size();
      s["escaped"] = filt.escaped_indices.size();
      s["mass_fraction"] = mass_fraction;
      s["window"] = {w0, w1};
      j["sampling"] = s;
    }
    if (lambda0.empty()) throw Error("no quasi-generic points survived the filter");

    const RectangleCover cover = build_rectangle_cover(sys, lambda0, st.cover_delta, st.kappa, st.lambda);
    ReturnSearch search{st.n, st.rho, st.s, ctx.cones};
    const DetectionResult det = detect_returns(sys, lambda0, cover, search, ctx.phi, ctx.mu, ctx.bank);
    {
      Json d;
      d["rectangles"] = cover.size();
      d["candidates"] = det.branches.size();
      Json rj;
      for (const auto& [reason, count] : det.rejections) rj[reason] = count;
      d["rejections"] = rj;
      d["target_tolerance"] = st.kappa / 4.0;
      j["detection"] = d;
    }

    AlekseevModel model = select_branch_family(sys, det.branches, cover, st.n, st.delta);
    model.bank_id = ctx.bank.id();
    model.mu_id = ctx.mu.id();
    rep.branches = model.branches.size();
    rep.saturate = saturate_size(model);
    const double e0_pressure = model.e0_log_sum / static_cast<double>(st.n);
    {
      Json m;
      m["branches"] = model.branches.size();
      m["rectangle"] = model.rectangle;
      m["saturate_size"] = rep.saturate;
      const auto times = model.return_times();
      m["return_time_min"] = *std::min_element(times.begin(), times.end());
      m["return_time_max"] = *std::max_element(times.begin(), times.end());
      m["e0_size"] = model.e0_size;
      m["e0_pressure"] = e0_pressure;
      j["model"] = m;
    }

    // Free energy from the spanning estimator.
    const auto span_sample = ctx.mu.sample(cfg.spanning_sample_size, derive_seed(cfg.seed, k, 2));
    const SpanningReport sp =
        spanning_free_energy_report(sys, span_sample, st.alpha, BowenBallSpec(st.epsilon, st.n), ctx.phi);
    rep.p_mu_hat = sp.estimate.value;
    double phi_integral = 0.0;
    bool phi_integral_exact = ctx.phi.is_constant();
    if (phi_integral_exact) {
      phi_integral = ctx.phi.inf;
    } else {
      for (const Point& p : span_sample) phi_integral += ctx.phi(p);
      phi_integral /= static_cast<double>(span_sample.size());
    }
    if (ctx.mu.entropy()) rep.reference = *ctx.mu.entropy() + phi_integral;
    {
      Json s = estimate_json(sp.estimate);
      s["alpha"] = sp.alpha;
      s["epsilon"] = st.epsilon;
      s["balls"] = sp.balls;
      s["covered"] = sp.covered;
      s["sample_size"] = sp.sample_size;
      s["escaped"] = sp.escaped;
      j["p_mu_hat"] = s;
      Json r;
      r["phi_integral"] = phi_integral;
      r["phi_integral_exact"] = phi_integral_exact;
      if (ctx.mu.entropy()) r["entropy"] = *ctx.mu.entropy();
      if (rep.reference) r["free_energy"] = *rep.reference;
      j["reference"] = r;
    }

    // Symbolic layer.
    const SymbolicModel sym = SymbolicModel::from_alekseev(model, ctx.system, ctx.phi);
    const std::size_t n_max = std::max(cfg.n_max, 4 * sym.max_return_time());
    const PressureEstimate pp = pressure_periodic(sym, n_max);
    rep.pressure = pp.value;
    rep.bowen_root = bowen_root(sym);
    rep.gap = std::abs(rep.pressure - rep.reference.value_or(rep.p_mu_hat));
    {
      Json p = estimate_json(pp);
      p["bowen_root"] = rep.bowen_root;
      p["gap"] = rep.gap;
      p["gap_reference"] = rep.reference ? "free_energy" : "p_mu_hat";
      j["pressure"] = p;
    }

    const SandwichReport sw = sandwich_check(sym, ctx.phi.sup, ctx.phi.inf, rep.p_mu_hat, st.rho, n_max);
    rep.sandwich_passed = sw.passed;
    {
      Json s;
      s["pressure"] = sw.pressure;
      s["lower"] = sw.lower;
      s["upper"] = sw.upper;
      s["slack"] = sw.slack;
      s["p_mu_hat"] = sw.p_mu_hat;
      s["passed"] = sw.passed;
      j["sandwich"] = s;
      checks.push_back({"sandwich_bound", true, sw.passed, sw.pressure, sw.lower,
                        "lower <= periodic pressure <= upper"});
    }

    // Strong approximation and rate floor over words of the model.
    const auto orbits = branch_orbits(sys, model);
    const std::size_t K = model.branches.size();
    std::vector<std::vector<double>> branch_sum(K, std::vector<double>(st.s, 0.0));
    double branch_sup = 0.0;
    for (std::size_t b = 0; b < K; ++b) {
      for (std::size_t i = 0; i < st.s; ++i) {
        for (const Point& p : orbits[b]) branch_sum[b][i] += ctx.bank[i].fn(p);
        const double avg = branch_sum[b][i] / static_cast<double>(orbits[b].size());
        branch_sup = std::max(branch_sup, std::abs(avg - ctx.mu.moments()[i]));
      }
    }
    Rng word_rng(derive_seed(cfg.seed, k, 4));
    double word_sup = 0.0;
    std::size_t words_checked = 0;
    double rate_min = std::numeric_limits<double>::infinity();
    std::size_t cycles_checked = 0;
    for (std::size_t l = 1; l <= cfg.word_length; ++l) {
      for_words(K, l, cfg.strong_words, word_rng, [&](const std::vector<std::size_t>& w) {
        std::size_t len = 0;
        for (std::size_t b : w) len += orbits[b].size();
        for (std::size_t i = 0; i < st.s; ++i) {
          double s = 0.0;
          for (std::size_t b : w) s += branch_sum[b][i];
          word_sup = std::max(word_sup, std::abs(s / static_cast<double>(len) - ctx.mu.moments()[i]));
        }
        ++words_checked;
      });
      for_words(K, l, 50, word_rng, [&](const std::vector<std::size_t>& w) {
        CocycleAccumulator acc;
        std::size_t len = 0;
        for (std::size_t b : w) {
          for (const Point& p : orbits[b]) acc.push(sys.jacobian(p));
          len += orbits[b].size();
        }
        const double dl = static_cast<double>(len);
        rate_min = std::min({rate_min, std::abs(acc.log_sigma_max() / dl), std::abs(acc.log_sigma_min() / dl)});
        ++cycles_checked;
      });
    }
    const double strong_value = std::max(branch_sup, word_sup);
    rep.strong_passed = strong_value < 3.0 * st.rho;
    const double rate_floor = std::log(st.lambda) - 0.05;
    rep.rate_passed = rate_min >= rate_floor;
    {
      Json s;
      s["branch_sup"] = branch_sup;
      s["word_sup"] = word_sup;
      s["words_checked"] = words_checked;
      s["word_length"] = cfg.word_length;
      s["bound"] = 3.0 * st.rho;
      s["passed"] = rep.strong_passed;
      j["strong_approximation"] = s;
      Json r;
      r["min_exponent"] = rate_min;
      r["floor"] = rate_floor;
      r["cycles_checked"] = cycles_checked;
      r["passed"] = rep.rate_passed;
      j["rate_floor"] = r;
      checks.push_back({"strong_approximation", true, rep.strong_passed, strong_value, 3.0 * st.rho,
                        "word empirical measures within 3 rho for i <= s"});
      checks.push_back({"hyperbolicity_rate_floor", true, rep.rate_passed, rate_min, rate_floor,
                        "cycle exponents >= log(lambda) - 0.05"});
    }

    // Shadowing balance on words of three symbols' worth of time.
    {
      const auto periods = admissible_periods(sym, 3);
      const std::size_t N = periods.periods.front();
      const BalanceReport bal = verify_balance(sym, N, st.rho, 0.0, cfg.balance_words, derive_seed(cfg.seed, k, 3));
      rep.balance_passed = bal.passed;
      Json b;
      b["N"] = N;
      b["words"] = bal.words;
      b["lower_margin"] = bal.lower_margin;
      b["upper_margin"] = bal.upper_margin;
      b["max_shadow_distance"] = bal.max_shadow_distance;
      b["max_newton_residual"] = bal.max_newton_residual;
      b["passed"] = bal.passed;
      j["balance"] = b;
      checks.push_back({"shadowing_balance", true, bal.passed, std::min(bal.lower_margin, bal.upper_margin), 0.0,
                        "periodic-orbit sums within N rho of word weights"});
    }

    // Counting bounds on admissible periods.
    {
      bool ok = true;
      double worst_ratio = 0.0;
      for (std::size_t p = 1; p <= 12; ++p) {
        const auto aps = admissible_periods(sym, p);
        const double cap = static_cast<double>(st.n * p) * st.rho;
        worst_ratio = std::max(worst_ratio, static_cast<double>(aps.periods.size()) / cap);
        if (static_cast<double>(aps.periods.size()) > cap) ok = false;
        for (std::size_t N : aps.periods) {
          try {
            const auto [lo, hi] = word_count_bounds(N, st.n, st.rho);
            if (p < lo || p > hi) ok = false;
          } catch (const InfeasiblePeriod&) {
            ok = false;
          }
        }
      }
      rep.periods_passed = ok;
      Json a;
      a["max_count_ratio"] = worst_ratio;
      a["passed"] = ok;
      j["admissible_periods"] = a;
      checks.push_back({"admissible_period_counts", true, ok, worst_ratio, 1.0,
                        "word-length bounds and |Delta(p)| <= n p rho for p <= 12"});
    }

    if (cfg.ambient_pressure) {
      const double tol = st.rho + sw.slack;
      checks.push_back({"below_ambient_pressure", true, rep.pressure <= *cfg.ambient_pressure + tol, rep.pressure,
                        *cfg.ambient_pressure + tol, "model pressure <= ambient pressure + tolerance"});
    }

    ValidationInput vin;
    vin.n = st.n;
    vin.rho = st.rho;
    vin.s = st.s;
    vin.bank_size = ctx.bank.size();
    vin.rectangles = cover.size();
    vin.e0_pressure = e0_pressure;
    vin.p_mu_hat = rep.p_mu_hat;
    vin.reference_free_energy = rep.reference;
    vin.mass_fraction = mass_fraction;
    vin.delta = st.delta;
    vin.max_lipschitz_psi = ctx.bank.max_lipschitz(st.s);
    vin.lipschitz_phi = ctx.phi.lipschitz;
    vin.kappa = st.kappa;
    vin.cover_delta = st.cover_delta;
    auto vc = validate_constants(vin);
    checks.insert(checks.begin(), vc.begin(), vc.end());

    rep.model = std::move(model);
    rep.symbolic = sym;
    rep.ok = true;
  } catch (const Error& e) {
    rep.ok = false;
    rep.failure = e.what();
  } catch (const std::invalid_argument& e) {
    rep.ok = false;
    rep.failure = e.what();
  }

  rep.required_checks_passed = rep.ok;
  Json cj = Json::array();
  for (const auto& c : checks) {
    if (c.required && !c.passed) rep.required_checks_passed = false;
    cj.push_back(check_json(c));
  }
  j["checks"] = cj;
  j["status"] = rep.ok ? "ok" : "stage_failure";
  if (!rep.ok) j["failure"] = rep.failure;
  rep.json = std::move(j);
  return rep;
}

}  // namespace

int RunReport::exit_code() const {
  for (const auto& s : stages) {
    if (!s.ok) return 3;
  }
  for (const auto& s : stages) {
    if (!s.required_checks_passed) return 2;
  }
  return 0;
}

RunReport run_theorem_a(const RunConfig& config) {
  const auto system = make_system(config.system);
  const TestFunctionBank bank = TestFunctionBank::by_id(config.bank);
  ConePair cones = system->default_cones();
  if (config.unstable_width) cones.unstable = cones.unstable.with_width(*config.unstable_width);
  if (config.stable_width) cones.stable = cones.stable.with_width(*config.stable_width);
  Context ctx{config, system, bank, make_measure(config.measure, *system, bank),
              make_potential(config.potential, system->bounds()), cones};

  RunReport rep;
  rep.config_hash = config_hash(config.raw);
  Json j;
  j["schema_version"] = 1;
  j["config_hash"] = rep.config_hash;
  j["seed"] = config.seed;
  j["system"] = system->name();
  j["experimental"] = system->experimental();
  j["potential"] = ctx.phi.id;
  j["measure"] = ctx.mu.id();
  {
    Json b;
    b["id"] = bank.id();
    Json names = Json::array();
    for (std::size_t i = 0; i < bank.size(); ++i) names.push_back(bank[i].name);
    b["functions"] = names;
    j["bank"] = b;
  }
  j["quasi_generic_window"] = config.qg_window
                                  ? Json{config.qg_window->first, config.qg_window->second}
                                  : Json("per-stage [n, floor((1+rho) n)]");
  Json stages = Json::array();
  for (std::size_t k = 0; k < config.schedule.size(); ++k) {
    rep.stages.push_back(run_stage(ctx, k));
    stages.push_back(rep.stages.back().json);
  }
  j["stages"] = stages;
  j["exit_code"] = rep.exit_code();
  rep.json = std::move(j);
  return rep;
}

void write_run_outputs(const RunReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "report.json");
    out << report.json.dump(2) << '\n';
  }
  {
    std::ofstream out(fs::path(dir) / "series.csv");
    out << std::setprecision(17);
    out << "k,rho,s,pressure,p_mu_hat,gap\n";
    for (const auto& s : report.stages) {
      if (!s.ok) continue;
      out << s.k << ',' << s.stage.rho << ',' << s.stage.s << ',' << s.pressure << ',' << s.p_mu_hat << ','
          << s.gap << '\n';
    }
  }
  for (const auto& s : report.stages) {
    if (!s.model) continue;
    std::ofstream out(fs::path(dir) / ("model_stage_" + std::to_string(s.k) + ".json"));
    out << model_to_json(*s.model) << '\n';
  }
}

// ---------------------------------------------------------------------------

int DiagonalReport::exit_code() const {
  int code = 0;
  for (const auto& r : runs) code = std::max(code, r.exit_code());
  return code;
}

std::vector<FamilyMember> parse_family(const Json& j) {
  Reader r(j, "family config");
  const int version = r.req<int>("schema_version");
  if (version != 1) throw ConfigError("unsupported schema_version " + std::to_string(version));
  r.opt<double>("stage_threshold");
  r.opt<std::string>("output_dir");
  const Json* fam = r.child("family");
  if (!fam || !fam->is_array() || fam->empty()) throw ConfigError("'family' must be a nonempty array");
  r.finish();
  std::vector<FamilyMember> out;
  for (std::size_t i = 0; i < fam->size(); ++i) {
    const Json& e = (*fam)[i];
    FamilyMember m;
    m.label = "member_" + std::to_string(i);
    if (e.is_object() && e.contains("synthetic")) {
      Reader er(e, "family[" + std::to_string(i) + "]");
      const Json* syn = er.child("synthetic");
      if (auto l = er.opt<std::string>("label")) m.label = *l;
      er.finish();
      Reader sr(*syn, "synthetic");
      auto times = sr.req<std::vector<std::size_t>>("return_times");
      auto weights = sr.req<std::vector<double>>("weights");
      sr.finish();
      m.synthetic = SymbolicModel::make_synthetic(std::move(times), std::move(weights));
    } else {
      m.config = parse_run_config(e);
    }
    out.push_back(std::move(m));
  }
  return out;
}

DiagonalReport run_theorem_b(const std::vector<FamilyMember>& family, double stage_threshold) {
  if (family.empty()) throw std::invalid_argument("run_theorem_b needs a nonempty family");
  DiagonalReport rep;

  // Certificate first: members contribute their final usable model.
  std::vector<CertificateMember> members;
  std::vector<std::optional<RunReport>> runs(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto& m = family[i];
    if (m.synthetic) {
      members.push_back(certificate_member(*m.synthetic, m.label));
      continue;
    }
    runs[i] = run_theorem_a(*m.config);
    const SymbolicModel* last = nullptr;
    for (const auto& s : runs[i]->stages) {
      if (s.symbolic) last = &*s.symbolic;
    }
    if (last) members.push_back(certificate_member(*last, m.label));
  }
  if (members.empty()) throw CertificateNegative("no family member produced a model");
  rep.certificate = hyperbolic_potential_certificate(members);

  Json j;
  j["schema_version"] = 1;
  {
    Json c;
    c["pressure"] = rep.certificate.pressure;
    c["sup_integral"] = rep.certificate.sup_integral;
    c["gap"] = rep.certificate.gap;
    c["sequence"] = rep.certificate.sequence;
    c["best_label"] = rep.certificate.best_label;
    c["positive"] = rep.certificate.positive;
    j["certificate"] = c;
  }
  if (!rep.certificate.positive) {
    std::ostringstream os;
    os << std::setprecision(17) << "potential certificate not positive: gap=" << rep.certificate.gap;
    throw CertificateNegative(os.str());
  }

  Json diag = Json::array();
  rep.estimate = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < family.size(); ++i) {
    Json d;
    d["label"] = family[i].label;
    if (family[i].synthetic) {
      const double p = bowen_root(*family[i].synthetic);
      rep.chosen_stage.push_back(0);
      rep.chosen_pressure.push_back(p);
      d["stage"] = 0;
      d["pressure"] = p;
      d["synthetic"] = true;
      rep.estimate = std::max(rep.estimate, p);
      diag.push_back(d);
      continue;
    }
    const RunReport& run = *runs[i];
    // Most refined stage under the threshold, else the smallest gap.
    std::optional<std::size_t> chosen;
    for (const auto& s : run.stages) {
      if (s.ok && s.gap <= stage_threshold) chosen = s.k;
    }
    if (!chosen) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& s : run.stages) {
        if (s.ok && s.gap < best) {
          best = s.gap;
          chosen = s.k;
        }
      }
    }
    if (!chosen) {
      d["stage"] = nullptr;
      d["failure"] = "no successful stage";
      diag.push_back(d);
      rep.chosen_stage.push_back(std::numeric_limits<std::size_t>::max());
      rep.chosen_pressure.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const StageReport& s = run.stages[*chosen];
    rep.chosen_stage.push_back(*chosen);
    rep.chosen_pressure.push_back(s.pressure);
    rep.estimate = std::max(rep.estimate, s.pressure);
    if (s.reference) rep.reference = std::max(rep.reference.value_or(-std::numeric_limits<double>::infinity()), *s.reference);
    d["stage"] = *chosen;
    d["pressure"] = s.pressure;
    d["gap"] = s.gap;
    d["run"] = run.json;
    diag.push_back(d);
  }
  for (auto& r : runs) {
    if (r) rep.runs.push_back(std::move(*r));
  }
  j["stage_threshold"] = stage_threshold;
  j["diagonal"] = diag;
  j["estimate"] = rep.estimate;
  if (rep.reference) {
    j["reference"] = *rep.reference;
    j["gap"] = std::abs(rep.estimate - *rep.reference);
  }
  j["exit_code"] = rep.exit_code();
  rep.json = std::move(j);
  return rep;
}

}  // namespace hsp
