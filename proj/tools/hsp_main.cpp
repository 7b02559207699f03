#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hsp/dynamics.hpp"
#include "hsp/errors.hpp"
#include "hsp/horseshoe.hpp"
#include "hsp/pipeline.hpp"
#include "hsp/symbolic.hpp"

namespace {

constexpr int kBadConfig = 4;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> stages;
  std::optional<std::size_t> nmax;
  std::string system = "cat";
  std::vector<double> point{0.1, 0.2};
  std::size_t horizon = 50;
  std::string csv;
  std::size_t brute_nmax = 18;
  double threshold = 0.15;
};

void apply_overrides(hsp::RunConfig& cfg, const Options& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.nmax) cfg.n_max = *o.nmax;
  if (o.stages && *o.stages < cfg.schedule.size()) cfg.schedule.resize(*o.stages);
  if (o.seed || o.nmax || o.stages) {
    // Overrides are part of the provenance.
    if (o.seed) cfg.raw["seed"] = *o.seed;
    if (o.nmax) cfg.raw["n_max"] = *o.nmax;
    if (o.stages) cfg.raw["schedule"] = hsp::Json(cfg.raw["schedule"].begin(),
                                                  cfg.raw["schedule"].begin() + static_cast<long>(cfg.schedule.size()));
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
}

int cmd_theorem_a(const Options& o) {
  hsp::RunConfig cfg = hsp::load_run_config(o.config);
  apply_overrides(cfg, o);
  const hsp::RunReport rep = hsp::run_theorem_a(cfg);
  const std::string dir = o.out.empty() ? cfg.output_dir : o.out;
  hsp::write_run_outputs(rep, dir);
  for (const auto& s : rep.stages) {
    std::cout << "stage " << s.k << " rho=" << s.stage.rho << " s=" << s.stage.s;
    if (s.ok) {
      std::cout << " branches=" << s.branches << " pressure=" << s.pressure << " p_mu_hat=" << s.p_mu_hat
                << " gap=" << s.gap << " checks=" << (s.required_checks_passed ? "pass" : "FAIL") << '\n';
    } else {
      std::cout << " FAILED: " << s.failure << '\n';
    }
  }
  std::cout << "report written to " << dir << "/report.json\n";
  return rep.exit_code();
}

int cmd_theorem_b(const Options& o) {
  const hsp::Json j = hsp::read_json_file(o.config);
  auto family = hsp::parse_family(j);
  for (auto& m : family) {
    if (m.config) apply_overrides(*m.config, o);
  }
  double threshold = o.threshold;
  if (j.contains("stage_threshold")) threshold = j["stage_threshold"].get<double>();
  std::string dir = o.out;
  if (dir.empty()) dir = j.value("output_dir", std::string("out"));
  try {
    const hsp::DiagonalReport rep = hsp::run_theorem_b(family, threshold);
    write_text(std::filesystem::path(dir) / "diagonal.json", rep.json.dump(2) + "\n");
    std::cout << "estimate=" << rep.estimate << " certificate_gap=" << rep.certificate.gap << '\n';
    return rep.exit_code();
  } catch (const hsp::CertificateNegative& e) {
    std::cerr << "certificate negative: " << e.what() << '\n';
    return 2;
  }
}

hsp::SymbolicModel load_symbolic(const hsp::Json& j) {
  if (j.contains("branches")) return hsp::SymbolicModel::from_alekseev(hsp::model_from_json(j.dump()));
  if (!j.contains("return_times") || !j.contains("weights")) {
    throw hsp::ConfigError("model file needs return_times and weights, or branches");
  }
  return hsp::SymbolicModel::make_synthetic(j["return_times"].get<std::vector<std::size_t>>(),
                                            j["weights"].get<std::vector<double>>());
}

int cmd_pressure(const Options& o) {
  const hsp::SymbolicModel model = load_symbolic(hsp::read_json_file(o.config));
  const std::size_t n_max = o.nmax.value_or(200);
  const hsp::PressureEstimate est = hsp::pressure_periodic(model, n_max);
  hsp::Json j;
  j["alphabet_size"] = model.alphabet_size();
  j["value"] = est.value;
  j["lower"] = est.lower;
  j["upper"] = est.upper;
  j["n"] = est.n;
  j["method"] = hsp::to_string(est.method);
  j["bowen_root"] = hsp::bowen_root(model);
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (!o.out.empty()) write_text(std::filesystem::path(o.out) / "pressure.json", text);
  if (!o.csv.empty()) write_text(o.csv, hsp::brute_force_csv(model, o.brute_nmax));
  return 0;
}

int cmd_lyapunov(const Options& o) {
  if (o.point.size() != 2) throw hsp::ConfigError("--point takes two numbers");
  const auto sys = hsp::make_system(o.system);
  const hsp::LyapunovReport rep = hsp::finite_time_lyapunov(*sys, {o.point[0], o.point[1]}, o.horizon);
  hsp::Json j;
  j["system"] = sys->name();
  j["horizon"] = rep.horizon;
  j["exponents"] = rep.exponents;
  j["min_abs"] = rep.min_abs;
  hsp::Json angles = hsp::Json::array();
  for (double a : rep.direction_angles) {
    if (std::isfinite(a)) {
      angles.push_back(a);
    } else {
      angles.push_back(nullptr);
    }
  }
  j["direction_angles_deg"] = angles;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_validate(const Options& o) {
  const hsp::Json j = hsp::read_json_file(o.config);
  std::vector<hsp::CheckResult> checks;
  if (j.contains("schedule")) {
    hsp::RunConfig cfg = hsp::parse_run_config(j);
    apply_overrides(cfg, o);
    const hsp::RunReport rep = hsp::run_theorem_a(cfg);
    for (const auto& s : rep.stages) {
      if (!s.ok) {
        checks.push_back({"stage_" + std::to_string(s.k), true, false, 0.0, 0.0, s.failure});
        continue;
      }
      for (const auto& c : s.json["checks"]) {
        checks.push_back({"stage_" + std::to_string(s.k) + "." + c["name"].get<std::string>(),
                          c["required"].get<bool>(), c["passed"].get<bool>(), c["measured"].get<double>(),
                          c["bound"].get<double>(), c["detail"].get<std::string>()});
      }
    }
  } else {
    hsp::ValidationInput in;
    in.n = j.at("n").get<std::size_t>();
    in.rho = j.at("rho").get<double>();
    auto opt_size = [&](const char* k, std::optional<std::size_t>& dst) {
      if (j.contains(k)) dst = j[k].get<std::size_t>();
    };
    auto opt_double = [&](const char* k, std::optional<double>& dst) {
      if (j.contains(k)) dst = j[k].get<double>();
    };
    opt_size("s", in.s);
    opt_size("bank_size", in.bank_size);
    opt_size("rectangles", in.rectangles);
    opt_double("e0_pressure", in.e0_pressure);
    opt_double("p_mu_hat", in.p_mu_hat);
    opt_double("reference_free_energy", in.reference_free_energy);
    opt_double("mass_fraction", in.mass_fraction);
    opt_double("delta", in.delta);
    opt_double("max_lipschitz_psi", in.max_lipschitz_psi);
    opt_double("lipschitz_phi", in.lipschitz_phi);
    opt_double("kappa", in.kappa);
    opt_double("cover_delta", in.cover_delta);
    checks = hsp::validate_constants(in);
  }
  bool all = true;
  for (const auto& c : checks) {
    all = all && c.passed;
    std::cout << (c.passed ? "PASS " : "FAIL ") << (c.required ? "[required] " : "[advisory] ") << c.name
              << " measured=" << c.measured << " bound=" << c.bound << "  " << c.detail << '\n';
  }
  return all ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-return-time horseshoes and topological pressure"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", o.config, "JSON input");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "override the config seed");
    sub->add_option("--stages", o.stages, "run only the first k stages");
    sub->add_option("--nmax", o.nmax, "periodic-sum horizon");
  };

  auto* a = app.add_subcommand("theorem-a", "run the staged horseshoe pipeline");
  add_common(a, true);
  auto* b = app.add_subcommand("theorem-b", "diagonal run over a family of measures");
  add_common(b, true);
  b->add_option("--threshold", o.threshold, "stage gap threshold");
  auto* p = app.add_subcommand("pressure", "pressure of a symbolic model");
  add_common(p, true);
  p->add_option("--csv", o.csv, "write the brute-force comparison CSV here");
  p->add_option("--brute-nmax", o.brute_nmax, "horizon of the brute-force comparison");
  auto* l = app.add_subcommand("lyapunov", "finite-time Lyapunov exponents at a point");
  add_common(l, false);
  l->add_option("--system", o.system, "horseshoe | cat | henon | rotation");
  l->add_option("--point", o.point, "x y")->expected(2);
  l->add_option("--horizon", o.horizon, "number of iterates");
  auto* v = app.add_subcommand("validate", "constant checklist for a run or a parameter set");
  add_common(v, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*a) return cmd_theorem_a(o);
    if (*b) return cmd_theorem_b(o);
    if (*p) return cmd_pressure(o);
    if (*l) return cmd_lyapunov(o);
    if (*v) return cmd_validate(o);
  } catch (const hsp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
