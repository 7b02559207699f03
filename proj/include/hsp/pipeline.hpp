#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hsp/dynamics.hpp"
#include "hsp/horseshoe.hpp"
#include "hsp/measures.hpp"
#include "hsp/symbolic.hpp"

namespace hsp {

using Json = nlohmann::ordered_json;

struct StageConfig {
  double rho = 0.1;
  std::size_t s = 1;
  std::size_t n = 10;
  double delta = 0.3;        // separation scale of E_0
  double cover_delta = 2.5;  // rectangle diameter
  double kappa = 1.0;
  double lambda = 2.0;
  double alpha = 0.25;
  double epsilon = 0.3;
};

struct PotentialSpec {
  std::string kind = "constant";  // constant | coordinate | linear
  double value = 0.0;
  int axis = 0;
  double scale = 1.0;
  double offset = 0.0;
  double a = 0.0, b = 0.0, c = 0.0;
};

struct MeasureSpec {
  std::string kind = "bernoulli";  // bernoulli | lebesgue | long_orbit
  double p = 0.5;
  Point start{0.1, 0.2};
  std::size_t length = 100000;
};

struct PesinSpec {
  double ell = 2.0;
  double chi = 0.5;
  std::size_t horizon = 10;
};

struct RunConfig {
  int schema_version = 1;
  std::string system = "horseshoe";
  PotentialSpec potential;
  MeasureSpec measure;
  std::string bank = "trig8";
  std::vector<StageConfig> schedule;
  std::size_t sample_size = 20000;
  std::size_t spanning_sample_size = 20000;
  std::size_t n_max = 200;
  std::uint64_t seed = 1;
  std::size_t word_length = 6;
  std::size_t strong_words = 2000;
  std::size_t balance_words = 100;
  std::optional<std::pair<std::size_t, std::size_t>> qg_window;
  std::optional<PesinSpec> pesin;
  std::optional<double> unstable_width;
  std::optional<double> stable_width;
  std::optional<double> ambient_pressure;
  std::string output_dir = "out";
  Json raw;  // normalised input, hashed into reports
};

// Strict parser: unknown keys, a missing schema_version or malformed values
// raise ConfigError.
RunConfig parse_run_config(const Json& j);
RunConfig load_run_config(const std::string& path);
Json read_json_file(const std::string& path);

Potential make_potential(const PotentialSpec& spec, const Box& box);
ReferenceMeasure make_measure(const MeasureSpec& spec, const MapSystem& system,
                              const TestFunctionBank& bank);

// 64-bit FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const Json& j);

struct CheckResult {
  std::string name;
  bool required = true;
  bool passed = false;
  double measured = 0.0;
  double bound = 0.0;
  std::string detail;
};

// Whatever is known about a stage; checks run only for populated fields.
struct ValidationInput {
  std::size_t n = 0;
  double rho = 0.0;
  std::optional<std::size_t> s;
  std::optional<std::size_t> bank_size;
  std::optional<std::size_t> rectangles;
  std::optional<double> e0_pressure;  // (1/n) log sum_{E_0} exp S_n phi
  std::optional<double> p_mu_hat;
  std::optional<double> reference_free_energy;
  std::optional<double> mass_fraction;
  std::optional<double> delta;
  std::optional<double> max_lipschitz_psi;
  std::optional<double> lipschitz_phi;
  std::optional<double> kappa;
  std::optional<double> cover_delta;
};

// Largest separation scale meeting the continuity conditions for the first s
// test functions (rho/2) and for phi (rho), from Lipschitz constants.
double continuity_delta(double rho, double max_lipschitz_psi, double lipschitz_phi);

std::vector<CheckResult> validate_constants(const ValidationInput& in);

struct StageReport {
  std::size_t k = 0;
  StageConfig stage;
  bool ok = false;
  std::string failure;
  std::size_t branches = 0;
  std::size_t saturate = 0;
  double pressure = 0.0;
  double bowen_root = 0.0;
  double p_mu_hat = 0.0;
  std::optional<double> reference;
  double gap = 0.0;
  bool sandwich_passed = false;
  bool strong_passed = false;
  bool rate_passed = false;
  bool balance_passed = false;
  bool periods_passed = false;
  bool required_checks_passed = false;
  std::optional<AlekseevModel> model;
  std::optional<SymbolicModel> symbolic;
  Json json;
};

struct RunReport {
  std::vector<StageReport> stages;
  std::string config_hash;
  Json json;
  // 0 success, 2 validation failure, 3 stage failure.
  int exit_code() const;
};

RunReport run_theorem_a(const RunConfig& config);

// Writes report.json, series.csv and model_stage_<k>.json into `dir`.
void write_run_outputs(const RunReport& report, const std::string& dir);

struct FamilyMember {
  std::optional<RunConfig> config;            // pipeline member
  std::optional<SymbolicModel> synthetic;     // symbolic-only member
  std::string label;
};

struct DiagonalReport {
  std::vector<RunReport> runs;
  CertificateReport certificate;
  std::vector<std::size_t> chosen_stage;  // m_n per member
  std::vector<double> chosen_pressure;
  double estimate = 0.0;
  std::optional<double> reference;
  Json json;
  int exit_code() const;
};

std::vector<FamilyMember> parse_family(const Json& j);
// Throws CertificateNegative when the family certificate is not positive.
DiagonalReport run_theorem_b(const std::vector<FamilyMember>& family, double stage_threshold = 0.15);

}  // namespace hsp
