#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hsp/dynamics.hpp"
#include "hsp/horseshoe.hpp"
#include "hsp/measures.hpp"
#include "hsp/pressure_metric.hpp"

namespace hsp {

// Base orbits of a run-derived model, needed to rebuild true periodic orbits.
struct OrbitContext {
  SystemPtr system;
  Potential phi;
  std::vector<Point> base_points;
};

// Full shift on #E symbols; symbol i takes n_i steps and carries weight w_i.
struct SymbolicModel {
  std::vector<std::size_t> return_times;
  std::vector<double> weights;
  bool synthetic = true;
  std::optional<OrbitContext> context;

  std::size_t alphabet_size() const { return return_times.size(); }
  std::size_t max_return_time() const;
  std::size_t min_return_time() const;

  static SymbolicModel make_synthetic(std::vector<std::size_t> times, std::vector<double> weights);
  // Run-derived model. Without a system the orbit context is absent.
  static SymbolicModel from_alekseev(const AlekseevModel& model, SystemPtr system = nullptr,
                                     std::optional<Potential> phi = std::nullopt);
};

struct AdmissiblePeriodSet {
  std::size_t p = 0;
  std::vector<std::size_t> periods;  // ascending
};

// Totals sum_{k<p} n_{u_k} over all words u of length p.
AdmissiblePeriodSet admissible_periods(const SymbolicModel& model, std::size_t p);

// (ceil(N / (n (1+rho))), floor(N / n)); InfeasiblePeriod when empty.
std::pair<std::size_t, std::size_t> word_count_bounds(std::size_t N, std::size_t n, double rho);

// log C[N] for N = 0..N_max with C[N] = sum over words of total length N of
// exp(sum of weights); -inf where no word fits.
struct PeriodicSumTable {
  std::vector<double> log_c;
  std::size_t n_max = 0;
};

PeriodicSumTable periodic_sum_table(const SymbolicModel& model, std::size_t n_max);

// Exhaustive enumeration of words (the oracle for the table).
std::vector<double> brute_force_log_counts(const SymbolicModel& model, std::size_t n_max);
// CSV with columns N, log_C_exact, log_C_table, diff.
std::string brute_force_csv(const SymbolicModel& model, std::size_t n_max);

// Max over N in [N_max/2, N_max] with C[N] > 0 of (1/N) log C[N]. `lower` is
// the smaller of the values at the two largest such N.
PressureEstimate pressure_periodic(const SymbolicModel& model, std::size_t n_max);

// Unique s with sum_i exp(w_i - s n_i) = 1, by bisection.
double bowen_root(const SymbolicModel& model);

struct BalanceReport {
  std::size_t N = 0;
  double rho = 0.0;
  double phi_shift = 0.0;
  std::size_t words = 0;
  // min over words of S_N(phi + rho)(z) - sum of weights (should be >= 0)
  double lower_margin = 0.0;
  // min over words of sum of weights - S_N(phi - rho)(z) (should be >= 0)
  double upper_margin = 0.0;
  double max_shadow_distance = 0.0;
  double max_newton_residual = 0.0;
  bool synthetic = true;
  bool passed = false;
};

// Samples words of total length N uniformly; for each, compares the Birkhoff
// sum along the periodic orbit it codes with the sum of branch weights. The
// constant phi_shift is added to phi and to every branch weight.
BalanceReport verify_balance(const SymbolicModel& model, std::size_t N, double rho, double phi_shift,
                             std::size_t words = 100, std::uint64_t seed = 1);

// Samples `count` words of total length N, uniformly among all such words.
std::vector<std::vector<std::size_t>> sample_words(const SymbolicModel& model, std::size_t N,
                                                   std::size_t count, std::uint64_t seed);

// Periodic orbit of the run's map coding `word`, by Newton on the cyclic
// shooting residual seeded with the concatenated branch orbits.
struct ShadowOrbit {
  std::vector<Point> points;
  double residual = 0.0;
  double shadow_distance = 0.0;
};
ShadowOrbit periodic_orbit_for_word(const SymbolicModel& model, const std::vector<std::size_t>& word);

struct SandwichReport {
  double pressure = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double slack = 0.0;
  double p_mu_hat = 0.0;
  double rho = 0.0;
  double phi_inf = 0.0;
  double phi_sup = 0.0;
  bool passed = false;
};

// rho inf/(1+rho) + (P - 3 rho)/(1+rho) - slack <= pressure <= P + 2 rho + rho sup + slack
// with slack = 3 log(saturate size) / N_max.
SandwichReport sandwich_check(const SymbolicModel& model, double phi_sup, double phi_inf,
                              double p_mu_hat, double rho, std::size_t n_max);

struct CertificateMember {
  double free_energy = 0.0;
  double phi_integral = 0.0;
  std::string label;
};

// Free energy = Bowen root; phi_integral = sup of int phi over invariant
// measures of the model = max_i w_i / n_i.
CertificateMember certificate_member(const SymbolicModel& model, std::string label);

struct CertificateReport {
  double pressure = 0.0;       // sup of free energies
  double sup_integral = 0.0;   // sup of phi integrals
  double gap = 0.0;
  std::vector<double> sequence;  // running maxima of the free energies
  std::size_t best = 0;
  std::string best_label;
  bool positive = false;
};

CertificateReport hyperbolic_potential_certificate(const std::vector<CertificateMember>& family);

}  // namespace hsp
