#pragma once

#include "infnet/network.hpp"
#include "infnet/synthesis.hpp"

#include <string>
#include <vector>

namespace infnet {

class CompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ClassGains {
  std::string name;
  double kappa = 0.0;
  double alpha_lo = 0.0;
  double alpha_hi = 0.0;
  double rho = 0.0;
};

struct GainModel {
  std::vector<ClassGains> classes;
  Topology topology = Topology::Cascade;
  int card = 1;
};

struct GainEntry {
  double theta = 0.0;
  double omega = 0.0;
};

GainEntry build_gain_entry(double rho_i, double alpha_lo_j, double kappa_i);

// sup_j sum_i omega_ij in closed form: Card * omega for uniform bands.
double omega_norm_11(const GainModel& g);

struct SmallGainVerdict {
  bool pass = false;
  double bound = 0.0;
};
SmallGainVerdict small_gain(const GainModel& g);

struct MuKappa {
  std::vector<double> mu;
  double kappa_inf = 0.0;
  double column_lhs = 0.0;   // sum_i mu_i theta_ij
  double column_rhs = 0.0;   // (kappa_j - kappa_inf) mu_j
};
MuKappa compute_mu_kappa(const GainModel& g, double epsilon = 1e-9);

struct ClfParams {
  double alpha_lo = 0.0;
  double alpha_hi = 0.0;
  double kappa = 0.0;
};
ClfParams compose_clf(const GainModel& g, const std::vector<double>& mu, double kappa_inf);

struct CompositionResult {
  double theta = 0.0;
  double omega_entry = 0.0;
  double norm11 = 0.0;
  bool pass = false;
  std::vector<double> mu;
  double kappa_inf = 0.0;
  double clf_alpha_lo = 0.0;
  double clf_alpha_hi = 0.0;
  double epsilon = 0.0;
};
// Full chain; on small-gain failure pass = false and kappa_inf = 0.
CompositionResult compose(const GainModel& g, double epsilon = 1e-9);

// Column sums of an explicit N x N truncation of Omega (cross-check only).
double materialized_norm11(const GainModel& g, int N);

struct DecreaseReport {
  double worst_slack = 0.0;  // max (sum mu Vdot_i + kappa_inf V) / (1 + V)
  Mat witness;
  bool pass = false;
};
// Harness only: sampled network states with w_ij = x_j on the truncation.
DecreaseReport network_decrease_check(const TruncatedNetwork& net, const SubsystemClass& cls,
                                      const SynthesisResult& r, const std::vector<double>& mu,
                                      double kappa_inf, int samples, double radius,
                                      std::uint64_t seed = 11, double slack_tol = 1e-6);

// gains.csv: class, kappa, alpha_lo, alpha_hi, rho, theta, omega_entry, card, norm11, pass
std::string gain_table_csv(const GainModel& g, const CompositionResult& c);

}  // namespace infnet
