#pragma once

#include "infnet/datagen.hpp"

#include <functional>

namespace infnet {

// State feedback for one subsystem: u_i = law(x_i).
using FeedbackLaw = std::function<Vec(const Vec& x)>;

enum class Integrator { Rosenbrock, DormandPrince };

struct SimConfig {
  // Closed loops with high-gain controllers are stiff, hence the default.
  Integrator method = Integrator::Rosenbrock;
  double horizon = 10.0;
  double sample_dt = 0.01;  // output grid
  double rtol = 1e-8;
  double atol_rel = 1e-10;  // absolute tolerance as a fraction of the initial norm
  long max_steps = 200'000;
};

struct SimResult {
  std::vector<double> t;
  std::vector<Mat> X;       // per subsystem n x samples
  std::vector<Mat> U;       // per subsystem m x samples
  double initial_norm = 0.0;
  double final_norm = 0.0;
  long steps = 0;
  long rejected = 0;
};

// Adaptive integration of the coupled truncated network, w_ij = x_j.
// Throws IntegrationDiverged on non-finite states or a collapsed step.
SimResult simulate_network(const TruncatedNetwork& net, const SubsystemClass& cls,
                           const FeedbackLaw& law, const Mat& x0, const SimConfig& cfg);

}  // namespace infnet
