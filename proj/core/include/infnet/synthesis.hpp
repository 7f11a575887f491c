#pragma once

#include "infnet/datagen.hpp"
#include "infnet/sdp.hpp"

#include <optional>
#include <string>

namespace infnet {

class SynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DMode { Unknown, Known };

// Takes only data and dictionaries; ground truth never enters here.
struct SynthesisProblem {
  const TrajectoryRecord* record = nullptr;
  std::vector<Monomial> dict_F;
  PolyMatrix dict_G;
  PolyMatrix psi;
  int n = 0;
  int m = 0;
  double kappa = 0.0;
  double vartheta = 0.0;
  DMode mode = DMode::Unknown;
  double varkappa = 0.0;  // unknown-D
  Mat D;                  // known-D, n x sigma
  int deg_K = 2;
  int deg_gamma = 0;
  int gram_degree = 0;    // 0: ceil(maxdeg/2)
  bool precondition = true;
};

// Everything needed to rebuild the condition matrix from (Phi, K, gamma)
// in the compiled coordinates x~ = x / scale.
struct CompiledCondition {
  int n = 0, m = 0, N = 0, M = 0, sigma = 0;
  int dim = 0;            // n + s
  double scale = 1.0;
  double decay = 0.0;     // kappa + vartheta
  Mat Zn;                 // whitened, normalized data matrix
  Mat Tq;                 // whitening applied to B
  PolyMatrix psi;
  PolyMatrix dict_G;
  std::vector<Monomial> k_basis;
  std::vector<Monomial> gamma_basis;
  std::vector<Monomial> gram_basis;
  int gram_degree = 0;
};

struct CompiledSdp {
  SdpProblem sdp;
  CompiledCondition cond;
  int phi_block = 0;
  int gamma_block = 0;
  int gram_block = 0;
  int k_first = 0;        // first free variable of K coefficients
};

struct SynthesisResult {
  SymMatrix Phi;
  SymMatrix P;
  PolyMatrix K;           // m x n, original coordinates
  Polynomial gamma;       // compiled coordinates (a multiplier, no physical scale)
  double alpha_lo = 0.0;
  double alpha_hi = 0.0;
  double rho = 0.0;
  double kappa = 0.0;
  double vartheta = 0.0;
  double margin = 0.0;
  double d_norm_sq = 0.0; // varkappa^2 or ||D||^2 as used in rho
  SdpSolution sdp;
  CompiledCondition cond;

  Vec control(const Vec& x) const;      // u = K(x) P x
  double V(const Vec& x) const;         // x^T P x
};

CompiledSdp compile_condition(const SynthesisProblem& problem);

SynthesisResult recover(const SynthesisProblem& problem, const CompiledSdp& compiled,
                        const SdpSolution& sol);

// compile + solve_feasibility_with_margin + recover.
struct SynthesisOutcome {
  bool success = false;
  std::string message;
  SynthesisResult result;
  SdpSolution sdp;
  double seconds = 0.0;
};
SynthesisOutcome synthesize(const SynthesisProblem& problem, const SdpConfig& cfg = {});

// S(x) = -(H(x) + (kappa + vartheta) P - gamma(x) Z) in compiled coordinates,
// rebuilt from the result's P, K and gamma.
Mat condition_matrix(const SynthesisResult& r, const Vec& x);

struct SosResidual {
  double min_eig = 0.0;
  double s_norm = 0.0;
  Vec worst_x;
  bool pass = false;
};
// Grid of `density` points per axis on the infinity ball of radius R.
SosResidual verify_sos_residual(const SynthesisResult& r, double radius, int density);

struct CertificateReport {
  double worst_slack = 0.0;   // max over samples of (Vdot + kappa V - rho |w|^2)/(1 + V)
  Vec witness_x;
  Vec witness_w;
  int samples = 0;
  bool pass = false;
};
// Harness only. D is the true n x sigma interconnection matrix.
CertificateReport certify_iss_oracle(const SynthesisResult& r, const GroundTruth& truth,
                                     const Mat& D, int samples, double x_radius, double w_radius,
                                     std::uint64_t seed = 7, double slack_tol = 1e-6);

}  // namespace infnet
