#pragma once

#include "infnet/network.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace infnet {

class IntegrationDiverged : public std::runtime_error {
 public:
  IntegrationDiverged(double t, const std::string& what)
      : std::runtime_error(what), time(t) {}
  double time;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Counter-based generator: every draw is a pure function of its key.
struct CounterRng {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;   // subsystem
  std::uint64_t stream = 0;

  std::uint64_t bits(std::uint64_t counter) const;
  double uniform01(std::uint64_t counter) const;             // [0,1)
  double uniform(std::uint64_t counter, double lo, double hi) const;
  double normal(std::uint64_t counter) const;
};

enum RngStream : std::uint64_t {
  kStreamExcite = 1,
  kStreamInitial = 2,
  kStreamNoise = 3,
  kStreamHarness = 4,
};

// Input for subsystem `index` held over sample period k.
Vec excite(std::uint64_t seed, int index, int k, int m, double amplitude);

struct TrajectoryRecord {
  int index = 0;    // 1-based subsystem index
  double tau = 0.0;
  int T = 0;
  Mat U;            // m x T
  Mat W;            // sigma x T
  Mat X;            // n x (T+1)
  Mat Xd;           // n x T, forward difference plus injected noise
  Mat E;            // n x T, injected noise (zero in implicit mode)
  SymMatrix lambda_sq;
  std::uint64_t seed = 0;
};

struct DataMatrices {
  Mat J;  // N x T
  Mat G;  // M x T
  Mat Q;  // [J; G; W]
  Mat L;  // [J; G]
};

// Sampled closed/open loop history of a truncated network.
struct StateHistory {
  double tau = 0.0;
  std::vector<Mat> X;  // per subsystem n x (K+1)
  std::vector<Mat> U;  // per subsystem m x K
};

// Input policy: called once per sample period and held (zero-order hold).
using InputPolicy = std::function<Vec(int index, int k, double t, const Vec& x)>;

// Fixed-step RK4 of the coupled truncated network, w_ij = x_j.
StateHistory integrate(const TruncatedNetwork& net, const SubsystemClass& cls,
                       const InputPolicy& policy, const Mat& x0, double tau, double tau_int,
                       int samples);

enum class NoiseMode { Implicit, Explicit };

struct CollectConfig {
  int T = 0;
  double tau = 0.1;
  double b = 0.0;
  double amplitude = 1.0;
  double x0_amplitude = 1.0;
  std::uint64_t seed = 1;
  NoiseMode noise = NoiseMode::Explicit;
  int substeps = 20;
};

// Records for the requested (1-based) subsystem indices.
std::vector<TrajectoryRecord> collect(const TruncatedNetwork& net, const SubsystemClass& cls,
                                      const CollectConfig& cfg,
                                      const std::vector<int>& record_indices);

Mat forward_difference(const Mat& X, double tau);
SymMatrix noise_bound(double b, int n, int T);

DataMatrices build_regressors(const TrajectoryRecord& rec, const std::vector<Monomial>& dict_F,
                              const PolyMatrix& dict_G);

SymMatrix assemble_Z(const Mat& Xd, const Mat& Q, const SymMatrix& lambda_sq);
SymMatrix assemble_Y(const Mat& Xd, const Mat& D, const Mat& W, const Mat& L,
                     const SymMatrix& lambda_sq);

struct RankDiagnostic {
  int rank = 0;
  int required = 0;
  bool pass = false;
};
RankDiagnostic rank_check(const Mat& Q, double tol = 1e-9);

// Harness: Xi = [I; S^T]^T Z [I; S^T] for a parameter stack S, computed as
// (Xd - S Q)(Xd - S Q)^T - Lambda Lambda^T without forming Z.
Mat consistency_matrix(const Mat& Xd, const Mat& S, const Mat& Q, const SymMatrix& lambda_sq);

// Spectral norm of Z from its factors, also without forming it.
double z_norm(const Mat& Xd, const Mat& Q, const SymMatrix& lambda_sq);

}  // namespace infnet
