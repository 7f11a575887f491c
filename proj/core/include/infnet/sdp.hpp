#pragma once

#include "infnet/linalg.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace infnet {

class SdpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Coefficient on element (i, j), i >= j, of PSD block `block`. The
// functional value is sum v * X_block(i, j), so an off-diagonal entry is
// counted once even though the matrix stores it twice.
struct BlockEntry {
  int block = 0;
  int i = 0;
  int j = 0;
  double v = 0.0;
};

struct LinearFunctional {
  std::vector<std::pair<int, double>> free;
  std::vector<BlockEntry> entries;

  void add_free(int k, double v) { free.emplace_back(k, v); }
  void add_block(int b, int i, int j, double v) {
    if (i < j) std::swap(i, j);
    entries.push_back({b, i, j, v});
  }
  bool empty() const { return free.empty() && entries.empty(); }
};

struct Equality {
  LinearFunctional f;
  double rhs = 0.0;
};

struct SdpProblem {
  int free_vars = 0;
  std::vector<int> blocks;
  LinearFunctional objective;  // minimized
  std::vector<Equality> equalities;

  int add_block(int dim) {
    blocks.push_back(dim);
    return static_cast<int>(blocks.size()) - 1;
  }
  int add_free(int count = 1) {
    const int first = free_vars;
    free_vars += count;
    return first;
  }
  void validate() const;
  // Plain text sparse dump for cross-checking with external solvers.
  void dump(std::ostream& os) const;
};

enum class SdpStatus { Optimal, Infeasible, Unbounded, MaxIterations };
std::string to_string(SdpStatus s);

struct SdpConfig {
  double tol_eq = 1e-8;
  double tol_psd = 1e-8;
  double tol_gap = 1e-9;
  int max_iter = 200;
  double t_max = 1e3;   // margin cap for solve_feasibility_with_margin
  double margin_tol = 1e-7;
  bool verbose = false;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::MaxIterations;
  Vec free;
  std::vector<SymMatrix> blocks;
  Vec y;                       // equality multipliers
  double objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;            // |primal - dual|
  double eq_residual = 0.0;    // max_i |a_i x - b_i| / (1 + max |b|)
  double dual_residual = 0.0;
  double min_block_eig = 0.0;
  int iterations = 0;
  // Set by solve_feasibility_with_margin.
  std::optional<double> margin;
  bool margin_ok = false;
  std::string message;
};

// Homogeneous self-dual interior point method: NT scaling, Mehrotra
// predictor-corrector, dense Cholesky on the Schur complement.
SdpSolution solve(const SdpProblem& problem, const SdpConfig& cfg = {});

// Replaces every block X by X + t I, maximizes t subject to t <= t_max and
// ignores the problem objective. Blocks are reported with t added back.
SdpSolution solve_feasibility_with_margin(const SdpProblem& problem, const SdpConfig& cfg = {},
                                          const std::vector<bool>& margin_blocks = {});

// Value of a functional at a point.
double evaluate(const LinearFunctional& f, const Vec& free, const std::vector<SymMatrix>& blocks);

}  // namespace infnet
