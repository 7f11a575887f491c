#pragma once

#include "infnet/polycore.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace infnet {

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// True model x' = A* F*(x) + B* G*(x) u (+ D w). Test harness only.
struct GroundTruth {
  Mat a_star;                        // n x N*
  Mat b_star;                        // n x M*
  std::vector<Monomial> f_star_dict;
  PolyMatrix g_star_dict;            // M* x m

  Vec rhs(const Vec& x, const Vec& u) const;
};

struct SubsystemClass {
  std::string name;
  int n = 0;
  int m = 0;
  std::vector<Monomial> dict_F;
  PolyMatrix dict_G;                 // M x m
  std::optional<PolyMatrix> psi_override;
  std::optional<GroundTruth> truth;
  Mat d_block;                       // n x n, same for every neighbour
  double kappa = 0.0;
  double vartheta = 0.0;
  std::optional<double> varkappa;

  int N() const { return static_cast<int>(dict_F.size()); }
  int M() const { return dict_G.rows(); }
  void validate() const;
};

enum class Topology { Cascade, ForwardBand };
enum class Boundary { Clip, Wrap };

std::string to_string(Topology t);
std::string to_string(Boundary b);
Topology topology_from_string(const std::string& s);
Boundary boundary_from_string(const std::string& s);

struct NetworkDescriptor {
  std::vector<SubsystemClass> classes;
  Topology topology = Topology::Cascade;
  int band = 1;  // K for forward bands

  const SubsystemClass& class_of(long /*i*/) const { return classes.at(0); }
  int card() const { return topology == Topology::Cascade ? 1 : band; }
  // Neighbour set of subsystem i (1-based) in the infinite network.
  std::vector<long> neighbors(long i) const;
};

// sigma_i = sum of neighbour state dimensions, i is 1-based.
int sigma_dim(const NetworkDescriptor& desc, long i);

// D_i = [D_ij ...] for `count` neighbours.
Mat assemble_D(const Mat& d_block, int count);

class TruncatedNetwork {
 public:
  TruncatedNetwork() = default;

  int size() const { return size_; }
  Boundary boundary() const { return boundary_; }
  // 1-based index in, 1-based neighbours out.
  const std::vector<int>& neighbors(int i) const { return nbrs_.at(i - 1); }
  // Wiring w_ij = x_j as (i, j) pairs, 1-based.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  // Maximal runs of consecutive indices, 1-based inclusive, for fast sums.
  const std::vector<std::pair<int, int>>& runs(int i) const { return runs_.at(i - 1); }

  friend TruncatedNetwork instantiate_truncation(const NetworkDescriptor&, int, Boundary);

 private:
  int size_ = 0;
  Boundary boundary_ = Boundary::Clip;
  std::vector<std::vector<int>> nbrs_;
  std::vector<std::vector<std::pair<int, int>>> runs_;
  std::vector<std::pair<int, int>> edges_;
};

TruncatedNetwork instantiate_truncation(const NetworkDescriptor& desc, int N, Boundary boundary);

// First index whose neighbour set has full cardinality under clip.
int representative_index(const NetworkDescriptor& desc, const TruncatedNetwork& net);

// Express the true model in the dictionary coordinates of the class:
// A (n x N) and B (n x M) with A F(x) + B G(x) u == A* F*(x) + B* G*(x) u.
struct EmbeddedTruth {
  Mat A;
  Mat B;
};
EmbeddedTruth embed_truth(const SubsystemClass& cls);

}  // namespace infnet
