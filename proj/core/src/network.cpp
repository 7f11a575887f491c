#include "infnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace infnet {

Vec GroundTruth::rhs(const Vec& x, const Vec& u) const {
  Vec f = a_star * eval_dictionary(f_star_dict, x);
  if (b_star.size() > 0) f += b_star * (g_star_dict.eval(x) * u);
  return f;
}

void SubsystemClass::validate() const {
  if (n <= 0 || m <= 0) throw NetworkError(name + ": dimensions must be positive");
  for (const auto& mono : dict_F) {
    if (mono.nvars() != n) throw NetworkError(name + ": dictionary monomial has wrong arity");
    if (mono.degree() == 0) throw NetworkError(name + ": dictionary F contains a constant");
  }
  if (dict_G.cols() != m || dict_G.nvars() != n)
    throw NetworkError(name + ": G dictionary must have m columns over n variables");
  if (d_block.rows() != n || d_block.cols() != n)
    throw NetworkError(name + ": D block must be n x n");
  if (kappa <= 0.0 || vartheta <= 0.0)
    throw NetworkError(name + ": kappa and vartheta must be positive");
  if (varkappa && *varkappa <= 0.0) throw NetworkError(name + ": varkappa must be positive");
}

std::string to_string(Topology t) { return t == Topology::Cascade ? "cascade" : "forward-band"; }
std::string to_string(Boundary b) { return b == Boundary::Clip ? "clip" : "wrap"; }

Topology topology_from_string(const std::string& s) {
  if (s == "cascade") return Topology::Cascade;
  if (s == "forward-band") return Topology::ForwardBand;
  throw NetworkError("unknown topology '" + s + "'");
}

Boundary boundary_from_string(const std::string& s) {
  if (s == "clip") return Boundary::Clip;
  if (s == "wrap") return Boundary::Wrap;
  throw NetworkError("unknown boundary policy '" + s + "'");
}

std::vector<long> NetworkDescriptor::neighbors(long i) const {
  if (i < 1) throw NetworkError("subsystem indices start at 1");
  std::vector<long> out;
  if (topology == Topology::Cascade) {
    if (i >= 2) out.push_back(i - 1);
  } else {
    for (long k = 1; k <= band; ++k) out.push_back(i + k);
  }
  return out;
}

int sigma_dim(const NetworkDescriptor& desc, long i) {
  int s = 0;
  for (long j : desc.neighbors(i)) s += desc.class_of(j).n;
  return s;
}

Mat assemble_D(const Mat& d_block, int count) {
  Mat D(d_block.rows(), d_block.cols() * count);
  for (int k = 0; k < count; ++k) D.middleCols(k * d_block.cols(), d_block.cols()) = d_block;
  return D;
}

TruncatedNetwork instantiate_truncation(const NetworkDescriptor& desc, int N, Boundary boundary) {
  if (N < 2) throw NetworkError("truncation needs at least 2 subsystems");
  if (boundary == Boundary::Wrap && N <= desc.card())
    throw NetworkError("wrap boundary needs N > Card(M_i) = " + std::to_string(desc.card()));
  TruncatedNetwork net;
  net.size_ = N;
  net.boundary_ = boundary;
  net.nbrs_.resize(N);
  net.runs_.resize(N);
  for (int i = 1; i <= N; ++i) {
    auto& lst = net.nbrs_[i - 1];
    for (long j : desc.neighbors(i)) {
      if (boundary == Boundary::Clip) {
        if (j >= 1 && j <= N) lst.push_back(static_cast<int>(j));
      } else {
        long w = ((j - 1) % N + N) % N + 1;
        lst.push_back(static_cast<int>(w));
      }
    }
    // cascade wrap: subsystem 1 is fed by N
    if (boundary == Boundary::Wrap && desc.topology == Topology::Cascade && i == 1)
      lst.push_back(N);
    for (int j : lst) {
      if (j == i) throw NetworkError("self loop produced by truncation");
      net.edges_.emplace_back(i, j);
    }
    auto& runs = net.runs_[i - 1];
    for (int j : lst) {
      if (!runs.empty() && runs.back().second + 1 == j)
        runs.back().second = j;
      else
        runs.emplace_back(j, j);
    }
  }
  return net;
}

int representative_index(const NetworkDescriptor& desc, const TruncatedNetwork& net) {
  for (int i = 1; i <= net.size(); ++i)
    if (static_cast<int>(net.neighbors(i).size()) == desc.card()) return i;
  throw NetworkError("no subsystem in the truncation has a full neighbour set");
}

namespace {

// Solve for X with X * C == T exactly, where C and T are coefficient
// matrices over a shared monomial index.
Mat solve_exact(const Mat& C, const Mat& T, const std::string& what) {
  Mat X = C.transpose().colPivHouseholderQr().solve(T.transpose()).transpose();
  const double err = (X * C - T).cwiseAbs().maxCoeff();
  if (!(err <= 1e-10 * (1.0 + T.cwiseAbs().maxCoeff())))
    throw NetworkError("true " + what + " is not representable in the dictionary");
  return X;
}

}  // namespace

EmbeddedTruth embed_truth(const SubsystemClass& cls) {
  if (!cls.truth) throw NetworkError(cls.name + ": no ground truth attached");
  const GroundTruth& gt = *cls.truth;
  const int n = cls.n;
  EmbeddedTruth out;

  // Drift: F* monomials must appear in F.
  out.A = Mat::Zero(n, cls.N());
  for (std::size_t k = 0; k < gt.f_star_dict.size(); ++k) {
    auto it = std::find_if(cls.dict_F.begin(), cls.dict_F.end(), [&](const Monomial& m) {
      return m.exps == gt.f_star_dict[k].exps;
    });
    if (it == cls.dict_F.end())
      throw NetworkError("true drift monomial " + gt.f_star_dict[k].str() + " missing from dictionary");
    out.A.col(it - cls.dict_F.begin()) += gt.a_star.col(static_cast<int>(k));
  }

  // Input: B G(x) == B* G*(x) as polynomial matrices (n x m). Stack every
  // (monomial, column) coefficient of G and of B* G*.
  const PolyMatrix target = PolyMatrix::constant(gt.b_star, n) * gt.g_star_dict;
  std::map<Monomial, int, GrlexLess> idx;
  for (const auto& mono : cls.dict_G.support()) idx.emplace(mono, 0);
  for (const auto& mono : target.support()) idx.emplace(mono, 0);
  int k = 0;
  for (auto& [mono, v] : idx) v = k++;
  const int cols = k * cls.m;
  Mat C = Mat::Zero(cls.M(), cols), T = Mat::Zero(n, cols);
  for (const auto& [mono, v] : idx) {
    const Mat cg = cls.dict_G.coeff(mono);
    const Mat ct = target.coeff(mono);
    for (int c = 0; c < cls.m; ++c) {
      C.col(v * cls.m + c) = cg.col(c);
      T.col(v * cls.m + c) = ct.col(c);
    }
  }
  out.B = solve_exact(C, T, "input matrix");
  return out;
}

}  // namespace infnet
