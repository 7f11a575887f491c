#include "infnet/datagen.hpp"

#include <cmath>
#include <numbers>

namespace infnet {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t CounterRng::bits(std::uint64_t counter) const {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ index);
  h = splitmix64(h ^ (stream * 0xd1b54a32d192ed03ULL));
  return splitmix64(h ^ counter);
}

double CounterRng::uniform01(std::uint64_t counter) const {
  return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

double CounterRng::uniform(std::uint64_t counter, double lo, double hi) const {
  return lo + (hi - lo) * uniform01(counter);
}

double CounterRng::normal(std::uint64_t counter) const {
  // Box-Muller on two disjoint counters
  const double u1 = 1.0 - uniform01(2 * counter);
  const double u2 = uniform01(2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec excite(std::uint64_t seed, int index, int k, int m, double amplitude) {
  CounterRng rng{seed, static_cast<std::uint64_t>(index), kStreamExcite};
  Vec u(m);
  for (int c = 0; c < m; ++c)
    u(c) = rng.uniform(static_cast<std::uint64_t>(k) * m + c, -amplitude, amplitude);
  return u;
}

namespace {

// Allocation-free evaluation of the true model, flattened once per run.
struct FastTruth {
  int n = 0, m = 0, nf = 0, ng = 0;
  std::vector<int> fexp;  // nf x n
  Mat A, B;
  struct GTerm {
    int row, col;
    double c;
    std::vector<int> exps;
  };
  std::vector<GTerm> gterms;
  mutable Vec phi, gu;

  explicit FastTruth(const SubsystemClass& cls) : n(cls.n), m(cls.m) {
    const GroundTruth& gt = *cls.truth;
    nf = static_cast<int>(gt.f_star_dict.size());
    for (const auto& mo : gt.f_star_dict) fexp.insert(fexp.end(), mo.exps.begin(), mo.exps.end());
    A = gt.a_star;
    B = gt.b_star;
    ng = gt.g_star_dict.rows();
    for (int r = 0; r < gt.g_star_dict.rows(); ++r)
      for (int c = 0; c < gt.g_star_dict.cols(); ++c)
        for (const auto& [mo, v] : gt.g_star_dict(r, c).terms()) gterms.push_back({r, c, v, mo.exps});
    phi.resize(nf);
    gu.resize(ng);
  }

  static double mono(const int* e, int n, const double* x) {
    double v = 1.0;
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < e[j]; ++p) v *= x[j];
    return v;
  }

  template <class Out>
  void rhs(const double* x, const double* u, Out&& out) const {
    for (int k = 0; k < nf; ++k) phi(k) = mono(&fexp[static_cast<std::size_t>(k) * n], n, x);
    out.noalias() = A * phi;
    if (B.size() == 0) return;
    gu.setZero();
    for (const auto& t : gterms) gu(t.row) += t.c * mono(t.exps.data(), n, x) * u[t.col];
    out.noalias() += B * gu;
  }
};

// x' for all subsystems; xs and us hold one column per subsystem.
void network_rhs(const TruncatedNetwork& net, const SubsystemClass& cls, const FastTruth& ft,
                 const Mat& xs, const Mat& us, Mat& out, Mat& prefix, Vec& sum) {
  const int N = net.size();
  const int n = cls.n;
  prefix.resize(n, N + 1);
  prefix.col(0).setZero();
  for (int j = 0; j < N; ++j) prefix.col(j + 1) = prefix.col(j) + xs.col(j);
  sum.resize(n);
  for (int i = 0; i < N; ++i) {
    ft.rhs(xs.col(i).data(), us.col(i).data(), out.col(i));
    const auto& runs = net.runs(i + 1);
    if (runs.empty()) continue;
    sum.setZero();
    for (const auto& [a, b] : runs) sum += prefix.col(b) - prefix.col(a - 1);
    out.col(i).noalias() += cls.d_block * sum;
  }
}

}  // namespace

StateHistory integrate(const TruncatedNetwork& net, const SubsystemClass& cls,
                       const InputPolicy& policy, const Mat& x0, double tau, double tau_int,
                       int samples) {
  if (!cls.truth) throw DataError("integrate: class has no ground truth");
  if (!(tau > 0.0) || !(tau_int > 0.0)) throw DataError("integrate: step sizes must be positive");
  if (tau_int > tau / 10.0 * (1.0 + 1e-12))
    throw DataError("integrate: tau_int must be at most tau/10");
  const int N = net.size();
  const int n = cls.n, m = cls.m;
  if (x0.rows() != n || x0.cols() != N) throw DataError("integrate: x0 must be n x N");
  if (!x0.allFinite()) throw DataError("integrate: x0 is not finite");
  const int sub = static_cast<int>(std::lround(tau / tau_int));
  const double h = tau / sub;

  StateHistory hist;
  hist.tau = tau;
  hist.X.assign(N, Mat(n, samples + 1));
  hist.U.assign(N, Mat(m, samples));

  const FastTruth ft(cls);
  Mat x = x0, u(m, N), k1(n, N), k2(n, N), k3(n, N), k4(n, N), tmp(n, N), prefix;
  Vec sum;
  for (int k = 0; k <= samples; ++k) {
    for (int i = 0; i < N; ++i) hist.X[i].col(k) = x.col(i);
    if (k == samples) break;
    const double t = k * tau;
    for (int i = 0; i < N; ++i) {
      u.col(i) = policy(i + 1, k, t, x.col(i));
      hist.U[i].col(k) = u.col(i);
    }
    for (int s = 0; s < sub; ++s) {
      network_rhs(net, cls, ft, x, u, k1, prefix, sum);
      tmp.noalias() = x + 0.5 * h * k1;
      network_rhs(net, cls, ft, tmp, u, k2, prefix, sum);
      tmp = x + 0.5 * h * k2;
      network_rhs(net, cls, ft, tmp, u, k3, prefix, sum);
      tmp = x + h * k3;
      network_rhs(net, cls, ft, tmp, u, k4, prefix, sum);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!x.allFinite()) {
        const double when = t + (s + 1) * h;
        throw IntegrationDiverged(when, "integration diverged at t = " + std::to_string(when));
      }
    }
  }
  return hist;
}

Mat forward_difference(const Mat& X, double tau) {
  if (X.cols() < 2) throw DataError("forward_difference: need at least two samples");
  if (!(tau > 0.0)) throw DataError("forward_difference: tau must be positive");
  const Eigen::Index T = X.cols() - 1;
  return (X.rightCols(T) - X.leftCols(T)) / tau;
}

SymMatrix noise_bound(double b, int n, int T) {
  if (b < 0.0) throw DataError("noise_bound: b must be nonnegative");
  return SymMatrix::identity(n, static_cast<double>(n) * b * b * T);
}

std::vector<TrajectoryRecord> collect(const TruncatedNetwork& net, const SubsystemClass& cls,
                                      const CollectConfig& cfg,
                                      const std::vector<int>& record_indices) {
  if (cfg.T < 1) throw DataError("collect: T must be at least 1");
  if (cfg.b < 0.0) throw DataError("collect: noise bound must be nonnegative");
  const int N = net.size();
  const int n = cls.n, m = cls.m;

  Mat x0(n, N);
  for (int i = 0; i < N; ++i) {
    CounterRng rng{cfg.seed, static_cast<std::uint64_t>(i + 1), kStreamInitial};
    for (int c = 0; c < n; ++c) x0(c, i) = rng.uniform(c, -cfg.x0_amplitude, cfg.x0_amplitude);
  }
  const std::uint64_t seed = cfg.seed;
  const double amp = cfg.amplitude;
  InputPolicy policy = [seed, amp, m](int index, int k, double, const Vec&) {
    return excite(seed, index, k, m, amp);
  };
  StateHistory hist = integrate(net, cls, policy, x0, cfg.tau, cfg.tau / cfg.substeps, cfg.T);

  std::vector<TrajectoryRecord> out;
  for (int idx : record_indices) {
    if (idx < 1 || idx > N) throw DataError("collect: record index out of range");
    TrajectoryRecord rec;
    rec.index = idx;
    rec.tau = cfg.tau;
    rec.T = cfg.T;
    rec.seed = cfg.seed;
    rec.X = hist.X[idx - 1];
    rec.U = hist.U[idx - 1];
    const auto& nb = net.neighbors(idx);
    rec.W.resize(static_cast<Eigen::Index>(nb.size()) * n, cfg.T);
    for (std::size_t r = 0; r < nb.size(); ++r)
      rec.W.middleRows(static_cast<Eigen::Index>(r) * n, n) = hist.X[nb[r] - 1].leftCols(cfg.T);
    rec.E = Mat::Zero(n, cfg.T);
    if (cfg.noise == NoiseMode::Explicit && cfg.b > 0.0) {
      CounterRng rng{cfg.seed, static_cast<std::uint64_t>(idx), kStreamNoise};
      for (int k = 0; k < cfg.T; ++k)
        for (int c = 0; c < n; ++c)
          rec.E(c, k) = rng.uniform(static_cast<std::uint64_t>(k) * n + c, -cfg.b, cfg.b);
    }
    rec.Xd = forward_difference(rec.X, cfg.tau) + rec.E;
    rec.lambda_sq = noise_bound(cfg.b, n, cfg.T);
    out.push_back(std::move(rec));
  }
  return out;
}

DataMatrices build_regressors(const TrajectoryRecord& rec, const std::vector<Monomial>& dict_F,
                              const PolyMatrix& dict_G) {
  const int T = rec.T;
  if (rec.X.cols() != T + 1 || rec.U.cols() != T || rec.Xd.cols() != T ||
      (rec.W.size() > 0 && rec.W.cols() != T))
    throw DataError("build_regressors: inconsistent column counts");
  if (dict_G.cols() != rec.U.rows())
    throw DataError("build_regressors: G dictionary does not match input dimension");
  DataMatrices d;
  const int N = static_cast<int>(dict_F.size());
  const int M = dict_G.rows();
  d.J.resize(N, T);
  d.G.resize(M, T);
  for (int k = 0; k < T; ++k) {
    const Vec x = rec.X.col(k);
    d.J.col(k) = eval_dictionary(dict_F, x);
    d.G.col(k) = dict_G.eval(x) * rec.U.col(k);
  }
  const Eigen::Index sig = rec.W.rows();
  d.L.resize(N + M, T);
  d.L << d.J, d.G;
  d.Q.resize(N + M + sig, T);
  if (sig > 0)
    d.Q << d.J, d.G, rec.W;
  else
    d.Q << d.J, d.G;
  return d;
}

SymMatrix assemble_Z(const Mat& Xd, const Mat& Q, const SymMatrix& lambda_sq) {
  if (Xd.cols() != Q.cols()) throw DataError("assemble_Z: column mismatch");
  if (lambda_sq.dim() != Xd.rows()) throw DataError("assemble_Z: Lambda dimension mismatch");
  const Eigen::Index n = Xd.rows(), s = Q.rows();
  Mat Z(n + s, n + s);
  Z.topLeftCorner(n, n) = Xd * Xd.transpose() - lambda_sq.dense();
  Z.bottomLeftCorner(s, n) = -Q * Xd.transpose();
  Z.topRightCorner(n, s) = Z.bottomLeftCorner(s, n).transpose();
  Z.bottomRightCorner(s, s) = Q * Q.transpose();
  return SymMatrix::from_lower(Z);
}

SymMatrix assemble_Y(const Mat& Xd, const Mat& D, const Mat& W, const Mat& L,
                     const SymMatrix& lambda_sq) {
  if (D.cols() != W.rows()) throw DataError("assemble_Y: D and W do not match");
  return assemble_Z(Xd - D * W, L, lambda_sq);
}

RankDiagnostic rank_check(const Mat& Q, double tol) {
  RankDiagnostic r;
  r.required = static_cast<int>(Q.rows());
  if (Q.size() == 0) {
    r.pass = r.required == 0;
    return r;
  }
  Eigen::BDCSVD<Mat> svd(Q);
  const Vec& sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > tol * top) ++r.rank;
  r.pass = r.rank == r.required;
  return r;
}

Mat consistency_matrix(const Mat& Xd, const Mat& S, const Mat& Q, const SymMatrix& lambda_sq) {
  const Mat delta = Xd - S * Q;
  return delta * delta.transpose() - lambda_sq.dense();
}

double z_norm(const Mat& Xd, const Mat& Q, const SymMatrix& lambda_sq) {
  // Z = F F^T - diag(LL^T, 0) with F = [Xd; -Q]; the Gram form F^T F is T x T.
  const Eigen::Index n = Xd.rows(), T = Xd.cols();
  if (Q.rows() <= 64) return spectral_norm(assemble_Z(Xd, Q, lambda_sq).dense());
  // Large sigma: power iteration on Z applied through its factors.
  Mat F(n + Q.rows(), T);
  F << Xd, -Q;
  const Mat lam = lambda_sq.dense();
  auto apply = [&](const Vec& v) {
    Vec r = F * (F.transpose() * v);
    r.head(n) -= lam * v.head(n);
    return r;
  };
  Vec v = Vec::Ones(n + Q.rows()).normalized();
  double est = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vec w = apply(apply(v));
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    const double next = std::sqrt(nw);
    v = w / nw;
    if (std::abs(next - est) <= 1e-12 * next) {
      est = next;
      break;
    }
    est = next;
  }
  return est;
}

}  // namespace infnet
