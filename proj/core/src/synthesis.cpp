#include "infnet/synthesis.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <limits>
#include <map>

namespace infnet {

namespace {

int tri(int i, int j) { return i * (i + 1) / 2 + j; }

void merge(LinearFunctional& f) {
  std::map<int, double> fr;
  for (const auto& [k, v] : f.free) fr[k] += v;
  std::map<std::tuple<int, int, int>, double> en;
  for (const auto& e : f.entries) en[{e.block, e.i, e.j}] += e.v;
  f.free.clear();
  f.entries.clear();
  for (const auto& [k, v] : fr)
    if (v != 0.0) f.free.emplace_back(k, v);
  for (const auto& [key, v] : en)
    if (v != 0.0) f.entries.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), v});
}

double ipow(double s, int e) {
  double r = 1.0;
  for (int k = 0; k < std::abs(e); ++k) r *= s;
  return e >= 0 ? r : 1.0 / r;
}

struct ScaledData {
  Mat Xd;   // possibly Xd - D W
  Mat Q;
  Mat lam;
};

ScaledData scaled_data(const SynthesisProblem& p, double s) {
  const TrajectoryRecord& rec = *p.record;
  TrajectoryRecord r2;
  r2.T = rec.T;
  r2.X = rec.X / s;
  r2.U = rec.U;
  r2.W = rec.W / s;
  r2.Xd = rec.Xd / s;
  const DataMatrices dm = build_regressors(r2, p.dict_F, p.dict_G);
  ScaledData d;
  d.lam = rec.lambda_sq.dense() / (s * s);
  if (p.mode == DMode::Known) {
    d.Xd = r2.Xd - p.D * r2.W;
    d.Q = dm.L;
  } else {
    d.Xd = r2.Xd;
    d.Q = dm.Q;
  }
  return d;
}

}  // namespace

CompiledSdp compile_condition(const SynthesisProblem& p) {
  if (!p.record) throw SynthesisError("synthesis problem has no trajectory record");
  const TrajectoryRecord& rec = *p.record;
  const int n = p.n, m = p.m;
  const int N = static_cast<int>(p.dict_F.size());
  const int M = p.dict_G.rows();
  if (rec.X.rows() != n || rec.U.rows() != m) throw SynthesisError("record does not match n, m");
  if (p.psi.rows() != N || p.psi.cols() != n) throw SynthesisError("transformation matrix must be N x n");
  if (p.dict_G.cols() != m) throw SynthesisError("G dictionary must have m columns");
  if (!(p.kappa > 0.0) || !(p.vartheta > 0.0)) throw SynthesisError("kappa and vartheta must be positive");
  if (p.deg_K < 0) throw SynthesisError("deg_K must be nonnegative");
  if (p.deg_gamma < 0 || p.deg_gamma % 2 != 0)
    throw SynthesisError("deg_gamma must be even (gamma is a sum of squares)");
  const int sigma = static_cast<int>(rec.W.rows());
  if (p.mode == DMode::Known) {
    if (p.D.rows() != n || p.D.cols() != sigma)
      throw SynthesisError("known-D mode needs D of size n x sigma");
  } else if (!(p.varkappa > 0.0)) {
    throw SynthesisError("unknown-D mode needs varkappa > 0");
  }

  CompiledSdp out;
  CompiledCondition& cc = out.cond;
  cc.n = n;
  cc.m = m;
  cc.N = N;
  cc.M = M;
  cc.sigma = p.mode == DMode::Known ? 0 : sigma;
  const int s_dim = N + M + cc.sigma;
  cc.dim = n + s_dim;
  cc.decay = p.kappa + p.vartheta;
  cc.psi = p.psi;
  cc.dict_G = p.dict_G;

  // degrees
  const int deg_psi = std::max(0, p.psi.degree());
  const int deg_G = std::max(0, p.dict_G.degree());
  const int deg_B = std::max(deg_psi, deg_G + p.deg_K);
  const int maxdeg = std::max(deg_B, p.deg_gamma);
  if (maxdeg % 2 != 0)
    throw SynthesisError("condition matrix has odd maximum degree " + std::to_string(maxdeg) +
                         "; no Gram basis can express it (adjust deg_K or the dictionaries)");
  cc.gram_degree = p.gram_degree > 0 ? p.gram_degree : maxdeg / 2;
  if (2 * cc.gram_degree < maxdeg)
    throw SynthesisError("Gram basis of degree " + std::to_string(cc.gram_degree) +
                         " cannot express degree " + std::to_string(maxdeg) + " terms");
  cc.k_basis = grlex_basis(n, p.deg_K);
  cc.gamma_basis = grlex_basis(n, p.deg_gamma / 2);
  cc.gram_basis = grlex_basis(n, cc.gram_degree);

  // data in compiled coordinates
  double s = 1.0;
  if (p.precondition) {
    s = rec.X.cwiseAbs().maxCoeff();
    if (!(s > 0.0) || !std::isfinite(s)) s = 1.0;
  }
  cc.scale = s;
  const ScaledData sd = scaled_data(p, s);
  Mat Z = assemble_Z(sd.Xd, sd.Q, SymMatrix::from_dense(sd.lam)).dense();
  cc.Tq = Mat::Identity(s_dim, s_dim);
  if (p.precondition) {
    const EigResult e = sym_eig(Mat(sd.Q * sd.Q.transpose()));
    const double top = e.values(e.values.size() - 1);
    if (top > 0.0) {
      Vec d = e.values.cwiseMax(1e-12 * top).cwiseSqrt().cwiseInverse();
      cc.Tq = e.vectors * d.asDiagonal() * e.vectors.transpose();
    }
    Mat T = Mat::Identity(cc.dim, cc.dim);
    T.bottomRightCorner(s_dim, s_dim) = cc.Tq;
    Z = T * Z * T;
  }
  const double zs = spectral_norm(Z);
  cc.Zn = zs > 0.0 ? Mat(Z / zs) : Z;

  // SDP layout
  SdpProblem& sdp = out.sdp;
  out.phi_block = sdp.add_block(n);
  out.gamma_block = sdp.add_block(static_cast<int>(cc.gamma_basis.size()));
  const int nb = static_cast<int>(cc.gram_basis.size());
  out.gram_block = sdp.add_block(nb * cc.dim);
  const int nk = static_cast<int>(cc.k_basis.size());
  out.k_first = sdp.add_free(nk * m * n);
  auto kvar = [&](int a, int p_, int c) { return out.k_first + (a * m + p_) * n + c; };

  const int ntri = cc.dim * (cc.dim + 1) / 2;
  std::map<Monomial, std::vector<LinearFunctional>, GrlexLess> coef;
  for (const auto& mono : grlex_basis(n, 2 * cc.gram_degree))
    coef.emplace(mono, std::vector<LinearFunctional>(ntri));
  auto at = [&](const Monomial& mono) -> std::vector<LinearFunctional>& {
    auto it = coef.find(mono);
    if (it == coef.end())
      throw SynthesisError("monomial " + mono.str() + " of degree " + std::to_string(mono.degree()) +
                           " exceeds the Gram basis");
    return it->second;
  };

  // -H: entry (n + r, c) = -sum_q Tq(r, q) B(q, c)
  for (const auto& mono : p.psi.support()) {
    const Mat psi_a = p.psi.coeff(mono);  // N x n
    const Mat tp = cc.Tq.leftCols(N) * psi_a;  // s x n: coefficient on Phi(l, c)
    auto& f = at(mono);
    for (int r = 0; r < s_dim; ++r)
      for (int c = 0; c < n; ++c)
        for (int l = 0; l < n; ++l)
          if (tp(r, l) != 0.0) f[tri(n + r, c)].add_block(out.phi_block, l, c, -tp(r, l));
  }
  for (const auto& gmono : p.dict_G.support()) {
    const Mat g_a = p.dict_G.coeff(gmono);  // M x m
    const Mat tg = cc.Tq.middleCols(N, M) * g_a;  // s x m: coefficient on K(p, c)
    for (int a = 0; a < nk; ++a) {
      auto& f = at(gmono * cc.k_basis[a]);
      for (int r = 0; r < s_dim; ++r)
        for (int c = 0; c < n; ++c)
          for (int q = 0; q < m; ++q)
            if (tg(r, q) != 0.0) f[tri(n + r, c)].add_free(kvar(a, q, c), -tg(r, q));
    }
  }
  // -(kappa + vartheta) P
  {
    auto& f = at(Monomial::one(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) f[tri(i, j)].add_block(out.phi_block, i, j, -cc.decay);
  }
  // + gamma(x) Zn
  const int ng = static_cast<int>(cc.gamma_basis.size());
  for (int c = 0; c < ng; ++c)
    for (int d = 0; d <= c; ++d) {
      auto& f = at(cc.gamma_basis[c] * cc.gamma_basis[d]);
      const double mult = c == d ? 1.0 : 2.0;
      for (int i = 0; i < cc.dim; ++i)
        for (int j = 0; j <= i; ++j)
          if (cc.Zn(i, j) != 0.0) f[tri(i, j)].add_block(out.gamma_block, c, d, mult * cc.Zn(i, j));
    }
  // - Gram expansion
  for (int a = 0; a < nb; ++a)
    for (int b = 0; b < nb; ++b) {
      auto& f = at(cc.gram_basis[a] * cc.gram_basis[b]);
      for (int i = 0; i < cc.dim; ++i)
        for (int j = 0; j <= i; ++j)
          f[tri(i, j)].add_block(out.gram_block, a * cc.dim + i, b * cc.dim + j, -1.0);
    }

  for (auto& [mono, fs] : coef)
    for (auto& f : fs) {
      merge(f);
      if (f.empty()) continue;
      sdp.equalities.push_back({std::move(f), 0.0});
    }
  Equality trace;
  for (int i = 0; i < n; ++i) trace.f.add_block(out.phi_block, i, i, 1.0);
  trace.rhs = 1.0;
  sdp.equalities.push_back(trace);
  sdp.validate();
  return out;
}

namespace {

PolyMatrix k_from_scaled(const CompiledCondition& cc, const std::vector<Mat>& kt, bool to_original) {
  PolyMatrix K(cc.m, cc.n, cc.n);
  for (std::size_t a = 0; a < cc.k_basis.size(); ++a) {
    const int deg = cc.k_basis[a].degree();
    const double f = to_original ? ipow(cc.scale, 1 - deg) : ipow(cc.scale, deg - 1);
    for (int p = 0; p < cc.m; ++p)
      for (int c = 0; c < cc.n; ++c) K(p, c).add_term(cc.k_basis[a], f * kt[a](p, c));
  }
  return K;
}

}  // namespace

SynthesisResult recover(const SynthesisProblem& problem, const CompiledSdp& compiled,
                        const SdpSolution& sol) {
  const CompiledCondition& cc = compiled.cond;
  SynthesisResult r;
  r.cond = cc;
  r.sdp = sol;
  r.kappa = problem.kappa;
  r.vartheta = problem.vartheta;
  r.margin = sol.margin.value_or(0.0);

  const Mat phis = sol.blocks.at(compiled.phi_block).dense();
  const double cond = condition_number_spd(phis);
  if (!(cond <= 1e12))
    throw SynthesisError("Phi is numerically singular (condition number " + std::to_string(cond) + ")");
  const double s2 = cc.scale * cc.scale;
  r.Phi = SymMatrix::from_dense(phis * s2);
  r.P = SymMatrix::from_dense(spd_inverse(phis) / s2);

  std::vector<Mat> kt(cc.k_basis.size(), Mat::Zero(cc.m, cc.n));
  for (std::size_t a = 0; a < cc.k_basis.size(); ++a)
    for (int p = 0; p < cc.m; ++p)
      for (int c = 0; c < cc.n; ++c)
        kt[a](p, c) = sol.free(compiled.k_first + (static_cast<int>(a) * cc.m + p) * cc.n + c);
  r.K = k_from_scaled(cc, kt, true);

  const SymMatrix& gg = sol.blocks.at(compiled.gamma_block);
  r.gamma = Polynomial(cc.n);
  for (int c = 0; c < gg.dim(); ++c)
    for (int d = 0; d < gg.dim(); ++d)
      r.gamma.add_term(cc.gamma_basis[c] * cc.gamma_basis[d], gg(c, d));

  const EigResult e = sym_eig(r.P);
  r.alpha_lo = e.values(0);
  r.alpha_hi = e.values(e.values.size() - 1);
  if (problem.mode == DMode::Known) {
    const double dn = spectral_norm(problem.D);
    r.d_norm_sq = dn * dn;
  } else {
    r.d_norm_sq = problem.varkappa * problem.varkappa;
  }
  r.rho = r.alpha_hi * r.d_norm_sq / problem.vartheta;
  return r;
}

Vec SynthesisResult::control(const Vec& x) const { return K.eval(x) * (P.dense() * x); }

double SynthesisResult::V(const Vec& x) const { return x.dot(P.dense() * x); }

SynthesisOutcome synthesize(const SynthesisProblem& problem, const SdpConfig& cfg) {
  SynthesisOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const CompiledSdp compiled = compile_condition(problem);
  out.sdp = solve_feasibility_with_margin(compiled.sdp, cfg);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (out.sdp.status != SdpStatus::Optimal) {
    out.message = "solver status " + to_string(out.sdp.status) +
                  (out.sdp.message.empty() ? "" : ": " + out.sdp.message);
    if (out.sdp.margin) {
      out.result.margin = *out.sdp.margin;
      char buf[96];
      std::snprintf(buf, sizeof buf, " (last margin estimate %.6g, eq residual %.2e)",
                    *out.sdp.margin, out.sdp.eq_residual);
      out.message += buf;
    }
    return out;
  }
  out.result.margin = out.sdp.margin.value_or(0.0);
  if (!out.sdp.margin_ok) {
    out.message = "infeasible at margin: t* = " + std::to_string(out.result.margin);
    return out;
  }
  out.result = recover(problem, compiled, out.sdp);
  out.success = true;
  return out;
}

Mat condition_matrix(const SynthesisResult& r, const Vec& x) {
  const CompiledCondition& cc = r.cond;
  const Vec xt = x / cc.scale;
  const double s2 = cc.scale * cc.scale;
  const Mat phis = spd_inverse(r.P.dense() * s2);
  // K in compiled coordinates
  Mat Kt = Mat::Zero(cc.m, cc.n);
  for (int p = 0; p < cc.m; ++p)
    for (int c = 0; c < cc.n; ++c)
      for (const auto& [mono, v] : r.K(p, c).terms())
        Kt(p, c) += v * ipow(cc.scale, mono.degree() - 1) * mono.eval(xt);
  const int s_dim = cc.N + cc.M + cc.sigma;
  Mat B = Mat::Zero(s_dim, cc.n);
  B.topRows(cc.N) = cc.psi.eval(xt) * phis;
  B.middleRows(cc.N, cc.M) = cc.dict_G.eval(xt) * Kt;
  const Mat Bw = cc.Tq * B;
  Mat S = r.gamma.eval(xt) * cc.Zn;
  S.bottomLeftCorner(s_dim, cc.n) -= Bw;
  S.topRightCorner(cc.n, s_dim) -= Bw.transpose();
  S.topLeftCorner(cc.n, cc.n) -= cc.decay * phis;
  return S;
}

SosResidual verify_sos_residual(const SynthesisResult& r, double radius, int density) {
  const int n = r.cond.n;
  const int pts = std::max(density, 2);
  SosResidual out;
  out.min_eig = std::numeric_limits<double>::infinity();
  std::vector<int> idx(n, 0);
  Vec x(n);
  while (true) {
    for (int j = 0; j < n; ++j) x(j) = -radius + 2.0 * radius * idx[j] / (pts - 1);
    const EigResult e = sym_eig(condition_matrix(r, x));
    const double lo = e.values(0);
    out.s_norm = std::max({out.s_norm, std::abs(lo), std::abs(e.values(e.values.size() - 1))});
    if (lo < out.min_eig) {
      out.min_eig = lo;
      out.worst_x = x;
    }
    int j = 0;
    while (j < n && ++idx[j] == pts) idx[j++] = 0;
    if (j == n) break;
  }
  out.pass = out.min_eig >= -1e-6 * (1.0 + out.s_norm);
  return out;
}

CertificateReport certify_iss_oracle(const SynthesisResult& r, const GroundTruth& truth,
                                     const Mat& D, int samples, double x_radius, double w_radius,
                                     std::uint64_t seed, double slack_tol) {
  const int n = static_cast<int>(r.P.dim());
  const Mat P = r.P.dense();
  const int sig = static_cast<int>(D.cols());
  CounterRng rng{seed, 0, kStreamHarness};
  std::uint64_t ctr = 0;
  CertificateReport rep;
  rep.samples = samples;
  rep.worst_slack = -std::numeric_limits<double>::infinity();

  auto slack = [&](const Vec& x, const Vec& w) {
    const Vec u = r.control(x);
    const Vec xdot = truth.rhs(x, u) + (sig > 0 ? Vec(D * w) : Vec::Zero(n));
    const double V = x.dot(P * x);
    const double Vdot = 2.0 * x.dot(P * xdot);
    return (Vdot + r.kappa * V - r.rho * w.squaredNorm()) / (1.0 + V);
  };
  auto consider = [&](const Vec& x, const Vec& w) {
    const double s = slack(x, w);
    if (s > rep.worst_slack) {
      rep.worst_slack = s;
      rep.witness_x = x;
      rep.witness_w = w;
    }
  };

  for (int k = 0; k < samples; ++k) {
    // log-uniform magnitude over six decades below the radius
    const double xm = x_radius * std::pow(10.0, -6.0 * rng.uniform01(ctr++));
    Vec x(n);
    for (int j = 0; j < n; ++j) x(j) = rng.normal(ctr++);
    if (x.norm() > 0.0) x *= xm / x.norm();
    Vec w = Vec::Zero(sig);
    if (sig > 0) {
      const double wm = w_radius * std::pow(10.0, -6.0 * rng.uniform01(ctr++));
      for (int j = 0; j < sig; ++j) w(j) = rng.normal(ctr++);
      if (w.norm() > 0.0) w *= wm / w.norm();
    }
    consider(x, w);
    // the maximizing disturbance for this x
    if (sig > 0 && r.rho > 0.0) consider(x, Vec(D.transpose() * (P * x) / r.rho));
  }
  rep.pass = rep.worst_slack <= slack_tol;
  return rep;
}

}  // namespace infnet
