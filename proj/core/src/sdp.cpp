#include "infnet/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace infnet {

void SdpProblem::validate() const {
  if (free_vars < 0) throw SdpError("negative free variable count");
  for (int d : blocks)
    if (d <= 0) throw SdpError("block dimensions must be positive");
  if (free_vars == 0 && blocks.empty()) throw SdpError("problem has no variables");
  auto check = [&](const LinearFunctional& f) {
    for (const auto& [k, v] : f.free)
      if (k < 0 || k >= free_vars) throw SdpError("functional references undeclared free variable");
    for (const auto& e : f.entries) {
      if (e.block < 0 || e.block >= static_cast<int>(blocks.size()))
        throw SdpError("functional references undeclared block");
      if (e.i < e.j || e.j < 0 || e.i >= blocks[e.block])
        throw SdpError("functional entry outside its block");
    }
  };
  check(objective);
  for (const auto& eq : equalities) check(eq.f);
}

void SdpProblem::dump(std::ostream& os) const {
  char buf[128];
  os << "blocks " << blocks.size();
  for (int d : blocks) os << ' ' << d;
  os << "\nfree " << free_vars << "\nequalities " << equalities.size() << '\n';
  auto put = [&](const std::string& tag, const LinearFunctional& f) {
    for (const auto& [k, v] : f.free) {
      std::snprintf(buf, sizeof buf, " free %d %.17g\n", k, v);
      os << tag << buf;
    }
    for (const auto& e : f.entries) {
      std::snprintf(buf, sizeof buf, " %d %d %d %.17g\n", e.block, e.i, e.j, e.v);
      os << tag << buf;
    }
  };
  put("obj", objective);
  for (std::size_t r = 0; r < equalities.size(); ++r) {
    std::snprintf(buf, sizeof buf, "rhs %zu %.17g\n", r, equalities[r].rhs);
    os << buf;
    put("eq " + std::to_string(r), equalities[r].f);
  }
}

std::string to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::Infeasible: return "infeasible";
    case SdpStatus::Unbounded: return "unbounded";
    case SdpStatus::MaxIterations: return "max-iterations";
  }
  return "unknown";
}

double evaluate(const LinearFunctional& f, const Vec& free, const std::vector<SymMatrix>& blocks) {
  double v = 0.0;
  for (const auto& [k, c] : f.free) v += c * free(k);
  for (const auto& e : f.entries) v += e.v * blocks[e.block](e.i, e.j);
  return v;
}

namespace {

using Blocks = std::vector<Mat>;

struct Entry {
  int r, c;
  double v;
};

struct Compiled {
  int m = 0, nu = 0;
  std::vector<int> dims;
  int nu_cone = 0;
  Mat Au;  // m x nu
  Vec b, cu;
  Blocks C;
  // cons[i][k]: entries of constraint i in block k
  std::vector<std::vector<std::vector<Entry>>> cons;
  // per block, constraints that touch it
  std::vector<std::vector<int>> touching;
};

Compiled compile(const SdpProblem& p) {
  Compiled c;
  c.m = static_cast<int>(p.equalities.size());
  c.nu = p.free_vars;
  c.dims = p.blocks;
  for (int d : c.dims) c.nu_cone += d;
  const int nb = static_cast<int>(c.dims.size());
  c.Au = Mat::Zero(c.m, c.nu);
  c.b.resize(c.m);
  c.cu = Vec::Zero(c.nu);
  c.C.resize(nb);
  for (int k = 0; k < nb; ++k) c.C[k] = Mat::Zero(c.dims[k], c.dims[k]);
  for (const auto& [k, v] : p.objective.free) c.cu(k) += v;
  for (const auto& e : p.objective.entries) {
    if (e.i == e.j) {
      c.C[e.block](e.i, e.i) += e.v;
    } else {
      c.C[e.block](e.i, e.j) += 0.5 * e.v;
      c.C[e.block](e.j, e.i) += 0.5 * e.v;
    }
  }
  c.cons.assign(c.m, std::vector<std::vector<Entry>>(nb));
  c.touching.assign(nb, {});
  for (int i = 0; i < c.m; ++i) {
    const auto& eq = p.equalities[i];
    c.b(i) = eq.rhs;
    for (const auto& [k, v] : eq.f.free) c.Au(i, k) += v;
    for (const auto& e : eq.f.entries) c.cons[i][e.block].push_back({e.i, e.j, e.v});
    for (int k = 0; k < nb; ++k)
      if (!c.cons[i][k].empty()) c.touching[k].push_back(i);
  }
  return c;
}

Vec opA(const Compiled& c, const Blocks& X) {
  Vec r = Vec::Zero(c.m);
  for (int i = 0; i < c.m; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < c.cons[i].size(); ++k)
      for (const auto& e : c.cons[i][k]) s += e.v * X[k](e.r, e.c);
    r(i) = s;
  }
  return r;
}

Blocks opAt(const Compiled& c, const Vec& y) {
  Blocks S(c.dims.size());
  for (std::size_t k = 0; k < c.dims.size(); ++k) S[k] = Mat::Zero(c.dims[k], c.dims[k]);
  for (int i = 0; i < c.m; ++i) {
    if (y(i) == 0.0) continue;
    for (std::size_t k = 0; k < c.cons[i].size(); ++k)
      for (const auto& e : c.cons[i][k]) {
        const double w = y(i) * e.v;
        if (e.r == e.c) {
          S[k](e.r, e.r) += w;
        } else {
          S[k](e.r, e.c) += 0.5 * w;
          S[k](e.c, e.r) += 0.5 * w;
        }
      }
  }
  return S;
}

double inner(const Blocks& A, const Blocks& B) {
  double s = 0.0;
  for (std::size_t k = 0; k < A.size(); ++k) s += A[k].cwiseProduct(B[k]).sum();
  return s;
}

Blocks axpy(const Blocks& X, double a, const Blocks& D) {
  Blocks r(X.size());
  for (std::size_t k = 0; k < X.size(); ++k) r[k] = X[k] + a * D[k];
  return r;
}

double max_abs(const Blocks& A) {
  double s = 0.0;
  for (const auto& m : A)
    if (m.size() > 0) s = std::max(s, m.cwiseAbs().maxCoeff());
  return s;
}

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

struct Scaling {
  Mat G, Ginv, W;
  Vec lam;
};

// Largest a in (0, inf] with Lambda + a*D >= 0, for scaled direction D.
double max_step(const Vec& lam, const Mat& D) {
  const Vec is = lam.cwiseSqrt().cwiseInverse();
  const Mat Ds = is.asDiagonal() * D * is.asDiagonal();
  const double lmin = sym_eig(Ds).values(0);
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

}  // namespace

SdpSolution solve(const SdpProblem& problem, const SdpConfig& cfg) {
  problem.validate();
  const Compiled c = compile(problem);
  const int m = c.m, nu = c.nu;
  const int nb = static_cast<int>(c.dims.size());
  const double nu_total = c.nu_cone + 1.0;
  const double bnorm = inf_norm(c.b);
  const double cnorm = std::max(inf_norm(c.cu), max_abs(c.C));

  Blocks X(nb), S(nb);
  for (int k = 0; k < nb; ++k) {
    X[k] = Mat::Identity(c.dims[k], c.dims[k]);
    S[k] = Mat::Identity(c.dims[k], c.dims[k]);
  }
  Vec u = Vec::Zero(nu), y = Vec::Zero(m);
  double tau = 1.0, kap = 1.0;

  SdpSolution sol;
  sol.status = SdpStatus::MaxIterations;
  std::vector<Scaling> sc(nb);

  auto finish = [&](SdpStatus st) {
    sol.status = st;
    const double inv = (st == SdpStatus::Optimal || st == SdpStatus::MaxIterations) ? 1.0 / tau : 1.0;
    sol.free = u * inv;
    sol.y = y * inv;
    sol.blocks.clear();
    sol.min_block_eig = std::numeric_limits<double>::infinity();
    for (int k = 0; k < nb; ++k) {
      SymMatrix B = SymMatrix::from_dense(X[k] * inv);
      sol.min_block_eig = std::min(sol.min_block_eig, sym_eig(B).values(0));
      sol.blocks.push_back(std::move(B));
    }
    if (nb == 0) sol.min_block_eig = 0.0;
    Blocks Xs(nb);
    for (int k = 0; k < nb; ++k) Xs[k] = X[k] * inv;
    const Vec r = c.Au * sol.free + opA(c, Xs) - c.b;
    sol.eq_residual = inf_norm(r) / (1.0 + bnorm);
    sol.objective = c.cu.dot(sol.free) + inner(c.C, Xs);
    sol.dual_objective = c.b.dot(sol.y);
    sol.gap = std::abs(sol.objective - sol.dual_objective);
    return sol;
  };

  // Best iterate so far, used when the iteration stalls near the optimum.
  struct Saved {
    Blocks X, S;
    Vec u, y;
    double tau = 1.0, kap = 1.0, score = std::numeric_limits<double>::infinity();
    int it = 0;
    bool acceptable = false;
  } best;
  auto fallback = [&](const std::string& why) {
    if (best.acceptable) {
      X = best.X;
      S = best.S;
      u = best.u;
      y = best.y;
      tau = best.tau;
      kap = best.kap;
      finish(SdpStatus::Optimal);
      sol.iterations = best.it;
      sol.message = "reduced accuracy (" + why + ")";
      return sol;
    }
    sol.message = why;
    return finish(SdpStatus::MaxIterations);
  };

  for (int it = 0; it < cfg.max_iter; ++it) {
    sol.iterations = it;
    // residuals of the embedding
    const Vec AX = opA(c, X);
    const Vec F1 = c.Au * u + AX - c.b * tau;
    const Vec F2 = c.Au.transpose() * y - c.cu * tau;
    const Blocks Aty = opAt(c, y);
    Blocks F3(nb);
    for (int k = 0; k < nb; ++k) F3[k] = Aty[k] + S[k] - c.C[k] * tau;
    const double pobj = c.cu.dot(u) + inner(c.C, X);
    const double dobj = c.b.dot(y);
    const double F4 = pobj - dobj + kap;
    const double mu = (inner(X, S) + tau * kap) / nu_total;

    const double pres = inf_norm(F1) / tau / (1.0 + bnorm);
    const double dres = std::max(inf_norm(F2), max_abs(F3)) / tau / (1.0 + cnorm);
    const double gap = std::abs(pobj - dobj) / tau /
                       (1.0 + std::abs(pobj / tau) + std::abs(dobj / tau));
    sol.dual_residual = dres;
    if (cfg.verbose)
      std::fprintf(stderr, "it %3d pobj %+.6e dobj %+.6e pres %.2e dres %.2e gap %.2e tau %.2e kap %.2e\n",
                   it, pobj / tau, dobj / tau, pres, dres, gap, tau, kap);
    if (pres <= 0.1 * cfg.tol_eq && dres <= 0.1 * cfg.tol_eq && gap <= cfg.tol_gap)
      return finish(SdpStatus::Optimal);
    {
      const double score = std::max({pres / cfg.tol_eq, dres / cfg.tol_eq, gap / (100.0 * cfg.tol_gap)});
      if (score < best.score) {
        best = Saved{X, S, u, y, tau, kap, score, it, score <= 1.0};
      }
    }

    // certificates: tau has collapsed relative to kappa
    if (tau < 1e-6 * kap || tau < 1e-10) {
      Blocks Sy(nb);
      for (int k = 0; k < nb; ++k) Sy[k] = Aty[k] + S[k];
      if (dobj > 0.0) {
        const double r = std::max(inf_norm(c.Au.transpose() * y), max_abs(Sy)) / dobj;
        if (r <= 1e-6) {
          sol.message = "primal infeasible: dual ray with b'y > 0";
          finish(SdpStatus::Infeasible);
          sol.y = y / dobj;
          return sol;
        }
      }
      if (pobj < 0.0) {
        const double r = inf_norm(c.Au * u + AX) / -pobj;
        if (r <= 1e-6) {
          sol.message = "dual infeasible: primal ray with c'x < 0";
          return finish(SdpStatus::Unbounded);
        }
      }
    }

    // NT scaling
    for (int k = 0; k < nb; ++k) {
      Eigen::LLT<Mat> lx(X[k]);
      if (lx.info() != Eigen::Success) {
        return fallback("lost positive definiteness");
      }
      const Mat Lx = lx.matrixL();
      const EigResult e = sym_eig(Mat(Lx.transpose() * S[k] * Lx));
      Vec ev = e.values.cwiseMax(1e-300);
      Scaling& s = sc[k];
      s.lam = ev.cwiseSqrt();
      const Vec isq = s.lam.cwiseSqrt().cwiseInverse();
      s.G = Lx * e.vectors * isq.asDiagonal();
      s.Ginv = s.lam.cwiseSqrt().asDiagonal() * e.vectors.transpose() *
               Lx.triangularView<Eigen::Lower>().solve(Mat::Identity(c.dims[k], c.dims[k]));
      s.W = s.G * s.G.transpose();
    }

    // Schur complement M_ij = <A_i, W A_j W>
    Mat M = Mat::Zero(m, m);
    for (int k = 0; k < nb; ++k) {
      const Mat& W = sc[k].W;
      const auto& tl = c.touching[k];
      for (std::size_t ii = 0; ii < tl.size(); ++ii) {
        const int i = tl[ii];
        const auto& ei = c.cons[i][k];
        for (std::size_t jj = 0; jj <= ii; ++jj) {
          const int j = tl[jj];
          const auto& ej = c.cons[j][k];
          double s = 0.0;
          for (const auto& a : ei)
            for (const auto& bb : ej)
              s += a.v * bb.v * (W(a.r, bb.r) * W(a.c, bb.c) + W(a.r, bb.c) * W(a.c, bb.r));
          M(i, j) += 0.5 * s;
        }
      }
    }
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < i; ++j) M(j, i) = M(i, j);

    Eigen::LLT<Mat> llt;
    {
      const double dmax = m > 0 ? M.diagonal().cwiseAbs().maxCoeff() : 0.0;
      double delta = 1e-14 * (1.0 + dmax);
      for (int tries = 0; tries < 12; ++tries) {
        llt.compute(M + delta * Mat::Identity(m, m));
        if (llt.info() == Eigen::Success) break;
        delta *= 100.0;
      }
      if (llt.info() != Eigen::Success) {
        return fallback("Schur complement factorization failed");
      }
    }
    Mat MinvAu = nu > 0 ? Mat(llt.solve(c.Au)) : Mat(m, 0);
    Mat Su = c.Au.transpose() * MinvAu;
    Eigen::LDLT<Mat> su_fact;
    Eigen::FullPivLU<Mat> su_lu;
    bool use_lu = false;
    if (nu > 0) {
      su_fact.compute(Su);
      if (su_fact.info() != Eigen::Success || !su_fact.isPositive()) {
        use_lu = true;
        su_lu.compute(Su);
      }
    }
    // [M Au; Au' 0] [dy; du] = [r1; r2], by elimination of dy
    auto solve_once = [&](const Vec& r1, const Vec& r2, Vec& dy, Vec& du) {
      Vec Mr1 = llt.solve(r1);
      if (nu > 0) {
        Vec rhs = c.Au.transpose() * Mr1 - r2;
        du = use_lu ? Vec(su_lu.solve(rhs)) : Vec(su_fact.solve(rhs));
        dy = Mr1 - MinvAu * du;
      } else {
        du = Vec(0);
        dy = Mr1;
      }
    };
    // a few rounds of refinement against the unregularized system
    auto solve_aug = [&](const Vec& r1, const Vec& r2, Vec& dy, Vec& du) {
      solve_once(r1, r2, dy, du);
      const double scale = std::max(inf_norm(r1), inf_norm(r2));
      for (int pass = 0; pass < 4 && scale > 0.0; ++pass) {
        const Vec e1 = r1 - M * dy - (nu > 0 ? Vec(c.Au * du) : Vec::Zero(m));
        const Vec e2 = nu > 0 ? Vec(r2 - c.Au.transpose() * dy) : Vec(0);
        if (std::max(inf_norm(e1), inf_norm(e2)) <= 1e-15 * scale) break;
        Vec ey, eu;
        solve_once(e1, e2, ey, eu);
        dy += ey;
        if (nu > 0) du += eu;
      }
    };

    Blocks WCW(nb);
    for (int k = 0; k < nb; ++k) WCW[k] = sc[k].W * c.C[k] * sc[k].W;
    const Vec q1 = c.b + opA(c, WCW);
    Vec dy2, du2;
    solve_aug(q1, c.cu, dy2, du2);
    const Vec a = q1 - 2.0 * c.b;
    const double den = a.dot(dy2) + c.cu.dot(du2) - inner(c.C, WCW) - kap / tau;

    struct Dir {
      Vec du, dy;
      Blocks dX, dS, dXs, dSs;  // dXs, dSs: scaled
      double dtau = 0.0, dkap = 0.0;
    };

    auto direction = [&](double eta, const Blocks& Rc, double r6) {
      Dir d;
      Blocks T(nb);
      for (int k = 0; k < nb; ++k) {
        const Vec& lam = sc[k].lam;
        Mat E = Rc[k];
        for (int i = 0; i < E.rows(); ++i)
          for (int j = 0; j < E.cols(); ++j) E(i, j) = 2.0 * Rc[k](i, j) / (lam(i) + lam(j));
        T[k] = sc[k].G * E * sc[k].G.transpose() + eta * sc[k].W * F3[k] * sc[k].W;
      }
      const Vec h1 = -eta * F1 - opA(c, T);
      const Vec h2 = -eta * F2;
      Vec dy1, du1;
      solve_aug(h1, h2, dy1, du1);
      const double num = -eta * F4 - inner(c.C, T) - r6 / tau - a.dot(dy1) - c.cu.dot(du1);
      d.dtau = num / den;
      d.dy = dy1 + d.dtau * dy2;
      d.du = du1 + d.dtau * du2;
      d.dkap = (r6 - kap * d.dtau) / tau;
      const Blocks Atdy = opAt(c, d.dy);
      d.dS.resize(nb);
      d.dX.resize(nb);
      d.dXs.resize(nb);
      d.dSs.resize(nb);
      for (int k = 0; k < nb; ++k) {
        d.dS[k] = -eta * F3[k] - Atdy[k] + c.C[k] * d.dtau;
        d.dX[k] = T[k] + sc[k].W * Atdy[k] * sc[k].W - d.dtau * WCW[k];
        d.dXs[k] = sc[k].Ginv * d.dX[k] * sc[k].Ginv.transpose();
        d.dSs[k] = sc[k].G.transpose() * d.dS[k] * sc[k].G;
      }
      return d;
    };

    auto step_limit = [&](const Dir& d) {
      double amax = std::numeric_limits<double>::infinity();
      for (int k = 0; k < nb; ++k) {
        amax = std::min(amax, max_step(sc[k].lam, d.dXs[k]));
        amax = std::min(amax, max_step(sc[k].lam, d.dSs[k]));
      }
      if (d.dtau < 0.0) amax = std::min(amax, -tau / d.dtau);
      if (d.dkap < 0.0) amax = std::min(amax, -kap / d.dkap);
      return amax;
    };

    // predictor
    Blocks Rc(nb);
    for (int k = 0; k < nb; ++k) Rc[k] = Mat(Vec(-sc[k].lam.array().square()).asDiagonal());
    const Dir pa = direction(1.0, Rc, -tau * kap);
    const double aa = std::min(1.0, step_limit(pa));
    const Blocks Xa = axpy(X, aa, pa.dX), Sa = axpy(S, aa, pa.dS);
    const double mua = (inner(Xa, Sa) + (tau + aa * pa.dtau) * (kap + aa * pa.dkap)) / nu_total;
    const double sigma = std::clamp(std::pow(std::max(mua, 0.0) / mu, 3.0), 0.0, 1.0);

    // corrector
    for (int k = 0; k < nb; ++k) {
      const Mat cross = pa.dXs[k] * pa.dSs[k];
      Rc[k] = sigma * mu * Mat::Identity(c.dims[k], c.dims[k]) -
              Mat(Vec(sc[k].lam.array().square()).asDiagonal()) -
              0.5 * (cross + cross.transpose());
    }
    const double r6 = sigma * mu - tau * kap - pa.dtau * pa.dkap;
    const Dir d = direction(1.0 - sigma, Rc, r6);
    const double alpha = std::min(1.0, 0.98 * step_limit(d));

    u += alpha * d.du;
    y += alpha * d.dy;
    X = axpy(X, alpha, d.dX);
    S = axpy(S, alpha, d.dS);
    tau += alpha * d.dtau;
    kap += alpha * d.dkap;
    for (int k = 0; k < nb; ++k) {
      X[k] = 0.5 * (X[k] + X[k].transpose());
      S[k] = 0.5 * (S[k] + S[k].transpose());
    }
    if (!(alpha > 1e-12)) {
      return fallback("step length collapsed");
    }
  }
  sol.iterations = cfg.max_iter;
  return fallback("iteration cap reached");
}

SdpSolution solve_feasibility_with_margin(const SdpProblem& problem, const SdpConfig& cfg,
                                          const std::vector<bool>& margin_blocks) {
  problem.validate();
  const int nb = static_cast<int>(problem.blocks.size());
  std::vector<bool> mask = margin_blocks;
  if (mask.empty()) mask.assign(nb, true);
  if (static_cast<int>(mask.size()) != nb) throw SdpError("margin mask does not match block count");

  SdpProblem p = problem;
  const int t = p.add_free();
  const int slack = p.add_block(1);
  for (auto& eq : p.equalities) {
    double ct = 0.0;
    for (const auto& e : eq.f.entries)
      if (e.i == e.j && e.block < nb && mask[e.block]) ct += e.v;
    if (ct != 0.0) eq.f.add_free(t, ct);
  }
  Equality cap;
  cap.f.add_free(t, 1.0);
  cap.f.add_block(slack, 0, 0, 1.0);
  cap.rhs = cfg.t_max;
  p.equalities.push_back(cap);
  p.objective = LinearFunctional{};
  p.objective.add_free(t, -1.0);

  SdpSolution s = solve(p, cfg);
  const bool have_point = s.status == SdpStatus::Optimal || s.status == SdpStatus::MaxIterations;
  if (have_point && s.free.size() == p.free_vars) {
    const double tv = s.free(t);
    s.margin = tv;
    for (int k = 0; k < nb; ++k)
      if (mask[k])
        for (int i = 0; i < s.blocks[k].dim(); ++i) s.blocks[k](i, i) += tv;
    s.blocks.resize(nb);
    Vec f = s.free.head(problem.free_vars);
    s.free = f;
    s.objective = tv;
    s.min_block_eig = std::numeric_limits<double>::infinity();
    for (const auto& B : s.blocks) s.min_block_eig = std::min(s.min_block_eig, sym_eig(B).values(0));
    s.margin_ok = s.status == SdpStatus::Optimal && tv >= cfg.margin_tol;
    if (s.status == SdpStatus::Optimal && !s.margin_ok)
      s.message = "infeasible at margin: t* = " + std::to_string(tv);
  }
  return s;
}

}  // namespace infnet
