#include "infnet/composition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace infnet {

GainEntry build_gain_entry(double rho_i, double alpha_lo_j, double kappa_i) {
  if (!(alpha_lo_j > 0.0)) throw CompositionError("alpha_lo must be positive");
  if (!(kappa_i > 0.0)) throw CompositionError("kappa must be positive");
  if (rho_i < 0.0) throw CompositionError("rho must be nonnegative");
  GainEntry e;
  e.theta = rho_i / alpha_lo_j;
  e.omega = e.theta / kappa_i;
  return e;
}

namespace {

const ClassGains& single(const GainModel& g) {
  if (g.classes.size() != 1)
    throw CompositionError(
        "closed-form column sums need a homogeneous network; supply a custom column-sum bound");
  return g.classes.front();
}

}  // namespace

double omega_norm_11(const GainModel& g) {
  const ClassGains& c = single(g);
  if (g.card < 0) throw CompositionError("negative neighbour count");
  // every column j is hit by exactly Card rows whose band covers j
  return g.card * build_gain_entry(c.rho, c.alpha_lo, c.kappa).omega;
}

SmallGainVerdict small_gain(const GainModel& g) {
  SmallGainVerdict v;
  v.bound = omega_norm_11(g);
  v.pass = v.bound < 1.0;
  return v;
}

MuKappa compute_mu_kappa(const GainModel& g, double epsilon) {
  const ClassGains& c = single(g);
  const double norm = omega_norm_11(g);
  if (!(norm < 1.0)) throw CompositionError("small-gain condition fails; no mu exists");
  MuKappa r;
  r.mu.assign(g.classes.size(), 1.0);
  r.kappa_inf = (1.0 - norm) * c.kappa - epsilon;
  if (!(r.kappa_inf > 0.0))
    throw CompositionError("kappa_inf is not positive; choose epsilon < (1 - norm11) kappa");
  const double theta = build_gain_entry(c.rho, c.alpha_lo, c.kappa).theta;
  r.column_lhs = g.card * theta * r.mu[0];
  r.column_rhs = (c.kappa - r.kappa_inf) * r.mu[0];
  if (!(r.column_lhs <= r.column_rhs))
    throw CompositionError("column condition sum mu_i theta_ij <= (kappa_j - kappa_inf) mu_j fails");
  return r;
}

ClfParams compose_clf(const GainModel& g, const std::vector<double>& mu, double kappa_inf) {
  if (mu.size() != g.classes.size()) throw CompositionError("mu must have one entry per class");
  double zlo = std::numeric_limits<double>::infinity(), zhi = 0.0;
  for (const auto& c : g.classes) {
    zlo = std::min(zlo, c.alpha_lo);
    zhi = std::max(zhi, c.alpha_hi);
  }
  const double mlo = *std::min_element(mu.begin(), mu.end());
  const double mhi = *std::max_element(mu.begin(), mu.end());
  ClfParams p;
  p.alpha_lo = mlo * zlo;
  p.alpha_hi = mhi * zhi;
  p.kappa = kappa_inf;
  return p;
}

CompositionResult compose(const GainModel& g, double epsilon) {
  const ClassGains& c = single(g);
  CompositionResult r;
  const GainEntry e = build_gain_entry(c.rho, c.alpha_lo, c.kappa);
  r.theta = e.theta;
  r.omega_entry = e.omega;
  r.norm11 = omega_norm_11(g);
  r.pass = r.norm11 < 1.0;
  r.epsilon = epsilon;
  if (!r.pass) return r;
  const MuKappa mk = compute_mu_kappa(g, epsilon);
  r.mu = mk.mu;
  r.kappa_inf = mk.kappa_inf;
  const ClfParams clf = compose_clf(g, mk.mu, mk.kappa_inf);
  r.clf_alpha_lo = clf.alpha_lo;
  r.clf_alpha_hi = clf.alpha_hi;
  return r;
}

double materialized_norm11(const GainModel& g, int N) {
  const ClassGains& c = single(g);
  const double w = build_gain_entry(c.rho, c.alpha_lo, c.kappa).omega;
  NetworkDescriptor d;
  d.topology = g.topology;
  d.band = g.card;
  std::vector<double> col(N, 0.0);
  for (int i = 1; i <= N; ++i)
    for (long j : d.neighbors(i))
      if (j >= 1 && j <= N) col[j - 1] += w;
  return *std::max_element(col.begin(), col.end());
}

DecreaseReport network_decrease_check(const TruncatedNetwork& net, const SubsystemClass& cls,
                                      const SynthesisResult& r, const std::vector<double>& mu,
                                      double kappa_inf, int samples, double radius,
                                      std::uint64_t seed, double slack_tol) {
  if (!cls.truth) throw CompositionError("decrease check needs the true dynamics");
  const int N = net.size(), n = cls.n;
  const double mu0 = mu.empty() ? 1.0 : mu[0];
  const Mat P = r.P.dense();
  CounterRng rng{seed, 0, kStreamHarness};
  std::uint64_t ctr = 0;
  DecreaseReport rep;
  rep.worst_slack = -std::numeric_limits<double>::infinity();
  Mat x(n, N);
  for (int k = 0; k < samples; ++k) {
    if (k == 0) {
      x.setZero();
    } else {
      const double mag = radius * std::pow(10.0, -6.0 * rng.uniform01(ctr++));
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < n; ++j) x(j, i) = rng.uniform(ctr++, -mag, mag);
    }
    double Vsum = 0.0, Vdot = 0.0;
    for (int i = 1; i <= N; ++i) {
      const Vec xi = x.col(i - 1);
      Vec w = Vec::Zero(n);
      for (int j : net.neighbors(i)) w += x.col(j - 1);
      const Vec xdot = cls.truth->rhs(xi, r.control(xi)) + cls.d_block * w;
      Vsum += mu0 * xi.dot(P * xi);
      Vdot += mu0 * 2.0 * xi.dot(P * xdot);
    }
    const double s = (Vdot + kappa_inf * Vsum) / (1.0 + Vsum);
    if (s > rep.worst_slack) {
      rep.worst_slack = s;
      rep.witness = x;
    }
  }
  rep.pass = rep.worst_slack <= slack_tol;
  return rep;
}

std::string gain_table_csv(const GainModel& g, const CompositionResult& c) {
  std::string out = "class,kappa,alpha_lo,alpha_hi,rho,theta,omega_entry,card,norm11,pass\n";
  char buf[512];
  for (const auto& k : g.classes) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%s\n",
                  k.name.c_str(), k.kappa, k.alpha_lo, k.alpha_hi, k.rho, c.theta, c.omega_entry,
                  g.card, c.norm11, c.pass ? "true" : "false");
    out += buf;
  }
  return out;
}

}  // namespace infnet
