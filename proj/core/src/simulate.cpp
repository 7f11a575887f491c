#include "infnet/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace infnet {

namespace {

struct Rhs {
  const TruncatedNetwork& net;
  const SubsystemClass& cls;
  const FeedbackLaw& law;
  Mat prefix;

  void operator()(const Mat& x, Mat& out) {
    const int N = net.size(), n = cls.n;
    prefix.resize(n, N + 1);
    prefix.col(0).setZero();
    for (int j = 0; j < N; ++j) prefix.col(j + 1) = prefix.col(j) + x.col(j);
    out.resize(n, N);
    for (int i = 0; i < N; ++i) {
      const Vec xi = x.col(i);
      out.col(i) = cls.truth->rhs(xi, law(xi));
      Vec sum = Vec::Zero(n);
      for (const auto& [a, b] : net.runs(i + 1)) sum += prefix.col(b) - prefix.col(a - 1);
      out.col(i) += cls.d_block * sum;
    }
  }
};

}  // namespace

namespace {

int sample_count(const SimConfig& cfg) {
  return static_cast<int>(std::floor(cfg.horizon / cfg.sample_dt + 1e-9)) + 1;
}

SimResult dormand_prince(const TruncatedNetwork& net, const SubsystemClass& cls,
                         const FeedbackLaw& law, const Mat& x0, const SimConfig& cfg) {
  const int N = net.size(), n = cls.n;

  // Dormand-Prince coefficients
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  Rhs f{net, cls, law, {}};
  SimResult res;
  res.initial_norm = x0.norm();
  const double atol = std::max(cfg.atol_rel * res.initial_norm, 1e-300);

  const int nsamp = sample_count(cfg);
  res.X.assign(N, Mat(n, nsamp));
  res.U.assign(N, Mat(cls.m, nsamp));
  auto record = [&](int k, double t, const Mat& x) {
    res.t.push_back(t);
    for (int i = 0; i < N; ++i) {
      res.X[i].col(k) = x.col(i);
      res.U[i].col(k) = law(x.col(i));
    }
  };

  Mat x = x0, k1, k2, k3, k4, k5, k6, k7, tmp, xn, err;
  double t = 0.0;
  record(0, 0.0, x);
  if (res.initial_norm == 0.0) {
    for (int k = 1; k < nsamp; ++k) record(k, k * cfg.sample_dt, x);
    return res;
  }
  f(x, k1);
  // initial step from the derivative scale
  double h = std::min(cfg.sample_dt, 0.01 * (x.norm() + atol) / (k1.norm() + 1e-300));
  int next = 1;
  while (next < nsamp) {
    if (++res.steps > cfg.max_steps)
      throw IntegrationDiverged(t, "simulation exceeded the step budget at t = " + std::to_string(t));
    const double target = next * cfg.sample_dt;
    const bool clipped = t + h >= target;
    const double hs = clipped ? target - t : h;
    tmp = x + hs * (a21 * k1);
    f(tmp, k2);
    tmp = x + hs * (a31 * k1 + a32 * k2);
    f(tmp, k3);
    tmp = x + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    f(tmp, k4);
    tmp = x + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(tmp, k5);
    tmp = x + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(tmp, k6);
    xn = x + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(xn, k7);
    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double sc = atol + cfg.rtol * std::max(std::abs(x(j)), std::abs(xn(j)));
      en = std::max(en, std::abs(err(j)) / sc);
    }
    if (!std::isfinite(en) || !xn.allFinite() || !k7.allFinite()) {
      h = 0.1 * hs;
      ++res.rejected;
      if (!(h > 1e-300))
        throw IntegrationDiverged(t, "closed-loop state blew up at t = " + std::to_string(t));
      continue;
    }
    const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
    if (en <= 1.0) {
      t = clipped ? target : t + hs;
      x = xn;
      k1 = k7;  // first same as last
      if (clipped) record(next++, t, x);
      h = clipped ? std::max(h, hs * fac) : hs * fac;
    } else {
      ++res.rejected;
      h = hs * fac;
      if (!(h > 1e-300))
        throw IntegrationDiverged(t, "step size collapsed at t = " + std::to_string(t));
    }
  }
  res.final_norm = x.norm();
  return res;
}

// L-stable Rosenbrock 2(3) (the ode23s scheme). The Jacobian is block
// structured: local blocks by central differences, constant D blocks for
// every neighbour.
SimResult rosenbrock(const TruncatedNetwork& net, const SubsystemClass& cls,
                     const FeedbackLaw& law, const Mat& x0, const SimConfig& cfg) {
  const int N = net.size(), n = cls.n, dim = n * N;
  Rhs f{net, cls, law, {}};
  SimResult res;
  res.initial_norm = x0.norm();
  const double atol = std::max(cfg.atol_rel * res.initial_norm, 1e-300);

  const int nsamp = sample_count(cfg);
  res.X.assign(N, Mat(n, nsamp));
  res.U.assign(N, Mat(cls.m, nsamp));
  auto record = [&](int k, double t, const Mat& x) {
    res.t.push_back(t);
    for (int i = 0; i < N; ++i) {
      res.X[i].col(k) = x.col(i);
      res.U[i].col(k) = law(x.col(i));
    }
  };
  record(0, 0.0, x0);
  if (res.initial_norm == 0.0) {
    for (int k = 1; k < nsamp; ++k) record(k, k * cfg.sample_dt, x0);
    return res;
  }

  // column-major n x N matrices double as dim-vectors
  auto F = [&](const Vec& y) {
    Mat out;
    f(Eigen::Map<const Mat>(y.data(), n, N), out);
    return Vec(Eigen::Map<const Vec>(out.data(), dim));
  };
  auto local = [&](const Vec& xi) { return Vec(cls.truth->rhs(xi, law(xi))); };
  Mat J = Mat::Zero(dim, dim);
  for (int i = 0; i < N; ++i)
    for (int j : net.neighbors(i + 1)) J.block(i * n, (j - 1) * n, n, n) = cls.d_block;
  auto jacobian = [&](const Vec& y) {
    for (int i = 0; i < N; ++i) {
      const Vec xi = y.segment(i * n, n);
      for (int c = 0; c < n; ++c) {
        const double d = 1e-6 * std::max(std::abs(xi(c)), 1e-3 * xi.norm() + atol);
        Vec xp = xi, xq = xi;
        xp(c) += d;
        xq(c) -= d;
        J.block(i * n, i * n + c, n, 1) = (local(xp) - local(xq)) / (2.0 * d);
      }
    }
  };

  const double dg = 1.0 / (2.0 + std::sqrt(2.0));
  const double e32 = 6.0 + std::sqrt(2.0);
  const Mat I = Mat::Identity(dim, dim);
  Vec y = Eigen::Map<const Vec>(x0.data(), dim);
  Vec F0 = F(y);
  double t = 0.0;
  double h = std::min(cfg.sample_dt, 0.01 * (y.norm() + atol) / (F0.norm() + 1e-300));
  bool fresh = false;  // Jacobian valid for y
  Eigen::PartialPivLU<Mat> lu;
  int next = 1;
  while (next < nsamp) {
    if (++res.steps > cfg.max_steps)
      throw IntegrationDiverged(t, "simulation exceeded the step budget at t = " + std::to_string(t));
    const double target = next * cfg.sample_dt;
    const bool clipped = t + h >= target;
    const double hs = clipped ? target - t : h;
    if (!fresh) {
      jacobian(y);
      fresh = true;
    }
    lu.compute(I - (hs * dg) * J);
    const Vec k1 = lu.solve(F0);
    const Vec F1 = F(y + 0.5 * hs * k1);
    const Vec k2 = lu.solve(Vec(F1 - k1)) + k1;
    const Vec yn = y + hs * k2;
    const Vec F2 = F(yn);
    const Vec k3 = lu.solve(Vec(F2 - e32 * (k2 - F1) - 2.0 * (k1 - F0)));
    const Vec err = (hs / 6.0) * (k1 - 2.0 * k2 + k3);
    double en = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double sc = atol + cfg.rtol * std::max(std::abs(y(j)), std::abs(yn(j)));
      en = std::max(en, std::abs(err(j)) / sc);
    }
    if (!std::isfinite(en) || !yn.allFinite() || !F2.allFinite()) {
      h = 0.1 * hs;
      ++res.rejected;
      if (!(h > 1e-300))
        throw IntegrationDiverged(t, "closed-loop state blew up at t = " + std::to_string(t));
      continue;
    }
    const double fac = en == 0.0 ? 5.0 : std::clamp(0.8 * std::pow(en, -1.0 / 3.0), 0.2, 5.0);
    if (en <= 1.0) {
      t = clipped ? target : t + hs;
      y = yn;
      F0 = F2;
      fresh = false;
      if (clipped) record(next++, t, Eigen::Map<const Mat>(y.data(), n, N));
      h = clipped ? std::max(h, hs * fac) : hs * fac;
    } else {
      ++res.rejected;
      h = hs * fac;
      if (!(h > 1e-300))
        throw IntegrationDiverged(t, "step size collapsed at t = " + std::to_string(t));
    }
  }
  res.final_norm = y.norm();
  return res;
}

}  // namespace

SimResult simulate_network(const TruncatedNetwork& net, const SubsystemClass& cls,
                           const FeedbackLaw& law, const Mat& x0, const SimConfig& cfg) {
  if (!cls.truth) throw DataError("simulate: class has no ground truth");
  if (x0.rows() != cls.n || x0.cols() != net.size())
    throw DataError("simulate: x0 must be n x N");
  if (cfg.method == Integrator::DormandPrince) return dormand_prince(net, cls, law, x0, cfg);
  return rosenbrock(net, cls, law, x0, cfg);
}

}  // namespace infnet
