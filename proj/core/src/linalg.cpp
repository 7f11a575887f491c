#include "infnet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace infnet {

SymMatrix SymMatrix::identity(int dim, double scale) {
  SymMatrix s(dim);
  for (int i = 0; i < dim; ++i) s(i, i) = scale;
  return s;
}

SymMatrix SymMatrix::from_lower(const Mat& m) {
  if (m.rows() != m.cols()) throw LinalgError("SymMatrix: matrix not square");
  SymMatrix s(static_cast<int>(m.rows()));
  for (int i = 0; i < s.dim(); ++i)
    for (int j = 0; j <= i; ++j) s(i, j) = m(i, j);
  return s;
}

SymMatrix SymMatrix::from_dense(const Mat& m) {
  if (m.rows() != m.cols()) throw LinalgError("SymMatrix: matrix not square");
  SymMatrix s(static_cast<int>(m.rows()));
  for (int i = 0; i < s.dim(); ++i)
    for (int j = 0; j <= i; ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
  return s;
}

Mat SymMatrix::dense() const {
  Mat m(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = (*this)(i, j);
  return m;
}

double SymMatrix::frobenius() const {
  double acc = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j <= i; ++j) {
      const double v = (*this)(i, j);
      acc += (i == j ? 1.0 : 2.0) * v * v;
    }
  return std::sqrt(acc);
}

bool SymMatrix::is_positive_definite() const {
  if (dim_ == 0) return false;
  Eigen::LLT<Mat> llt(dense());
  return llt.info() == Eigen::Success;
}

EigResult sym_eig(const Mat& input) {
  const int n = static_cast<int>(input.rows());
  if (input.cols() != n) throw LinalgError("sym_eig: matrix not square");
  Mat a = 0.5 * (input + input.transpose());
  Mat v = Mat::Identity(n, n);
  const double fro = a.norm();
  const double tol = 1e-14 * fro;

  auto off_mass = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && fro > 0.0; ++sweep) {
    if (off_mass() <= tol) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p), aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a(i, i) < a(j, j); });
  EigResult r;
  r.values.resize(n);
  r.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    r.values(k) = a(order[k], order[k]);
    r.vectors.col(k) = v.col(order[k]);
  }
  return r;
}

EigResult sym_eig(const SymMatrix& m) { return sym_eig(m.dense()); }

SymMatrix sqrt_psd(const SymMatrix& m) {
  if (m.dim() == 0) return m;
  EigResult e = sym_eig(m);
  const double scale = std::max(std::abs(e.values(0)),
                                std::abs(e.values(e.values.size() - 1)));
  if (e.values(0) < -1e-12 * scale)
    throw LinalgError("sqrt_psd: matrix is not positive semidefinite");
  Vec r = e.values.cwiseMax(0.0).cwiseSqrt();
  Mat a = e.vectors * r.asDiagonal() * e.vectors.transpose();
  return SymMatrix::from_dense(a);
}

double spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  const Mat g = m.rows() >= m.cols() ? Mat(m.transpose() * m) : Mat(m * m.transpose());
  EigResult e = sym_eig(g);
  return std::sqrt(std::max(0.0, e.values(e.values.size() - 1)));
}

double lambda_min(const Mat& sym) { return sym_eig(sym).values(0); }

double lambda_max(const Mat& sym) {
  EigResult e = sym_eig(sym);
  return e.values(e.values.size() - 1);
}

Mat spd_inverse(const Mat& m) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success)
    throw LinalgError("spd_inverse: matrix is not positive definite");
  return llt.solve(Mat::Identity(m.rows(), m.cols()));
}

double condition_number_spd(const Mat& m) {
  EigResult e = sym_eig(m);
  const double lo = e.values(0);
  const double hi = e.values(e.values.size() - 1);
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace infnet
