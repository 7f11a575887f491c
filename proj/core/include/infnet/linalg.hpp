#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace infnet {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Symmetric matrix with packed lower-triangle storage.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim) : dim_(dim), data_(packed_size(dim), 0.0) {}

  static SymMatrix identity(int dim, double scale = 1.0);
  // Uses the lower triangle of a square matrix.
  static SymMatrix from_lower(const Mat& m);
  // Symmetrizes (m + m^T)/2.
  static SymMatrix from_dense(const Mat& m);

  int dim() const { return dim_; }
  double operator()(int i, int j) const { return data_[index(i, j)]; }
  double& operator()(int i, int j) { return data_[index(i, j)]; }

  Mat dense() const;
  double frobenius() const;
  bool is_positive_definite() const;

  const std::vector<double>& packed() const { return data_; }

  static std::size_t packed_size(int dim) {
    return static_cast<std::size_t>(dim) * (dim + 1) / 2;
  }

 private:
  std::size_t index(int i, int j) const {
    if (i < j) std::swap(i, j);
    return static_cast<std::size_t>(i) * (i + 1) / 2 + j;
  }

  int dim_ = 0;
  std::vector<double> data_;
};

struct EigResult {
  Vec values;   // ascending
  Mat vectors;  // columns are orthonormal eigenvectors
};

// Cyclic Jacobi. Stops when off-diagonal Frobenius mass <= 1e-14 ||M||_F.
EigResult sym_eig(const SymMatrix& m);
EigResult sym_eig(const Mat& m);

SymMatrix sqrt_psd(const SymMatrix& m);
double spectral_norm(const Mat& m);

double lambda_min(const Mat& sym);
double lambda_max(const Mat& sym);

// Inverse of a symmetric positive definite matrix; throws when not PD.
Mat spd_inverse(const Mat& m);
double condition_number_spd(const Mat& m);

}  // namespace infnet
