#pragma once

#include "infnet/linalg.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace infnet {

class PolyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Monomial {
  std::vector<int> exps;

  Monomial() = default;
  explicit Monomial(std::vector<int> e) : exps(std::move(e)) {}
  static Monomial one(int n) { return Monomial(std::vector<int>(n, 0)); }
  static Monomial var(int n, int k);

  int nvars() const { return static_cast<int>(exps.size()); }
  int degree() const;
  double eval(const Vec& x) const;
  Monomial operator*(const Monomial& o) const;

  // "1", "x1", "x1^2*x3"
  std::string str() const;
};

// Graded lexicographic: lower degree first, then larger leading exponent first.
bool grlex_less(const Monomial& a, const Monomial& b);

struct GrlexLess {
  bool operator()(const Monomial& a, const Monomial& b) const { return grlex_less(a, b); }
};

// All monomials of total degree lo..hi in grlex order.
std::vector<Monomial> grlex_basis(int n, int hi, int lo = 0);

class Polynomial {
 public:
  using Terms = std::map<Monomial, double, GrlexLess>;

  Polynomial() = default;
  explicit Polynomial(int n) : n_(n) {}
  static Polynomial constant(int n, double c);
  static Polynomial monomial(const Monomial& m, double c = 1.0);

  int nvars() const { return n_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;  // -1 for zero

  void add_term(const Monomial& m, double c);
  double coeff(const Monomial& m) const;
  double eval(const Vec& x) const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(double s) const;

  // Drops terms with |c| <= tol.
  Polynomial pruned(double tol) const;
  bool approx_equal(const Polynomial& o, double tol) const;

  std::string str(int precision = 8) const;

 private:
  int n_ = 0;
  Terms terms_;
};

class PolyMatrix {
 public:
  PolyMatrix() = default;
  PolyMatrix(int rows, int cols, int n);
  static PolyMatrix constant(const Mat& m, int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int nvars() const { return n_; }
  int degree() const;

  const Polynomial& operator()(int i, int j) const { return cells_[idx(i, j)]; }
  Polynomial& operator()(int i, int j) { return cells_[idx(i, j)]; }

  Mat eval(const Vec& x) const;
  PolyMatrix operator*(const PolyMatrix& o) const;
  PolyMatrix operator*(const Mat& o) const;
  PolyMatrix operator+(const PolyMatrix& o) const;

  // Constant coefficient matrix of a monomial.
  Mat coeff(const Monomial& m) const;
  std::vector<Monomial> support() const;

  bool approx_equal(const PolyMatrix& o, double tol) const;

 private:
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i) * cols_ + j;
  }
  int rows_ = 0, cols_ = 0, n_ = 0;
  std::vector<Polynomial> cells_;
};

// Component k = product of x_j^exps[j] over the k-th monomial.
Vec eval_dictionary(const std::vector<Monomial>& dict, const Vec& x);

// The dictionary as an N x 1 polynomial column.
PolyMatrix dictionary_column(const std::vector<Monomial>& dict, int n);

// Psi with Psi(x) x == F(x). Default divides each monomial by its
// lowest-indexed variable; an override is validated and returned as is.
PolyMatrix factor_transformation(const std::vector<Monomial>& dict, int n,
                                 const std::optional<PolyMatrix>& override_psi = std::nullopt);

// Exponent-vector list (config format) <-> monomials.
std::vector<Monomial> monomials_from_exponents(const std::vector<std::vector<int>>& e);

}  // namespace infnet
