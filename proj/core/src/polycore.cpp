#include "infnet/polycore.hpp"

#include <cmath>
#include <functional>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace infnet {

Monomial Monomial::var(int n, int k) {
  Monomial m = one(n);
  m.exps.at(k) = 1;
  return m;
}

int Monomial::degree() const { return std::accumulate(exps.begin(), exps.end(), 0); }

double Monomial::eval(const Vec& x) const {
  if (x.size() != nvars())
    throw PolyError("monomial evaluation: expected " + std::to_string(nvars()) +
                    " coordinates, got " + std::to_string(x.size()));
  double v = 1.0;
  for (int j = 0; j < nvars(); ++j)
    for (int p = 0; p < exps[j]; ++p) v *= x(j);
  return v;
}

Monomial Monomial::operator*(const Monomial& o) const {
  if (o.nvars() != nvars()) throw PolyError("monomial product: variable count mismatch");
  Monomial r = *this;
  for (int j = 0; j < nvars(); ++j) r.exps[j] += o.exps[j];
  return r;
}

std::string Monomial::str() const {
  std::string s;
  for (int j = 0; j < nvars(); ++j) {
    if (exps[j] == 0) continue;
    if (!s.empty()) s += "*";
    s += "x" + std::to_string(j + 1);
    if (exps[j] > 1) s += "^" + std::to_string(exps[j]);
  }
  return s.empty() ? "1" : s;
}

bool grlex_less(const Monomial& a, const Monomial& b) {
  const int da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  // same degree: x1 before x2, so larger leading exponent sorts first
  return a.exps > b.exps;
}

std::vector<Monomial> grlex_basis(int n, int hi, int lo) {
  std::vector<Monomial> out;
  std::vector<int> e(n, 0);
  for (int d = std::max(lo, 0); d <= hi; ++d) {
    // enumerate exponent vectors of degree d, leading exponent descending
    std::function<void(int, int)> rec = [&](int pos, int left) {
      if (pos == n - 1) {
        e[pos] = left;
        out.emplace_back(e);
        return;
      }
      for (int k = left; k >= 0; --k) {
        e[pos] = k;
        rec(pos + 1, left - k);
      }
    };
    if (n == 0) {
      if (d == 0) out.emplace_back(e);
      continue;
    }
    rec(0, d);
  }
  return out;
}

Polynomial Polynomial::constant(int n, double c) {
  Polynomial p(n);
  p.add_term(Monomial::one(n), c);
  return p;
}

Polynomial Polynomial::monomial(const Monomial& m, double c) {
  Polynomial p(m.nvars());
  p.add_term(m, c);
  return p;
}

int Polynomial::degree() const {
  int d = -1;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

void Polynomial::add_term(const Monomial& m, double c) {
  if (m.nvars() != n_) throw PolyError("polynomial: monomial variable count mismatch");
  if (c == 0.0) return;
  auto it = terms_.find(m);
  if (it == terms_.end()) {
    terms_.emplace(m, c);
  } else {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Polynomial::coeff(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::eval(const Vec& x) const {
  double v = 0.0;
  for (const auto& [m, c] : terms_) v += c * m.eval(x);
  return v;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  if (r.n_ == 0) r.n_ = o.n_;
  for (const auto& [m, c] : o.terms_) r.add_term(m, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + o * -1.0; }

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r(std::max(n_, o.n_));
  for (const auto& [ma, ca] : terms_)
    for (const auto& [mb, cb] : o.terms_) r.add_term(ma * mb, ca * cb);
  return r;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial r(n_);
  for (const auto& [m, c] : terms_) r.add_term(m, c * s);
  return r;
}

Polynomial Polynomial::pruned(double tol) const {
  Polynomial r(n_);
  for (const auto& [m, c] : terms_)
    if (std::abs(c) > tol) r.add_term(m, c);
  return r;
}

bool Polynomial::approx_equal(const Polynomial& o, double tol) const {
  return (*this - o).pruned(tol).is_zero();
}

std::string Polynomial::str(int precision) const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  os << std::setprecision(precision);
  bool first = true;
  // highest degree first reads closer to the usual presentation
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    const double c = it->second;
    const std::string mono = it->first.str();
    if (first) {
      if (c < 0) os << "-";
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    os << std::abs(c);
    if (mono != "1") os << "*" << mono;
    first = false;
  }
  return os.str();
}

PolyMatrix::PolyMatrix(int rows, int cols, int n)
    : rows_(rows), cols_(cols), n_(n),
      cells_(static_cast<std::size_t>(rows) * cols, Polynomial(n)) {}

PolyMatrix PolyMatrix::constant(const Mat& m, int n) {
  PolyMatrix r(static_cast<int>(m.rows()), static_cast<int>(m.cols()), n);
  for (int i = 0; i < r.rows(); ++i)
    for (int j = 0; j < r.cols(); ++j) r(i, j).add_term(Monomial::one(n), m(i, j));
  return r;
}

int PolyMatrix::degree() const {
  int d = -1;
  for (const auto& c : cells_) d = std::max(d, c.degree());
  return d;
}

Mat PolyMatrix::eval(const Vec& x) const {
  Mat r(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) r(i, j) = (*this)(i, j).eval(x);
  return r;
}

PolyMatrix PolyMatrix::operator*(const PolyMatrix& o) const {
  if (cols_ != o.rows_) throw PolyError("polynomial matrix product: shape mismatch");
  PolyMatrix r(rows_, o.cols_, std::max(n_, o.n_));
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < o.cols_; ++j)
      for (int k = 0; k < cols_; ++k) r(i, j) = r(i, j) + (*this)(i, k) * o(k, j);
  return r;
}

PolyMatrix PolyMatrix::operator*(const Mat& o) const { return *this * constant(o, n_); }

PolyMatrix PolyMatrix::operator+(const PolyMatrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw PolyError("polynomial matrix sum: shape mismatch");
  PolyMatrix r = *this;
  for (std::size_t k = 0; k < cells_.size(); ++k) r.cells_[k] = r.cells_[k] + o.cells_[k];
  return r;
}

Mat PolyMatrix::coeff(const Monomial& m) const {
  Mat r(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) r(i, j) = (*this)(i, j).coeff(m);
  return r;
}

std::vector<Monomial> PolyMatrix::support() const {
  std::map<Monomial, int, GrlexLess> seen;
  for (const auto& c : cells_)
    for (const auto& [m, v] : c.terms()) seen[m] = 1;
  std::vector<Monomial> out;
  for (const auto& [m, v] : seen) out.push_back(m);
  return out;
}

bool PolyMatrix::approx_equal(const PolyMatrix& o, double tol) const {
  if (rows_ != o.rows_ || cols_ != o.cols_) return false;
  for (std::size_t k = 0; k < cells_.size(); ++k)
    if (!cells_[k].approx_equal(o.cells_[k], tol)) return false;
  return true;
}

Vec eval_dictionary(const std::vector<Monomial>& dict, const Vec& x) {
  Vec out(dict.size());
  for (std::size_t k = 0; k < dict.size(); ++k) out(k) = dict[k].eval(x);
  return out;
}

PolyMatrix dictionary_column(const std::vector<Monomial>& dict, int n) {
  PolyMatrix f(static_cast<int>(dict.size()), 1, n);
  for (std::size_t k = 0; k < dict.size(); ++k) {
    if (dict[k].nvars() != n) throw PolyError("dictionary entry has wrong variable count");
    f(static_cast<int>(k), 0).add_term(dict[k], 1.0);
  }
  return f;
}

PolyMatrix factor_transformation(const std::vector<Monomial>& dict, int n,
                                 const std::optional<PolyMatrix>& override_psi) {
  for (const auto& m : dict) {
    if (m.nvars() != n) throw PolyError("dictionary entry has wrong variable count");
    if (m.degree() == 0)
      throw PolyError("dictionary entry " + m.str() + " has degree 0 (F(0) must vanish)");
  }
  const int N = static_cast<int>(dict.size());
  PolyMatrix xcol(n, 1, n);
  for (int j = 0; j < n; ++j) xcol(j, 0).add_term(Monomial::var(n, j), 1.0);
  const PolyMatrix target = dictionary_column(dict, n);

  if (override_psi) {
    const PolyMatrix& psi = *override_psi;
    if (psi.rows() != N || psi.cols() != n)
      throw PolyError("transformation override has shape " + std::to_string(psi.rows()) + "x" +
                      std::to_string(psi.cols()) + ", expected " + std::to_string(N) + "x" +
                      std::to_string(n));
    if (!(psi * xcol).approx_equal(target, 1e-12))
      throw PolyError("transformation override does not satisfy Psi(x) x = F(x)");
    return psi;
  }

  PolyMatrix psi(N, n, n);
  for (int k = 0; k < N; ++k) {
    const Monomial& m = dict[k];
    int j = 0;
    while (m.exps[j] == 0) ++j;
    Monomial q = m;
    q.exps[j] -= 1;
    psi(k, j).add_term(q, 1.0);
  }
  return psi;
}

std::vector<Monomial> monomials_from_exponents(const std::vector<std::vector<int>>& e) {
  std::vector<Monomial> out;
  out.reserve(e.size());
  for (const auto& v : e) {
    for (int k : v)
      if (k < 0) throw PolyError("negative exponent in dictionary");
    out.emplace_back(v);
  }
  return out;
}

}  // namespace infnet
