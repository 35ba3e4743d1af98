#ifndef L1L2_LINALG_HPP
#define L1L2_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace l1l2 {

using Vector = std::vector<double>;

/// Raised when an iterative kernel hits its iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Dense row-major matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0)
      throw std::invalid_argument("DenseMatrix: dimensions must be positive");
  }
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows == 0 || cols == 0)
      throw std::invalid_argument("DenseMatrix: dimensions must be positive");
    if (data_.size() != rows * cols)
      throw std::invalid_argument("DenseMatrix: entry count does not match shape");
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
    return a;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline double norm1(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

inline double norm_inf(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s = std::max(s, std::abs(v));
  return s;
}

inline bool is_zero(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
}

inline Vector subtract(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("subtract: length mismatch");
  Vector r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i];
  return r;
}

inline double distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return std::sqrt(s);
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vector scaled(std::span<const double> x, double alpha) {
  Vector r(x.begin(), x.end());
  for (double& v : r) v *= alpha;
  return r;
}

/// Ax
inline Vector matvec(const DenseMatrix& a, std::span<const double> x) {
  if (x.size() != a.cols())
    throw std::invalid_argument("matvec: x has length " + std::to_string(x.size()) +
                                ", matrix has " + std::to_string(a.cols()) + " columns");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

/// A^T y
inline Vector matvec_transposed(const DenseMatrix& a, std::span<const double> y) {
  if (y.size() != a.rows())
    throw std::invalid_argument("matvec_transposed: y has length " + std::to_string(y.size()) +
                                ", matrix has " + std::to_string(a.rows()) + " rows");
  Vector x(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double yi = y[i];
    if (yi == 0.0) continue;
    const auto r = a.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) x[j] += yi * r[j];
  }
  return x;
}

inline double frobenius_norm_sq(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return s;
}

/// A A^T (m x m).
inline DenseMatrix gram_rows(const DenseMatrix& a) {
  const std::size_t m = a.rows();
  DenseMatrix g(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = i; k < m; ++k) {
      const double v = dot(a.row(i), a.row(k));
      g(i, k) = v;
      g(k, i) = v;
    }
  return g;
}

/// A^T A (n x n).
inline DenseMatrix gram_cols(const DenseMatrix& a) {
  const std::size_t n = a.cols();
  DenseMatrix g(n, n);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double rj = r[j];
      if (rj == 0.0) continue;
      auto gj = g.row(j);
      for (std::size_t k = j; k < n; ++k) gj[k] += rj * r[k];
    }
  }
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < j; ++k) g(j, k) = g(k, j);
  return g;
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
class Cholesky {
 public:
  explicit Cholesky(const DenseMatrix& spd) : l_(spd.rows(), spd.cols()) {
    if (spd.rows() != spd.cols()) throw std::invalid_argument("Cholesky: matrix not square");
    const std::size_t n = spd.rows();
    for (std::size_t j = 0; j < n; ++j) {
      double diag = spd(j, j);
      for (std::size_t k = 0; k < j; ++k) diag -= l_(j, k) * l_(j, k);
      if (!(diag > 0.0) || !std::isfinite(diag))
        throw std::runtime_error("Cholesky: matrix is not positive definite (pivot " +
                                 std::to_string(j) + ")");
      const double ljj = std::sqrt(diag);
      l_(j, j) = ljj;
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = spd(i, j);
        const auto li = l_.row(i);
        const auto lj = l_.row(j);
        for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
        l_(i, j) = s / ljj;
      }
    }
  }

  std::size_t size() const noexcept { return l_.rows(); }

  Vector solve(std::span<const double> rhs) const {
    const std::size_t n = size();
    if (rhs.size() != n) throw std::invalid_argument("Cholesky::solve: length mismatch");
    Vector y(rhs.begin(), rhs.end());
    for (std::size_t i = 0; i < n; ++i) {
      double s = y[i];
      const auto li = l_.row(i);
      for (std::size_t k = 0; k < i; ++k) s -= li[k] * y[k];
      y[i] = s / li[i];
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = y[i];
      for (std::size_t k = i + 1; k < n; ++k) s -= l_(k, i) * y[k];
      y[i] = s / l_(i, i);
    }
    return y;
  }

  /// trace of the inverse of the factored matrix
  double inverse_trace() const {
    const std::size_t n = size();
    double t = 0.0;
    Vector e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      std::fill(e.begin(), e.end(), 0.0);
      e[j] = 1.0;
      t += solve(e)[j];
    }
    return t;
  }

 private:
  DenseMatrix l_;
};

/// Power iteration on A^T A from the normalized all-ones vector. The result is
/// a Rayleigh quotient, so it never exceeds the true ||A||_2^2.
inline double spectral_norm_sq(const DenseMatrix& a, double tol = 1e-10, std::size_t max_iter = 0) {
  if (!(tol > 0.0)) throw std::invalid_argument("spectral_norm_sq: tol must be positive");
  if (max_iter == 0) max_iter = 10 * (a.rows() + a.cols());
  const std::size_t n = a.cols();
  Vector v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double estimate = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const Vector av = matvec(a, v);
    const double rq = dot(av, av);  // v is unit, so this is v^T A^T A v
    Vector w = matvec_transposed(a, av);
    const double wn = norm2(w);
    if (wn == 0.0) return rq;
    for (double& x : w) x /= wn;
    const bool done = it > 0 && std::abs(rq - estimate) <= tol * std::max(rq, 1e-300);
    estimate = rq;
    v = std::move(w);
    if (done) break;
  }
  // final Rayleigh quotient at the last unit iterate
  const Vector av = matvec(a, v);
  return std::max(estimate, dot(av, av));
}

/// Minimum-norm least-squares solution A^+ b by conjugate gradients on the
/// normal equations A^T A x = A^T b (CGLS form, A applied as an operator).
/// Starting from x = 0 keeps every iterate in range(A^T), so the limit is the
/// minimum-norm solution even when A is rank deficient. Stops once
/// ||A^T (A x - b)||_2 <= tol * ||A^T b||_2.
inline Vector min_norm_lsq(const DenseMatrix& a, std::span<const double> b, double tol = 1e-10,
                           std::size_t max_iter = 0) {
  if (b.size() != a.rows()) throw std::invalid_argument("min_norm_lsq: b length must equal rows");
  if (!(tol > 0.0)) throw std::invalid_argument("min_norm_lsq: tol must be positive");
  if (max_iter == 0) max_iter = 20 * std::min(a.rows(), a.cols()) + 100;

  Vector x(a.cols(), 0.0);
  Vector r(b.begin(), b.end());  // b - A x
  Vector s = matvec_transposed(a, r);
  const double target = tol * norm2(s);
  if (target == 0.0) return x;
  Vector p = s;
  double gamma = dot(s, s);
  for (std::size_t it = 0; it < max_iter; ++it) {
    const Vector q = matvec(a, p);
    const double qq = dot(q, q);
    if (!(qq > 0.0)) break;
    const double step = gamma / qq;
    axpy(step, p, x);
    axpy(-step, q, r);
    s = matvec_transposed(a, r);
    const double gamma_new = dot(s, s);
    if (std::sqrt(gamma_new) <= target) return x;
    const double ratio = gamma_new / gamma;
    gamma = gamma_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = s[i] + ratio * p[i];
  }
  const double rel = std::sqrt(gamma) / (target / tol);
  throw ConvergenceError("min_norm_lsq: no convergence, relative normal-equation residual " + std::to_string(rel), rel);
}

}  // namespace l1l2

#endif  // L1L2_LINALG_HPP
