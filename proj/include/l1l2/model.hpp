#ifndef L1L2_MODEL_HPP
#define L1L2_MODEL_HPP

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>

#include "l1l2/linalg.hpp"

namespace l1l2 {

/// Relative slack on the ball constraint ||x||_2 <= d. Prox outputs can land
/// exactly on the sphere, so rounding must not push them out of the domain.
inline constexpr double kBallTolerance = 1e-12;

/// Safety factor applied to the power-iteration estimate of ||A||_2^2.
inline constexpr double kLipschitzSafety = 1.001;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline bool inside_ball(std::span<const double> x, double d) {
  return norm2(x) <= d * (1.0 + kBallTolerance);
}

/// Measurements b = A x + noise with ||A x - b||_2 <= eps, ||x||_2 <= d.
struct ProblemInstance {
  DenseMatrix a;
  Vector b;
  double eps = 0.0;
  double d = 1e7;
  std::optional<Vector> ground_truth;

  void validate() const {
    if (b.size() != a.rows()) throw std::invalid_argument("ProblemInstance: b length must equal rows of A");
    if (!(eps >= 0.0)) throw std::invalid_argument("ProblemInstance: eps must be nonnegative");
    if (!(d > 0.0)) throw std::invalid_argument("ProblemInstance: d must be positive");
    if (!(norm2(b) > eps)) throw std::invalid_argument("ProblemInstance: requires ||b||_2 > eps");
    if (ground_truth && ground_truth->size() != a.cols())
      throw std::invalid_argument("ProblemInstance: ground truth length must equal columns of A");
  }
};

/// Residual information of a point, shared by the envelope and its gradient.
struct ResidualEval {
  Vector residual;  // A x - b
  double norm = 0.0;
};

/// The smoothed penalty objective
///
///   Q(x) = (lambda ||x||_1 + 0.5 (||A x - b||_2 - eps)_+^2) / ||x||_2
///
/// on the punctured ball 0 < ||x||_2 <= d, and +inf elsewhere. The numerator
/// splits as f = lambda ||.||_1 + indicator of the ball (prox-friendly) plus
/// h = Moreau envelope of the eps-tube indicator composed with A (smooth,
/// gradient ||A||_2^2-Lipschitz); the denominator is g = ||.||_2.
class PenaltyObjective {
 public:
  PenaltyObjective(ProblemInstance problem, double lambda, double lipschitz)
      : PenaltyObjective(std::make_shared<const ProblemInstance>(std::move(problem)), lambda, lipschitz) {}

  PenaltyObjective(std::shared_ptr<const ProblemInstance> problem, double lambda, double lipschitz)
      : problem_(std::move(problem)), lambda_(lambda), lipschitz_(lipschitz) {
    if (!problem_) throw std::invalid_argument("PenaltyObjective: null problem");
    problem_->validate();
    if (!(lambda_ > 0.0)) throw std::invalid_argument("PenaltyObjective: lambda must be positive");
    if (!(lipschitz_ > 0.0)) throw std::invalid_argument("PenaltyObjective: lipschitz must be positive");
  }

  /// Estimates L as kLipschitzSafety times the power-iteration value.
  static PenaltyObjective with_estimated_lipschitz(ProblemInstance problem, double lambda) {
    const double est = spectral_norm_sq(problem.a);
    return PenaltyObjective(std::move(problem), lambda, kLipschitzSafety * est);
  }

  /// Same problem and L, different lambda.
  PenaltyObjective with_lambda(double lambda) const { return PenaltyObjective(problem_, lambda, lipschitz_); }

  const ProblemInstance& problem() const noexcept { return *problem_; }
  double lambda() const noexcept { return lambda_; }
  double lipschitz() const noexcept { return lipschitz_; }
  std::size_t dim() const noexcept { return problem_->a.cols(); }

  ResidualEval residual(std::span<const double> x) const {
    check_length(x);
    ResidualEval r{matvec(problem_->a, x), 0.0};
    for (std::size_t i = 0; i < r.residual.size(); ++i) r.residual[i] -= problem_->b[i];
    r.norm = norm2(r.residual);
    return r;
  }

  double envelope_value(const ResidualEval& r) const {
    const double excess = std::max(0.0, r.norm - problem_->eps);
    return 0.5 * excess * excess;
  }

  Vector envelope_gradient(const ResidualEval& r) const {
    if (r.norm <= problem_->eps) return Vector(dim(), 0.0);
    const double factor = 1.0 - problem_->eps / r.norm;
    Vector g = matvec_transposed(problem_->a, r.residual);
    for (double& v : g) v *= factor;
    return g;
  }

  double q_lambda(std::span<const double> x, const ResidualEval& r) const {
    const double xn = norm2(x);
    if (xn == 0.0 || xn > problem_->d * (1.0 + kBallTolerance)) return kInfinity;
    return (lambda_ * norm1(x) + envelope_value(r)) / xn;
  }

 private:
  void check_length(std::span<const double> x) const {
    if (x.size() != dim()) throw std::invalid_argument("PenaltyObjective: x length must equal columns of A");
  }

  std::shared_ptr<const ProblemInstance> problem_;
  double lambda_;
  double lipschitz_;
};

/// 0.5 * (||A x - b||_2 - eps)_+^2
inline double envelope_value(const PenaltyObjective& obj, std::span<const double> x) {
  return obj.envelope_value(obj.residual(x));
}

/// (1 - eps / ||A x - b||_2)_+ A^T (A x - b)
inline Vector envelope_gradient(const PenaltyObjective& obj, std::span<const double> x) {
  return obj.envelope_gradient(obj.residual(x));
}

inline double q_lambda(const PenaltyObjective& obj, std::span<const double> x) {
  return obj.q_lambda(x, obj.residual(x));
}

/// C = (f(x) + h(x)) / g(x); requires x in the punctured ball.
inline double ratio_parameter(const PenaltyObjective& obj, std::span<const double> x) {
  if (x.size() != obj.dim()) throw std::invalid_argument("ratio_parameter: x length must equal columns of A");
  if (is_zero(x)) throw std::domain_error("ratio_parameter: x must be nonzero");
  if (!inside_ball(x, obj.problem().d)) throw std::domain_error("ratio_parameter: x lies outside the ball");
  return q_lambda(obj, x);
}

}  // namespace l1l2

#endif  // L1L2_MODEL_HPP
