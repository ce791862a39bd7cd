#pragma once

// Small dense linear algebra for the switch-state controller: matrix
// exponential, zero-order-hold discretization, spectral radius, linear solves
// and the discounted Lyapunov equation P = Q + alpha * A^T P A.
//
// Storage is Eigen's dynamic-size dense types. Dimensions in scope are tiny
// (n <= 10, usually 2 or the 3x3 augmented ZOH matrix), so every routine
// favours accuracy over speed.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "switchstate/errors.hpp"

namespace switchstate {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* name) {
  if (!m.allFinite()) {
    throw ParameterError(std::string(name) + " has non-finite entries");
  }
}

inline void require_square(const Matrix& m, const char* name) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError(std::string(name) + " must be square and non-empty, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

// Max-abs entry norm, the norm every tolerance in this library is stated in.
template <typename Derived>
double inf_norm(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// e^{M t} by scaling and squaring with a truncated Taylor series.
//
// The scaled argument has 1-norm <= 1/2, where the series converges fast
// enough that the truncation error is below double rounding after ~20 terms;
// we keep adding terms until they stop changing the sum. Squaring back then
// loses at most a few ulps per level for the small, well-conditioned matrices
// used here.
inline Matrix mat_exp(const Matrix& m, double t) {
  require_square(m, "mat_exp argument");
  require_finite(m, "mat_exp argument");
  if (!std::isfinite(t)) throw ParameterError("mat_exp: t must be finite");

  const Eigen::Index n = m.rows();
  Matrix x = m * t;
  const double norm1 = x.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  }
  x /= std::ldexp(1.0, squarings);

  Matrix sum = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = (term * x) / static_cast<double>(k);
    sum += term;
    if (inf_norm(term) <= 1e-18 * inf_norm(sum)) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

struct DiscretePair {
  Matrix A;
  Vector b;
};

// Zero-order-hold discretization of x' = A_c x + b_c u over one interval T:
//   A = e^{A_c T},  b = (int_0^T e^{A_c s} ds) b_c,
// read off the top blocks of exp([[A_c, b_c], [0, 0]] T).
inline DiscretePair zoh_discretize(const Matrix& a_c, const Vector& b_c, double t) {
  require_square(a_c, "A_c");
  if (b_c.size() != a_c.rows()) {
    throw DimensionError("zoh_discretize: b_c has " + std::to_string(b_c.size()) +
                         " entries, A_c is " + std::to_string(a_c.rows()) + "x" +
                         std::to_string(a_c.cols()));
  }
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw ParameterError("zoh_discretize: sample interval must be positive, got " +
                         std::to_string(t));
  }
  const Eigen::Index n = a_c.rows();
  Matrix aug = Matrix::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = a_c;
  aug.topRightCorner(n, 1) = b_c;
  const Matrix e = mat_exp(aug, t);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, 1)};
}

// Largest eigenvalue magnitude. 1x1 and 2x2 use the characteristic
// polynomial (trace/determinant) directly; larger matrices go through Eigen.
inline double spectral_radius(const Matrix& a) {
  require_square(a, "spectral_radius argument");
  if (a.rows() == 1) return std::abs(a(0, 0));
  if (a.rows() == 2) {
    const double half_tr = 0.5 * (a(0, 0) + a(1, 1));
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    const double disc = half_tr * half_tr - det;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      return std::max(std::abs(half_tr + s), std::abs(half_tr - s));
    }
    // complex pair: |lambda|^2 = det
    return std::sqrt(det);
  }
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericError("spectral_radius: eigensolver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline constexpr double kSingularConditionLimit = 1e12;

// Solves M x = y. Rejects matrices whose 2-norm condition number exceeds
// kSingularConditionLimit.
inline Vector solve_linear(const Matrix& m, const Vector& y) {
  require_square(m, "solve_linear matrix");
  if (y.size() != m.rows()) throw DimensionError("solve_linear: rhs size mismatch");
  require_finite(m, "solve_linear matrix");
  require_finite(y, "solve_linear rhs");

  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || smax / smin > kSingularConditionLimit) {
    throw SingularityError("solve_linear: matrix is singular or ill-conditioned (cond ~ " +
                           std::to_string(smin > 0.0 ? smax / smin : INFINITY) + ")");
  }
  return m.fullPivLu().solve(y);
}

inline Matrix solve_linear(const Matrix& m, const Matrix& y) {
  Matrix out(m.cols(), y.cols());
  for (Eigen::Index j = 0; j < y.cols(); ++j) out.col(j) = solve_linear(m, Vector(y.col(j)));
  return out;
}

namespace detail {

inline void check_lyapunov_inputs(const Matrix& a, const Matrix& q, double alpha) {
  require_square(a, "A");
  require_square(q, "Q");
  if (a.rows() != q.rows()) throw DimensionError("Lyapunov: A and Q dimensions differ");
  require_finite(a, "A");
  require_finite(q, "Q");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ParameterError("Lyapunov: discount must lie in (0, 1), got " + std::to_string(alpha));
  }
  const double scale = std::max(1.0, inf_norm(q));
  if (inf_norm(q - q.transpose()) > 1e-12 * scale) {
    throw ParameterError("Lyapunov: Q is not symmetric");
  }
  const double rho = spectral_radius(a);
  if (alpha * rho * rho >= 1.0) {
    throw NonConvergenceError("Lyapunov: alpha * rho(A)^2 = " + std::to_string(alpha * rho * rho) +
                              " >= 1, series does not converge");
  }
}

}  // namespace detail

// Direct solve of (I - alpha * A^T (x) A^T) vec(P) = vec(Q).
inline Matrix lyapunov_kronecker(const Matrix& a, const Matrix& q, double alpha) {
  detail::check_lyapunov_inputs(a, q, alpha);
  const Eigen::Index n = a.rows();
  const Eigen::Index nn = n * n;
  const Matrix at = a.transpose();
  Matrix k = Matrix::Identity(nn, nn);
  // vec(A^T P A) = (A^T (x) A^T) vec(P), column-major vec.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      k.block(i * n, j * n, n, n) -= alpha * at(i, j) * at;
    }
  }
  const Vector vec_q = Eigen::Map<const Vector>(q.data(), nn);
  const Vector vec_p = solve_linear(k, vec_q);
  Matrix p = Eigen::Map<const Matrix>(vec_p.data(), n, n);
  return 0.5 * (p + p.transpose());
}

struct FixedPointResult {
  Matrix P;
  std::size_t iterations = 0;
};

// P_{i+1} = Q + alpha A^T P_i A from P_0 = Q, until successive iterates differ
// by less than `tol` (scaled by max(1, |P|)) in max-abs norm.
inline FixedPointResult lyapunov_fixed_point(const Matrix& a, const Matrix& q, double alpha,
                                             double tol = 1e-14,
                                             std::size_t max_iterations = 1'000'000) {
  detail::check_lyapunov_inputs(a, q, alpha);
  const Matrix at = a.transpose();
  Matrix p = q;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    Matrix next = q + alpha * (at * p * a);
    next = 0.5 * (next + next.transpose());
    const double step = inf_norm(next - p);
    p = std::move(next);
    if (step < tol * std::max(1.0, inf_norm(p))) return {p, it};
  }
  throw NonConvergenceError("Lyapunov fixed-point iteration did not settle in " +
                            std::to_string(max_iterations) + " iterations");
}

// Solves P = Q + alpha A^T P A. The Kronecker solve is the answer; the
// fixed-point iteration is run alongside and must agree to 1e-10.
inline Matrix solve_discounted_lyapunov(const Matrix& a, const Matrix& q, double alpha) {
  detail::check_lyapunov_inputs(a, q, alpha);
  Eigen::LDLT<Matrix> ldlt(q);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() < -1e-12 * std::max(1.0, inf_norm(q))).any()) {
    throw ParameterError("Lyapunov: Q is not positive semidefinite");
  }
  Matrix p = lyapunov_kronecker(a, q, alpha);
  const Matrix p_iter = lyapunov_fixed_point(a, q, alpha).P;
  const double gap = inf_norm(p - p_iter);
  if (gap > 1e-10 * std::max(1.0, inf_norm(p))) {
    throw NumericError("Lyapunov: Kronecker and fixed-point solutions disagree by " +
                       std::to_string(gap));
  }
  return p;
}

}  // namespace switchstate
