#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "switchstate/linalg.hpp"
#include "test_support.hpp"

using namespace switchstate;
using namespace switchstate::testing;

TEST(MatExp, ZeroMatrixGivesIdentity) {
  EXPECT_EQ(mat_exp(Matrix::Zero(3, 3), 1.0), Matrix::Identity(3, 3));
}

TEST(MatExp, DiagonalIsElementwise) {
  const Matrix e = mat_exp(mat2(-1, 0, 0, -2), 1.0);
  EXPECT_NEAR(e(0, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(e(1, 1), std::exp(-2.0), 1e-15);
  EXPECT_EQ(e(0, 1), 0.0);
  EXPECT_EQ(e(1, 0), 0.0);
}

TEST(MatExp, RotationGenerator) {
  const Matrix e = mat_exp(mat2(0, 1, -1, 0), M_PI / 2);
  EXPECT_LT(inf_norm(e - mat2(0, 1, -1, 0)), 1e-14);
}

TEST(MatExp, MatchesClosedFormAndSubstepComposition) {
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix m = mat2(u(g), u(g), u(g), u(g));
    const double t = 0.1 + std::abs(u(g));
    const Matrix e = mat_exp(m, t);
    const double scale = std::max(1.0, inf_norm(e));
    EXPECT_LT(inf_norm(e - exp2x2_closed_form(m, t)), 1e-11 * scale) << "trial " << trial;
    EXPECT_LT(inf_norm(e - exp_by_composition(m, t)), 1e-11 * scale) << "trial " << trial;
  }
}

TEST(MatExp, SemigroupProperty) {
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix m(3, 3);
    for (int i = 0; i < 9; ++i) m.data()[i] = u(g);
    const double s = std::abs(u(g)) * 2, t = std::abs(u(g)) * 2;
    const Matrix lhs = mat_exp(m, s + t);
    EXPECT_LT(inf_norm(lhs - mat_exp(m, s) * mat_exp(m, t)), 1e-12 * std::max(1.0, inf_norm(lhs)));
  }
}

TEST(MatExp, RejectsNonSquareAndNonFinite) {
  EXPECT_THROW(mat_exp(Matrix::Zero(2, 3), 1.0), DimensionError);
  EXPECT_THROW(mat_exp(mat2(NAN, 0, 0, 0), 1.0), ParameterError);
}

TEST(Zoh, ScalarIntegratorAndDecay) {
  const DiscretePair integ = zoh_discretize(mat1(0.0), vec1(1.0), 0.25);
  EXPECT_DOUBLE_EQ(integ.A(0, 0), 1.0);
  EXPECT_NEAR(integ.b(0), 0.25, 1e-16);

  const DiscretePair decay = zoh_discretize(mat1(-2.0), vec1(3.0), 0.5);
  EXPECT_NEAR(decay.A(0, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(decay.b(0), 1.5 * (1.0 - std::exp(-1.0)), 1e-15);
}

TEST(Zoh, MatchesTrapezoidQuadrature) {
  const ContinuousModel c = build_continuous(reference_pu());
  const double T = kDefaultOmegaBase / 20e3;
  const DiscretePair d = zoh_discretize(c.A_c, c.b_c, T);
  const Vector quad = zoh_input_by_quadrature(c.A_c, c.b_c, T, 1 << 16);
  EXPECT_LT(inf_norm(d.b - quad), 1e-9);
  EXPECT_LT(inf_norm(d.A - exp2x2_closed_form(c.A_c, T)), 1e-13);
}

TEST(Zoh, SmallIntervalLimit) {
  const Matrix a = mat2(-0.3, 1.2, -0.8, -0.1);
  const Vector b = vec2(0.2, 0.7);
  for (double t : {1e-3, 1e-4, 1e-5}) {
    const DiscretePair d = zoh_discretize(a, b, t);
    // A = I + A_c T + O(T^2), b = b_c T + O(T^2)
    EXPECT_LT(inf_norm(d.A - Matrix::Identity(2, 2) - a * t), t * t);
    EXPECT_LT(inf_norm(d.b - b * t), t * t);
  }
}

TEST(Zoh, RejectsBadInterval) {
  EXPECT_THROW(zoh_discretize(mat1(-1.0), vec1(1.0), 0.0), ParameterError);
  EXPECT_THROW(zoh_discretize(mat1(-1.0), vec1(1.0), -1.0), ParameterError);
  EXPECT_THROW(zoh_discretize(mat1(-1.0), vec2(1.0, 0.0), 1.0), DimensionError);
}

TEST(SpectralRadius, KnownCases) {
  EXPECT_DOUBLE_EQ(spectral_radius(mat2(0.5, 0, 0, -0.7)), 0.7);
  EXPECT_DOUBLE_EQ(spectral_radius(mat1(-1.5)), 1.5);
  EXPECT_NEAR(spectral_radius(mat2(0, 1, -1, 0)), 1.0, 1e-15);  // complex pair
  Matrix m3 = Matrix::Zero(3, 3);
  m3.diagonal() << 0.1, -0.9, 0.3;
  EXPECT_NEAR(spectral_radius(m3), 0.9, 1e-14);
}

TEST(SpectralRadius, ClosedFormMatchesEigensolver) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix m = mat2(u(g), u(g), u(g), u(g));
    Eigen::EigenSolver<Matrix> es(m, false);
    EXPECT_NEAR(spectral_radius(m), es.eigenvalues().cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SolveLinear, SolvesAndRejectsSingular) {
  const Vector x = solve_linear(mat2(2, 1, 1, 3), vec2(3, 5));
  EXPECT_NEAR(x(0), 0.8, 1e-15);
  EXPECT_NEAR(x(1), 1.4, 1e-15);
  EXPECT_THROW(solve_linear(mat2(1, 2, 2, 4), vec2(1, 1)), SingularityError);
  EXPECT_THROW(solve_linear(mat2(1, 0, 0, 1e-14), vec2(1, 1)), SingularityError);
}

TEST(Lyapunov, ZeroDynamicsGivesQ) {
  const Matrix q = mat2(2, 0.5, 0.5, 1);
  EXPECT_LT(inf_norm(solve_discounted_lyapunov(Matrix::Zero(2, 2), q, 0.9) - q), 1e-15);
}

TEST(Lyapunov, ScalarClosedForm) {
  // p = q / (1 - alpha a^2)
  const Matrix p = solve_discounted_lyapunov(mat1(0.8), mat1(3.0), 0.5);
  EXPECT_NEAR(p(0, 0), 3.0 / (1.0 - 0.5 * 0.64), 1e-14);
}

TEST(Lyapunov, RandomInstancesAgreeAcrossSolvers) {
  std::mt19937_64 g(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> target(0.0, 0.95);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 3;
    Matrix a(n, n), l(n, n);
    for (Eigen::Index i = 0; i < n * n; ++i) {
      a.data()[i] = u(g);
      l.data()[i] = u(g);
    }
    const double rho = spectral_radius(a);
    if (rho > 0) a *= target(g) / rho;
    const Matrix q = l * l.transpose();
    const double alpha = 0.5 + 0.4999 * std::abs(u(g));

    const Matrix pk = lyapunov_kronecker(a, q, alpha);
    const Matrix pf = lyapunov_fixed_point(a, q, alpha).P;
    const double scale = std::max(1.0, inf_norm(pk));
    EXPECT_LT(inf_norm(pk - pf), 1e-10 * scale) << "trial " << trial;
    EXPECT_LT(inf_norm(pk - q - alpha * a.transpose() * pk * a), 1e-12 * scale) << "trial " << trial;
    EXPECT_LT(inf_norm(pk - pk.transpose()), 1e-15 * scale);
  }
}

TEST(Lyapunov, ReferenceGolden) {
  const Matrix p = solve_discounted_lyapunov(golden::A, mat2(1, 0, 0, 0), 0.9999);
  EXPECT_LT(inf_norm(p - golden::P), 1e-11);
  EXPECT_LT(inf_norm(p - mat2(1, 0, 0, 0) - 0.9999 * golden::A.transpose() * p * golden::A), 1e-10);
}

TEST(Lyapunov, RejectsNonConvergentAndBadInputs) {
  EXPECT_THROW(solve_discounted_lyapunov(mat1(1.1), mat1(1.0), 0.9), NonConvergenceError);
  EXPECT_THROW(solve_discounted_lyapunov(mat1(0.5), mat1(1.0), 1.0), ParameterError);
  EXPECT_THROW(solve_discounted_lyapunov(mat1(0.5), mat1(1.0), 0.0), ParameterError);
  EXPECT_THROW(solve_discounted_lyapunov(mat2(0.5, 0, 0, 0.5), mat2(1, 1, 0, 1), 0.5), ParameterError);
  EXPECT_THROW(solve_discounted_lyapunov(mat2(0.5, 0, 0, 0.5), mat2(1, 0, 0, -1), 0.5), ParameterError);
  EXPECT_THROW(solve_discounted_lyapunov(mat2(0.5, 0, 0, 0.5), mat1(1.0), 0.5), DimensionError);
}
