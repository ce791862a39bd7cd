#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "switchstate/oracle.hpp"
#include "test_support.hpp"

using namespace switchstate;
using namespace switchstate::testing;

namespace {

AffinePolicy reference_policy(const ProblemSpec& s) { return affine_coeffs(synthesize(s), s); }

// Cost of one explicit input sequence, stepped independently of the oracle.
double sequence_cost(const ProblemSpec& s, const Vector& x0, Switch z0, const std::vector<Switch>& seq) {
  Vector x = x0;
  Switch z = z0;
  double j = 0.0, disc = 1.0;
  for (Switch u : seq) {
    j += disc * stage_cost(s, x, z, u);
    disc *= s.alpha;
    x = s.model.A * x + (u == Switch::On ? s.model.b : Vector(Vector::Zero(x.size())));
    z = u;
  }
  return j;
}

ProblemSpec random_problem(Rng& rng, bool allow_zero_beta) {
  Matrix a(2, 2);
  for (int i = 0; i < 4; ++i) a.data()[i] = rng.uniform(-1, 1);
  a *= rng.uniform(0.2, 1.0) / spectral_radius(a);
  const Vector l = rng.uniform_vector(2, -1, 1);
  const double beta = allow_zero_beta && rng.bit() ? 0.0 : rng.uniform(0.0, 2.0);
  return make_problem(make_model(a, rng.uniform_vector(2, -1, 1)), l * l.transpose(), rng.uniform_vector(2, -1, 1),
                      rng.uniform(0.3, 0.99), beta, {.allow_degenerate = true});
}

}  // namespace

TEST(BruteForce, HorizonOneAtRestStaysOff) {
  const ProblemSpec s = reference_problem();
  const EnumerationResult r = brute_force(s, Vector::Zero(2), Switch::Off, 1);
  ASSERT_EQ(r.sequence.size(), 1u);
  EXPECT_EQ(r.sequence[0], Switch::Off);
  EXPECT_NEAR(r.cost, 0.16, 1e-15);
}

TEST(BruteForce, ProhibitivePenaltyNeverSwitches) {
  const ProblemSpec s = make_problem(reference_model(), mat2(1, 0, 0, 0), vec2(0.4, 0), 0.9999, 1e9);
  for (std::size_t n = 1; n <= 10; ++n) {
    const EnumerationResult r = brute_force(s, vec2(0.3, -0.5), Switch::Off, n);
    for (Switch u : r.sequence) EXPECT_EQ(u, Switch::Off);
  }
}

TEST(BruteForce, ReferenceGolden) {
  const ProblemSpec s = reference_problem();
  const EnumerationResult r = brute_force(s, Vector::Zero(2), Switch::Off, 12);
  for (Switch u : r.sequence) EXPECT_EQ(u, Switch::Off);
  EXPECT_NEAR(r.cost, 1.9189443519208131, 1e-13);
  EXPECT_NEAR(r.cost, 0.16 * (1 - std::pow(0.9999, 12)) / (1 - 0.9999), 1e-12);
}

TEST(BruteForce, CostMatchesIndependentStepping) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const ProblemSpec s = random_problem(rng, false);
    const Vector x0 = rng.uniform_vector(2, -2, 2);
    const Switch z0 = to_switch(rng.bit());
    const EnumerationResult r = brute_force(s, x0, z0, 8);
    EXPECT_NEAR(r.cost, sequence_cost(s, x0, z0, r.sequence), 1e-12 * std::max(1.0, r.cost));
  }
}

TEST(BruteForce, GrayCodeIsBitIdentical) {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const ProblemSpec s = random_problem(rng, true);
    const Vector x0 = rng.uniform_vector(2, -2, 2);
    const Switch z0 = to_switch(rng.bit());
    const std::size_t n = 1 + trial % 12;
    const EnumerationResult a = brute_force(s, x0, z0, n);
    const EnumerationResult b = brute_force_gray(s, x0, z0, n);
    EXPECT_EQ(a.cost, b.cost) << trial;
    EXPECT_EQ(a.sequence, b.sequence) << trial;
  }
}

TEST(BruteForce, AllTiedPicksLexicographicallySmallest) {
  const ProblemSpec s = make_problem(reference_model(), Matrix::Zero(2, 2), Vector::Zero(2), 0.9, 0.0,
                                     {.allow_degenerate = true});
  for (Switch z0 : {Switch::Off, Switch::On}) {
    const EnumerationResult a = brute_force(s, vec2(1, 1), z0, 6);
    const EnumerationResult b = brute_force_gray(s, vec2(1, 1), z0, 6);
    EXPECT_EQ(a.cost, 0.0);
    EXPECT_EQ(a.sequence, std::vector<Switch>(6, Switch::Off));
    EXPECT_EQ(b.sequence, a.sequence);
  }
}

TEST(BruteForce, HorizonGuards) {
  const ProblemSpec s = reference_problem();
  EXPECT_THROW(brute_force(s, Vector::Zero(2), Switch::Off, 21), GuardError);
  EXPECT_THROW(brute_force_gray(s, Vector::Zero(2), Switch::Off, 21), GuardError);
  const EnumerationResult empty = brute_force(s, Vector::Zero(2), Switch::Off, 0);
  EXPECT_TRUE(empty.sequence.empty());
  EXPECT_EQ(empty.cost, 0.0);
  EXPECT_EQ(brute_force_gray(s, Vector::Zero(2), Switch::Off, 0).cost, 0.0);
  EXPECT_THROW(brute_force(s, Vector::Zero(3), Switch::Off, 3), DimensionError);
}

TEST(Rollout, Basics) {
  const ProblemSpec s = reference_problem();
  const AffinePolicy pol = reference_policy(s);
  EXPECT_EQ(rollout_cost(s, pol, Vector::Zero(2), Switch::Off, 0), 0.0);
  const Rollout r = rollout(s, pol, vec2(0.2, 0.1), Switch::On, 10);
  EXPECT_NEAR(r.cost, sequence_cost(s, vec2(0.2, 0.1), Switch::On, r.sequence), 1e-13);
}

TEST(Rollout, NeverBeatsExhaustiveSearch) {
  Rng rng(12);
  for (double beta : {0.05, 10.0}) {
    const ProblemSpec s = reference_problem(beta);
    const AffinePolicy pol = reference_policy(s);
    for (int i = 0; i < 25; ++i) {
      const Vector x0 = rng.uniform_vector(2, -2, 2);
      const Switch z0 = to_switch(rng.bit());
      const HorizonResult h = compare_horizon(s, pol, x0, z0, 10);
      EXPECT_GE(h.gap, -1e-12);
      EXPECT_GT(h.tail_bound, 0.0);
    }
  }
}

TEST(Rollout, ZeroGapWhenPolicyIsOptimal) {
  const ProblemSpec s = reference_problem();
  const HorizonResult h = compare_horizon(s, reference_policy(s), Vector::Zero(2), Switch::Off, 12);
  EXPECT_EQ(h.gap, 0.0);
}

TEST(Agreement, EnumerationAgreesWithItself) {
  const ProblemSpec s = reference_problem(0.05);
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Vector x = rng.uniform_vector(2, -2, 2);
    const Switch z = to_switch(rng.bit());
    EXPECT_EQ(brute_force(s, x, z, 10).sequence.front(), brute_force_gray(s, x, z, 10).sequence.front());
  }
}

TEST(Agreement, DegenerateProblemIsFullAgreement) {
  // Q = 0, beta = 0: every sequence costs zero, the enumeration keeps u = 0;
  // a policy that always stays off agrees everywhere.
  const ProblemSpec s = make_problem(reference_model(), Matrix::Zero(2, 2), Vector::Zero(2), 0.9, 0.0,
                                     {.allow_degenerate = true});
  const AffinePolicy off{Vector::Zero(2), 1.0, 0.9, 0.0};
  const std::vector<Vector> states{Vector::Zero(2), vec2(1, -1), vec2(-0.5, 2)};
  const Switch zs[] = {Switch::Off, Switch::On};
  const AgreementReport rep = first_action_agreement(s, off, states, zs, 1);
  EXPECT_EQ(rep.fraction, 1.0);
  EXPECT_EQ(rep.samples, 6u);
}

TEST(Agreement, Guards) {
  const ProblemSpec s = reference_problem();
  const AffinePolicy pol = reference_policy(s);
  const std::vector<Vector> states{Vector::Zero(2)};
  const Switch zs[] = {Switch::Off};
  EXPECT_THROW(first_action_agreement(s, pol, states, zs, 17), GuardError);
  EXPECT_THROW(first_action_agreement(s, pol, states, zs, 0), ParameterError);
}

TEST(Grid, StaticPlantClosedForm) {
  // A = 0, b = 0: V(x, z) = q(x) + alpha q(0) / (1 - alpha) for both z.
  const ProblemSpec s = make_problem(make_model(Matrix::Zero(2, 2), Vector::Zero(2)), Matrix::Identity(2, 2),
                                     vec2(0.2, 0), 0.5, 1.0);
  const GridValue g = grid_value_iteration(s, {{-1, -1}, {1, 1}}, 11, 500, 1e-14);
  EXPECT_TRUE(g.converged);
  EXPECT_EQ(g.clamped_successor_count, 0u);
  for (std::size_t i = 0; i < 11; ++i) {
    for (std::size_t j = 0; j < 11; ++j) {
      const std::size_t id = i * 11 + j;
      const double expect = quadratic_distance(s, g.node(i, j)) + 0.5 * 0.04 / 0.5;
      EXPECT_NEAR(g.V0[id], expect, 1e-12);
      EXPECT_NEAR(g.V1[id], expect, 1e-12);
      EXPECT_EQ(g.policy0[id], 0);  // staying put is free, switching costs beta
      EXPECT_EQ(g.policy1[id], 1);
    }
  }
}

TEST(Grid, NoDiscountIsOneStepCost) {
  const ProblemSpec s = make_problem(reference_model(), mat2(1, 0, 0, 0), vec2(0.4, 0), 0.0, 1.0,
                                     {.allow_degenerate = true});
  const GridValue g = grid_value_iteration(s, {{-1, -1}, {1, 1}}, 21, 1, 0.0);
  EXPECT_EQ(g.sweeps, 1u);
  for (std::size_t i = 0; i < 21; ++i) {
    for (std::size_t j = 0; j < 21; ++j) {
      EXPECT_DOUBLE_EQ(g.V0[i * 21 + j], quadratic_distance(s, g.node(i, j)));
    }
  }
}

TEST(Grid, ContractsAndKeepsHysteresis) {
  const ProblemSpec s = make_problem(reference_model(), mat2(1, 0, 0, 0), vec2(0.4, 0), 0.95, 0.05);
  const GridValue g = grid_value_iteration(s, {{-0.5, -1.5}, {1.5, 2.5}}, 41, 3000, 1e-10);
  EXPECT_TRUE(g.converged);
  for (std::size_t k = 10; k < g.sweep_changes.size(); ++k) {
    if (g.sweep_changes[k - 1] < 1e-12) break;
    EXPECT_LE(g.sweep_changes[k] / g.sweep_changes[k - 1], s.alpha + 0.01) << k;
  }
  std::size_t on = 0;
  for (std::size_t id = 0; id < g.policy0.size(); ++id) {
    if (g.policy0[id]) {
      EXPECT_EQ(g.policy1[id], 1) << id;
    }
    on += g.policy0[id];
  }
  EXPECT_GT(on, 0u);
  const double agree = grid_policy_agreement(g, reference_policy(s));
  EXPECT_GE(agree, 0.0);
  EXPECT_LE(agree, 1.0);
}

TEST(Grid, ClampingIsCounted) {
  const ProblemSpec s = reference_problem();
  const GridValue tight = grid_value_iteration(s, {{0, 0}, {0.1, 0.1}}, 11, 3, 0.0);
  EXPECT_GT(tight.clamped_successor_count, 0u);
}

TEST(Grid, Guards) {
  const ProblemSpec s = reference_problem();
  EXPECT_THROW(grid_value_iteration(s, {{-1, -1}, {1, 1}}, 10, 10, 1e-9), ParameterError);
  EXPECT_THROW(grid_value_iteration(s, {{1, -1}, {1, 1}}, 11, 10, 1e-9), ParameterError);
  const ProblemSpec scalar = make_problem(make_model(mat1(0.5), vec1(1)), mat1(1), vec1(0), 0.5, 1.0);
  EXPECT_THROW(grid_value_iteration(scalar, {{-1, -1}, {1, 1}}, 11, 10, 1e-9), DimensionError);
}
