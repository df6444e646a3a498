#include <torsion_lab/morse_complex.hpp>

#include <gtest/gtest.h>

#include <algorithm>

using namespace tlab;

namespace {

std::vector<int> indices(const ManifoldModel& m) {
  std::vector<int> out;
  for (auto& c : fiber_criticals(m)) out.push_back(c.index);
  std::sort(out.begin(), out.end());
  return out;
}

cmat random_unitary(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N01;
  cmat X(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) X(i, j) = cplx(N01(rng), N01(rng));
  Eigen::HouseholderQR<cmat> qr(X);
  return qr.householderQ() * cmat::Identity(n, n);
}

}  // namespace

TEST(Criticals, CircleAndTorusIndices) {
  EXPECT_EQ(indices(circle_model()), (std::vector<int>{0, 1}));
  EXPECT_EQ(indices(circle_model(2.0)), (std::vector<int>{0, 0, 1, 1}));
  EXPECT_EQ(indices(torus_model()), (std::vector<int>{0, 1, 1, 2}));
  EXPECT_EQ(indices(torus_model(cmat::Identity(1, 1), cmat::Identity(1, 1), 1.0)), (std::vector<int>{0, 1, 1, 2}));
}

TEST(Model, RejectsNonUnitaryHolonomy) {
  EXPECT_THROW(validate(circle_model(1.0, cmat::Constant(1, 1, 2.0))), Error);
}

TEST(Model, RejectsNoncommutingHolonomy) {
  cmat X(2, 2), Z(2, 2);
  X << 0, 1, 1, 0;
  Z << 1, 0, 0, -1;
  EXPECT_THROW(validate(torus_model(X, Z)), Error);
}

TEST(Circle, TrivialCoefficientsGiveZeroDifferential) {
  MorseComplexData D = build_complex(circle_model());
  ASSERT_EQ(D.flows.size(), 2u);
  EXPECT_EQ(D.flows[0].sign + D.flows[1].sign, 0);
  EXPECT_LT(D.complex.d[0].norm(), 1e-12);
}

TEST(Circle, TwistedDeterminantAndTorsion) {
  for (int j = 1; j <= 8; ++j) {
    const double theta = 2 * pi * j / 9;
    MorseComplexData D = build_complex(circle_model(1.0, phase_holonomy(theta)));
    EXPECT_NEAR(std::abs(D.complex.d[0](0, 0)), 2 * std::abs(std::sin(theta / 2)), 1e-10);
    EXPECT_NEAR(combinatorial_torsion(D), -std::log(std::abs(1.0 - std::polar(1.0, theta))), 1e-10) << theta;
  }
}

TEST(Circle, TorsionIsGaugeInvariant) {
  std::mt19937_64 rng(8);
  cmat H = cmat::Zero(2, 2);
  H(0, 0) = std::polar(1.0, 0.7);
  H(1, 1) = std::polar(1.0, 2.1);
  cmat U = random_unitary(2, rng);
  double a = combinatorial_torsion(build_complex(circle_model(1.0, H)));
  double b = combinatorial_torsion(build_complex(circle_model(1.0, U * H * U.adjoint())));
  EXPECT_NEAR(a, b, 1e-10);
}

TEST(Torus, TrivialCoefficientsCohomology) {
  MorseComplexData D = build_complex(torus_model());
  EXPECT_EQ(D.flows.size(), 8u);
  EXPECT_EQ(cohomology_ranks_elimination(D.complex), (std::vector<int>{1, 2, 1}));
}

TEST(Torus, TwistedCoefficientsSquareToZero) {
  for (double a : {1.0, 1.3}) {
    MorseComplexData D = build_complex(torus_model(phase_holonomy(0.9), phase_holonomy(2.3), a));
    EXPECT_LT((D.complex.d[1] * D.complex.d[0]).norm(), 1e-10);
    EXPECT_EQ(cohomology_ranks_elimination(D.complex), (std::vector<int>{0, 0, 0}));
  }
}

TEST(Suspension, ShiftsIndicesAndEuler) {
  EXPECT_EQ(suspended_index(0, 4), 4);
  EXPECT_THROW(suspended_index(0, 3), Error);
  std::mt19937_64 rng(21);
  GradedComplex c = random_complex({2, 3, 1}, rng);
  EXPECT_THROW(suspend(c, 3), Error);
  for (int N : {2, 4, 6}) {
    SuspendedComplex s = suspend(c, N);
    EulerData e = euler_chars(c);
    EXPECT_EQ(s.euler.chi, e.chi);
    EXPECT_EQ(s.euler.chi_prime, e.chi_prime + N * e.chi);
  }
}

TEST(Suspension, TorsionUnchanged) {
  std::mt19937_64 rng(22);
  const std::vector<int> h{1, 1, 1};
  for (int t = 0; t < 50; ++t) {
    GradedComplex c = random_complex({2, 3, 2}, rng, true, &h);
    SuspendedComplex s = suspend(c, 4);
    EXPECT_NEAR(finite_torsion(s.complex), finite_torsion(c), 1e-10);
    EXPECT_NEAR(suspension_torsion_shift(c, 4), 0.0, 1e-10);
  }
}

TEST(Gaussian, ProbabilityNormalisationIsInvariant) {
  GaussianProbe g = gaussian_normalization_probe(4, 1.0, 3.0);
  EXPECT_NEAR(g.ratio_prob, 1.0, 1e-10);
  EXPECT_NEAR(g.ratio_heat, g.predicted_heat_ratio, 1e-8 * g.predicted_heat_ratio);
  EXPECT_NEAR(g.predicted_heat_ratio, 81.0, 1e-12);
  EXPECT_EQ(g.invariant, "probability");
  EXPECT_THROW(gaussian_normalization_probe(3, 1.0, 2.0), Error);
}

TEST(BallRanks, MatchExpectedTables) {
  std::vector<MorseComplexData> models{build_complex(circle_model()), build_complex(torus_model())};
  models.push_back(build_complex(circle_model(1.0, phase_holonomy(1.0, 3))));
  for (auto& D : models)
    for (int N : {2, 4})
      for (bool ball : {false, true}) {
        BallRanks br = ball_removed_ranks(D, N, ball);
        EXPECT_TRUE(br.match) << D.model.name << " N=" << N << " ball=" << ball;
      }
}

TEST(BallRanks, ConstantScalesOut) {
  MorseComplexData D = build_complex(torus_model());
  EXPECT_EQ(ball_removed_ranks(D, 2, true, 1.0).computed, ball_removed_ranks(D, 2, true, cplx(0.3, -2)).computed);
}

TEST(Zeta, HurwitzDerivativeMatchesLogGamma) {
  for (double a : {0.1, 0.25, 0.5, 0.9, 1.0})
    EXPECT_NEAR(hurwitz_zeta_derivative_at_zero(a), std::lgamma(a) - 0.5 * std::log(2 * pi), 1e-13);
}

TEST(CheegerMuller, HalfTurnIsMinusLogTwo) {
  EXPECT_NEAR(twisted_circle_analytic_torsion(pi), -std::log(2.0), 1e-12);
  EXPECT_NEAR(twisted_circle_analytic_torsion(pi / 2), twisted_circle_analytic_torsion(3 * pi / 2), 1e-12);
}

TEST(CheegerMuller, ExactAgreement) {
  for (double th : {pi / 3, pi / 2, pi, 4 * pi / 3}) {
    CheegerMuller cm = cheeger_muller_compare(th, 400);
    EXPECT_LE(cm.gap_exact, 1e-6) << th;
  }
}

TEST(CheegerMuller, FiniteElementApproaches) {
  CheegerMuller coarse = cheeger_muller_compare(pi, 400);
  CheegerMuller fine = cheeger_muller_compare(pi, 800);
  EXPECT_EQ(coarse.resolved, fine.resolved);
  EXPECT_GE(coarse.gap_fem / fine.gap_fem, 3.5);
  EXPECT_LE(fine.gap_fem, 1e-2);
}

TEST(CheegerMuller, TrivialHolonomyRefused) {
  EXPECT_THROW(twisted_circle_logdet(0.0), Error);
  EXPECT_THROW(cheeger_muller_compare(0.0, 100), Error);
}
