#include <torsion_lab/graded_complex.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace tlab;

namespace {

cmat random_hpd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N01;
  cmat X(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) X(i, j) = cplx(N01(rng), N01(rng));
  return X * X.adjoint() + cmat::Identity(n, n);
}

cvec random_vec(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N01;
  cvec v(n);
  for (int i = 0; i < n; ++i) v(i) = cplx(N01(rng), N01(rng));
  return v;
}

}  // namespace

TEST(ScalarH, Values) {
  EXPECT_NEAR(std::abs(h_scalar(cplx(0))), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(h_prime(cplx(0)) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(h_scalar(cplx(1)) - std::exp(1.0)), 0.0, 1e-14);
}

TEST(Validation, RejectsNonzeroSquare) {
  cmat d0 = cmat::Ones(1, 1), d1 = cmat::Ones(1, 1);
  EXPECT_THROW(make_complex({1, 1, 1}, {d0, d1}), Error);
}

TEST(Validation, RejectsIndefiniteMetric) {
  cmat G = cmat::Identity(1, 1) * -1.0;
  EXPECT_THROW(make_complex({1, 1}, {cmat::Ones(1, 1)}, {cmat::Identity(1, 1), G}), Error);
}

TEST(Adjoints, IdentityMetricIsDagger) {
  cmat M(2, 1);
  M << cplx(1, 2), cplx(-3, 0.5);
  auto c = make_complex({1, 2}, {M});
  EXPECT_LT((adjoints(c)[0] - M.adjoint()).norm(), 1e-14);
}

TEST(Adjoints, HandComputedWeighted) {
  auto c = make_complex({1, 1}, {cmat::Constant(1, 1, 2.0)}, {cmat::Constant(1, 1, 1.0), cmat::Constant(1, 1, 4.0)});
  EXPECT_NEAR(std::abs(adjoints(c)[0](0, 0) - 8.0), 0.0, 1e-14);
}

TEST(Adjoints, InnerProductCompatibility) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 100; ++t) {
    GradedComplex c = random_complex({2, 3, 2}, rng);
    auto ds = adjoints(c);
    for (int k = 0; k < 2; ++k) {
      cvec x = random_vec(c.ranks[k], rng), y = random_vec(c.ranks[k + 1], rng);
      cplx lhs = (c.d[k] * x).dot(c.G[k + 1] * y);
      cplx rhs = x.dot(c.G[k] * (ds[k] * y));
      EXPECT_LT(std::abs(lhs - rhs), 1e-9 * (1 + std::abs(lhs)));
    }
  }
}

TEST(Laplacian, ZeroDifferential) {
  auto c = make_complex({2, 3}, {cmat::Zero(3, 2)});
  EXPECT_EQ(laplacian(c, 0).norm(), 0.0);
  EXPECT_EQ(laplacian(c, 1).norm(), 0.0);
}

TEST(Laplacian, TwoTermAcyclic) {
  cplx a(1.5, -2.0);
  auto c = make_complex({1, 1}, {cmat::Constant(1, 1, a)});
  EXPECT_NEAR(std::abs(laplacian(c, 0)(0, 0) - std::norm(a)), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(laplacian(c, 1)(0, 0) - std::norm(a)), 0.0, 1e-13);
}

TEST(Laplacian, KernelMatchesCohomology) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> R(0, 4);
  for (int t = 0; t < 100; ++t) {
    std::vector<int> ranks{R(rng), R(rng), R(rng), R(rng)};
    GradedComplex c = random_complex(ranks, rng);
    EXPECT_EQ(harmonic_ranks(c), cohomology_ranks_elimination(c));
  }
}

TEST(Euler, SmallCases) {
  auto iso = make_complex({1, 1}, {cmat::Ones(1, 1)});
  EXPECT_EQ(euler_chars(iso).chi, 0);
  EXPECT_EQ(euler_chars(iso).chi_prime, -1);
  EXPECT_EQ(euler_chars_cohomology(iso).chi_prime, 0);
  auto zero = make_complex({2, 1}, {cmat::Zero(1, 2)});
  EXPECT_EQ(euler_chars(zero).chi, 1);
  EXPECT_EQ(euler_chars(zero).chi_prime, -1);
}

TEST(Euler, PoincareIdentity) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 50; ++t) {
    GradedComplex c = random_complex({3, 4, 2, 1}, rng);
    EXPECT_EQ(euler_chars(c).chi, euler_chars_cohomology(c).chi);
  }
}

TEST(Torsion, ZeroDifferentialIsZero) {
  auto c = make_complex({2, 2, 1}, {cmat::Zero(2, 2), cmat::Zero(1, 2)});
  EXPECT_EQ(finite_torsion(c), 0.0);
}

TEST(Torsion, TwoTermClosedForm) {
  auto c = make_complex({1, 1}, {cmat::Constant(1, 1, 2.0)});
  EXPECT_NEAR(finite_torsion(c), -std::log(2.0), 1e-14);
  EXPECT_NEAR(finite_torsion_integral(c), -std::log(2.0), 1e-6);
}

TEST(Torsion, IntegralFormAgreesOnRandomComplexes) {
  std::mt19937_64 rng(1);
  const std::vector<int> h{1, 1, 0, 1};
  for (int t = 0; t < 5; ++t) {
    GradedComplex c = random_complex({1, 3, 3, 1}, rng, true, &h);
    EXPECT_NEAR(finite_torsion_integral(c), finite_torsion(c), 1e-6 * (1 + std::abs(finite_torsion(c))));
  }
}

TEST(Torsion, UniformMetricScalingInvariant) {
  std::mt19937_64 rng(3);
  GradedComplex c = random_complex({2, 3, 1}, rng);
  GradedComplex s = c;
  for (auto& G : s.G) G *= 7.5;
  EXPECT_NEAR(finite_torsion(s), finite_torsion(c), 1e-12);
}

TEST(Torsion, MetricAnomalyMatchesRecomputation) {
  std::mt19937_64 rng(2);
  const std::vector<int> h{1, 1, 0, 1};
  for (int t = 0; t < 10; ++t) {
    GradedComplex c = random_complex({1, 3, 3, 1}, rng, true, &h);
    std::vector<cmat> G1;
    for (int r : c.ranks) G1.push_back(random_hpd(r, rng));
    GradedComplex c1 = c;
    c1.G = G1;
    EXPECT_NEAR(finite_torsion(c1) - finite_torsion(c), torsion_metric_anomaly(c, G1), 1e-9);
  }
}

TEST(Kernel, AmbiguousEigenvalueIsReported) {
  rvec v(3);
  v << 1.0, 1e-10, 0.0;
  EXPECT_THROW(split_kernel(v), Error);
}
