// Randomised invariants over several seeds.

#include <torsion_lab/acceptance.hpp>

#include <gtest/gtest.h>

using namespace tlab;

class PropertySeeds : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(PropertySeeds, FullSuitePasses) {
  AcceptanceOptions o;
  o.seed = GetParam();
  CriterionResult r = criterion_properties(o);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST_P(PropertySeeds, LaplaciansAreHermitianAndNonnegative) {
  std::mt19937_64 rng(GetParam());
  std::uniform_int_distribution<int> rk(0, 4);
  for (int t = 0; t < 50; ++t) {
    GradedComplex c = random_complex({rk(rng), rk(rng), rk(rng)}, rng);
    for (int k = 0; k <= c.top(); ++k) {
      cmat L = laplacian(c, k);
      if (L.size() == 0) continue;
      // self-adjoint for the metric: G L is Hermitian
      cmat GL = c.G[k] * L;
      EXPECT_LT((GL - GL.adjoint()).norm(), 1e-9 * (1 + GL.norm()));
      Eigen::GeneralizedSelfAdjointEigenSolver<cmat> es(GL, c.G[k]);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9 * (1 + L.norm()));
    }
  }
}

TEST_P(PropertySeeds, TorsionInvariantUnderIsometricBasisChange) {
  std::mt19937_64 rng(GetParam());
  std::normal_distribution<double> N01;
  const std::vector<int> h{0, 0, 0};
  GradedComplex c = random_complex({2, 4, 2}, rng, false, &h);
  std::vector<cmat> U;
  for (int r : c.ranks) {
    cmat X(r, r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) X(i, j) = cplx(N01(rng), N01(rng));
    Eigen::HouseholderQR<cmat> qr(X);
    U.push_back(qr.householderQ() * cmat::Identity(r, r));
  }
  std::vector<cmat> d;
  for (int k = 0; k < c.top(); ++k) d.push_back(U[k + 1] * c.d[k] * U[k].adjoint());
  GradedComplex g = make_complex(c.ranks, d);
  EXPECT_NEAR(finite_torsion(g), finite_torsion(c), 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Seeds, PropertySeeds, ::testing::Values(1u, 20240611u, 987654321u));
