#include <torsion_lab/witten1d.hpp>

#include <gtest/gtest.h>

using namespace tlab;

namespace {

WittenProblem1D interval(double a, double b, int N, Potential f, double T, Boundary bc,
                         Scheme sc = Scheme::central) {
  WittenProblem1D pb;
  pb.topology = Topology::interval;
  pb.a = a;
  pb.b = b;
  pb.N = N;
  pb.f = std::move(f);
  pb.T = T;
  pb.bc = bc;
  pb.scheme = sc;
  return pb;
}

}  // namespace

TEST(Interface, VanishesAtZeroAmplitude) {
  InterfaceProfile p(0.0, 0.1);
  for (int k = -100; k <= 100; ++k) EXPECT_EQ(p.eval(0.003 * k).v, 0.0);
  EXPECT_TRUE(verify_p_profile(p).ok);
}

TEST(Interface, PlateauAndOddness) {
  const double A = 16, r = 0.1;
  InterfaceProfile p(A, r);
  EXPECT_NEAR(p.eval(1.5 * r).v, A * r * r / 2, 1e-13);
  for (int k = 0; k <= 1000; ++k) {
    double s = 0.25 * k / 1000;
    EXPECT_NEAR(p.eval(-s).v, -p.eval(s).v, 1e-13);
  }
  EXPECT_TRUE(verify_p_profile(p).ok);
}

TEST(Assemble, Symmetric) {
  WittenProblem1D pb = circle_problem(cosine_potential(2.0), 5.0, resolved_circle_nodes(cosine_potential(2.0), 5.0), Scheme::central);
  SpMat M = assemble(pb);
  EXPECT_EQ(SpMat(M - SpMat(M.transpose())).norm(), 0.0);
  pb.scheme = Scheme::complex;
  M = assemble(pb);
  EXPECT_EQ(SpMat(M - SpMat(M.transpose())).norm(), 0.0);
}

TEST(Assemble, UnderResolvedGridRejected) {
  WittenProblem1D pb = circle_problem(cosine_potential(2.0), 80.0, 256);
  EXPECT_THROW(assemble(pb), Error);
}

TEST(Spectrum, FreeCircleMatchesDiscreteFourier) {
  WittenProblem1D pb = circle_problem(zero_potential(), 1.0, 256, Scheme::central);
  SpectrumResult s = spectrum(pb, 4);
  const double h = pb.h();
  const double exact = 4 * std::pow(std::sin(pi / 256), 2) / (h * h);
  EXPECT_NEAR(s.eigenvalues[0], 0.0, 1e-10);
  EXPECT_NEAR(s.eigenvalues[1], exact, 1e-12 * exact * 10);
  EXPECT_EQ(s.kernel_dim, 1);
}

TEST(Spectrum, HarmonicOscillator) {
  auto pb = interval(-3, 3, 4000, quadratic_potential(), 10, Boundary::absolute);
  SpectrumResult s = spectrum(pb, 3, false);
  EXPECT_NEAR(s.eigenvalues[0], 0.0, 1e-2);
  EXPECT_NEAR(s.eigenvalues[1], 20.0, 0.2);
}

TEST(Spectrum, KernelOfTwoCriticalPointCircle) {
  for (int N : {1024, 2048}) {
    WittenProblem1D pb = circle_problem(cosine_potential(1.0), 3.0, N);
    EXPECT_EQ(spectrum(pb, 4).kernel_dim, 1) << N;
  }
}

TEST(Spectrum, ResidualsWithinTolerance) {
  WittenProblem1D pb = circle_problem(cosine_potential(2.0), 10.0, resolved_circle_nodes(cosine_potential(2.0), 10.0));
  SpectrumResult s = spectrum(pb, 6);
  for (double r : s.residuals) EXPECT_LE(r, s.residual_tol);
}

TEST(Spectrum, MultiprecisionAgreesWithDouble) {
  WittenProblem1D pb = circle_problem(cosine_potential(1.0), 2.0, 512);
  SpectrumResult d = spectrum(pb, 4);
  SpectrumResult m = mp_spectrum(pb, 4);
  for (int q = 1; q < 4; ++q) EXPECT_NEAR(m.eigenvalues[q], d.eigenvalues[q], 1e-9 * d.eigenvalues[q]);
}

TEST(Supersymmetry, NonzeroSpectraPair) {
  WittenProblem1D pb = circle_problem(cosine_potential(2.0), 10.0, 1024);
  SpectrumResult s0 = spectrum(pb, 8, false);
  pb.form_degree = 1;
  SpectrumResult s1 = spectrum(pb, 8, false);
  ASSERT_EQ(s0.kernel_dim, s1.kernel_dim);
  for (int q = s0.kernel_dim; q < 8; ++q)
    EXPECT_NEAR(s0.eigenvalues[q], s1.eigenvalues[q], 1e-6 * s0.eigenvalues[q]);
}

TEST(Gluing, BaselineAtZeroAmplitude) {
  GluingConfig cfg;
  cfg.N = 8192;
  cfg.T = 10;
  cfg.k = 3;
  cfg.A_ladder = {0};
  GluingTable tab = gluing_scan(cfg);
  for (int q = 0; q < 3; ++q)
    EXPECT_DOUBLE_EQ(tab.rows[0].gap[q], std::abs(tab.rows[0].full[q] - tab.split[q]));
}

TEST(Gluing, ConvergesAsAmplitudeGrows) {
  GluingConfig cfg;
  GluingTable tab = gluing_scan(cfg);
  for (int q = 0; q < cfg.k; ++q) {
    const double lam = tab.split[q];
    for (std::size_t i = 0; i + 1 < tab.rows.size(); ++i)
      EXPECT_LE(tab.rows[i + 1].gap[q], tab.rows[i].gap[q] + 1e-12 * std::max(1.0, lam)) << "k=" << q;
    EXPECT_LE(tab.rows.back().gap[q], 1e-2 * std::max(lam, 1e-6));
  }
  EXPECT_EQ(tab.rows.back().cluster, tab.split_kernel);
  EXPECT_EQ(tab.split_kernel, 2);
}

TEST(Tunnelling, SlopeMatchesAgmonBarrier) {
  DecayFit fit = small_eigenvalue_scan(cosine_potential(2.0), {20, 50, 80});
  ASSERT_EQ(fit.slope.size(), 1u);
  EXPECT_NEAR(fit.predicted, -4.0, 1e-2);
  EXPECT_LE(std::abs(fit.slope[0] - fit.predicted), 0.1 * std::abs(fit.predicted));
}

TEST(Tunnelling, FlatPotentialHasNoBranch) {
  DecayFit fit = small_eigenvalue_scan(zero_potential(), {1, 2}, 256);
  EXPECT_TRUE(fit.slope.empty());
}

TEST(Tunnelling, SymmetricWellsDegenerate) {
  // two wells give one tunnelling eigenvalue above the kernel, shared by 0- and 1-forms
  WittenProblem1D pb = circle_problem(cosine_potential(2.0), 20.0, resolved_circle_nodes(cosine_potential(2.0), 20.0));
  SpectrumResult s = mp_spectrum(pb, 2);
  EXPECT_EQ(s.kernel_dim, 1);
  pb.form_degree = 1;
  SpectrumResult s1 = mp_spectrum(pb, 2);
  EXPECT_NEAR(s1.eigenvalues[1], s.eigenvalues[1], 1e-6 * s.eigenvalues[1]);
}

TEST(Agmon, LinearPotential) {
  Potential lin{"linear", [](double s) { return 0.7 * s; }, [](double) { return 0.7; }, [](double) { return 0.0; }};
  auto pb = interval(0, 2, 201, lin, 3.0, Boundary::absolute, Scheme::complex);
  std::vector<bool> src(pb.N, false);
  src[0] = true;
  auto rho = agmon_distance(pb, 3.0, src);
  EXPECT_NEAR(rho.back(), 3.0 * 0.7 * 2.0, 1e-12);
}

TEST(Agmon, ScalesWithTAndBoundsPotentialDifference) {
  WittenProblem1D pb = circle_problem(cosine_potential(2.0), 1.0, 4096);
  auto crit = grid_critical_points(pb);
  auto mask = neighborhood_mask(pb, crit, 0.1);
  auto r1 = agmon_distance(pb, 1.0, mask);
  auto r7 = agmon_distance(pb, 7.0, mask);
  std::vector<bool> one(pb.N, false);
  one[crit[0].node] = true;
  auto rs = agmon_distance(pb, 5.0, one);
  const double f0 = pb.f.f(pb.node(crit[0].node));
  for (int j = 0; j < pb.N; ++j) {
    EXPECT_NEAR(r7[j], 7.0 * r1[j], 1e-12 * (1 + r7[j]));
    EXPECT_GE(rs[j], 5.0 * std::abs(pb.f.f(pb.node(j)) - f0) - 1e-12);
  }
}

TEST(Agmon, DecayBoundedAcrossT) {
  const Potential f = cosine_potential(2.0);
  const int N = resolved_circle_nodes(f, 30);
  double lo = INFINITY, hi = -INFINITY;
  for (double T : {10.0, 20.0, 30.0}) {
    auto pb = circle_problem(f, T, N);
    auto s = mp_spectrum(pb, 2);
    auto rho = agmon_distance(pb, T, neighborhood_mask(pb, grid_critical_points(pb), 0.1));
    double sup = agmon_decay_check(pb, s, 0, rho, 0.5).sup;
    lo = std::min(lo, sup);
    hi = std::max(hi, sup);
  }
  EXPECT_LE(hi - lo, 2.0);
}

TEST(Agmon, FlatPotentialRefused) {
  WittenProblem1D pb = circle_problem(zero_potential(), 1.0, 256);
  SpectrumResult s = spectrum(pb, 2);
  std::vector<double> rho(pb.N, 0.0);
  EXPECT_THROW(agmon_decay_check(pb, s, 0, rho, 0.5), Error);
}

TEST(Cubic, ScalingAcrossT) {
  auto c1 = cubic_model_eigs(1, 5), c8 = cubic_model_eigs(8, 5), c64 = cubic_model_eigs(64, 5);
  for (int k = 0; k < 5; ++k) {
    EXPECT_NEAR(c8.scaled[k], c1.scaled[k], 1e-2 * std::abs(c1.scaled[k]));
    EXPECT_NEAR(c64.scaled[k], c1.scaled[k], 1e-2 * std::abs(c1.scaled[k]));
  }
}

TEST(Cubic, EigenvaluesGrowQuadratically) {
  auto c = cubic_model_eigs(8, 11);
  std::vector<double> x, y;
  for (int k = 2; k <= 10; ++k) {
    x.push_back(std::log(double(k)));
    y.push_back(std::log(c.eigenvalues[k]));
  }
  EXPECT_GE(fit_slope(x, y), 1.9);
}

TEST(Cubic, FreeNeumannLadder) {
  const double L = 2.0;
  auto pb = interval(0, L, 2000, zero_potential(), 1.0, Boundary::absolute);
  SpectrumResult s = spectrum(pb, 5, false);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(s.eigenvalues[k], std::pow(k * pi / L, 2), 1e-4 * (1 + k * k));
}

TEST(Schauder, IdentityAndRankOne) {
  EXPECT_NEAR(schauder_norm(cmat(cmat::Identity(5, 5)), 2), std::sqrt(5.0), 1e-14);
  cvec u = cvec::Random(4), v = cvec::Random(4);
  cmat B = u * v.adjoint();
  for (double n : {1.0, 2.0, 3.0, 7.0}) EXPECT_NEAR(schauder_norm(B, n), schauder_norm(B, INFINITY), 1e-12);
}

TEST(Schauder, RejectsSmallIndex) { EXPECT_THROW(schauder_norm(cmat(cmat::Identity(2, 2)), 0.5), Error); }
