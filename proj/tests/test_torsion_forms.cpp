#include <torsion_lab/torsion_forms.hpp>

#include <gtest/gtest.h>

using namespace tlab;

namespace {

double max_abs(const std::vector<cplx>& v) {
  double m = 0;
  for (auto x : v) m = std::max(m, std::abs(x));
  return m;
}

GradedComplex acyclic_two_term(double a) { return make_complex({1, 1}, {cmat::Constant(1, 1, a)}); }

}  // namespace

TEST(Family, ValidationReportsFlatness) {
  auto fm = rank221_family(32);
  FamilyChecks fc = validate_family(fm.family, &fm.metric);
  EXPECT_LT(fc.max_d2, 1e-12);
  EXPECT_LT(fc.max_flatness, 1e-9);
}

TEST(Family, TooFewSamplesRejected) {
  EXPECT_THROW(validate_family(rank221_family(4).family), Error);
}

TEST(AdjointSuperconnection, UnitaryCase) {
  auto fm = rank221_family(16);
  for (auto& g : fm.metric)
    for (auto& G : g) G = cmat::Identity(G.rows(), G.cols());
  AdjointSuperconnection a = adjoint_superconnection(fm.family, fm.metric);
  for (int j = 0; j < 16; ++j) {
    cmat V = detail::full_differential(fm.family.ranks, fm.family.v_field[j]);
    cmat P = detail::block_diag(fm.family.ranks, fm.family.transport[j]);
    EXPECT_LT((a.vstar[j] - V.adjoint()).norm(), 1e-12);
    EXPECT_LT((a.transport_adj[j] - P).norm(), 1e-12);
  }
}

TEST(AdjointSuperconnection, ConstantFamilyDegreeZeroPart) {
  std::mt19937_64 rng(4);
  GradedComplex c = random_complex({2, 3, 1}, rng);
  auto fm = constant_family(c, 12);
  AdjointSuperconnection a = adjoint_superconnection(fm.family, fm.metric);
  cmat V = detail::full_differential(c.ranks, c.d);
  cmat G = detail::block_diag(c.ranks, c.G);
  cmat vs = detail::adjoint_in(G, V);
  EXPECT_LT((a.X0[3] - 0.5 * (vs - V)).norm(), 1e-12);
  EXPECT_LT(a.X1[3].norm(), 1e-12);
}

TEST(HForm, VanishesForZeroDifferential) {
  auto fm = rank221_family(16);
  for (auto& v : fm.family.v_field)
    for (auto& d : v) d.setZero();
  for (auto& g : fm.metric) g = fm.metric[0];
  EXPECT_LT(max_abs(h_form(fm.family, fm.metric).degree1), 1e-12);
}

TEST(HForm, DegreeOneMatchesClosedForm) {
  auto fm = rank221_family(64);
  FormOnBase h = h_form(fm.family, fm.metric);
  auto f = h_form_degree1_formula(fm.family, fm.metric);
  double d = 0;
  for (int j = 0; j < 64; ++j) d = std::max(d, std::abs(h.degree1[j] - f[j]));
  EXPECT_LT(d, 1e-9);
}

TEST(Transgression, ConstantPathIsZero) {
  auto fm = rank221_family(16);
  MetricPath p = linear_path(fm.metric, fm.metric);
  FormOnBase t = transgression(fm.family, p);
  EXPECT_LT(max_abs(t.degree0), 1e-12);
  EXPECT_LT(max_abs(t.degree1), 1e-12);
}

TEST(Transgression, IdentityResidualShrinksWithRefinement) {
  std::vector<double> res;
  for (int m : {32, 64}) {
    auto fm = rank221_family(m);
    FamilyMetric h1 = periodic_metric(fm.family.ranks, m, 0.2, 99);
    res.push_back(transgression_residual(fm.family, linear_path(fm.metric, h1)));
  }
  EXPECT_LT(res[1], 1e-3);
  EXPECT_LT(res[1], res[0]);
}

TEST(TorsionForm, PointBaseMatchesFiniteTorsion) {
  auto fm = constant_family(acyclic_two_term(2.0), 8);
  TorsionFormOptions o;
  o.degree1 = false;
  FormOnBase T = torsion_form_TL(fm.family, fm.metric, 1e-4, o);
  EXPECT_NEAR(T.degree0[0].real(), -std::log(2.0), 1e-3);
}

TEST(Anomaly, ConstantFamilyHasNoResidual) {
  std::mt19937_64 rng(6);
  const std::vector<int> h{0, 0, 0};
  auto fm = constant_family(random_complex({1, 2, 1}, rng, true, &h), 16);
  EXPECT_LT(anomaly_check(fm.family, fm.metric, 1e-3).max_residual, 1e-8);
}

TEST(Anomaly, AcyclicFamily) {
  auto fm = acyclic121_family(64);
  EXPECT_LT(anomaly_check(fm.family, fm.metric, 1e-3).max_residual, 1e-4);
}

TEST(Anomaly, HolonomyFamilyConvergesUnderRefinement) {
  auto a = rank221_family(64);
  auto b = rank221_family(128);
  TorsionFormOptions o;
  double r1 = anomaly_check(a.family, a.metric, 1e-3, o).max_residual;
  o.t_nodes *= 2;
  double r2 = anomaly_check(b.family, b.metric, 1e-3, o).max_residual;
  EXPECT_LT(r1, 1e-4);
  EXPECT_GE(r1 / r2, 3.0);
}

TEST(FiberCircle, UntwistedIsZero) {
  FiberCircleData d;
  d.fiber_twist = 0;
  d.base_twist = 0;
  EXPECT_LT(grr_residual(d), 1e-8);
}

TEST(FiberCircle, ConstantInBaseIsZero) {
  FiberCircleData d;
  d.fiber_twist = 1.0;
  d.amp = 0;
  EXPECT_LT(grr_residual(d), 1e-10);
}

TEST(FiberCircle, BaseVaryingMetric) {
  FiberCircleData d;
  d.fiber_twist = 1.0;
  d.base_twist = 0.4;
  EXPECT_LT(grr_residual(d), 1e-3);
}
