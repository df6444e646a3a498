#include <torsion_lab/birth_death.hpp>

#include <gtest/gtest.h>

#include <map>

using namespace tlab;

namespace {

const Census& census_at(double y) {
  static std::map<double, Census> cache;
  auto it = cache.find(y);
  if (it == cache.end()) {
    ModelParams p;
    p.y = y;
    it = cache.emplace(y, find_critical_points(build_profiles(p))).first;
  }
  return it->second;
}

}  // namespace

TEST(Params, RejectsLargeOuterRadius) {
  ModelParams p;
  p.r2 = 0.08;
  EXPECT_THROW(build_profiles(p), Error);
}

TEST(Params, RejectsLargeUnfolding) {
  ModelParams p;
  p.y = 2 * p.delta * p.delta;
  EXPECT_THROW(validate(p), Error);
}

TEST(Profiles, AllClausesHold) {
  ShapingProfiles pr = build_profiles(ModelParams{});
  ProfileReport rep = verify_profiles(pr);
  EXPECT_TRUE(rep.violations.empty()) << (rep.violations.empty() ? "" : rep.violations.front());
}

TEST(Profiles, EtaIsLinearBetweenRadii) {
  ModelParams p;
  ShapingProfiles pr = build_profiles(p);
  double s = 0.5 * (p.r1 + p.r2);
  EXPECT_NEAR(pr.eta(s).v, p.delta * s, 1e-16);
}

TEST(Profiles, QIsConstantInside) {
  ModelParams p;
  ShapingProfiles pr = build_profiles(p);
  const double d = p.r2 - p.r1;
  EXPECT_NEAR(pr.q(p.r1 / 2).v, -p.A * d * d / 2, 1e-12 * p.A);
}

TEST(Profiles, QVanishesWithoutDeformation) {
  ModelParams p;
  p.A = 0;
  ShapingProfiles pr = build_profiles(p);
  for (int k = 0; k <= 1000; ++k) EXPECT_EQ(pr.q(3 * p.r2 * k / 1000.0).v, 0.0);
}

TEST(Model, OriginIsCritical) {
  ShapingProfiles pr = build_profiles(ModelParams{});
  rvec u = rvec::Zero(7);
  ModelEval e = eval_f(pr, u);
  EXPECT_NEAR(e.value, -pr.params().A * 0.02 * 0.02 / 2, 1e-12);
  EXPECT_LT(e.gradient.norm(), 1e-15);
}

TEST(Model, PlainCubicCriticalPoint) {
  ModelParams p;
  p.y = 1e-6;
  p.A = 0;
  ShapingProfiles pr(p);
  rvec u = rvec::Zero(7);
  u(0) = std::sqrt(p.y / 3);
  EXPECT_LT(eval_f(pr, u, ModelKind::plain).gradient.norm(), 1e-15);
}

TEST(Model, GradientMatchesFiniteDifferences) {
  ModelParams p;
  p.y = 0.5 * p.delta * p.delta;
  ShapingProfiles pr = build_profiles(p);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> N01;
  std::uniform_real_distribution<double> U(0.0, 3.0 * p.r2);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    rvec u(7);
    for (int j = 0; j < 7; ++j) u(j) = N01(rng);
    u *= U(rng) / u.norm();
    ModelEval e = eval_f(pr, u);
    const double h = 1e-7;
    for (int j = 0; j < 7; ++j) {
      rvec a = u, b = u;
      a(j) += h;
      b(j) -= h;
      double fd = (eval_f(pr, a).value - eval_f(pr, b).value) / (2 * h);
      worst = std::max(worst, std::abs(fd - e.gradient(j)) / std::max(1.0, e.gradient.norm()));
    }
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Census, SevenPointsAtZero) {
  ModelParams p;
  CensusCheck ck = check_census(census_at(0.0), p);
  EXPECT_TRUE(ck.counts_ok) << ck.detail;
  EXPECT_TRUE(ck.indices_ok);
}

TEST(Census, EightPointsAbove) {
  ModelParams p;
  p.y = 0.5 * p.delta * p.delta;
  EXPECT_EQ(census_at(p.y).points.size(), 8u);
}

TEST(Census, SixPointsBelow) {
  ModelParams p;
  p.y = -0.5 * p.delta * p.delta;
  EXPECT_EQ(census_at(p.y).points.size(), 6u);
}

TEST(ClosedForm, IndicesAndNewtonMatch) {
  ModelParams p;
  auto cf = closed_form_candidates(p);
  EXPECT_EQ(cf.first.morse_index, 1);
  EXPECT_EQ(cf.second.morse_index, p.i);
  for (const CriticalPoint* c : {&cf.first, &cf.second}) {
    const CriticalPoint* best = nullptr;
    double dist = INFINITY;
    for (auto& q : census_at(0.0).points) {
      double d = (q.location - c->location).norm() / c->location.norm();
      if (d < dist) {
        dist = d;
        best = &q;
      }
    }
    ASSERT_NE(best, nullptr);
    EXPECT_LE(dist, 1e-8);
    EXPECT_LE((best->hessian_spectrum - c->hessian_spectrum).norm() / c->hessian_spectrum.norm(), 1e-8);
  }
}

TEST(Separation, StableUnderDoubling) {
  ModelParams p;
  ModelParams q = p;
  q.A = 2 * p.A;
  Census b = find_critical_points(build_profiles(q));
  SeparationReport r = separation_report(census_at(0.0), b, p);
  EXPECT_TRUE(r.stable);
  EXPECT_GT(r.at_A.c, 0);
  EXPECT_GT(r.at_A.c_prime, 0);
}

TEST(RadialDerivative, PositiveOnAnnulus) {
  ModelParams p;
  auto m1 = radial_derivative_check(p, 20000);
  ASSERT_TRUE(m1.has_value());
  EXPECT_GT(*m1, 0);
  p.A = 2000;
  auto m2 = radial_derivative_check(p, 20000);
  ASSERT_TRUE(m2.has_value());
  EXPECT_GT(*m2, 0);
  EXPECT_LE(std::abs(*m2 - *m1) / *m1, 0.1);
}

TEST(RadialDerivative, SkippedWithoutDeformation) {
  ModelParams p;
  p.A = 0;
  EXPECT_FALSE(radial_derivative_check(p).has_value());
}

TEST(Flow, UnstableManifoldOfIndexIPointIsContained) {
  ModelParams p;
  ShapingProfiles pr = build_profiles(p);
  const CriticalPoint* v2 = nullptr;
  for (auto& c : census_at(0.0).points)
    if (!c.birth_death && c.morse_index == p.i && c.location.norm() > 0.5 * (p.r1 + p.r2)) v2 = &c;
  ASSERT_NE(v2, nullptr);
  ContainmentReport rep = flow_containment_probe(pr, *v2, 1e-4);
  EXPECT_GT(rep.crossed, 0);
  EXPECT_TRUE(rep.u0_bound);
  EXPECT_TRUE(rep.uplus_bound);
}

TEST(Flow, BallIsForwardInvariant) {
  ShapingProfiles pr = build_profiles(ModelParams{});
  EXPECT_TRUE(ball_invariance_probe(pr, 8).invariant);
}
