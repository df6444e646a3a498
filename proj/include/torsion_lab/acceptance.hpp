#pragma once

#include "birth_death.hpp"
#include "graded_complex.hpp"
#include "morse_complex.hpp"
#include "torsion_forms.hpp"
#include "witten1d.hpp"

#include <chrono>
#include <iomanip>
#include <random>
#include <sstream>

namespace tlab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;  // deterministic numbers only
  double seconds = 0;
  double budget = 0;
};

struct AcceptanceOptions {
  ModelParams birth_death;  // overridable for mutation runs
  std::uint64_t seed = 20240611;
};

namespace detail {

inline std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

}  // namespace detail

// 1. census counts and indices for y in {0, +d^2/2, -d^2/2}, closed-form match at y = 0
inline CriterionResult criterion_census(const AcceptanceOptions& o) {
  CriterionResult r{1, "birth-death census", false, ""};
  std::ostringstream os;
  bool ok = true;
  const ModelParams base = o.birth_death;
  const double d2 = base.delta * base.delta;
  for (double y : {0.0, 0.5 * d2, -0.5 * d2}) {
    ModelParams p = base;
    p.y = y;
    Census cs = find_critical_points(build_profiles(p));
    CensusCheck ck = check_census(cs, p);
    ok = ok && ck.counts_ok && ck.indices_ok;
    os << "y=" << detail::fmt(y) << ": " << cs.points.size() << (ck.indices_ok ? "" : " (indices off)") << "; ";
    if (y == 0.0) {
      auto cf = closed_form_candidates(p);
      double worst = 0;
      for (const CriticalPoint* c : {&cf.first, &cf.second}) {
        double best = std::numeric_limits<double>::infinity();
        for (auto& q : cs.points) best = std::min(best, (q.location - c->location).norm() / c->location.norm());
        worst = std::max(worst, best);
      }
      ok = ok && worst <= 1e-8;
      os << "closed-form rel " << detail::fmt(worst, 3) << "; ";
    }
  }
  r.pass = ok;
  r.detail = os.str();
  r.budget = 60;
  return r;
}

// 2. (c, c', C) proxies move by at most 5% from A to 2A
inline CriterionResult criterion_separation(const AcceptanceOptions& o) {
  CriterionResult r{2, "separation stability", false, ""};
  ModelParams p = o.birth_death;
  p.y = 0;
  Census a = find_critical_points(build_profiles(p));
  ModelParams q = p;
  q.A = 2 * p.A;
  Census b = find_critical_points(build_profiles(q));
  SeparationReport rep = separation_report(a, b, p, 0.05);
  r.pass = rep.stable;
  r.detail = "dc " + detail::fmt(rep.rel_change_c, 3) + ", dc' " + detail::fmt(rep.rel_change_c_prime, 3) + ", dC " +
             detail::fmt(rep.rel_change_C, 3);
  r.budget = 120;
  return r;
}

// 3. anomaly residual on the (2,2,1) holonomy family, with refinement
inline CriterionResult criterion_anomaly(const AcceptanceOptions&) {
  CriterionResult r{3, "anomaly formula", false, ""};
  std::vector<double> res(2);
  parallel_for(2, [&](std::size_t i) {
    int s = 1 << i;
    auto fm = rank221_family(64 * s);
    TorsionFormOptions opt;
    opt.t_nodes = 200 * s;
    res[i] = anomaly_check(fm.family, fm.metric, 1e-3, opt).max_residual;
  });
  double ratio = res[0] / res[1];
  r.pass = res[0] <= 1e-4 && ratio >= 3;
  r.detail = "m=64 " + detail::fmt(res[0], 3) + ", m=128 " + detail::fmt(res[1], 3) + ", ratio " + detail::fmt(ratio, 3);
  r.budget = 30;
  return r;
}

// 4. twisted circle: combinatorial against exact and FEM analytic torsion
inline CriterionResult criterion_cheeger_muller(const AcceptanceOptions&) {
  CriterionResult r{4, "twisted circle torsion", false, ""};
  const std::vector<double> thetas{pi / 3, pi / 2, pi, 4 * pi / 3};
  std::vector<CheegerMuller> cm(thetas.size());
  parallel_for(thetas.size(), [&](std::size_t i) { cm[i] = cheeger_muller_compare(thetas[i], 2000); });
  double ge = 0, gf = 0;
  for (auto& c : cm) {
    ge = std::max(ge, c.gap_exact);
    gf = std::max(gf, c.gap_fem);
  }
  r.pass = ge <= 1e-6 && gf <= 1e-2;
  r.detail = "comb/exact " + detail::fmt(ge, 3) + ", fem/exact " + detail::fmt(gf, 3);
  r.budget = 60;
  return r;
}

// 5. interface gluing on the shallow double well
inline CriterionResult criterion_gluing(const AcceptanceOptions&) {
  CriterionResult r{5, "spectral gluing", false, ""};
  GluingConfig cfg;
  GluingTable tab = gluing_scan(cfg);
  bool mono = true, fin = true, cluster = true;
  double worst_final = 0;
  for (int q = 0; q < cfg.k; ++q) {
    const double lam = tab.split[q];
    const double noise = 1e-12 * std::max(1.0, lam);
    for (std::size_t i = 0; i + 1 < tab.rows.size(); ++i)
      if (tab.rows[i + 1].gap[q] > tab.rows[i].gap[q] + noise) mono = false;
    double g = tab.rows.back().gap[q] / std::max(lam, 1e-6);
    worst_final = std::max(worst_final, g);
    if (tab.rows.back().gap[q] > 1e-2 * std::max(lam, 1e-6)) fin = false;
  }
  for (auto& row : tab.rows)
    if (row.cluster != tab.split_kernel || row.ambiguous) cluster = false;
  r.pass = mono && fin && cluster;
  r.detail = std::string(mono ? "monotone" : "NOT monotone") + ", final rel gap " + detail::fmt(worst_final, 3) +
             ", cluster " + std::to_string(tab.rows.back().cluster) + " vs split kernel " +
             std::to_string(tab.split_kernel);
  r.budget = 120;
  return r;
}

// 6. tunnelling slope against twice the Agmon barrier
inline CriterionResult criterion_small_eigen(const AcceptanceOptions&) {
  CriterionResult r{6, "small-eigenvalue decay", false, ""};
  DecayFit fit = small_eigenvalue_scan(cosine_potential(2.0), {20, 30, 40, 50, 60, 70, 80});
  bool ok = !fit.slope.empty();
  double worst = 0;
  for (double s : fit.slope) {
    double rel = std::abs(s - fit.predicted) / std::abs(fit.predicted);
    worst = std::max(worst, rel);
    if (!(rel <= 0.1)) ok = false;
  }
  r.pass = ok;
  r.detail = "slope " + (fit.slope.empty() ? std::string("n/a") : detail::fmt(fit.slope[0], 5)) + " vs " +
             detail::fmt(fit.predicted, 5) + " (rel " + detail::fmt(worst, 3) + ")";
  r.budget = 120;
  return r;
}

// 7. off-well sup of log|u| + rho/2 stays within 2 units across T
inline CriterionResult criterion_agmon(const AcceptanceOptions&) {
  CriterionResult r{7, "Agmon decay", false, ""};
  const std::vector<double> Ts{20, 30, 40, 50, 60, 70, 80};
  const Potential f = cosine_potential(2.0);
  const int N = resolved_circle_nodes(f, Ts.back());
  std::vector<double> sup(Ts.size());
  parallel_for(Ts.size(), [&](std::size_t i) {
    auto pb = circle_problem(f, Ts[i], N);
    auto s = mp_spectrum(pb, 2);
    auto crit = grid_critical_points(pb);
    auto rho = agmon_distance(pb, Ts[i], neighborhood_mask(pb, crit, 0.1));
    sup[i] = agmon_decay_check(pb, s, 0, rho, 0.5).sup;
  });
  double spread = *std::max_element(sup.begin(), sup.end()) - *std::min_element(sup.begin(), sup.end());
  r.pass = spread <= 2;
  r.detail = "spread " + detail::fmt(spread, 3) + " over " + std::to_string(Ts.size()) + " T values";
  r.budget = 60;
  return r;
}

// 8. cubic model eigenvalues scale like T^{2/3}
inline CriterionResult criterion_cubic(const AcceptanceOptions&) {
  CriterionResult r{8, "cubic-model scaling", false, ""};
  const std::vector<double> Ts{1, 8, 64};
  std::vector<CubicModelResult> c(Ts.size());
  parallel_for(Ts.size(), [&](std::size_t i) { c[i] = cubic_model_eigs(Ts[i], 5); });
  double worst = 0;
  for (int k = 0; k < 5; ++k) {
    double lo = c[0].scaled[k], hi = lo;
    for (auto& x : c) {
      lo = std::min(lo, x.scaled[k]);
      hi = std::max(hi, x.scaled[k]);
    }
    worst = std::max(worst, (hi - lo) / std::abs(lo));
  }
  r.pass = worst <= 0.01;
  r.detail = "max rel spread " + detail::fmt(worst, 3);
  r.budget = 30;
  return r;
}

// 9. ball-removed ranks on the suspended circle and torus
inline CriterionResult criterion_ball_ranks(const AcceptanceOptions&) {
  CriterionResult r{9, "ball-removed ranks", false, ""};
  bool ok = true;
  int cases = 0;
  for (int m : {1, 3}) {
    cmat I = cmat::Identity(m, m);
    for (const auto& model : {circle_model(1.0, I), torus_model(I, I)}) {
      MorseComplexData D = build_complex(model);
      for (int N : {2, 4})
        for (bool ball : {true, false}) {
          ok = ok && ball_removed_ranks(D, N, ball).match;
          ++cases;
        }
    }
  }
  r.pass = ok;
  r.detail = std::to_string(cases) + " rank tables";
  r.budget = 10;
  return r;
}

// 10. property suites
inline CriterionResult criterion_properties(const AcceptanceOptions& o) {
  CriterionResult r{10, "property suites", false, ""};
  std::mt19937_64 rng(o.seed);
  std::ostringstream os;
  bool ok = true;

  // d^2 = 0 on random complexes
  double d2 = 0;
  std::uniform_int_distribution<int> len(2, 5), rk(0, 5);
  for (int t = 0; t < 200; ++t) {
    std::vector<int> ranks(len(rng));
    for (int& x : ranks) x = rk(rng);
    GradedComplex c = random_complex(ranks, rng);
    for (int k = 0; k + 1 < static_cast<int>(c.d.size()); ++k)
      if (c.d[k].size() && c.d[k + 1].size())
        d2 = std::max(d2, (c.d[k + 1] * c.d[k]).norm() / std::max(1.0, c.d[k + 1].norm() * c.d[k].norm()));
  }
  ok = ok && d2 <= 1e-12;
  os << "d^2 " << detail::fmt(d2, 2);

  // Schauder norms: Hoelder, Minkowski, finite rank
  double worst = -1;
  std::normal_distribution<double> N01;
  std::uniform_real_distribution<double> U(2.0, 6.0);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 6;
    cmat A(n, n), B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        A(i, j) = cplx(N01(rng), N01(rng));
        B(i, j) = cplx(N01(rng), N01(rng));
      }
    if (t % 3 == 0) B = B.leftCols(1) * B.topRows(1);  // rank one
    double p = U(rng), q = U(rng), s = 1.0 / (1.0 / p + 1.0 / q);
    auto slack = [&](double lhs, double rhs) { worst = std::max(worst, (lhs - rhs) / std::max(rhs, 1e-300)); };
    slack(schauder_norm(cmat(A * B), s), schauder_norm(A, p) * schauder_norm(B, q));
    slack(schauder_norm(cmat(A + B), p), schauder_norm(A, p) + schauder_norm(B, p));
    Eigen::FullPivLU<cmat> lu(B);
    double rank = static_cast<double>(lu.rank());
    slack(schauder_norm(B, p), std::pow(rank, 1.0 / p) * schauder_norm(B, INFINITY));
    slack(schauder_norm(B, INFINITY), schauder_norm(B, p));
  }
  ok = ok && worst <= 1e-12;
  os << ", schauder slack " << detail::fmt(worst, 2);

  // gradients against central differences
  double gerr = 0, herr = 0;
  auto rel = [](double a, double b, double scale) { return std::abs(a - b) / std::max(scale, 1.0); };
  {
    ModelParams p = o.birth_death;
    p.y = 0.5 * p.delta * p.delta;
    ShapingProfiles pr(p);
    std::uniform_real_distribution<double> Ur(-3 * p.r2, 3 * p.r2);
    for (int t = 0; t < 40; ++t) {
      rvec u(p.n + 1);
      for (int j = 0; j <= p.n; ++j) u(j) = Ur(rng) / std::sqrt(p.n + 1.0);
      ModelEval e = eval_f(pr, u);
      const double h = 1e-7;
      for (int j = 0; j <= p.n; ++j) {
        rvec a = u, b = u;
        a(j) += h;
        b(j) -= h;
        double fd = (eval_f(pr, a).value - eval_f(pr, b).value) / (2 * h);
        gerr = std::max(gerr, rel(fd, e.gradient(j), e.gradient.norm()));
        rvec hd = (eval_f(pr, a).gradient - eval_f(pr, b).gradient) / (2 * h);
        herr = std::max(herr, (hd - e.hessian.col(j)).norm() / std::max(1.0, e.hessian.norm()));
      }
    }
  }
  {
    const double h = 1e-6;
    std::uniform_real_distribution<double> Us(-3, 3);
    for (const Potential& f : {cosine_potential(2.0), cosine_potential(2.0, 0.25), quadratic_potential(), cubic_potential()})
      for (int t = 0; t < 50; ++t) {
        double s = Us(rng);
        gerr = std::max(gerr, rel((f.f(s + h) - f.f(s - h)) / (2 * h), f.df(s), std::abs(f.df(s))));
        herr = std::max(herr, rel((f.df(s + h) - f.df(s - h)) / (2 * h), f.d2f(s), std::abs(f.d2f(s))));
      }
    for (const ManifoldModel& m : {circle_model(1.0), circle_model(2.0), torus_model()})
      for (int t = 0; t < 50; ++t) {
        rvec x(m.dim());
        for (int i = 0; i < m.dim(); ++i) x(i) = Us(rng);
        rvec g = m.grad(x);
        rmat H = m.hess(x);
        for (int i = 0; i < m.dim(); ++i) {
          rvec a = x, b = x;
          a(i) += h;
          b(i) -= h;
          gerr = std::max(gerr, rel((m.f(a) - m.f(b)) / (2 * h), g(i), g.norm()));
          herr = std::max(herr, ((m.grad(a) - m.grad(b)) / (2 * h) - H.col(i)).norm() / std::max(1.0, H.norm()));
        }
      }
    InterfaceProfile p(16.0, 0.1);
    for (int t = 0; t < 200; ++t) {
      double s = -0.15 + 0.3 * (t + 0.5) / 200;
      const double hh = 1e-7;
      Jet<double> j = p.eval(s);
      gerr = std::max(gerr, rel((p.eval(s + hh).v - p.eval(s - hh).v) / (2 * hh), j.d1, std::abs(j.d1)));
    }
  }
  ok = ok && gerr <= 1e-6 && herr <= 1e-5;
  os << ", gradient rel " << detail::fmt(gerr, 2) << ", hessian rel " << detail::fmt(herr, 2);

  // supersymmetric pairing of nonzero 0- and 1-form eigenvalues on the circle
  double pair = 0;
  {
    auto pb = circle_problem(cosine_potential(2.0), 10.0, 1024);
    auto s0 = spectrum(pb, 8, false);
    pb.form_degree = 1;
    auto s1 = spectrum(pb, 8, false);
    ok = ok && s0.kernel_dim == s1.kernel_dim;
    for (int q = s0.kernel_dim; q < 8; ++q)
      pair = std::max(pair, std::abs(s0.eigenvalues[q] - s1.eigenvalues[q]) / s0.eigenvalues[q]);
  }
  ok = ok && pair <= 1e-6;
  os << ", pairing rel " << detail::fmt(pair, 2);

  r.pass = ok;
  r.detail = os.str();
  r.budget = 120;
  return r;
}

using CriterionFn = CriterionResult (*)(const AcceptanceOptions&);

inline const std::vector<std::string>& criterion_names() {
  static const std::vector<std::string> names{"birth-death census", "separation stability", "anomaly formula",
                                              "twisted circle torsion", "spectral gluing", "small-eigenvalue decay",
                                              "Agmon decay", "cubic-model scaling", "ball-removed ranks",
                                              "property suites"};
  return names;
}

inline const std::vector<CriterionFn>& criteria() {
  static const std::vector<CriterionFn> all{criterion_census,   criterion_separation, criterion_anomaly,
                                            criterion_cheeger_muller, criterion_gluing, criterion_small_eigen,
                                            criterion_agmon,    criterion_cubic,      criterion_ball_ranks,
                                            criterion_properties};
  return all;
}

// Runs one criterion, turning module errors into a FAIL with the message and
// recording wall time against the budget.
inline CriterionResult run_criterion(int id, const AcceptanceOptions& o) {
  require(id >= 1 && id <= static_cast<int>(criteria().size()), ErrorKind::invalid_argument,
          "criterion id out of range");
  auto t0 = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = criteria()[id - 1](o);
  } catch (const std::exception& e) {
    r.id = id;
    r.name = criterion_names()[id - 1];
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.budget > 0 && r.seconds > r.budget) {
    r.pass = false;
    r.detail += " (over time budget)";
  }
  return r;
}

inline std::string summary_line(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << r.id << "  " << r.name << ": " << r.detail;
  return os.str();
}

}  // namespace tlab
