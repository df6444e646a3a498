#pragma once

#include "graded_complex.hpp"
#include "superalgebra.hpp"

#include <functional>
#include <optional>

namespace tlab {

// Flat superconnection v + nabla over a circle sampled at theta_j = 2 pi j / m.
// Edge j carries the fiber j -> fiber j+1 (mod m) transport, one block per degree.
struct SuperconnectionFamily {
  int m = 0;
  std::vector<int> ranks;
  std::vector<std::vector<cmat>> v_field;    // [sample][degree], d_k
  std::vector<std::vector<cmat>> transport;  // [edge][degree]

  double step() const { return 2.0 * pi / m; }
};

using FamilyMetric = std::vector<std::vector<cmat>>;  // [sample][degree]

// degree0 per sample, degree1 per edge (the dtheta coefficient at the edge midpoint).
struct FormOnBase {
  std::vector<cplx> degree0;
  std::vector<cplx> degree1;
};

namespace detail {

inline std::vector<int> offsets(const std::vector<int>& ranks) {
  std::vector<int> o(ranks.size() + 1, 0);
  for (std::size_t k = 0; k < ranks.size(); ++k) o[k + 1] = o[k] + ranks[k];
  return o;
}

inline cmat block_diag(const std::vector<int>& ranks, const std::vector<cmat>& blocks) {
  auto o = offsets(ranks);
  cmat M = cmat::Zero(o.back(), o.back());
  for (std::size_t k = 0; k < ranks.size(); ++k) M.block(o[k], o[k], ranks[k], ranks[k]) = blocks[k];
  return M;
}

inline cmat full_differential(const std::vector<int>& ranks, const std::vector<cmat>& d) {
  auto o = offsets(ranks);
  cmat M = cmat::Zero(o.back(), o.back());
  for (std::size_t k = 0; k + 1 < ranks.size(); ++k) M.block(o[k + 1], o[k], ranks[k + 1], ranks[k]) = d[k];
  return M;
}

inline Eigen::VectorXd grading_sign(const std::vector<int>& ranks) {
  auto o = offsets(ranks);
  Eigen::VectorXd g(o.back());
  for (std::size_t k = 0; k < ranks.size(); ++k) g.segment(o[k], ranks[k]).setConstant((k % 2) ? -1.0 : 1.0);
  return g;
}

inline Eigen::VectorXd number_operator(const std::vector<int>& ranks) {
  auto o = offsets(ranks);
  Eigen::VectorXd g(o.back());
  for (std::size_t k = 0; k < ranks.size(); ++k) g.segment(o[k], ranks[k]).setConstant(static_cast<double>(k));
  return g;
}

inline cmat adjoint_in(const cmat& G, const cmat& A) {
  Eigen::PartialPivLU<cmat> lu(G);
  return lu.solve(A.adjoint() * G);
}

inline const cplx sqrt_2pii() {
  static const cplx s = std::sqrt(cplx(0.0, 2.0 * pi));
  return s;
}

}  // namespace detail

inline GradedComplex fiber_complex(const SuperconnectionFamily& fam, const FamilyMetric& metric, int j) {
  GradedComplex c;
  c.ranks = fam.ranks;
  c.d = fam.v_field[j];
  c.G = metric[j];
  return c;
}

struct FamilyChecks {
  double max_d2 = 0.0;
  double max_flatness = 0.0;
};

inline FamilyChecks validate_family(const SuperconnectionFamily& fam, const FamilyMetric* metric = nullptr) {
  require(fam.m >= 8, ErrorKind::invalid_argument, "need at least 8 base samples");
  require(static_cast<int>(fam.v_field.size()) == fam.m && static_cast<int>(fam.transport.size()) == fam.m,
          ErrorKind::invalid_argument, "per-sample data size mismatch");
  FamilyChecks fc;
  for (int j = 0; j < fam.m; ++j) {
    GradedComplex c;
    c.ranks = fam.ranks;
    c.d = fam.v_field[j];
    c.G.clear();
    for (int r : fam.ranks) c.G.push_back(cmat::Identity(r, r));
    if (metric) c.G = (*metric)[j];
    validate(c);
    cmat V = detail::full_differential(fam.ranks, fam.v_field[j]);
    cmat Vn = detail::full_differential(fam.ranks, fam.v_field[(j + 1) % fam.m]);
    cmat P = detail::block_diag(fam.ranks, fam.transport[j]);
    Eigen::FullPivLU<cmat> lu(P);
    require(lu.isInvertible(), ErrorKind::invalid_argument, "singular transport on edge " + std::to_string(j));
    double flat = (P * V - Vn * P).norm();
    fc.max_flatness = std::max(fc.max_flatness, flat);
    for (std::size_t k = 0; k + 2 < fam.ranks.size(); ++k)
      fc.max_d2 = std::max(fc.max_d2, (fam.v_field[j][k + 1] * fam.v_field[j][k]).norm());
  }
  require(fc.max_flatness <= 1e-9, ErrorKind::invalid_argument,
          "transport does not commute with v (flatness residual " + std::to_string(fc.max_flatness) + ")");
  return fc;
}

// Per-edge data in the coordinates of fiber j: the metric of fiber j+1 is pulled
// back by the transport, giving a midpoint metric and its theta-derivative.
struct EdgeGeometry {
  cmat v;       // full differential
  cmat G0, G1;  // metric at j and pulled-back metric from j+1
  cmat Gmid, Gdot;
  cmat vstar_mid;
  cmat X1;      // (1/2) Gmid^{-1} Gdot, the dtheta component of X
};

inline EdgeGeometry edge_geometry(const SuperconnectionFamily& fam, const FamilyMetric& metric, int j) {
  const int jn = (j + 1) % fam.m;
  EdgeGeometry e;
  e.v = detail::full_differential(fam.ranks, fam.v_field[j]);
  cmat P = detail::block_diag(fam.ranks, fam.transport[j]);
  e.G0 = detail::block_diag(fam.ranks, metric[j]);
  e.G1 = P.adjoint() * detail::block_diag(fam.ranks, metric[jn]) * P;
  e.Gmid = 0.5 * (e.G0 + e.G1);
  e.Gdot = (e.G1 - e.G0) / fam.step();
  Eigen::PartialPivLU<cmat> lu(e.Gmid);
  e.X1 = 0.5 * lu.solve(e.Gdot);
  e.vstar_mid = detail::adjoint_in(e.Gmid, e.v);
  return e;
}

// Data of the adjoint superconnection A' = nabla' + v*.
struct AdjointSuperconnection {
  std::vector<cmat> vstar;          // per sample, full matrix
  std::vector<cmat> transport_adj;  // per edge, fiber j -> fiber j+1
  std::vector<cmat> X0;             // per sample, (1/2)(v* - v)
  std::vector<cmat> X1;             // per edge, connection part of X in fiber-j coordinates
};

// Transport for nabla' on edge j is G(j+1)^{-1} P^{-dagger} G(j), so that
// <P x, P' y>_{j+1} = <x, y>_j.
inline AdjointSuperconnection adjoint_superconnection(const SuperconnectionFamily& fam, const FamilyMetric& metric) {
  validate_family(fam, &metric);
  AdjointSuperconnection a;
  for (int j = 0; j < fam.m; ++j) {
    cmat V = detail::full_differential(fam.ranks, fam.v_field[j]);
    cmat G = detail::block_diag(fam.ranks, metric[j]);
    cmat vs = detail::adjoint_in(G, V);
    a.vstar.push_back(vs);
    a.X0.push_back(0.5 * (vs - V));
    cmat P = detail::block_diag(fam.ranks, fam.transport[j]);
    cmat Gn = detail::block_diag(fam.ranks, metric[(j + 1) % fam.m]);
    Eigen::FullPivLU<cmat> lu(P);
    require(lu.isInvertible(), ErrorKind::invalid_argument, "singular transport");
    cmat Pinv_adj = lu.inverse().adjoint();
    a.transport_adj.push_back(Eigen::PartialPivLU<cmat>(Gn).solve(Pinv_adj * G));
    a.X1.push_back(edge_geometry(fam, metric, j).X1);
  }
  return a;
}

// h(A, h) = (2 pi i)^{1/2} phi Tr_s h(X). The degree-0 part vanishes since X0 is odd;
// on degree-1 forms the normalization is 1 and the dtheta coefficient is
// Tr_s[X1 h'(X0)] at the edge midpoint (evaluated through the superalgebra).
inline FormOnBase h_form(const SuperconnectionFamily& fam, const FamilyMetric& metric) {
  validate_family(fam, &metric);
  const Eigen::VectorXd gam = detail::grading_sign(fam.ranks);
  FormOnBase f;
  f.degree0.resize(fam.m);
  f.degree1.resize(fam.m);
  SuperAlgebra alg(1, gam);
  for (int j = 0; j < fam.m; ++j) {
    cmat V = detail::full_differential(fam.ranks, fam.v_field[j]);
    cmat G = detail::block_diag(fam.ranks, metric[j]);
    cmat X0 = 0.5 * (detail::adjoint_in(G, V) - V);
    f.degree0[j] = detail::sqrt_2pii() * supertrace(gam, h_matrix(X0));
    EdgeGeometry e = edge_geometry(fam, metric, j);
    cmat Xm = 0.5 * (e.vstar_mid - e.v);
    cmat M = alg.embed(0, Xm) + alg.embed(1, e.X1);
    f.degree1[j] = alg.supertrace(h_matrix(M), 1);
  }
  return f;
}

// Closed expression Tr_s[X1 h'(X0)] for the degree-1 part, used as a cross-check.
inline std::vector<cplx> h_form_degree1_formula(const SuperconnectionFamily& fam, const FamilyMetric& metric) {
  const Eigen::VectorXd gam = detail::grading_sign(fam.ranks);
  std::vector<cplx> out(fam.m);
  for (int j = 0; j < fam.m; ++j) {
    EdgeGeometry e = edge_geometry(fam, metric, j);
    out[j] = supertrace(gam, e.X1 * h_prime_matrix(0.5 * (e.vstar_mid - e.v)));
  }
  return out;
}

// A path of metrics l in [0, 1] -> metric; dG is optional (finite differences otherwise).
struct MetricPath {
  std::function<std::vector<cmat>(int sample, double l)> G;
  std::function<std::vector<cmat>(int sample, double l)> dG;

  std::vector<cmat> derivative(int j, double l) const {
    if (dG) return dG(j, l);
    const double s = 1e-4;
    double a = std::max(0.0, l - s), b = std::min(1.0, l + s);
    auto ga = G(j, a), gb = G(j, b);
    for (std::size_t k = 0; k < ga.size(); ++k) ga[k] = (gb[k] - ga[k]) / (b - a);
    return ga;
  }
};

inline MetricPath linear_path(const FamilyMetric& h0, const FamilyMetric& h1) {
  MetricPath p;
  p.G = [h0, h1](int j, double l) {
    std::vector<cmat> g(h0[j].size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = (1.0 - l) * h0[j][k] + l * h1[j][k];
    return g;
  };
  p.dG = [h0, h1](int j, double) {
    std::vector<cmat> g(h0[j].size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = h1[j][k] - h0[j][k];
    return g;
  };
  return p;
}

inline MetricPath scaling_path(const FamilyMetric& h0, double rate) {
  MetricPath p;
  p.G = [h0, rate](int j, double l) {
    std::vector<cmat> g(h0[j].size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = std::exp(rate * l) * h0[j][k];
    return g;
  };
  p.dG = [h0, rate](int j, double l) {
    std::vector<cmat> g(h0[j].size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = rate * std::exp(rate * l) * h0[j][k];
    return g;
  };
  return p;
}

// Transgression int_0^1 (dl-coefficient of h(A, h_l), dl on the left) dl.
// Degree 0 per sample; degree 1 per edge from the dtheta^dl component.
inline FormOnBase transgression(const SuperconnectionFamily& fam, const MetricPath& path, int l_nodes = 24) {
  require(l_nodes >= 16, ErrorKind::invalid_argument, "transgression needs at least 16 l-nodes");
  const Eigen::VectorXd gam = detail::grading_sign(fam.ranks);
  std::vector<double> ls, lw;
  gauss_legendre(l_nodes, 0.0, 1.0, ls, lw);
  FormOnBase f;
  f.degree0.assign(fam.m, 0.0);
  f.degree1.assign(fam.m, 0.0);
  SuperAlgebra a1(1, gam), a2(2, gam);
  const cplx deg1_norm = 1.0 / detail::sqrt_2pii();
  parallel_for(static_cast<std::size_t>(fam.m), [&](std::size_t js) {
    const int j = static_cast<int>(js);
    const int jn = (j + 1) % fam.m;
    cmat V = detail::full_differential(fam.ranks, fam.v_field[j]);
    cmat P = detail::block_diag(fam.ranks, fam.transport[j]);
    cplx s0 = 0.0, s1 = 0.0;
    for (int q = 0; q < l_nodes; ++q) {
      const double l = ls[q];
      auto gj = path.G(j, l);
      auto gn = path.G(jn, l);
      for (auto* g : {&gj, &gn})
        for (auto& b : *g) {
          Eigen::SelfAdjointEigenSolver<cmat> es(b, Eigen::EigenvaluesOnly);
          require(es.eigenvalues().minCoeff() > 0.0, ErrorKind::invalid_metric, "metric path leaves positive cone");
        }
      cmat G = detail::block_diag(fam.ranks, gj);
      cmat dG = detail::block_diag(fam.ranks, path.derivative(j, l));
      cmat X0 = 0.5 * (detail::adjoint_in(G, V) - V);
      cmat Y = 0.5 * Eigen::PartialPivLU<cmat>(G).solve(dG);
      cmat M = a1.embed(0, X0) + a1.embed(1, Y);
      s0 += lw[q] * a1.supertrace(h_matrix(M), 1);

      cmat G1 = P.adjoint() * detail::block_diag(fam.ranks, gn) * P;
      cmat dG1 = P.adjoint() * detail::block_diag(fam.ranks, path.derivative(jn, l)) * P;
      cmat Gm = 0.5 * (G + G1);
      Eigen::PartialPivLU<cmat> lum(Gm);
      cmat X1 = 0.5 * lum.solve((G1 - G) / fam.step());
      cmat Ym = 0.5 * lum.solve(0.5 * (dG + dG1));
      cmat Xm = 0.5 * (detail::adjoint_in(Gm, V) - V);
      cmat M2 = a2.embed(0, Xm) + a2.embed(1, X1) + a2.embed(2, Ym);
      s1 += lw[q] * (-a2.supertrace(h_matrix(M2), 3));
    }
    f.degree0[j] = s0;
    f.degree1[j] = deg1_norm * s1;
  });
  return f;
}

// Max over edges of |h(A,h1) - h(A,h0) - d(transgression)| in degree 1.
inline double transgression_residual(const SuperconnectionFamily& fam, const MetricPath& path, int l_nodes = 24) {
  FamilyMetric h0(fam.m), h1(fam.m);
  for (int j = 0; j < fam.m; ++j) {
    h0[j] = path.G(j, 0.0);
    h1[j] = path.G(j, 1.0);
  }
  FormOnBase a = h_form(fam, h0), b = h_form(fam, h1), tr = transgression(fam, path, l_nodes);
  double r = 0.0;
  for (int j = 0; j < fam.m; ++j) {
    cplx dtr = (tr.degree0[(j + 1) % fam.m] - tr.degree0[j]) / fam.step();
    r = std::max(r, std::abs(b.degree1[j] - a.degree1[j] - dtr));
  }
  return r;
}

struct TorsionFormOptions {
  double t_max = 200.0;
  int t_nodes = 200;
  double tail_tol = 1e-6;
  bool degree1 = true;
};

namespace detail {

// (1/2)[Tr_s(N h'(X_t)) - chi'(H) - (chi'(E) - chi'(H)) h'(i sqrt(t)/2)], X_t = (1/2)(t v* - v).
inline double tl_integrand(const cmat& V, const cmat& Vstar, const Eigen::VectorXd& gamN, double chiE, double chiH,
                           double t) {
  cmat X = 0.5 * (t * Vstar - V);
  cmat hp = h_prime_matrix(X);
  double str = 0.0;
  for (int i = 0; i < hp.rows(); ++i) str += gamN(i) * hp(i, i).real();
  double g = (1.0 - 0.5 * t) * std::exp(-0.25 * t);
  return 0.5 * (str - chiH - (chiE - chiH) * g);
}

}  // namespace detail

// Torsion form T^L_tau for the canonical rescaling h_t = t^{N - n/2} h.
// Degree 0: -int_tau^{t_max} (integrand) dt/t with log-spaced trapezoid nodes.
// Degree 1: -int (dt^dtheta coefficient, dt on the left) dt, normalized by (2 pi i)^{-1/2}.
inline FormOnBase torsion_form_TL(const SuperconnectionFamily& fam, const FamilyMetric& metric, double tau,
                                  const TorsionFormOptions& opt = {}) {
  require(tau > 0.0 && tau < opt.t_max, ErrorKind::invalid_argument, "need 0 < tau < t_max");
  require(opt.t_nodes >= 2, ErrorKind::invalid_argument, "need at least two t-nodes");
  validate_family(fam, &metric);
  const Eigen::VectorXd gam = detail::grading_sign(fam.ranks);
  const Eigen::VectorXd Nop = detail::number_operator(fam.ranks);
  const Eigen::VectorXd gamN = gam.cwiseProduct(Nop);
  const double half_n = 0.5 * (static_cast<int>(fam.ranks.size()) - 1);
  std::vector<double> ts, tw;
  log_trapezoid(opt.t_nodes, tau, opt.t_max, ts, tw);
  FormOnBase f;
  f.degree0.assign(fam.m, 0.0);
  f.degree1.assign(fam.m, 0.0);
  std::vector<double> tail(fam.m, 0.0);
  SuperAlgebra a2(2, gam);
  const cplx deg1_norm = 1.0 / detail::sqrt_2pii();
  parallel_for(static_cast<std::size_t>(fam.m), [&](std::size_t js) {
    const int j = static_cast<int>(js);
    GradedComplex c = fiber_complex(fam, metric, j);
    EulerData eE = euler_chars(c), eH = euler_chars_cohomology(c);
    cmat V = detail::full_differential(fam.ranks, fam.v_field[j]);
    cmat G = detail::block_diag(fam.ranks, metric[j]);
    cmat Vs = detail::adjoint_in(G, V);
    double s = 0.0;
    for (int q = 0; q < opt.t_nodes; ++q) s += tw[q] * detail::tl_integrand(V, Vs, gamN, eE.chi_prime, eH.chi_prime, ts[q]);
    f.degree0[j] = -s;
    tail[j] = std::abs(detail::tl_integrand(V, Vs, gamN, eE.chi_prime, eH.chi_prime, opt.t_max));
    if (opt.degree1) {
      EdgeGeometry e = edge_geometry(fam, metric, j);
      cmat Ybase = (Nop.array() - half_n).matrix().cast<cplx>().asDiagonal();
      cplx s1 = 0.0;
      for (int q = 0; q < opt.t_nodes; ++q) {
        const double t = ts[q];
        cmat X = 0.5 * (t * e.vstar_mid - e.v);
        cmat M = a2.embed(0, X) + a2.embed(1, e.X1) + a2.embed(2, Ybase / (2.0 * t));
        // weights are for dt/t, the integrand is per dt
        s1 += tw[q] * t * (-a2.supertrace(h_matrix(M), 3));
      }
      f.degree1[j] = -deg1_norm * s1;
    }
  });
  for (int j = 0; j < fam.m; ++j)
    if (tail[j] > opt.tail_tol)
      throw Error(ErrorKind::tail_not_converged, "integrand " + std::to_string(tail[j]) + " at t_max on sample " +
                                                     std::to_string(j) + "; increase t_max");
  return f;
}

// Degree-1 part of h(nabla^H, h^H_{L2}) per edge: (1/2) sum (-1)^k log det M_k / dtheta,
// M_k the Gram matrix at j+1 of the transported and reprojected orthonormal harmonic basis at j.
inline std::vector<double> harmonic_h_form(const SuperconnectionFamily& fam, const FamilyMetric& metric) {
  std::vector<double> out(fam.m, 0.0);
  std::vector<std::vector<cmat>> B(fam.m);
  for (int j = 0; j < fam.m; ++j) {
    GradedComplex c = fiber_complex(fam, metric, j);
    auto ds = adjoints(c);
    for (int k = 0; k <= c.top(); ++k) B[j].push_back(harmonic_basis(c, k, ds));
  }
  for (int j = 0; j < fam.m; ++j) {
    const int jn = (j + 1) % fam.m;
    double s = 0.0;
    for (std::size_t k = 0; k < fam.ranks.size(); ++k) {
      if (B[j][k].cols() == 0) continue;
      const cmat& Gn = metric[jn][k];
      cmat T = fam.transport[j][k] * B[j][k];
      cmat R = B[jn][k] * (B[jn][k].adjoint() * Gn * T);
      cmat M = R.adjoint() * Gn * R;
      s += ((k % 2) ? -1.0 : 1.0) * std::log(std::abs(M.determinant()));
    }
    out[j] = 0.5 * s / fam.step();
  }
  return out;
}

struct AnomalyReport {
  std::vector<double> residual;  // per edge
  double max_residual = 0.0;
  std::vector<double> torsion;   // degree-0 part per sample
  std::vector<double> h_family;  // degree-1 part of h(A, h_tau) per edge
  std::vector<double> h_harmonic;
};

// Residual of d T^L_tau = h(A, h_tau) - h(nabla^H, h^H_{L2}) on every edge.
// tau = 0 uses the closed-form torsion and X = -v/2.
inline AnomalyReport anomaly_check(const SuperconnectionFamily& fam, const FamilyMetric& metric, double tau,
                                   const TorsionFormOptions& opt = {}) {
  AnomalyReport rep;
  rep.torsion.resize(fam.m);
  if (tau > 0.0) {
    TorsionFormOptions o = opt;
    o.degree1 = false;
    FormOnBase T = torsion_form_TL(fam, metric, tau, o);
    for (int j = 0; j < fam.m; ++j) rep.torsion[j] = T.degree0[j].real();
  } else {
    validate_family(fam, &metric);
    for (int j = 0; j < fam.m; ++j) rep.torsion[j] = finite_torsion(fiber_complex(fam, metric, j));
  }
  const Eigen::VectorXd gam = detail::grading_sign(fam.ranks);
  SuperAlgebra a1(1, gam);
  rep.h_family.resize(fam.m);
  for (int j = 0; j < fam.m; ++j) {
    EdgeGeometry e = edge_geometry(fam, metric, j);
    cmat X = 0.5 * (tau * e.vstar_mid - e.v);
    cmat M = a1.embed(0, X) + a1.embed(1, e.X1);
    rep.h_family[j] = a1.supertrace(h_matrix(M), 1).real();
  }
  rep.h_harmonic = harmonic_h_form(fam, metric);
  rep.residual.resize(fam.m);
  for (int j = 0; j < fam.m; ++j) {
    double dT = (rep.torsion[(j + 1) % fam.m] - rep.torsion[j]) / fam.step();
    rep.residual[j] = dT - rep.h_family[j] + rep.h_harmonic[j];
    rep.max_residual = std::max(rep.max_residual, std::abs(rep.residual[j]));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Test families.

struct FamilyWithMetric {
  SuperconnectionFamily family;
  FamilyMetric metric;
};

// Periodic Hermitian metric perturbation I + amp (cos th S_k + sin 2th R_k) with fixed S_k, R_k.
inline FamilyMetric periodic_metric(const std::vector<int>& ranks, int m, double amp, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<cmat> S, R;
  for (int r : ranks) {
    cmat a(r, r), b(r, r);
    for (int i = 0; i < r; ++i)
      for (int k = 0; k < r; ++k) {
        a(i, k) = cplx(U(rng), U(rng));
        b(i, k) = cplx(U(rng), U(rng));
      }
    cmat sa = 0.5 * (a + a.adjoint()), sb = 0.5 * (b + b.adjoint());
    double na = r ? Eigen::SelfAdjointEigenSolver<cmat>(sa).eigenvalues().cwiseAbs().maxCoeff() : 1.0;
    double nb = r ? Eigen::SelfAdjointEigenSolver<cmat>(sb).eigenvalues().cwiseAbs().maxCoeff() : 1.0;
    S.push_back(sa / std::max(na, 1e-12));
    R.push_back(sb / std::max(nb, 1e-12));
  }
  FamilyMetric g(m);
  for (int j = 0; j < m; ++j) {
    double th = 2.0 * pi * j / m;
    for (std::size_t k = 0; k < ranks.size(); ++k)
      g[j].push_back(cmat::Identity(ranks[k], ranks[k]) + amp * (std::cos(th) * S[k] + std::sin(2.0 * th) * R[k]));
  }
  return g;
}

struct HolonomyFamilyParams {
  double a = 1.0, b = 1.0;
  double alpha = 0.7, beta = 1.9, gamma = -1.3;  // holonomy angles
  double amp = 0.1;
};

// Ranks (2,2,1): v0 = diag(a,0), v1 = [0 b]; cohomology is H^0 = C.
// Transport exp(dtheta B) with B diagonal and commuting with v; holonomy exp(2 pi B).
inline FamilyWithMetric rank221_family(int m, const HolonomyFamilyParams& p = {}) {
  FamilyWithMetric fm;
  auto& f = fm.family;
  f.m = m;
  f.ranks = {2, 2, 1};
  cmat d0 = cmat::Zero(2, 2);
  d0(0, 0) = p.a;
  cmat d1 = cmat::Zero(1, 2);
  d1(0, 1) = p.b;
  const double dth = 2.0 * pi / m;
  const cplx I(0.0, 1.0);
  cvec b0(2), b1(2), b2(1);
  b0 << I * p.alpha, I * p.beta;
  b1 << I * p.alpha, I * p.gamma;
  b2 << I * p.gamma;
  b0 /= 2.0 * pi;
  b1 /= 2.0 * pi;
  b2 /= 2.0 * pi;
  auto tr = [&](const cvec& bb) { return cmat((dth * bb).array().exp().matrix().asDiagonal()); };
  for (int j = 0; j < m; ++j) {
    f.v_field.push_back({d0, d1});
    f.transport.push_back({tr(b0), tr(b1), tr(b2)});
  }
  fm.metric = periodic_metric(f.ranks, m, p.amp);
  return fm;
}

// Ranks (1,2,1): v0 = [a;0], v1 = [0 b]; acyclic.
inline FamilyWithMetric acyclic121_family(int m, const HolonomyFamilyParams& p = {}) {
  FamilyWithMetric fm;
  auto& f = fm.family;
  f.m = m;
  f.ranks = {1, 2, 1};
  cmat d0 = cmat::Zero(2, 1);
  d0(0, 0) = p.a;
  cmat d1 = cmat::Zero(1, 2);
  d1(0, 1) = p.b;
  const double dth = 2.0 * pi / m;
  const cplx I(0.0, 1.0);
  cvec b0(1), b1(2), b2(1);
  b0 << I * p.alpha;
  b1 << I * p.alpha, I * p.gamma;
  b2 << I * p.gamma;
  b0 /= 2.0 * pi;
  b1 /= 2.0 * pi;
  b2 /= 2.0 * pi;
  auto tr = [&](const cvec& bb) { return cmat((dth * bb).array().exp().matrix().asDiagonal()); };
  for (int j = 0; j < m; ++j) {
    f.v_field.push_back({d0, d1});
    f.transport.push_back({tr(b0), tr(b1), tr(b2)});
  }
  fm.metric = periodic_metric(f.ranks, m, p.amp);
  return fm;
}

// Constant family (point base repeated m times) with trivial transport.
inline FamilyWithMetric constant_family(const GradedComplex& c, int m) {
  FamilyWithMetric fm;
  fm.family.m = m;
  fm.family.ranks = c.ranks;
  for (int j = 0; j < m; ++j) {
    fm.family.v_field.push_back(c.d);
    std::vector<cmat> P;
    for (int r : c.ranks) P.push_back(cmat::Identity(r, r));
    fm.family.transport.push_back(P);
    fm.metric.push_back(c.G);
  }
  return fm;
}

// ---------------------------------------------------------------------------
// Circle fibers over a circle base: the de Rham cochain complex of a fiber circle
// with nf vertices and edge lengths exp(a_i(theta)), sum a_i = 0, twisted by
// exp(i fiber_twist) across the last edge. The base transport is the scalar
// exp(i base_twist dtheta).
struct FiberCircleData {
  int fiber_vertices = 12;
  int base_samples = 64;
  double fiber_twist = 0.0;
  double base_twist = 0.0;
  double amp = 0.3;  // size of the base variation of the log edge lengths
};

inline FamilyWithMetric fiber_circle_family(const FiberCircleData& d) {
  const int nf = d.fiber_vertices, m = d.base_samples;
  require(nf >= 3, ErrorKind::invalid_argument, "fiber circle needs at least 3 vertices");
  FamilyWithMetric fm;
  auto& f = fm.family;
  f.m = m;
  f.ranks = {nf, nf};
  cmat D = cmat::Zero(nf, nf);
  for (int e = 0; e < nf; ++e) {
    const int nx = (e + 1) % nf;
    D(e, e) -= 1.0;
    D(e, nx) += (nx == 0) ? std::polar(1.0, d.fiber_twist) : cplx(1.0);
  }
  const cplx ph = std::polar(1.0, d.base_twist * 2.0 * pi / m);
  for (int j = 0; j < m; ++j) {
    f.v_field.push_back({D});
    f.transport.push_back({ph * cmat::Identity(nf, nf), ph * cmat::Identity(nf, nf)});
    const double th = 2.0 * pi * j / m;
    std::vector<double> a(nf);
    double mean = 0.0;
    for (int i = 0; i < nf; ++i) {
      a[i] = d.amp * (std::sin(th + 2.0 * pi * i / nf) + 0.5 * std::cos(2.0 * th - 4.0 * pi * i / nf) +
                      0.3 * std::sin(th) * std::cos(2.0 * pi * i * i / nf));
      mean += a[i] / nf;
    }
    for (auto& x : a) x -= mean;
    cmat G0 = cmat::Zero(nf, nf), G1 = cmat::Zero(nf, nf);
    for (int i = 0; i < nf; ++i) {
      G0(i, i) = std::exp(0.5 * (a[(i + nf - 1) % nf] + a[i]));
      G1(i, i) = std::exp(-a[i]);
    }
    fm.metric.push_back({G0, G1});
  }
  return fm;
}

// max over edges of |d T + h(nabla^H)| for the fiber-circle family. The family
// term is dropped: sum a_i = 0 keeps every det G_k fixed, so it is zero exactly.
inline double grr_residual(const FiberCircleData& d, double tau = 0.0, const TorsionFormOptions& opt = {}) {
  FamilyWithMetric fm = fiber_circle_family(d);
  AnomalyReport rep = anomaly_check(fm.family, fm.metric, tau, opt);
  double r = 0.0;
  for (int j = 0; j < fm.family.m; ++j) r = std::max(r, std::abs(rep.residual[j] + rep.h_family[j]));
  return r;
}

}  // namespace tlab
