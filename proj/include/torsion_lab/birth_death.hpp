#pragma once

#include "ode.hpp"
#include "profiles.hpp"

#include <map>
#include <set>
#include <optional>
#include <random>
#include <sstream>

namespace tlab {

// Coordinates u_0..u_n; u_1..u_i enter with a minus sign, u_{i+1}..u_n with a plus sign.
struct ModelParams {
  int n = 6;
  int i = 3;
  double r1 = 0.04;
  double r2 = 0.06;
  double delta = 0.0015;
  double y = 0.0;
  double A = 1000.0;
};

inline void validate(const ModelParams& p) {
  auto fail = [](const std::string& s) { throw Error(ErrorKind::invalid_argument, s); };
  if (p.n < 3) fail("n must be at least 3");
  if (p.i < 2 || p.i > p.n - 1) fail("i must lie in {2, ..., n-1}");
  if (!(p.r1 > 0.0)) fail("r1 must be positive");
  if (!(p.r1 < p.r2)) fail("r1 must be smaller than r2");
  if (!(p.r2 < 1.0 / 14.0)) fail("r2 must be smaller than 1/14");
  if (!(p.delta > 0.0 && p.delta < p.r1 / 24.0)) fail("delta must lie in (0, r1/24)");
  if (!(std::abs(p.y) < p.delta * p.delta)) fail("|y| must be smaller than delta^2");
  if (!(p.A >= 0.0)) fail("A must be non-negative");
}

// eta, eta~ and q_A. eta = delta G with G(s) = s on [r1, r2], a quintic Hermite
// rise on [r1/6, r1] and s(1 - smoothstep) on [r2, 5r2/2]; eta~ ramps over
// [r1/6, r1/2] and [r2, 5r2/2]. q_A' = A sigma(s - r1) with sigma the
// ramp-plateau profile of width r2 - r1, so q_A is quadratic within (r2 - r1)/8
// of either sphere and linear across the middle.
class ShapingProfiles {
 public:
  explicit ShapingProfiles(const ModelParams& p)
      : p_(p),
        d_(p.r2 - p.r1),
        sigma_(p.r2 - p.r1),
        rise_(p.r1 / 6.0, 5.0 * p.r1 / 6.0, 0.0, 0.0, 0.0, p.r1, 1.0, 0.0) {}

  const ModelParams& params() const { return p_; }
  double C1() const { return sigma_.plateau() / 1.5; }
  double C2() const { return 1.0; }
  double eta_tilde_slope_bound() const { return 6.0 / p_.r1; }

  template <typename T>
  Jet<T> eta(T s) const {
    const T r1(p_.r1), r2(p_.r2);
    Jet<T> g{T(0), T(0), T(0)};
    if (s <= r1 / T(6) || s >= T(2.5) * r2) return g;
    if (s < r1) {
      g = rise_.eval(s);
    } else if (s <= r2) {
      g = {s, T(1), T(0)};
    } else {
      const T L = T(1.5) * r2;
      Jet<T> S = smoothstep<T>((s - r2) / L);
      g = {s * (T(1) - S.v), T(1) - S.v - s * S.d1 / L, -T(2) * S.d1 / L - s * S.d2 / (L * L)};
    }
    const T dl(p_.delta);
    return {dl * g.v, dl * g.d1, dl * g.d2};
  }

  template <typename T>
  Jet<T> eta_tilde(T s) const {
    const T r1(p_.r1), r2(p_.r2);
    if (s <= r1 / T(6) || s >= T(2.5) * r2) return {T(0), T(0), T(0)};
    if (s < r1 / T(2)) {
      const T L = r1 / T(3);
      Jet<T> S = smoothstep<T>((s - r1 / T(6)) / L);
      return {S.v, S.d1 / L, S.d2 / (L * L)};
    }
    if (s <= r2) return {T(1), T(0), T(0)};
    const T L = T(1.5) * r2;
    Jet<T> S = smoothstep<T>((s - r2) / L);
    return {T(1) - S.v, -S.d1 / L, -S.d2 / (L * L)};
  }

  template <typename T>
  Jet<T> q(T s) const {
    const T A(p_.A), d(d_);
    if (s <= T(p_.r1)) return {-A * d * d / T(2), T(0), T(0)};
    if (s >= T(p_.r2)) return {T(0), T(0), T(0)};
    T x = s - T(p_.r1);
    Jet<T> sg = sigma_.eval(x);
    return {A * (sigma_.integral(x) - d * d / T(2)), A * sg.v, A * sg.d1};
  }

 private:
  ModelParams p_;
  double d_;
  PlateauProfile sigma_;
  QuinticHermite rise_;
};

struct ProfileReport {
  std::vector<std::string> violations;
  std::vector<std::string> notes;
  double max_abs_eta_slope = 0.0;
  double max_abs_eta_tilde_slope = 0.0;
  double C1 = 0.0;
  double q_mid = 0.0;
};

// Samples every listed clause on 10^4 points.
inline ProfileReport verify_profiles(const ShapingProfiles& pr, int samples = 10000) {
  const ModelParams& p = pr.params();
  ProfileReport rep;
  rep.C1 = pr.C1();
  const double d = p.r2 - p.r1, hi = 3.0 * p.r2;
  auto bad = [&](const std::string& s) {
    if (std::find(rep.violations.begin(), rep.violations.end(), s) == rep.violations.end()) rep.violations.push_back(s);
  };
  for (int k = 0; k <= samples; ++k) {
    const double s = hi * k / samples;
    Jet<double> e = pr.eta(s), et = pr.eta_tilde(s), q = pr.q(s);
    rep.max_abs_eta_slope = std::max(rep.max_abs_eta_slope, std::abs(e.d1));
    rep.max_abs_eta_tilde_slope = std::max(rep.max_abs_eta_tilde_slope, std::abs(et.d1));
    if (e.v < 0.0) bad("eta: eta >= 0");
    if ((s <= p.r1 / 6 || s >= 2.5 * p.r2) && e.v != 0.0) bad("eta: vanishes on [0, r1/6] and [5r2/2, inf)");
    if (s > p.r1 && s < p.r2 && std::abs(e.v - p.delta * s) > 1e-15) bad("eta: equals delta s on (r1, r2)");
    if (std::abs(e.d1) >= 2.0 * p.delta) bad("eta: |eta'| < 2 delta");
    if (s > p.r1 / 6 && s < 2.5 * p.r2 && e.v <= 0.0 && k > 0 && k < samples) bad("eta: positive on (r1/6, 5r2/2)");
    if (et.v < 0.0 || et.v > 1.0) bad("eta~: 0 <= eta~ <= 1");
    if (s >= p.r1 / 2 && s <= p.r2 && et.v != 1.0) bad("eta~: equals 1 on [r1/2, r2]");
    if ((s <= p.r1 / 6 || s >= 2.5 * p.r2) && et.v != 0.0) bad("eta~: vanishes on [0, r1/6] and [5r2/2, inf)");
    if (std::abs(et.d1) > pr.eta_tilde_slope_bound()) bad("eta~: |eta~'| <= 6/r1");
    if (s <= p.r1 && std::abs(q.v + p.A * d * d / 2) > 1e-12 * (1 + p.A)) bad("q: constant -A(r2-r1)^2/2 on [0, r1]");
    if (s > p.r2 && q.v != 0.0) bad("q: vanishes on (r2, inf)");
    if (s >= p.r1 && s <= p.r1 + d / 8 &&
        std::abs(q.v - (p.A * (s - p.r1) * (s - p.r1) / 2 - p.A * d * d / 2)) > 1e-12 * (1 + p.A))
      bad("q: quadratic A(s-r1)^2/2 - A(r2-r1)^2/2 next to r1");
    if (s >= p.r2 - d / 8 && s <= p.r2 && std::abs(q.v + p.A * (s - p.r2) * (s - p.r2) / 2) > 1e-12 * (1 + p.A))
      bad("q: quadratic -A(s-r2)^2/2 next to r2");
    if (s >= p.r1 + 0.49 * d && s <= p.r1 + 0.51 * d) {
      if (q.d1 < pr.C1() * p.A * (1 - 1e-12) || q.d1 > 2 * pr.C1() * p.A * (1 + 1e-12))
        bad("q: C1 A <= q' <= 2 C1 A on the middle band");
      if (std::abs(q.d2) > pr.C2() * p.A * (1 + 1e-12)) bad("q: |q''| <= C2 A on the middle band");
    }
  }
  rep.q_mid = pr.q(0.5 * (p.r1 + p.r2)).v;
  if (std::abs(rep.q_mid + p.A * d * d / 4) > 1e-12 * (1 + p.A)) bad("q: q((r1+r2)/2) = -A (r2-r1)^2/4");
  if (rep.max_abs_eta_tilde_slope > 2.0 / p.r1)
    rep.notes.push_back("eta~ slope " + std::to_string(rep.max_abs_eta_tilde_slope * p.r1) +
                        "/r1 exceeds 2/r1; a ramp over [r1/6, r1/2] needs at least 3/r1");
  return rep;
}

inline ShapingProfiles build_profiles(const ModelParams& p) {
  validate(p);
  ShapingProfiles pr(p);
  ProfileReport rep = verify_profiles(pr);
  if (!rep.violations.empty()) throw Error(ErrorKind::infeasible_profile, rep.violations.front());
  return pr;
}

enum class ModelKind { plain, tilted, deformed };  // f_y, f~_y, f_{A,y}

template <typename T>
using VecT = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// Value, gradient and (optionally) Hessian of the model function.
template <typename T>
void eval_f(const ShapingProfiles& pr, const VecT<T>& u, T& f, VecT<T>& g, MatT<T>* H,
            ModelKind kind = ModelKind::deformed) {
  const ModelParams& p = pr.params();
  const int dim = p.n + 1;
  const T y(p.y);
  g.setZero(dim);
  if (H) H->setZero(dim, dim);
  f = u(0) * u(0) * u(0) - y * u(0);
  g(0) = T(3) * u(0) * u(0) - y;
  if (H) (*H)(0, 0) = T(6) * u(0);
  for (int j = 1; j < dim; ++j) {
    T s = (j <= p.i) ? T(-1) : T(1);
    f += s * u(j) * u(j);
    g(j) = T(2) * s * u(j);
    if (H) (*H)(j, j) = T(2) * s;
  }
  if (kind == ModelKind::plain) return;
  const T rho = u.norm();
  if (kind == ModelKind::deformed) f += pr.q(rho).v;
  if (!(rho > T(p.r1 / 6.0))) return;  // profiles are locally constant there

  const VecT<T> e = u / rho;
  auto radial_grad = [&](const Jet<T>& j) { return VecT<T>(j.d1 * e); };
  auto radial_hess = [&](const Jet<T>& j) {
    MatT<T> M = (j.d2 - j.d1 / rho) * (e * e.transpose());
    M.diagonal().array() += j.d1 / rho;
    return M;
  };
  Jet<T> et = pr.eta(rho), tt = pr.eta_tilde(rho);
  // -eta u_1
  f -= et.v * u(1);
  g -= u(1) * radial_grad(et);
  g(1) -= et.v;
  // + y eta~ u_0
  f += y * tt.v * u(0);
  g += y * u(0) * radial_grad(tt);
  g(0) += y * tt.v;
  if (kind == ModelKind::deformed) {
    Jet<T> q = pr.q(rho);
    g += radial_grad(q);
    if (H) *H += radial_hess(q);
  }
  if (H) {
    VecT<T> ge = radial_grad(et), gt = radial_grad(tt);
    *H -= u(1) * radial_hess(et);
    H->row(1) -= ge.transpose();
    H->col(1) -= ge;
    *H += y * u(0) * radial_hess(tt);
    H->row(0) += y * gt.transpose();
    H->col(0) += y * gt;
  }
}

struct ModelEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

inline ModelEval eval_f(const ShapingProfiles& pr, const Eigen::VectorXd& u, ModelKind kind = ModelKind::deformed) {
  ModelEval r;
  eval_f<double>(pr, u, r.value, r.gradient, &r.hessian, kind);
  return r;
}

struct CriticalPoint {
  Eigen::VectorXd location;
  double value = 0.0;
  Eigen::VectorXd hessian_spectrum;
  int morse_index = 0;
  bool birth_death = false;
  double newton_residual = 0.0;    // |grad f| in double
  double extended_residual = 0.0;  // |grad f| in long double
};

inline double degeneracy_threshold(const Eigen::VectorXd& eigs) {
  return 1e-7 * std::max(1.0, eigs.cwiseAbs().maxCoeff());
}

inline CriticalPoint classify(const ShapingProfiles& pr, const Eigen::VectorXd& u, double thr_scale = 1.0) {
  CriticalPoint c;
  c.location = u;
  ModelEval ev = eval_f(pr, u);
  c.value = ev.value;
  c.newton_residual = ev.gradient.norm();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (ev.hessian + ev.hessian.transpose()));
  c.hessian_spectrum = es.eigenvalues();
  const double thr = thr_scale * degeneracy_threshold(c.hessian_spectrum);
  int small = 0;
  for (int k = 0; k < c.hessian_spectrum.size(); ++k) {
    double l = c.hessian_spectrum(k);
    if (std::abs(l) < thr) ++small;
    else if (l < 0) ++c.morse_index;
  }
  c.birth_death = (small == 1);
  if (small > 1) c.morse_index = -1;
  VecT<long double> ul = u.cast<long double>();
  long double fl;
  VecT<long double> gl;
  eval_f<long double>(pr, ul, fl, gl, nullptr);
  c.extended_residual = static_cast<double>(gl.norm());
  return c;
}

struct NewtonOutcome {
  Eigen::VectorXd u;
  bool converged = false;
  int iterations = 0;
};

inline NewtonOutcome newton_critical(const ShapingProfiles& pr, Eigen::VectorXd u, int max_iter = 500) {
  const ModelParams& p = pr.params();
  const double cap = p.r1 / 10.0;
  NewtonOutcome out;
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    double f;
    Eigen::VectorXd g;
    Eigen::MatrixXd H;
    eval_f<double>(pr, u, f, g, &H);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    svd.setThreshold(1e-12);
    Eigen::VectorXd step = -svd.solve(g);
    double sn = step.norm();
    if (!std::isfinite(sn)) break;
    if (sn > cap) step *= cap / sn;
    // backtrack on |grad f| for long steps only
    double g0 = g.norm();
    double a = 1.0;
    for (int b = 0; b < 30 && sn > 1e-9; ++b) {
      Eigen::VectorXd un = u + a * step, gn;
      double fn;
      eval_f<double>(pr, un, fn, gn, nullptr);
      if (gn.norm() < g0) break;
      a *= 0.5;
    }
    u += a * step;
    if (u.norm() > 10.0) break;
    if (sn < 1e-13 * (1.0 + u.norm())) {
      double fv;
      Eigen::VectorXd gv;
      eval_f<double>(pr, u, fv, gv, nullptr);
      out.converged = gv.norm() <= 1e-10 * (1.0 + p.A);
      break;
    }
  }
  out.u = u;
  return out;
}

struct Census {
  std::vector<CriticalPoint> points;  // sorted by value
  std::vector<std::string> warnings;
  int seeds = 0;
  int converged_runs = 0;
};

inline Census find_critical_points(const ShapingProfiles& pr, int angles = 64, int random_seeds = 1000,
                                   std::uint64_t seed = 0x5EED) {
  const ModelParams& p = pr.params();
  validate(p);
  Census cs;
  if (p.A < 100.0) cs.warnings.push_back("A < 100: census may be incomplete");
  const int dim = p.n + 1;
  struct Seed {
    Eigen::VectorXd u;
    int shell;
  };
  std::vector<Seed> seeds;
  const std::vector<double> shells = {0.0, p.delta, p.r1, 0.5 * (p.r1 + p.r2), p.r2, 3.0 * p.r2};
  const char* shell_names[] = {"0", "delta", "r1", "(r1+r2)/2", "r2", "3r2"};
  for (std::size_t s = 0; s < shells.size(); ++s) {
    int na = shells[s] == 0.0 ? 1 : angles;
    for (int a = 0; a < na; ++a) {
      double ph = 2.0 * pi * (a + 0.5) / na;
      Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
      u(0) = shells[s] * std::cos(ph);
      u(1) = shells[s] * std::sin(ph);
      seeds.push_back({u, static_cast<int>(s)});
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01;
  std::uniform_real_distribution<double> U01;
  for (int k = 0; k < random_seeds; ++k) {
    Eigen::VectorXd u(dim);
    for (int j = 0; j < dim; ++j) u(j) = N01(rng);
    u *= 3.0 * p.r2 * std::pow(U01(rng), 1.0 / dim) / u.norm();
    seeds.push_back({u, -1});
  }
  cs.seeds = static_cast<int>(seeds.size());
  std::vector<NewtonOutcome> runs(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t k) { runs[k] = newton_critical(pr, seeds[k].u); });
  std::vector<int> shell_ok(shells.size(), 0);
  std::vector<Eigen::VectorXd> found;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    if (!runs[k].converged) continue;
    ++cs.converged_runs;
    if (seeds[k].shell >= 0) shell_ok[seeds[k].shell] = 1;
    bool dup = false;
    for (auto& f : found)
      if ((f - runs[k].u).norm() < 1e-6) {
        dup = true;
        break;
      }
    if (!dup) found.push_back(runs[k].u);
  }
  for (std::size_t s = 0; s < shells.size(); ++s)
    if (!shell_ok[s]) cs.warnings.push_back(std::string("incomplete census: no seed converged from shell ") + shell_names[s]);
  for (auto& u : found) cs.points.push_back(classify(pr, u));
  std::sort(cs.points.begin(), cs.points.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
    if (a.value != b.value) return a.value < b.value;
    return std::lexicographical_compare(a.location.data(), a.location.data() + a.location.size(), b.location.data(),
                                        b.location.data() + b.location.size());
  });
  return cs;
}

// v_{1,+} and v_{2,+} on the u_1 axis near S_{r2} (y = 0), with their Hessian spectra.
inline std::pair<CriticalPoint, CriticalPoint> closed_form_candidates(const ModelParams& p) {
  validate(p);
  const int dim = p.n + 1;
  const double A = p.A, dl = p.delta;
  auto make = [&](double u1, std::vector<double> eigs, int index) {
    CriticalPoint c;
    c.location = Eigen::VectorXd::Zero(dim);
    c.location(1) = u1;
    std::sort(eigs.begin(), eigs.end());
    c.hessian_spectrum = Eigen::Map<Eigen::VectorXd>(eigs.data(), static_cast<Eigen::Index>(eigs.size()));
    c.morse_index = index;
    return c;
  };
  std::vector<double> s1{2 + dl, -A - 2 - 2 * dl}, s2{2 - dl, -A - 2 + 2 * dl};
  for (int j = 2; j <= p.i; ++j) {
    s1.push_back(dl);
    s2.push_back(-dl);
  }
  for (int k = p.i + 1; k <= p.n; ++k) {
    s1.push_back(4 + dl);
    s2.push_back(4 - dl);
  }
  return {make(A * p.r2 / (A + 2 + 2 * dl), s1, 1), make(-A * p.r2 / (A + 2 - 2 * dl), s2, p.i)};
}

struct SeparationProxies {
  double c = 0.0;        // min pairwise distance
  double c_prime = 0.0;  // min value gap
  double C = 0.0;        // max |f|
  bool complete = false;
};

// Proxies for {v_{1,+}, v_{2,+}, w_+}: the critical points outside the middle
// sphere with indices 1, i, i+1.
inline SeparationProxies separation_proxies(const Census& cs, const ModelParams& p) {
  SeparationProxies sp;
  const double mid = 0.5 * (p.r1 + p.r2);
  std::vector<const CriticalPoint*> sel;
  for (int idx : {1, p.i, p.i + 1})
    for (auto& c : cs.points)
      if (!c.birth_death && c.morse_index == idx && c.location.norm() > mid) {
        sel.push_back(&c);
        break;
      }
  if (sel.size() != 3) return sp;
  sp.complete = true;
  sp.c = sp.c_prime = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    sp.C = std::max(sp.C, std::abs(sel[a]->value));
    for (int b = a + 1; b < 3; ++b) {
      sp.c = std::min(sp.c, (sel[a]->location - sel[b]->location).norm());
      sp.c_prime = std::min(sp.c_prime, std::abs(sel[a]->value - sel[b]->value));
    }
  }
  return sp;
}

struct SeparationReport {
  SeparationProxies at_A, at_2A;
  double rel_change_c = 0.0, rel_change_c_prime = 0.0, rel_change_C = 0.0;
  bool stable = false;
};

inline SeparationReport separation_report(const Census& at_A, const Census& at_2A, const ModelParams& p,
                                          double tol = 0.05) {
  SeparationReport r;
  r.at_A = separation_proxies(at_A, p);
  r.at_2A = separation_proxies(at_2A, p);
  auto rel = [](double a, double b) { return std::abs(b - a) / std::max(std::abs(a), 1e-300); };
  r.rel_change_c = rel(r.at_A.c, r.at_2A.c);
  r.rel_change_c_prime = rel(r.at_A.c_prime, r.at_2A.c_prime);
  r.rel_change_C = rel(r.at_A.C, r.at_2A.C);
  r.stable = r.at_A.complete && r.at_2A.complete && r.at_A.c > 0 && r.at_A.c_prime > 0 && r.rel_change_c <= tol &&
             r.rel_change_c_prime <= tol && r.rel_change_C <= tol;
  return r;
}

// min of the radial derivative of f_{A,0} over the annulus Ar1/(A-C0) <= |u| <= Ar2/(A+C0);
// empty when A <= C0 (annulus undefined).
inline std::optional<double> radial_derivative_check(const ModelParams& p0, int samples = 100000, double C0 = 10.0,
                                                     std::uint64_t seed = 0x5EED) {
  ModelParams p = p0;
  p.y = 0.0;
  validate(p);
  if (p.A <= C0) return std::nullopt;
  const double lo = p.A * p.r1 / (p.A - C0), hi = p.A * p.r2 / (p.A + C0);
  if (!(lo < hi)) return std::nullopt;
  ShapingProfiles pr(p);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01;
  const int dim = p.n + 1;
  double mn = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    Eigen::VectorXd e(dim);
    for (int j = 0; j < dim; ++j) e(j) = N01(rng);
    e.normalize();
    double r = lo + (hi - lo) * (samples > 1 ? double(k) / (samples - 1) : 0.0);
    Eigen::VectorXd u = r * e, g;
    double f;
    eval_f<double>(pr, u, f, g, nullptr);
    mn = std::min(mn, g.dot(e));
  }
  return mn;
}

struct ContainmentReport {
  int trajectories = 0;
  int crossed = 0;
  int diverged = 0;
  int stalled = 0;
  Eigen::VectorXd box_lo, box_hi;  // bounding box of crossings with |u| > r2
  int outside_crossings = 0;
  bool u0_bound = true;     // u_0 <= 3 r2 at every crossing
  bool uplus_bound = true;  // |(u_{i+1}..u_n)| <= 5 r2 / 2 at every crossing
  double max_u0 = -std::numeric_limits<double>::infinity();
  double max_uplus = 0.0;
};

// Follows the descending (unstable = true) or ascending gradient flow from a small
// sphere around a critical point inside its unstable (stable) eigenspace, until
// the level f(p) -+ c is crossed. Trajectories are parametrized by arclength.
inline ContainmentReport flow_containment_probe(const ShapingProfiles& pr, const CriticalPoint& cp, double c,
                                                bool unstable = true, int directions = 32,
                                                std::uint64_t seed = 0x5EED) {
  const ModelParams& p = pr.params();
  const int dim = p.n + 1;
  ContainmentReport rep;
  rep.box_lo = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::infinity());
  rep.box_hi = -rep.box_lo;
  ModelEval ev = eval_f(pr, cp.location);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (ev.hessian + ev.hessian.transpose()));
  std::vector<int> cols;
  for (int k = 0; k < dim; ++k)
    if (unstable ? es.eigenvalues()(k) < 0 : es.eigenvalues()(k) > 0) cols.push_back(k);
  if (cols.empty()) return rep;
  Eigen::MatrixXd B(dim, static_cast<int>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) B.col(static_cast<int>(k)) = es.eigenvectors().col(cols[k]);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01;
  const double sgn = unstable ? -1.0 : 1.0;
  const double level = cp.value + sgn * c;
  const double eps = 1e-4 * p.r2;
  std::vector<Eigen::VectorXd> starts;
  for (int k = 0; k < B.cols(); ++k) {
    starts.push_back(cp.location + eps * B.col(k));
    starts.push_back(cp.location - eps * B.col(k));
  }
  while (static_cast<int>(starts.size()) < directions) {
    Eigen::VectorXd a(B.cols());
    for (int k = 0; k < a.size(); ++k) a(k) = N01(rng);
    starts.push_back(cp.location + eps * B * a.normalized());
  }
  rep.trajectories = static_cast<int>(starts.size());
  std::vector<OdeResult> res(starts.size());
  parallel_for(starts.size(), [&](std::size_t k) {
    auto rhs = [&](const Eigen::VectorXd& u) {
      double f;
      Eigen::VectorXd g;
      eval_f<double>(pr, u, f, g, nullptr);
      double n = g.norm();
      return Eigen::VectorXd(n > 0 ? Eigen::VectorXd(sgn * g / n) : Eigen::VectorXd::Zero(u.size()));
    };
    auto event = [&](const Eigen::VectorXd& u) {
      double f;
      Eigen::VectorXd g;
      eval_f<double>(pr, u, f, g, nullptr);
      return unstable ? f - level : level - f;
    };
    auto abort = [](const Eigen::VectorXd& u) { return u.norm() > 10.0; };
    OdeOptions o;
    o.rtol = 1e-9;
    o.atol = 1e-12;
    o.h0 = 1e-6;
    o.hmax = 1e-2;
    o.t_end = 50.0;
    o.max_steps = 400000;
    res[k] = dopri45(rhs, starts[k], event, abort, o);
  });
  for (auto& r : res) {
    if (r.status == OdeStatus::aborted) {
      ++rep.diverged;
      continue;
    }
    if (r.status != OdeStatus::event) {
      ++rep.stalled;
      continue;
    }
    ++rep.crossed;
    const Eigen::VectorXd& u = r.y;
    double uplus = u.segment(p.i + 1, p.n - p.i).norm();
    rep.max_u0 = std::max(rep.max_u0, u(0));
    rep.max_uplus = std::max(rep.max_uplus, uplus);
    if (u(0) > 3.0 * p.r2) rep.u0_bound = false;
    if (uplus > 2.5 * p.r2) rep.uplus_bound = false;
    if (u.norm() > p.r2) {
      ++rep.outside_crossings;
      rep.box_lo = rep.box_lo.cwiseMin(u);
      rep.box_hi = rep.box_hi.cwiseMax(u);
    }
  }
  return rep;
}

// Descending flow started inside the ball of radius A r2 / (A + C0) stays inside.
struct BallInvarianceReport {
  int trajectories = 0;
  double max_radius_ratio = 0.0;  // max |u(t)| / R over all trajectories and times
  bool invariant = false;
};

inline BallInvarianceReport ball_invariance_probe(const ShapingProfiles& pr, int trajectories = 16, double t_end = 0.05,
                                                  double C0 = 10.0, std::uint64_t seed = 0x5EED) {
  const ModelParams& p = pr.params();
  BallInvarianceReport rep;
  require(p.A > C0, ErrorKind::invalid_argument, "ball invariance needs A > C0");
  const double R = p.A * p.r2 / (p.A + C0);
  const int dim = p.n + 1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01;
  std::vector<Eigen::VectorXd> starts;
  for (int k = 0; k < trajectories; ++k) {
    Eigen::VectorXd e(dim);
    for (int j = 0; j < dim; ++j) e(j) = N01(rng);
    starts.push_back(R * (0.999 - 0.1 * k / trajectories) * e.normalized());
  }
  std::vector<double> worst(starts.size(), 0.0);
  parallel_for(starts.size(), [&](std::size_t k) {
    auto rhs = [&](const Eigen::VectorXd& u) {
      double f;
      Eigen::VectorXd g;
      eval_f<double>(pr, u, f, g, nullptr);
      return Eigen::VectorXd(-g);
    };
    double w = 0.0;
    auto event = [](const Eigen::VectorXd&) { return 1.0; };
    auto watch = [&](const Eigen::VectorXd& u) {
      w = std::max(w, u.norm() / R);
      return false;
    };
    OdeOptions o;
    o.rtol = 1e-10;
    o.atol = 1e-13;
    o.h0 = 1e-6;
    o.hmax = 1e-3;
    o.t_end = t_end;
    dopri45(rhs, starts[k], event, watch, o);
    worst[k] = w;
  });
  rep.trajectories = trajectories;
  for (double w : worst) rep.max_radius_ratio = std::max(rep.max_radius_ratio, w);
  rep.invariant = rep.max_radius_ratio <= 1.0 + 1e-9;
  return rep;
}

// Expected index multiset check for the y = 0 census: the birth-death origin,
// {0, i, i-1} inside the middle sphere and {1, i, i+1} outside.
struct CensusCheck {
  bool counts_ok = false;
  bool indices_ok = false;
  std::string detail;
};

inline CensusCheck check_census(const Census& cs, const ModelParams& p) {
  CensusCheck ck;
  const int expect = p.y == 0.0 ? 7 : (p.y > 0.0 ? 8 : 6);
  ck.counts_ok = static_cast<int>(cs.points.size()) == expect;
  std::ostringstream os;
  os << cs.points.size() << " points (expected " << expect << ")";
  if (p.y == 0.0) {
    std::multiset<int> inner, outer;
    int bd = 0, bd_index = -1;
    const double mid = 0.5 * (p.r1 + p.r2);
    for (auto& c : cs.points) {
      if (c.birth_death) {
        ++bd;
        bd_index = c.morse_index;
      } else if (c.location.norm() < mid) {
        inner.insert(c.morse_index);
      } else {
        outer.insert(c.morse_index);
      }
    }
    ck.indices_ok = bd == 1 && bd_index == p.i && inner == std::multiset<int>{0, p.i - 1, p.i} &&
                    outer == std::multiset<int>{1, p.i, p.i + 1};
  } else {
    ck.indices_ok = true;
    for (auto& c : cs.points)
      if (c.birth_death || c.morse_index < 0) ck.indices_ok = false;
  }
  ck.detail = os.str();
  return ck;
}

// Smallest A on [lo, hi] (bisection in log A) at which the census has the
// expected size and indices for the given y.
inline double census_threshold_A(ModelParams p, double lo, double hi, int iterations = 12) {
  auto ok = [&](double A) {
    p.A = A;
    ShapingProfiles pr(p);
    Census cs = find_critical_points(pr);
    CensusCheck ck = check_census(cs, p);
    return ck.counts_ok && ck.indices_ok;
  };
  require(ok(hi), ErrorKind::degenerate_model, "census not stable even at the upper end of the A range");
  if (ok(lo)) return lo;
  for (int k = 0; k < iterations; ++k) {
    double mid = std::sqrt(lo * hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace tlab
