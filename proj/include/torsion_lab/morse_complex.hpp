#pragma once

#include "core.hpp"
#include "graded_complex.hpp"
#include "ode.hpp"

#include <map>
#include <sstream>

namespace tlab {

enum class ManifoldKind { circle, torus2d };

// Flat periodic model R^d / (2 pi Z)^d with a Morse function and a unitary
// representation of the fundamental group. Crossing the hyperplane
// x_i = seam (mod 2 pi) in the positive direction transports by holonomy[i].
struct ManifoldModel {
  ManifoldKind kind = ManifoldKind::circle;
  std::string name;
  std::function<double(const rvec&)> f;
  std::function<rvec(const rvec&)> grad;
  std::function<rmat(const rvec&)> hess;
  std::vector<cmat> holonomy;
  double seam = 0.5;

  int dim() const { return kind == ManifoldKind::circle ? 1 : 2; }
  int rank() const { return holonomy.empty() ? 0 : static_cast<int>(holonomy[0].rows()); }
};

inline void validate(const ManifoldModel& m) {
  require(static_cast<int>(m.holonomy.size()) == m.dim(), ErrorKind::invalid_argument,
          "need one holonomy matrix per generator");
  const int r = m.rank();
  require(r >= 1, ErrorKind::invalid_argument, "coefficient rank must be positive");
  for (const auto& H : m.holonomy) {
    require(H.rows() == r && H.cols() == r, ErrorKind::invalid_argument, "holonomy shape mismatch");
    require((H.adjoint() * H - cmat::Identity(r, r)).norm() <= 1e-12, ErrorKind::invalid_argument,
            "holonomy not unitary");
  }
  if (m.dim() == 2)
    require((m.holonomy[0] * m.holonomy[1] - m.holonomy[1] * m.holonomy[0]).norm() <= 1e-12,
            ErrorKind::invalid_argument, "torus holonomies must commute");
}

inline cmat phase_holonomy(double theta, int rank = 1) {
  return cmat::Identity(rank, rank) * std::polar(1.0, theta);
}

// f = cos(k s) on the circle.
inline ManifoldModel circle_model(double k = 1.0, cmat hol = cmat::Identity(1, 1)) {
  ManifoldModel m;
  m.kind = ManifoldKind::circle;
  m.name = "circle cos";
  m.f = [k](const rvec& x) { return std::cos(k * x(0)); };
  m.grad = [k](const rvec& x) { return rvec::Constant(1, -k * std::sin(k * x(0))); };
  m.hess = [k](const rvec& x) { return rmat::Constant(1, 1, -k * k * std::cos(k * x(0))); };
  m.holonomy = {std::move(hol)};
  return m;
}

// f = cos x + a cos y on the flat torus.
inline ManifoldModel torus_model(cmat hol_x = cmat::Identity(1, 1), cmat hol_y = cmat::Identity(1, 1), double a = 1.3) {
  ManifoldModel m;
  m.kind = ManifoldKind::torus2d;
  m.name = "torus cos sum";
  m.f = [a](const rvec& x) { return std::cos(x(0)) + a * std::cos(x(1)); };
  m.grad = [a](const rvec& x) {
    rvec g(2);
    g << -std::sin(x(0)), -a * std::sin(x(1));
    return g;
  };
  m.hess = [a](const rvec& x) {
    rmat H = rmat::Zero(2, 2);
    H(0, 0) = -std::cos(x(0));
    H(1, 1) = -a * std::cos(x(1));
    return H;
  };
  m.holonomy = {std::move(hol_x), std::move(hol_y)};
  return m;
}

struct MorseCritical {
  rvec x;          // representative in [0, 2 pi)^d
  int index = 0;
  double value = 0;
  rmat unstable;   // oriented basis of the unstable space (columns)
  rmat stable;
};

namespace detail {

inline double wrap_angle(double t) {
  double r = std::fmod(t, 2 * pi);
  return r < 0 ? r + 2 * pi : r;
}

inline double periodic_distance(const rvec& a, const rvec& b) {
  double s = 0;
  for (int i = 0; i < a.size(); ++i) {
    double d = std::abs(wrap_angle(a(i) - b(i)));
    d = std::min(d, 2 * pi - d);
    s += d * d;
  }
  return std::sqrt(s);
}

// Eigenvectors normalised so their largest-magnitude entry is positive.
inline rvec canonical_sign(rvec v) {
  int i;
  v.cwiseAbs().maxCoeff(&i);
  return v(i) < 0 ? rvec(-v) : v;
}

}  // namespace detail

// All critical points by seeded Newton (256 seeds on the circle, 64 x 64 on the
// torus), deduplicated mod 2 pi and sorted by (index, position).
inline std::vector<MorseCritical> fiber_criticals(const ManifoldModel& m) {
  validate(m);
  const int d = m.dim();
  const int per_axis = d == 1 ? 256 : 64;
  std::vector<rvec> seeds;
  if (d == 1) {
    for (int i = 0; i < per_axis; ++i) seeds.push_back(rvec::Constant(1, 2 * pi * (i + 0.37) / per_axis));
  } else {
    for (int i = 0; i < per_axis; ++i)
      for (int j = 0; j < per_axis; ++j) {
        rvec s(2);
        s << 2 * pi * (i + 0.37) / per_axis, 2 * pi * (j + 0.61) / per_axis;
        seeds.push_back(s);
      }
  }
  std::vector<MorseCritical> out;
  for (const rvec& s0 : seeds) {
    rvec x = s0;
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      rvec g = m.grad(x);
      if (g.norm() < 1e-13) {
        ok = true;
        break;
      }
      rmat H = m.hess(x);
      Eigen::JacobiSVD<rmat> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
      rvec sv = svd.singularValues();
      rvec step = rvec::Zero(d);
      for (int i = 0; i < d; ++i)
        if (sv(i) > 1e-12 * std::max(1.0, sv(0)))
          step += svd.matrixV().col(i) * (svd.matrixU().col(i).dot(g) / sv(i));
      if (step.norm() > 0.5) step *= 0.5 / step.norm();
      x -= step;
    }
    if (!ok) continue;
    for (int i = 0; i < d; ++i) x(i) = detail::wrap_angle(x(i));
    bool dup = false;
    for (const auto& c : out)
      if (detail::periodic_distance(c.x, x) < 1e-6) dup = true;
    if (dup) continue;
    MorseCritical c;
    c.x = x;
    c.value = m.f(x);
    Eigen::SelfAdjointEigenSolver<rmat> es(m.hess(x));
    double mn = es.eigenvalues().cwiseAbs().minCoeff();
    if (mn < 1e-8) {
      std::ostringstream os;
      os << "degenerate critical point at (" << x.transpose() << ")";
      throw Error(ErrorKind::degenerate_model, os.str());
    }
    std::vector<rvec> un, st;
    for (int i = 0; i < d; ++i)
      (es.eigenvalues()(i) < 0 ? un : st).push_back(detail::canonical_sign(es.eigenvectors().col(i)));
    c.index = static_cast<int>(un.size());
    c.unstable.resize(d, c.index);
    for (int i = 0; i < c.index; ++i) c.unstable.col(i) = un[i];
    c.stable.resize(d, d - c.index);
    for (int i = 0; i < d - c.index; ++i) c.stable.col(i) = st[i];
    // a top-dimensional unstable space carries the ambient orientation
    if (c.index == d && d > 1 && c.unstable.determinant() < 0) c.unstable.col(d - 1) *= -1;
    out.push_back(c);
  }
  std::sort(out.begin(), out.end(), [](const MorseCritical& a, const MorseCritical& b) {
    if (a.index != b.index) return a.index < b.index;
    for (int i = 0; i < a.x.size(); ++i)
      if (a.x(i) != b.x(i)) return a.x(i) < b.x(i);
    return false;
  });
  return out;
}

struct FlowLine {
  int from = -1, to = -1;  // indices into the critical list; from has the higher index
  int sign = 0;
  cmat transport;          // parallel transport of F along the line, from -> to
  std::vector<int> winding;
};

namespace detail {

// Transport along a path on the universal cover from a to b.
inline cmat transport_between(const ManifoldModel& m, const rvec& a, const rvec& b, std::vector<int>* wind = nullptr) {
  cmat P = cmat::Identity(m.rank(), m.rank());
  if (wind) wind->assign(m.dim(), 0);
  for (int i = 0; i < m.dim(); ++i) {
    long w = static_cast<long>(std::floor((b(i) - m.seam) / (2 * pi))) -
             static_cast<long>(std::floor((a(i) - m.seam) / (2 * pi)));
    if (wind) (*wind)[i] = static_cast<int>(w);
    cmat H = w >= 0 ? m.holonomy[i] : cmat(m.holonomy[i].adjoint());
    for (long k = 0; k < std::abs(w); ++k) P = H * P;
  }
  return P;
}

struct ShotResult {
  rvec end;     // unwrapped end point
  int hit = -1; // critical point reached
};

// Unit-speed flow of -grad f (dir = -1) or +grad f (dir = +1) from x0 until a
// 1e-4 ball around some critical point other than `skip` is entered.
inline ShotResult shoot(const ManifoldModel& m, const std::vector<MorseCritical>& crit, int skip, const rvec& x0,
                        int dir) {
  auto rhs = [&](const rvec& x) {
    rvec g = m.grad(x);
    double n = g.norm();
    return rvec(dir * g / std::max(n, 1e-300));
  };
  auto dist_min = [&](const rvec& x, int* which) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(crit.size()); ++i) {
      if (i == skip) continue;
      double dd = periodic_distance(x, crit[i].x);
      if (dd < best) {
        best = dd;
        if (which) *which = i;
      }
    }
    return best;
  };
  auto event = [&](const rvec& x) { return dist_min(x, nullptr) - 1e-4; };
  auto abort = [](const rvec&) { return false; };
  OdeOptions opt;
  opt.rtol = 1e-10;
  opt.atol = 1e-12;
  opt.h0 = 1e-3;
  opt.hmax = 0.05;
  opt.t_end = 100.0;
  OdeResult r = dopri45(rhs, x0, event, abort, opt);
  ShotResult s;
  s.end = r.y;
  if (r.status == OdeStatus::event) dist_min(r.y, &s.hit);
  return s;
}

}  // namespace detail

// Flow lines from p (index k) to q (index k-1). One-dimensional unstable
// spaces are shot forward from p; otherwise the one-dimensional stable space
// of q is shot backward. The sign compares (flow direction, orientation of
// the unstable space at q) with the chosen orientation at p.
inline std::vector<FlowLine> flow_lines(const ManifoldModel& m, const std::vector<MorseCritical>& crit, int p, int q) {
  const MorseCritical& P = crit[p];
  const MorseCritical& Q = crit[q];
  require(P.index == Q.index + 1, ErrorKind::invalid_argument, "flow lines need adjacent indices");
  const int d = m.dim();
  const double eps = 1e-6;
  std::vector<FlowLine> out;
  auto fail = [&](int hit) {
    std::ostringstream os;
    os << "flow line from critical point " << p << " grazes critical point " << hit << " (pair " << p << ", " << q
       << ")";
    throw Error(ErrorKind::non_transversal, os.str());
  };
  if (P.index == 1) {
    rvec e = P.unstable.col(0);
    for (int s : {+1, -1}) {
      rvec x0 = P.x + s * eps * e;
      auto shot = detail::shoot(m, crit, p, x0, -1);
      if (shot.hit < 0) continue;
      if (crit[shot.hit].index >= P.index) fail(shot.hit);
      if (shot.hit != q) continue;
      FlowLine fl;
      fl.from = p;
      fl.to = q;
      // q is a minimum here; its unstable space is a point
      fl.sign = s;
      // continue the lift from the unwrapped landing point to the exact target
      rvec target = shot.end;
      for (int i = 0; i < d; ++i) target(i) += std::remainder(Q.x(i) - shot.end(i), 2 * pi);
      fl.transport = detail::transport_between(m, P.x, target, &fl.winding);
      out.push_back(fl);
    }
    return out;
  }
  require(d - Q.index == 1, ErrorKind::invalid_argument, "flow lines need a one-dimensional unstable or stable space");
  rvec sdir = Q.stable.col(0);
  for (int s : {+1, -1}) {
    rvec x0 = Q.x + s * eps * sdir;
    auto shot = detail::shoot(m, crit, q, x0, +1);
    if (shot.hit < 0) continue;
    if (crit[shot.hit].index <= Q.index) fail(shot.hit);
    if (shot.hit != p) continue;
    FlowLine fl;
    fl.from = p;
    fl.to = q;
    rvec v = -s * sdir;  // direction of motion arriving at q
    rmat B(d, d);
    B.col(0) = v;
    for (int i = 0; i < Q.index; ++i) B.col(1 + i) = Q.unstable.col(i);
    double ref = P.unstable.determinant();
    fl.sign = (B.determinant() * ref > 0) ? 1 : -1;
    rvec start = shot.end;
    for (int i = 0; i < d; ++i) start(i) += std::remainder(P.x(i) - shot.end(i), 2 * pi);
    // shot ran q -> p on the cover; transport p -> q is the inverse
    fl.transport = detail::transport_between(m, start, Q.x, &fl.winding);
    out.push_back(fl);
  }
  return out;
}

struct MorseComplexData {
  ManifoldModel model;
  std::vector<MorseCritical> criticals;
  std::vector<FlowLine> flows;
  std::vector<std::vector<int>> by_index;  // critical indices per Morse index
  GradedComplex complex;
};

// d: V^{k-1} -> V^k with block (p, q) = sum over lines p -> q of n_gamma times
// the transport of F from q back to p, the dual of the flow-line sum.
inline MorseComplexData build_complex(const ManifoldModel& m) {
  MorseComplexData D;
  D.model = m;
  D.criticals = fiber_criticals(m);
  const int d = m.dim(), r = m.rank();
  D.by_index.assign(d + 1, {});
  for (int i = 0; i < static_cast<int>(D.criticals.size()); ++i) D.by_index[D.criticals[i].index].push_back(i);
  std::vector<std::pair<int, int>> pairs;
  for (int k = 1; k <= d; ++k)
    for (int p : D.by_index[k])
      for (int q : D.by_index[k - 1]) pairs.push_back({p, q});
  std::vector<std::vector<FlowLine>> lines(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) { lines[i] = flow_lines(m, D.criticals, pairs[i].first, pairs[i].second); });
  for (auto& v : lines) D.flows.insert(D.flows.end(), v.begin(), v.end());

  std::vector<int> ranks(d + 1);
  std::map<int, int> slot;  // critical -> position inside its degree
  for (int k = 0; k <= d; ++k) {
    ranks[k] = static_cast<int>(D.by_index[k].size()) * r;
    for (int j = 0; j < static_cast<int>(D.by_index[k].size()); ++j) slot[D.by_index[k][j]] = j;
  }
  std::vector<cmat> dk(d);
  for (int k = 0; k < d; ++k) dk[k] = cmat::Zero(ranks[k + 1], ranks[k]);
  for (const auto& fl : D.flows) {
    int k = D.criticals[fl.to].index;
    dk[k].block(slot[fl.from] * r, slot[fl.to] * r, r, r) += static_cast<double>(fl.sign) * fl.transport.inverse();
  }
  for (int k = 0; k + 1 < d; ++k) {
    cmat dd = dk[k + 1] * dk[k];
    for (int a = 0; a < static_cast<int>(D.by_index[k + 2].size()); ++a)
      for (int b = 0; b < static_cast<int>(D.by_index[k].size()); ++b)
        if (dd.block(a * r, b * r, r, r).norm() > 1e-9) {
          std::ostringstream os;
          os << "d^2 != 0 between critical points " << D.by_index[k + 2][a] << " and " << D.by_index[k][b]
             << " through degree " << k + 1;
          throw Error(ErrorKind::invalid_complex, os.str());
        }
  }
  D.complex = make_complex(ranks, dk);
  return D;
}

inline double combinatorial_torsion(const MorseComplexData& D) { return finite_torsion(D.complex); }

// ---------------------------------------------------------------------------
// Double suspension.

struct SuspendedComplex {
  GradedComplex complex;  // degrees shifted up by N, zero below
  int N = 0;
  double T = 1;
  double gaussian_factor = 1;  // (2T/pi)^{N/2}, the T-independent normalisation
  EulerData euler;
};

inline SuspendedComplex suspend(const GradedComplex& c, int N, double T = 1.0) {
  require(N >= 2 && N % 2 == 0, ErrorKind::invalid_argument, "suspension needs an even N >= 2");
  require(T > 0, ErrorKind::invalid_argument, "T must be positive");
  SuspendedComplex s;
  s.N = N;
  s.T = T;
  s.gaussian_factor = std::pow(2 * T / pi, N / 2.0);
  std::vector<int> ranks(N, 0);
  ranks.insert(ranks.end(), c.ranks.begin(), c.ranks.end());
  std::vector<cmat> d, G;
  for (int k = 0; k < N; ++k) {
    G.push_back(cmat(0, 0));
    d.push_back(cmat::Zero(ranks[k + 1], 0));
  }
  d.insert(d.end(), c.d.begin(), c.d.end());
  G.insert(G.end(), c.G.begin(), c.G.end());
  s.complex = make_complex(ranks, d, G);
  s.euler = euler_chars(s.complex);
  return s;
}

inline int suspended_index(int index, int N) {
  require(N >= 2 && N % 2 == 0, ErrorKind::invalid_argument, "suspension needs an even N >= 2");
  return index + N;
}

// Torsion change under an even shift: (N/2) sum_k (-1)^k log det' Delta_k,
// which telescopes to zero.
inline double suspension_torsion_shift(const GradedComplex& c, int N) {
  auto ds = adjoints(c);
  double s = 0;
  for (int k = 0; k <= c.top(); ++k) {
    DegreeSpectrum sp = laplacian_spectrum(c, k, ds);
    KernelSplit ks = split_kernel(sp.values);
    double ld = 0;
    for (int i : ks.nonkernel) ld += std::log(sp.values(i));
    s += ((k % 2 == 0) ? 1.0 : -1.0) * ld;
  }
  return 0.5 * N * s;
}

struct GaussianProbe {
  double heat_T = 0, heat_Tp = 0;  // integrals with the (2 pi T)^{-N/2} factor
  double prob_T = 0, prob_Tp = 0;    // with (2T/pi)^{N/2}
  double ratio_heat = 0, ratio_prob = 0;
  double predicted_heat_ratio = 0;  // (T'/T)^N
  std::string invariant;             // which normalisation is T-independent
};

// Integral of e^{-2T|x|^2} times each normalisation over R^N, by a trapezoid
// rule in one variable raised to the N-th power.
inline GaussianProbe gaussian_normalization_probe(int N, double T, double Tp) {
  require(N >= 2 && N % 2 == 0 && T > 0 && Tp > 0, ErrorKind::invalid_argument, "need even N and positive T");
  auto line = [](double t) {
    const double L = 10.0 / std::sqrt(t);
    const int n = 4001;
    const double h = 2 * L / (n - 1);
    double s = 0;
    for (int i = 0; i < n; ++i) {
      double x = -L + i * h;
      s += std::exp(-2 * t * x * x) * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
    }
    return s * h;
  };
  GaussianProbe g;
  double IT = std::pow(line(T), N), ITp = std::pow(line(Tp), N);
  g.heat_T = IT / std::pow(2 * pi * T, N / 2.0);
  g.heat_Tp = ITp / std::pow(2 * pi * Tp, N / 2.0);
  g.prob_T = IT * std::pow(2 * T / pi, N / 2.0);
  g.prob_Tp = ITp * std::pow(2 * Tp / pi, N / 2.0);
  g.ratio_heat = g.heat_T / g.heat_Tp;
  g.ratio_prob = g.prob_T / g.prob_Tp;
  g.predicted_heat_ratio = std::pow(Tp / T, N);
  bool pp = std::abs(g.ratio_heat - 1) < 1e-10, pr = std::abs(g.ratio_prob - 1) < 1e-10;
  g.invariant = pp && pr ? "both" : pr ? "probability" : pp ? "heat" : "neither";
  return g;
}

// ---------------------------------------------------------------------------
// Ball removal bookkeeping.

struct BallRanks {
  std::vector<int> computed;
  std::vector<int> expected;
  bool match = false;
};

// Suspends the Morse complex by N and, with a ball removed, adds three rank-m
// generators: v1 in degree 1 and a pair (v2, w) in degrees (N, N+1) joined by
// d v2 = c w. Expected ranks: H^{l-N} of the base for l >= N, 0 for 1 < l < N,
// m for l = 1, 0 for l = 0.
inline BallRanks ball_removed_ranks(const MorseComplexData& D, int N, bool ball = true, cplx c = 1.0) {
  SuspendedComplex s = suspend(D.complex, N);
  const int m = D.model.rank();
  GradedComplex g = s.complex;
  std::vector<int> base_h = cohomology_ranks_elimination(D.complex);
  if (ball) {
    int top = std::max(g.top(), N + 1);
    std::vector<int> ranks = g.ranks;
    ranks.resize(top + 1, 0);
    std::vector<int> extra(top + 1, 0);
    extra[1] += m;
    extra[N] += m;
    extra[N + 1] += m;
    std::vector<int> nr(top + 1);
    for (int k = 0; k <= top; ++k) nr[k] = ranks[k] + extra[k];
    std::vector<cmat> d(top);
    for (int k = 0; k < top; ++k) {
      d[k] = cmat::Zero(nr[k + 1], nr[k]);
      if (k < g.top()) d[k].topLeftCorner(ranks[k + 1], ranks[k]) = g.d[k];
    }
    // new generators sit after the old ones in their degree
    d[N].block(ranks[N + 1], ranks[N], m, m) = c * cmat::Identity(m, m);
    g = make_complex(nr, d);
  }
  BallRanks br;
  br.computed = cohomology_ranks_elimination(g);
  br.expected.assign(br.computed.size(), 0);
  for (int l = 0; l < static_cast<int>(br.expected.size()); ++l) {
    if (l >= N) br.expected[l] = (l - N < static_cast<int>(base_h.size())) ? base_h[l - N] : 0;
    else if (l == 1 && ball) br.expected[l] = m;
  }
  br.match = br.computed == br.expected;
  return br;
}

// ---------------------------------------------------------------------------
// Twisted circle: combinatorial against analytic torsion.

// d/ds zeta_H(s, a) at s = 0 by Euler-Maclaurin with M direct terms.
inline double hurwitz_zeta_derivative_at_zero(double a, int M = 24) {
  require(a > 0, ErrorKind::invalid_argument, "Hurwitz parameter must be positive");
  static const double B[] = {1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730, 7.0 / 6};
  double s = 0;
  for (int n = 0; n < M; ++n) s -= std::log(n + a);
  const double x = M + a;
  s += x * std::log(x) - x - 0.5 * std::log(x);
  for (int k = 1; k <= 7; ++k) s += B[k - 1] / (2.0 * k * (2.0 * k - 1)) * std::pow(x, 1 - 2 * k);
  return s;
}

// Eigenvalues (n + alpha)^2, alpha = theta / 2 pi, of the twisted circle of
// length 2 pi: log det = -zeta'(0) with zeta(s) = zeta_H(2s, alpha) + zeta_H(2s, 1 - alpha).
inline double twisted_circle_logdet(double theta) {
  double alpha = theta / (2 * pi);
  alpha -= std::floor(alpha);
  require(alpha > 1e-12 && alpha < 1 - 1e-12, ErrorKind::non_acyclic, "trivial holonomy: the circle is not acyclic");
  return -2.0 * (hurwitz_zeta_derivative_at_zero(alpha) + hurwitz_zeta_derivative_at_zero(1 - alpha));
}

// Torsion (1/2) sum (-1)^k k log det Delta_k = -(1/2) log det Delta_1 on the circle.
inline double twisted_circle_analytic_torsion(double theta) { return -0.5 * twisted_circle_logdet(theta); }

struct CheegerMuller {
  double theta = 0;
  double combinatorial = 0, analytic_exact = 0, analytic_fem = 0;
  double gap_exact = 0, gap_fem = 0;
  int resolved = 0;  // FEM modes replacing exact ones
};

// P1 stiffness with lumped mass on the twisted circle. The lowest `modes`
// eigenvalues (at most N/8) are taken from the discrete operator, the rest of
// the determinant from the exact zeta value, so the error falls like h^2.
inline double twisted_circle_fem_torsion(double theta, int N, int* resolved = nullptr, int modes = 32) {
  const double h = 2 * pi / N;
  cmat K = cmat::Zero(N, N);
  const cplx z = std::polar(1.0, theta);
  for (int i = 0; i < N; ++i) {
    K(i, i) = 2.0 / (h * h);
    if (i + 1 < N) K(i, i + 1) = K(i + 1, i) = -1.0 / (h * h);
  }
  // u_{N} = z u_0 closes the ring
  K(N - 1, 0) += -z / (h * h);
  K(0, N - 1) += -std::conj(z) / (h * h);
  Eigen::SelfAdjointEigenSolver<cmat> es(K, Eigen::EigenvaluesOnly);
  double alpha = theta / (2 * pi);
  alpha -= std::floor(alpha);
  std::vector<double> exact;
  for (int n = -N; n <= N; ++n) exact.push_back((n + alpha) * (n + alpha));
  std::sort(exact.begin(), exact.end());
  const int R = std::min(modes, N / 8);
  double corr = 0;
  for (int i = 0; i < R; ++i) corr += std::log(es.eigenvalues()(i)) - std::log(exact[i]);
  if (resolved) *resolved = R;
  return -0.5 * (twisted_circle_logdet(theta) + corr);
}

inline CheegerMuller cheeger_muller_compare(double theta, int N_grid = 2000) {
  CheegerMuller cm;
  cm.theta = theta;
  cm.analytic_exact = twisted_circle_analytic_torsion(theta);
  MorseComplexData D = build_complex(circle_model(1.0, phase_holonomy(theta)));
  cm.combinatorial = combinatorial_torsion(D);
  cm.analytic_fem = twisted_circle_fem_torsion(theta, N_grid, &cm.resolved);
  cm.gap_exact = std::abs(cm.combinatorial - cm.analytic_exact);
  cm.gap_fem = std::abs(cm.analytic_fem - cm.analytic_exact);
  return cm;
}

}  // namespace tlab
