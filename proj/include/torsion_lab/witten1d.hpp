#pragma once

#include "core.hpp"
#include "profiles.hpp"

#include <Eigen/Sparse>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <limits>
#include <map>
#include <queue>
#include <random>

namespace tlab {

enum class Topology { circle, interval };
enum class Boundary { none, absolute, relative };

// central: second-order differences of -u'' + T^2 phi'^2 u -+ T phi'' u.
// complex: the discrete Witten complex d_T = e^{-T phi} d e^{T phi} on the
// node/edge cochains, with Delta_0 = d_T^t d_T and Delta_1 = d_T d_T^t.
enum class Scheme { central, complex };

inline const char* to_string(Boundary b) {
  switch (b) {
    case Boundary::none: return "none";
    case Boundary::absolute: return "absolute";
    case Boundary::relative: return "relative";
  }
  return "?";
}

struct Potential {
  std::string name;
  std::function<double(double)> f, df, d2f;
};

inline Potential zero_potential() {
  return {"zero", [](double) { return 0.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
}

// amp * cos(k s)
inline Potential cosine_potential(double k = 2.0, double amp = 1.0) {
  return {"cos", [=](double s) { return amp * std::cos(k * s); }, [=](double s) { return -amp * k * std::sin(k * s); },
          [=](double s) { return -amp * k * k * std::cos(k * s); }};
}

inline Potential quadratic_potential() {
  return {"quadratic", [](double s) { return 0.5 * s * s; }, [](double s) { return s; }, [](double) { return 1.0; }};
}

inline Potential cubic_potential() {
  return {"cubic", [](double s) { return s * s * s / 3.0; }, [](double s) { return s * s; },
          [](double s) { return 2.0 * s; }};
}

// Odd interface profile: p' = A (r - |s|) on 0.02 r <= |s| <= r, a smooth even
// cap of p' on |s| < 0.02 r, p = +-A r^2/2 for |s| >= r.
class InterfaceProfile {
 public:
  InterfaceProfile() = default;
  InterfaceProfile(double A, double r) : A_(A), r_(r) {
    require(A >= 0, ErrorKind::infeasible_profile, "interface amplitude must be >= 0");
    require(r > 0, ErrorKind::infeasible_profile, "interface half-width must be > 0");
    sigma_ = SmoothedTent(2 * r, 0.98 * r);
  }

  double A() const { return A_; }
  double r() const { return r_; }
  // p' stays in [C1 A, 2 C1 A] on the cap window.
  double C1() const { return 0.5 * r_; }

  Jet<double> eval(double s) const {
    if (A_ == 0) return {0, 0, 0};
    if (s >= r_) return {0.5 * A_ * r_ * r_, 0, 0};
    if (s <= -r_) return {-0.5 * A_ * r_ * r_, 0, 0};
    Jet<double> j = sigma_.eval(s + r_);
    return {A_ * (sigma_.integral(s + r_) - 0.5 * r_ * r_), A_ * j.v, A_ * j.d1};
  }

 private:
  double A_ = 0, r_ = 0.1;
  SmoothedTent sigma_{0.2, 0.098};
};

inline InterfaceProfile build_p_profile(double A, double r) { return InterfaceProfile(A, r); }

struct PProfileReport {
  double odd_residual = 0;    // max |p(s) + p(-s)|
  double plateau_residual = 0;  // max |p - A r^2/2| on [r, 2r]
  double window_min = 0, window_max = 0;  // p' on [0, 0.02 r]
  double C1 = 0;
  bool ok = false;
  std::string violated;
};

// Sampled check of the four profile clauses; throws infeasible_profile naming
// the first violated clause when throw_on_fail is set.
inline PProfileReport verify_p_profile(const InterfaceProfile& p, int samples = 1000, bool throw_on_fail = true) {
  PProfileReport rep;
  const double A = p.A(), r = p.r();
  rep.C1 = p.C1();
  rep.window_min = std::numeric_limits<double>::infinity();
  rep.window_max = -rep.window_min;
  for (int i = 0; i <= samples; ++i) {
    double s = 2.5 * r * i / samples;
    rep.odd_residual = std::max(rep.odd_residual, std::abs(p.eval(s).v + p.eval(-s).v));
    double t = r + r * i / samples;
    rep.plateau_residual = std::max(rep.plateau_residual, std::abs(p.eval(t).v - 0.5 * A * r * r));
    double w = 0.02 * r * i / samples;
    double d = p.eval(w).d1;
    rep.window_min = std::min(rep.window_min, d);
    rep.window_max = std::max(rep.window_max, d);
  }
  const double scale = 1e-12 * std::max(1.0, A * r * r);
  if (A == 0) {
    rep.ok = rep.odd_residual == 0 && rep.plateau_residual == 0;
    if (!rep.ok) rep.violated = "p vanishes at A = 0";
  } else if (rep.odd_residual > scale) {
    rep.violated = "oddness";
  } else if (rep.plateau_residual > scale) {
    rep.violated = "plateau A r^2/2 on [r, 2r]";
  } else if (rep.window_min < rep.C1 * A * (1 - 1e-12) || rep.window_max > 2 * rep.C1 * A * (1 + 1e-12)) {
    rep.violated = "derivative window C1 A <= p' <= 2 C1 A near 0";
  } else {
    rep.ok = true;
  }
  if (!rep.ok && throw_on_fail) throw Error(ErrorKind::infeasible_profile, rep.violated);
  return rep;
}

// Interface at `center`; sign +1 means p rises across it, -1 falls.
struct Interface {
  double center = 0;
  int sign = 1;
};

struct WittenProblem1D {
  Topology topology = Topology::circle;
  double a = 0, b = 2 * pi;  // circle of length b - a, or the interval [a, b]
  int N = 256;
  Potential f = zero_potential();
  double T = 1.0;
  double A = 0.0;
  double r = 0.1;
  std::vector<Interface> interfaces;
  Boundary bc = Boundary::none;
  int form_degree = 0;
  Scheme scheme = Scheme::central;

  double h() const {
    if (topology == Topology::circle) return (b - a) / N;
    return scheme == Scheme::central ? (b - a) / N : (b - a) / (N - 1);
  }
  // Circle and the complex scheme put nodes at a + j h; the central scheme on an
  // interval is cell-centred.
  double node(int j) const {
    if (topology == Topology::interval && scheme == Scheme::central) return a + (j + 0.5) * h();
    return a + j * h();
  }
};

// phi = f + sum_i sign_i p_A(s - Y_i) with value, first and second derivative.
inline Jet<double> phi_jet(const WittenProblem1D& pb, const InterfaceProfile& p, double s) {
  Jet<double> j{pb.f.f(s), pb.f.df(s), pb.f.d2f(s)};
  for (const auto& I : pb.interfaces) {
    Jet<double> q = p.eval(s - I.center);
    j.v += I.sign * q.v;
    j.d1 += I.sign * q.d1;
    j.d2 += I.sign * q.d2;
  }
  return j;
}

inline void validate(const WittenProblem1D& pb, bool check_resolution = true) {
  require(pb.N >= 4, ErrorKind::invalid_argument, "grid needs at least 4 nodes");
  require(pb.b > pb.a, ErrorKind::invalid_argument, "empty domain");
  require(pb.T > 0, ErrorKind::invalid_argument, "T must be positive");
  require(pb.form_degree == 0 || pb.form_degree == 1, ErrorKind::invalid_argument, "form degree must be 0 or 1");
  if (pb.topology == Topology::circle)
    require(pb.bc == Boundary::none, ErrorKind::invalid_argument, "boundary condition given on a circle");
  else
    require(pb.bc != Boundary::none, ErrorKind::invalid_argument, "interval needs an absolute or relative condition");
  for (const auto& I : pb.interfaces)
    require(I.center - pb.r > pb.a && I.center + pb.r < pb.b, ErrorKind::invalid_argument,
            "interface window must lie inside the domain");
  InterfaceProfile p(pb.A, pb.r);
  if (!pb.interfaces.empty()) verify_p_profile(p);
  if (check_resolution) {
    double m = 0;
    for (int j = 0; j < pb.N; ++j) m = std::max(m, std::abs(phi_jet(pb, p, pb.node(j)).d1));
    require(pb.h() <= 0.1 / (pb.T * m + 1) * (1 + 1e-12), ErrorKind::invalid_argument,
            "grid does not resolve the Agmon length: need h <= 0.1/(T max|phi'| + 1)");
  }
}

using SpMat = Eigen::SparseMatrix<double>;

// Discrete Witten differential d_T: node cochains -> edge cochains for the
// complex scheme. Relative condition drops the two end nodes.
inline SpMat witten_differential(const WittenProblem1D& pb) {
  require(pb.scheme == Scheme::complex, ErrorKind::invalid_argument, "differential exists only for the complex scheme");
  InterfaceProfile p(pb.A, pb.r);
  const int N = pb.N;
  const double h = pb.h();
  std::vector<double> phi(N);
  for (int j = 0; j < N; ++j) phi[j] = phi_jet(pb, p, pb.node(j)).v;
  const bool circ = pb.topology == Topology::circle;
  const bool rel = pb.bc == Boundary::relative;
  const int E = circ ? N : N - 1;
  auto col = [&](int j) { return rel ? j - 1 : j; };
  const int cols = rel ? N - 2 : N;
  std::vector<Eigen::Triplet<double>> t;
  for (int e = 0; e < E; ++e) {
    int j0 = e, j1 = (e + 1) % N;
    double a = std::exp(0.5 * pb.T * (phi[j1] - phi[j0]));
    if (!(rel && j0 == 0)) t.emplace_back(e, col(j0), -1.0 / (a * h));
    if (!(rel && j1 == N - 1)) t.emplace_back(e, col(j1), a / h);
  }
  SpMat D(E, cols);
  D.setFromTriplets(t.begin(), t.end());
  return D;
}

// Witten Laplacian on forms of pb.form_degree. Symmetric by construction.
inline SpMat assemble(const WittenProblem1D& pb, bool check_resolution = true) {
  validate(pb, check_resolution);
  if (pb.scheme == Scheme::complex) {
    SpMat D = witten_differential(pb);
    SpMat M = pb.form_degree == 0 ? SpMat(D.transpose() * D) : SpMat(D * D.transpose());
    M.makeCompressed();
    return M;
  }
  InterfaceProfile p(pb.A, pb.r);
  const int N = pb.N;
  const double h = pb.h(), ih2 = 1.0 / (h * h);
  const double sgn = pb.form_degree == 0 ? -1.0 : 1.0;
  std::vector<Eigen::Triplet<double>> t;
  for (int j = 0; j < N; ++j) {
    Jet<double> q = phi_jet(pb, p, pb.node(j));
    double diag = 2 * ih2 + pb.T * pb.T * q.d1 * q.d1 + sgn * pb.T * q.d2;
    if (pb.topology == Topology::interval && (j == 0 || j == N - 1)) {
      // ghost cell: Neumann mirrors, Dirichlet flips; 1-forms swap the two
      bool dirichlet = (pb.bc == Boundary::relative) == (pb.form_degree == 0);
      diag += dirichlet ? ih2 : -ih2;
    }
    t.emplace_back(j, j, diag);
    if (j + 1 < N) {
      t.emplace_back(j, j + 1, -ih2);
      t.emplace_back(j + 1, j, -ih2);
    } else if (pb.topology == Topology::circle) {
      t.emplace_back(j, 0, -ih2);
      t.emplace_back(0, j, -ih2);
    }
  }
  SpMat M(N, N);
  M.setFromTriplets(t.begin(), t.end());
  return M;
}

struct SpectrumResult {
  std::vector<double> eigenvalues;
  rmat eigenvectors;  // columns, unit Euclidean norm
  std::vector<double> residuals;  // ||M v - lambda v||
  double residual_tol = 0;
  int kernel_dim = 0;
  int iterations = 0;
  double T = 0, A = 0;
  Boundary bc = Boundary::none;
  int N = 0;
};

inline double inf_norm(const SpMat& M) {
  rvec rs = rvec::Zero(M.rows());
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it) rs(it.row()) += std::abs(it.value());
  return M.rows() ? rs.maxCoeff() : 0.0;
}

// Eigenvalues below 1e-10 of the largest computed one count as kernel.
inline int numerical_kernel_dim(const std::vector<double>& ev) {
  if (ev.empty()) return 0;
  double top = std::max(1.0, ev.back());
  int n = 0;
  for (double l : ev)
    if (l <= 1e-10 * top) ++n;
  return n;
}

// Lowest k eigenpairs of a symmetric positive semidefinite sparse matrix by
// shift-inverted block subspace iteration with Rayleigh-Ritz. `refine` (if
// given) recomputes an eigenvalue from its vector, e.g. as ||d_T v||^2.
inline SpectrumResult lowest_eigenpairs(const SpMat& M, int k, const std::function<double(const rvec&)>& refine = {},
                                        int max_iter = 2000) {
  const int n = static_cast<int>(M.rows());
  require(k >= 1 && k <= n, ErrorKind::invalid_argument, "requested eigenpair count out of range");
  if (n <= 400) {
    Eigen::SelfAdjointEigenSolver<rmat> es{rmat(M)};
    SpectrumResult res;
    res.eigenvectors = es.eigenvectors().leftCols(k);
    for (int i = 0; i < k; ++i) {
      rvec v = res.eigenvectors.col(i);
      double l = refine ? refine(v) : es.eigenvalues()(i);
      res.eigenvalues.push_back(l);
      res.residuals.push_back((M * v - es.eigenvalues()(i) * v).norm());
    }
    res.residual_tol = std::max(1e-8, 64 * std::numeric_limits<double>::epsilon() * inf_norm(M));
    res.kernel_dim = numerical_kernel_dim(res.eigenvalues);
    return res;
  }
  const int p = std::min(n, 2 * k + 8);
  const double mnorm = inf_norm(M);
  const double shift = std::max(1e-12, 1e-9 * mnorm);
  SpMat S = M;
  for (int i = 0; i < n; ++i) S.coeffRef(i, i) += shift;
  Eigen::SimplicialLDLT<SpMat> ldlt(S);
  require(ldlt.info() == Eigen::Success, ErrorKind::solver, "shifted factorization failed");
  std::mt19937_64 rng(0x51EC7);
  std::uniform_real_distribution<double> U(-1, 1);
  rmat V(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) V(i, j) = U(rng);
  const double tol = std::max(1e-10, 16 * std::numeric_limits<double>::epsilon() * mnorm);
  SpectrumResult res;
  res.residual_tol = std::max(1e-8, 64 * std::numeric_limits<double>::epsilon() * mnorm);
  rvec theta;
  double prev = std::numeric_limits<double>::infinity();
  int stall = 0;
  int it = 0;
  for (; it < max_iter; ++it) {
    rmat X = ldlt.solve(V);
    Eigen::HouseholderQR<rmat> qr(X);
    rmat Q = qr.householderQ() * rmat::Identity(n, p);
    rmat MQ = M * Q;
    rmat H = Q.transpose() * MQ;
    H = 0.5 * (H + H.transpose());
    Eigen::SelfAdjointEigenSolver<rmat> es(H);
    V = Q * es.eigenvectors();
    theta = es.eigenvalues();
    rmat R = MQ * es.eigenvectors() - V * theta.asDiagonal();
    double worst = 0;
    for (int i = 0; i < k; ++i) worst = std::max(worst, R.col(i).norm());
    if (worst <= tol) break;
    if (worst >= 0.999 * prev) {
      if (++stall > 20) break;
    } else {
      stall = 0;
    }
    prev = std::min(prev, worst);
  }
  res.iterations = it + 1;
  for (int i = 0; i < k; ++i) {
    rvec v = V.col(i).normalized();
    res.residuals.push_back((M * v - theta(i) * v).norm());
    res.eigenvalues.push_back(refine ? refine(v) : theta(i));
  }
  res.eigenvectors = V.leftCols(k);
  for (int i = 0; i < k; ++i) res.eigenvectors.col(i).normalize();
  res.kernel_dim = numerical_kernel_dim(res.eigenvalues);
  return res;
}

// Lowest k eigenpairs of the assembled problem. For the complex scheme the
// eigenvalue is read back as ||d_T v||^2 (or ||d_T^t v||^2), which keeps
// exponentially small eigenvalues accurate.
inline SpectrumResult spectrum(const WittenProblem1D& pb, int k, bool check_resolution = true) {
  require(k >= 1 && k <= std::max(1, pb.N / 4), ErrorKind::invalid_argument, "spectrum needs k <= N/4");
  SpMat M = assemble(pb, check_resolution);
  std::function<double(const rvec&)> refine;
  SpMat D;
  if (pb.scheme == Scheme::complex) {
    D = witten_differential(pb);
    if (pb.form_degree == 0)
      refine = [&D](const rvec& v) { return (D * v).squaredNorm(); };
    else
      refine = [&D](const rvec& v) { return (D.transpose() * v).squaredNorm(); };
  }
  SpectrumResult res = lowest_eigenpairs(M, k, refine);
  for (int i = 0; i < k; ++i)
    require(res.residuals[i] <= res.residual_tol, ErrorKind::solver,
            "eigensolver did not converge after " + std::to_string(res.iterations) + " iterations");
  res.T = pb.T;
  res.A = pb.A;
  res.bc = pb.bc;
  res.N = pb.N;
  return res;
}

// ---------------------------------------------------------------------------
// Extended precision for exponentially small eigenvalues.

namespace detail {

using mpfloat = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<200>,
                                              boost::multiprecision::et_off>;

template <typename S>
struct Tridiag {
  std::vector<S> d, e;  // diagonal, super-diagonal (e[i] couples i and i+1)
  S corner = S(0);      // couples 0 and n-1 when periodic
  bool periodic = false;
  int size() const { return static_cast<int>(d.size()); }
  std::vector<S> apply(const std::vector<S>& x) const {
    const int n = size();
    std::vector<S> y(n);
    for (int i = 0; i < n; ++i) {
      S s = d[i] * x[i];
      if (i > 0) s += e[i - 1] * x[i - 1];
      if (i + 1 < n) s += e[i] * x[i + 1];
      y[i] = s;
    }
    if (periodic) {
      y[0] += corner * x[n - 1];
      y[n - 1] += corner * x[0];
    }
    return y;
  }
};

// Solves (M + sigma) x = b; the periodic case goes through Sherman-Morrison.
template <typename S>
std::vector<S> tridiag_solve(const Tridiag<S>& M, S sigma, const std::vector<S>& b) {
  const int n = M.size();
  auto thomas = [&](std::vector<S> diag, std::vector<S> rhs) {
    std::vector<S> c(n);
    for (int i = 0; i < n; ++i) {
      if (i > 0) {
        S m = M.e[i - 1] / diag[i - 1];
        diag[i] -= m * c[i - 1];
        rhs[i] -= m * rhs[i - 1];
      }
      c[i] = (i + 1 < n) ? M.e[i] : S(0);
    }
    std::vector<S> x(n);
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = (rhs[i] - c[i] * x[i + 1]) / diag[i];
    return x;
  };
  std::vector<S> diag(n);
  for (int i = 0; i < n; ++i) diag[i] = M.d[i] + sigma;
  if (!M.periodic) return thomas(diag, b);
  // M + sigma = B + u u^t with u = (g, 0..0, corner/g)
  S g = -diag[0];
  std::vector<S> db = diag;
  db[0] -= g;
  db[n - 1] -= M.corner * M.corner / g;
  std::vector<S> u(n, S(0));
  u[0] = g;
  u[n - 1] = M.corner;
  std::vector<S> y = thomas(db, b), z = thomas(db, u);
  S fac = (y[0] + M.corner * y[n - 1] / g) / (S(1) + z[0] + M.corner * z[n - 1] / g);
  for (int i = 0; i < n; ++i) y[i] -= fac * z[i];
  return y;
}

// Cyclic Jacobi for small symmetric matrices in any real scalar type.
template <typename S>
void jacobi_eigen(std::vector<std::vector<S>>& H, std::vector<std::vector<S>>& U) {
  const int m = static_cast<int>(H.size());
  U.assign(m, std::vector<S>(m, S(0)));
  for (int i = 0; i < m; ++i) U[i][i] = S(1);
  for (int sweep = 0; sweep < 100; ++sweep) {
    S off = 0, tot = 0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        tot += H[i][j] * H[i][j];
        if (i != j) off += H[i][j] * H[i][j];
      }
    if (off <= tot * S("1e-380")) break;
    for (int p = 0; p < m; ++p)
      for (int q = p + 1; q < m; ++q) {
        if (H[p][q] == 0) continue;
        S th = (H[q][q] - H[p][p]) / (2 * H[p][q]);
        S t = (th >= 0 ? S(1) : S(-1)) / (abs(th) + sqrt(th * th + 1));
        S c = 1 / sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < m; ++k) {
          S hp = H[k][p], hq = H[k][q];
          H[k][p] = c * hp - s * hq;
          H[k][q] = s * hp + c * hq;
        }
        for (int k = 0; k < m; ++k) {
          S hp = H[p][k], hq = H[q][k];
          H[p][k] = c * hp - s * hq;
          H[q][k] = s * hp + c * hq;
        }
        for (int k = 0; k < m; ++k) {
          S up = U[k][p], uq = U[k][q];
          U[k][p] = c * up - s * uq;
          U[k][q] = s * up + c * uq;
        }
      }
  }
}

inline Tridiag<mpfloat> mp_operator(const WittenProblem1D& pb) {
  using S = mpfloat;
  Tridiag<S> M;
  const int N = pb.N;
  M.periodic = pb.topology == Topology::circle;
  if (pb.scheme == Scheme::central) {
    SpMat A = assemble(pb);
    M.d.resize(N);
    M.e.resize(N - 1);
    for (int i = 0; i < N; ++i) M.d[i] = S(A.coeff(i, i));
    for (int i = 0; i + 1 < N; ++i) M.e[i] = S(A.coeff(i, i + 1));
    if (M.periodic) M.corner = S(A.coeff(0, N - 1));
    return M;
  }
  validate(pb);
  require(pb.form_degree == 0 || pb.topology == Topology::circle, ErrorKind::invalid_argument,
          "extended-precision path covers 0-forms on intervals");
  InterfaceProfile p(pb.A, pb.r);
  const S h = S(pb.h()), ih2 = 1 / (h * h);
  std::vector<S> phi(N);
  for (int j = 0; j < N; ++j) phi[j] = S(phi_jet(pb, p, pb.node(j)).v);
  const int E = M.periodic ? N : N - 1;
  std::vector<S> a(E);
  for (int e = 0; e < E; ++e) a[e] = exp(S(pb.T) * (phi[(e + 1) % N] - phi[e]) / 2);
  if (pb.form_degree == 0) {
    // (d^t d)_{jj} = a_{j-1}^2 + a_j^{-2}, off-diagonal -1
    M.d.assign(N, S(0));
    M.e.assign(N - 1, -ih2);
    for (int e = 0; e < E; ++e) {
      M.d[e] += ih2 / (a[e] * a[e]);
      M.d[(e + 1) % N] += ih2 * a[e] * a[e];
    }
    if (M.periodic) M.corner = -ih2;
    if (pb.bc == Boundary::relative) {
      M.d = std::vector<S>(M.d.begin() + 1, M.d.end() - 1);
      M.e = std::vector<S>(M.e.begin() + 1, M.e.end() - 1);
    }
  } else {
    // (d d^t) on edges; edge e and e+1 share node e+1
    M.d.resize(E);
    M.e.resize(E - 1);
    for (int e = 0; e < E; ++e) M.d[e] = ih2 * (a[e] * a[e] + 1 / (a[e] * a[e]));
    for (int e = 0; e + 1 < E; ++e) M.e[e] = -ih2 * a[e] / a[e + 1];
    if (M.periodic) M.corner = -ih2 * a[E - 1] / a[0];
  }
  return M;
}

}  // namespace detail

// Lowest k eigenpairs in 200-digit arithmetic (block inverse iteration with a
// tiny shift and Rayleigh-Ritz). Values far below double epsilon relative to
// the operator norm come out with full relative accuracy.
inline SpectrumResult mp_spectrum(const WittenProblem1D& pb, int k, int max_iter = 40) {
  using S = detail::mpfloat;
  detail::Tridiag<S> M = detail::mp_operator(pb);
  const int n = M.size();
  const int p = std::min(n, k + 2);
  S mnorm = 0;
  for (int i = 0; i < n; ++i) mnorm = std::max(mnorm, abs(M.d[i]) + 2 * abs(i < n - 1 ? M.e[i] : M.corner));
  const S sigma = mnorm * S(1e-60);
  std::mt19937_64 rng(0xA6E0);
  std::uniform_real_distribution<double> U(-1, 1);
  std::vector<std::vector<S>> V(p, std::vector<S>(n));
  for (auto& v : V)
    for (auto& x : v) x = S(U(rng));
  auto dot = [n](const std::vector<S>& x, const std::vector<S>& y) {
    S s = 0;
    for (int i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
  };
  std::vector<S> theta(p), prev(p, S(-1));
  SpectrumResult res;
  int it = 0;
  for (; it < max_iter; ++it) {
    for (auto& v : V) v = detail::tridiag_solve(M, sigma, v);
    for (int j = 0; j < p; ++j) {
      for (int i = 0; i < j; ++i) {
        S c = dot(V[i], V[j]);
        for (int t = 0; t < n; ++t) V[j][t] -= c * V[i][t];
      }
      S nr = sqrt(dot(V[j], V[j]));
      for (auto& x : V[j]) x /= nr;
    }
    std::vector<std::vector<S>> MV(p), H(p, std::vector<S>(p)), Q;
    for (int j = 0; j < p; ++j) MV[j] = M.apply(V[j]);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) H[i][j] = dot(V[i], MV[j]);
    detail::jacobi_eigen(H, Q);
    std::vector<int> order(p);
    for (int i = 0; i < p; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int x, int y) { return H[x][x] < H[y][y]; });
    std::vector<std::vector<S>> W(p, std::vector<S>(n, S(0)));
    for (int j = 0; j < p; ++j) {
      int c = order[j];
      theta[j] = H[c][c];
      for (int i = 0; i < p; ++i)
        for (int t = 0; t < n; ++t) W[j][t] += Q[i][c] * V[i][t];
    }
    V.swap(W);
    bool done = it > 0;
    for (int j = 0; j < k; ++j)
      if (abs(theta[j] - prev[j]) > S(1e-40) * abs(theta[j]) + mnorm * S(1e-150)) done = false;
    prev = theta;
    if (done) break;
  }
  res.iterations = it + 1;
  res.eigenvectors.resize(n, k);
  for (int j = 0; j < k; ++j) {
    std::vector<S> r = M.apply(V[j]);
    S rn = 0;
    for (int t = 0; t < n; ++t) {
      S d = r[t] - theta[j] * V[j][t];
      rn += d * d;
      res.eigenvectors(t, j) = static_cast<double>(V[j][t]);
    }
    res.eigenvalues.push_back(static_cast<double>(theta[j]));
    res.residuals.push_back(static_cast<double>(sqrt(rn)));
  }
  res.residual_tol = 1e-8;
  // exact kernel in this arithmetic
  for (double l : res.eigenvalues)
    if (l <= static_cast<double>(mnorm) * 1e-170) ++res.kernel_dim;
  res.T = pb.T;
  res.A = pb.A;
  res.bc = pb.bc;
  res.N = pb.N;
  return res;
}

// ---------------------------------------------------------------------------
// Critical points, Agmon distance and decay.

struct GridCritical {
  int node;
  bool minimum;
};

// Nodes nearest to sign changes of f' (or zeros of f' at nodes).
inline std::vector<GridCritical> grid_critical_points(const WittenProblem1D& pb) {
  std::vector<GridCritical> out;
  const int N = pb.N;
  const bool circ = pb.topology == Topology::circle;
  const int last = circ ? N : N - 1;
  for (int j = 0; j < last; ++j) {
    int k = (j + 1) % N;
    double s0 = pb.node(j), s1 = s0 + pb.h();
    double g0 = pb.f.df(s0), g1 = pb.f.df(s1);
    if (g0 == 0 && pb.f.d2f(s0) != 0) {
      out.push_back({j, pb.f.d2f(s0) > 0});
    } else if (g0 * g1 < 0) {
      int nearest = std::abs(g0) <= std::abs(g1) ? j : k;
      out.push_back({nearest, g1 > g0});
    }
  }
  std::sort(out.begin(), out.end(), [](auto& x, auto& y) { return x.node < y.node; });
  out.erase(std::unique(out.begin(), out.end(), [](auto& x, auto& y) { return x.node == y.node; }), out.end());
  return out;
}

// Nodes within `radius` of the given critical nodes.
inline std::vector<bool> neighborhood_mask(const WittenProblem1D& pb, const std::vector<GridCritical>& crit,
                                           double radius, bool minima_only = false) {
  std::vector<bool> in(pb.N, false);
  const double L = pb.b - pb.a;
  for (int j = 0; j < pb.N; ++j)
    for (const auto& c : crit) {
      if (minima_only && !c.minimum) continue;
      double d = std::abs(pb.node(j) - pb.node(c.node));
      if (pb.topology == Topology::circle) d = std::min(d, L - d);
      if (d <= radius + 1e-12) in[j] = true;
    }
  return in;
}

// Shortest-path Agmon distance on the grid graph. The weight of an edge is T
// times the variation of f across it, sampled at the edge midpoint, so it
// bounds T |f(x) - f(y)| from above.
inline std::vector<double> agmon_distance(const WittenProblem1D& pb, double T, const std::vector<bool>& sources) {
  const int N = pb.N;
  require(static_cast<int>(sources.size()) == N, ErrorKind::invalid_argument, "source mask size mismatch");
  const bool circ = pb.topology == Topology::circle;
  const int E = circ ? N : N - 1;
  std::vector<double> w(E);
  for (int e = 0; e < E; ++e) {
    double s0 = pb.node(e), s1 = s0 + pb.h(), sm = 0.5 * (s0 + s1);
    w[e] = T * (std::abs(pb.f.f(sm) - pb.f.f(s0)) + std::abs(pb.f.f(s1) - pb.f.f(sm)));
  }
  std::vector<double> dist(N, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> q;
  for (int j = 0; j < N; ++j)
    if (sources[j]) {
      dist[j] = 0;
      q.push({0.0, j});
    }
  while (!q.empty()) {
    auto [d, j] = q.top();
    q.pop();
    if (d > dist[j]) continue;
    auto relax = [&](int k, double wt) {
      if (d + wt < dist[k]) {
        dist[k] = d + wt;
        q.push({dist[k], k});
      }
    };
    if (j + 1 < N) relax(j + 1, w[j]);
    else if (circ) relax(0, w[N - 1]);
    if (j > 0) relax(j - 1, w[j - 1]);
    else if (circ) relax(N - 1, w[N - 1]);
  }
  return dist;
}

struct AgmonDecayReport {
  double sup = 0;        // max over off-well nodes of log|u| + b rho_T
  double threshold = 0;  // (b - b^2) c_f^2 T^2 / 4
  double c_f = 0;        // min |f'| off the critical neighbourhoods
  double eigenvalue = 0;
};

// u is scaled to max-norm 1 before taking logs.
inline AgmonDecayReport agmon_decay_check(const WittenProblem1D& pb, const SpectrumResult& res, int which,
                                          const std::vector<double>& rho_T, double b, double radius = 0.1) {
  auto crit = grid_critical_points(pb);
  auto wells = neighborhood_mask(pb, crit, radius);
  AgmonDecayReport rep;
  rep.c_f = std::numeric_limits<double>::infinity();
  bool any = false;
  for (int j = 0; j < pb.N; ++j)
    if (!wells[j]) {
      any = true;
      rep.c_f = std::min(rep.c_f, std::abs(pb.f.df(pb.node(j))));
    }
  if (!any) rep.c_f = 0;
  rep.threshold = (b - b * b) * rep.c_f * rep.c_f * pb.T * pb.T / 4;
  rep.eigenvalue = res.eigenvalues.at(which);
  require(rep.c_f > 0 && rep.eigenvalue < rep.threshold, ErrorKind::invalid_argument,
          "decay estimate needs eigenvalue below " + std::to_string(rep.threshold));
  rvec u = res.eigenvectors.col(which);
  const double m = u.cwiseAbs().maxCoeff();
  rep.sup = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < pb.N; ++j)
    if (!wells[j]) rep.sup = std::max(rep.sup, std::log(std::abs(u(j)) / m) + b * rho_T[j]);
  return rep;
}

// ---------------------------------------------------------------------------
// Gluing of the interface-deformed circle against its split pieces.

// Shallow double well: deep enough to localise, shallow enough that the
// interface visibly moves the low spectrum at T = 40.
struct GluingConfig {
  Potential f = cosine_potential(2.0, 0.25);
  double T = 40;
  std::vector<double> A_ladder{1, 4, 16, 64};
  double r = 0.1;
  double rise = 3 * pi / 4;  // p rises across this point
  double fall = pi / 4;      // and falls across this one
  int N = 32768;
  int k = 6;
  int form_degree = 0;
};

struct GluingRow {
  double A;
  std::vector<double> full, split, gap;
  int cluster = 0;  // small eigenvalues of the full problem
  bool ambiguous = false;
};

struct GluingTable {
  std::vector<GluingRow> rows;
  std::vector<double> split;  // sorted union of the piece spectra
  int split_kernel = 0;       // summed numerical kernel dims of the pieces
  std::vector<std::pair<Boundary, std::pair<double, double>>> pieces;
  double r = 0;               // interface half-width snapped to the grid
};

// Index of the largest ratio jump among sorted eigenvalues; the cluster below
// it is the small spectrum and the cutoff is the geometric mean of the jump.
inline int small_cluster(const std::vector<double>& ev, double* ratio = nullptr) {
  const double floor = 1e-300;
  int best = 0;
  double br = 0;
  for (std::size_t i = 0; i + 1 < ev.size(); ++i) {
    double q = std::max(ev[i + 1], floor) / std::max(ev[i], floor);
    if (q > br) {
      br = q;
      best = static_cast<int>(i) + 1;
    }
  }
  if (ratio) *ratio = br;
  return best;
}

inline GluingTable gluing_scan(const GluingConfig& cfg) {
  GluingTable tab;
  const double L = 2 * pi;
  const double h = L / cfg.N;
  const int rn = static_cast<int>(std::lround(cfg.r / h));
  tab.r = rn * h;
  auto snap = [&](double y) { return static_cast<int>(std::lround(y / h)); };
  const int ir = snap(cfg.rise), jf = snap(cfg.fall);
  require(std::abs(ir * h - cfg.rise) < 1e-9 && std::abs(jf * h - cfg.fall) < 1e-9, ErrorKind::invalid_argument,
          "interfaces must sit on grid nodes");
  require(jf - rn > 0 && ir + rn < cfg.N && jf + rn < ir - rn, ErrorKind::invalid_argument,
          "interface windows overlap");

  // pieces: the arc between the two windows where p is low, and the rest
  struct Piece {
    int first, last;  // node indices, last may exceed N (wraps)
    Boundary bc;
  };
  const bool rise_after_fall = ir > jf;
  (void)rise_after_fall;
  std::vector<Piece> pieces{{jf + rn, ir - rn, Boundary::absolute}, {ir + rn, jf - rn + cfg.N, Boundary::relative}};
  if (cfg.form_degree == 1)
    for (auto& pc : pieces) pc.bc = pc.bc == Boundary::absolute ? Boundary::relative : Boundary::absolute;

  std::vector<double> split;
  for (const auto& pc : pieces) {
    WittenProblem1D pb;
    pb.topology = Topology::interval;
    pb.scheme = Scheme::complex;
    pb.a = pc.first * h;
    pb.b = pc.last * h;
    pb.N = pc.last - pc.first + 1;
    pb.f = cfg.f;
    pb.T = cfg.T;
    pb.bc = pc.bc;
    pb.form_degree = cfg.form_degree;
    SpectrumResult s = spectrum(pb, cfg.k, false);
    tab.split_kernel += s.kernel_dim;
    split.insert(split.end(), s.eigenvalues.begin(), s.eigenvalues.end());
    tab.pieces.push_back({pc.bc, {pb.a, pb.b}});
  }
  std::sort(split.begin(), split.end());
  split.resize(cfg.k);
  tab.split = split;

  tab.rows.resize(cfg.A_ladder.size());
  parallel_for(cfg.A_ladder.size(), [&](std::size_t i) {
    WittenProblem1D pb;
    pb.topology = Topology::circle;
    pb.scheme = Scheme::complex;
    pb.N = cfg.N;
    pb.f = cfg.f;
    pb.T = cfg.T;
    pb.A = cfg.A_ladder[i];
    pb.r = tab.r;
    pb.interfaces = {{ir * h, 1}, {jf * h, -1}};
    pb.form_degree = cfg.form_degree;
    SpectrumResult s = spectrum(pb, cfg.k, false);
    GluingRow row;
    row.A = pb.A;
    row.full = s.eigenvalues;
    row.split = split;
    for (int q = 0; q < cfg.k; ++q) row.gap.push_back(std::abs(row.full[q] - split[q]));
    double ratio = 0;
    row.cluster = small_cluster(row.full, &ratio);
    row.ambiguous = ratio < 10;
    tab.rows[i] = row;
  });
  return tab;
}

// ---------------------------------------------------------------------------
// Tunnelling eigenvalues on the circle.

struct DecayFit {
  std::vector<double> T;
  std::vector<std::vector<double>> branches;  // per T, the small nonzero eigenvalues
  std::vector<double> slope;                  // per branch
  std::vector<int> used;                      // T values used per branch
  double barrier = 0;                         // min well-to-saddle Agmon distance at T=1
  double predicted = 0;                       // -2 * barrier
};

// Linear least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

// Agmon distance from each well to the nearest saddle, minimised over wells.
inline double agmon_barrier(const WittenProblem1D& pb) {
  auto crit = grid_critical_points(pb);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : crit) {
    if (!c.minimum) continue;
    std::vector<bool> src(pb.N, false);
    src[c.node] = true;
    auto rho = agmon_distance(pb, 1.0, src);
    double to_saddle = std::numeric_limits<double>::infinity();
    for (const auto& s : crit)
      if (!s.minimum) to_saddle = std::min(to_saddle, rho[s.node]);
    best = std::min(best, to_saddle);
  }
  return best;
}

// 0-form Witten Laplacian of the discrete complex on a circle of N nodes.
inline WittenProblem1D circle_problem(const Potential& f, double T, int N, Scheme scheme = Scheme::complex) {
  WittenProblem1D pb;
  pb.topology = Topology::circle;
  pb.scheme = scheme;
  pb.N = N;
  pb.f = f;
  pb.T = T;
  return pb;
}

// Smallest N (a multiple of `mult`) meeting h <= 0.1/(T max|f'| + 1) on the circle.
inline int resolved_circle_nodes(const Potential& f, double T, int mult = 8) {
  double m = 0;
  for (int i = 0; i < 4096; ++i) m = std::max(m, std::abs(f.df(2 * pi * i / 4096)));
  int N = static_cast<int>(std::ceil(2 * pi * (T * m * 1.001 + 1) / 0.1));
  return (N + mult - 1) / mult * mult;
}

inline DecayFit small_eigenvalue_scan(const Potential& f, const std::vector<double>& T_ladder, int N = 0) {
  DecayFit fit;
  fit.T = T_ladder;
  const double Tmax = *std::max_element(T_ladder.begin(), T_ladder.end());
  if (N == 0) N = resolved_circle_nodes(f, Tmax);
  WittenProblem1D probe = circle_problem(f, 1.0, N);
  auto crit = grid_critical_points(probe);
  int wells = 0;
  for (auto& c : crit) wells += c.minimum;
  fit.barrier = wells > 0 ? agmon_barrier(probe) : 0.0;
  fit.predicted = -2 * fit.barrier;
  const int nb = std::max(0, wells - 1);
  fit.branches.assign(T_ladder.size(), {});
  parallel_for(T_ladder.size(), [&](std::size_t i) {
    if (nb == 0) return;
    SpectrumResult s = mp_spectrum(circle_problem(f, T_ladder[i], N), wells);
    std::vector<double> b;
    for (int q = s.kernel_dim; q < wells; ++q) b.push_back(s.eigenvalues[q]);
    fit.branches[i] = b;
  });
  for (int q = 0; q < nb; ++q) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < T_ladder.size(); ++i)
      if (static_cast<int>(fit.branches[i].size()) > q && fit.branches[i][q] > 0) {
        x.push_back(T_ladder[i]);
        y.push_back(std::log(fit.branches[i][q]));
      }
    fit.used.push_back(static_cast<int>(x.size()));
    fit.slope.push_back(x.size() >= 2 ? fit_slope(x, y) : std::numeric_limits<double>::quiet_NaN());
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Cubic model and Schauder norms.

struct CubicModelResult {
  double T = 1;
  std::vector<double> eigenvalues;
  std::vector<double> scaled;  // eigenvalues / T^{2/3}
};

// Neumann 0-form problem for f = s^3/3 on [-T^{-1/3}, T^{-1/3}] with N cells;
// the grid scales with the interval.
inline CubicModelResult cubic_model_eigs(double T, int k, int N = 400) {
  require(T >= 1, ErrorKind::invalid_argument, "cubic model needs T >= 1");
  WittenProblem1D pb;
  pb.topology = Topology::interval;
  pb.scheme = Scheme::central;
  pb.bc = Boundary::absolute;
  pb.a = -std::pow(T, -1.0 / 3);
  pb.b = -pb.a;
  pb.N = N;
  pb.f = cubic_potential();
  pb.T = T;
  SpectrumResult s = lowest_eigenpairs(assemble(pb, false), k);
  CubicModelResult out;
  out.T = T;
  out.eigenvalues = s.eigenvalues;
  for (double l : s.eigenvalues) out.scaled.push_back(l / std::pow(T, 2.0 / 3));
  return out;
}

// (Tr (B^* B)^{n/2})^{1/n}; n = infinity gives the operator norm.
template <typename Mat>
double schauder_norm(const Mat& B, double n) {
  require(n >= 1, ErrorKind::invalid_argument, "Schauder index must be >= 1");
  Eigen::JacobiSVD<Mat> svd(B);
  auto sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  if (std::isinf(n)) return sv(0);
  double top = sv(0);
  if (top == 0) return 0;
  double s = 0;
  for (int i = 0; i < sv.size(); ++i) s += std::pow(sv(i) / top, n);
  return top * std::pow(s, 1.0 / n);
}

}  // namespace tlab
