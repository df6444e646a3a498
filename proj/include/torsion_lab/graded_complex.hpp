#pragma once

#include "core.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <random>
#include <sstream>

namespace tlab {

// h(a) = a e^{a^2} and its derivative.
template <typename S>
S h_scalar(const S& a) {
  using std::exp;
  return a * exp(a * a);
}

template <typename S>
S h_prime(const S& a) {
  using std::exp;
  return (S(1) + S(2) * a * a) * exp(a * a);
}

// Finite cochain complex 0 -> E^0 -> E^1 -> ... -> E^n with per-degree Gram matrices.
// d[k] maps E^k to E^{k+1}, so it has shape ranks[k+1] x ranks[k].
struct GradedComplex {
  std::vector<int> ranks;
  std::vector<cmat> d;
  std::vector<cmat> G;

  int top() const { return static_cast<int>(ranks.size()) - 1; }
  int total_rank() const {
    int s = 0;
    for (int r : ranks) s += r;
    return s;
  }
};

struct EulerData {
  int chi = 0;
  int chi_prime = 0;
};

namespace detail {

inline double hermitian_defect(const cmat& G) {
  if (G.size() == 0) return 0.0;
  return (G - G.adjoint()).norm() / std::max(1.0, G.norm());
}

}  // namespace detail

// Validates shapes, d^2 = 0 and metric positivity. tol_d2 is relative to the
// product of norms (1e-12 for exact inputs, 1e-9 for floating ones).
inline void validate(const GradedComplex& c, double tol_d2 = 1e-9) {
  const int n = c.top();
  require(n >= 0, ErrorKind::invalid_complex, "empty rank list");
  require(static_cast<int>(c.d.size()) == n, ErrorKind::invalid_complex, "need one differential per degree step");
  require(static_cast<int>(c.G.size()) == n + 1, ErrorKind::invalid_complex, "need one metric per degree");
  for (int k = 0; k <= n; ++k) {
    require(c.ranks[k] >= 0, ErrorKind::invalid_complex, "negative rank");
    require(c.G[k].rows() == c.ranks[k] && c.G[k].cols() == c.ranks[k], ErrorKind::invalid_metric,
            "metric shape mismatch in degree " + std::to_string(k));
    if (c.ranks[k] == 0) continue;
    require(detail::hermitian_defect(c.G[k]) < 1e-12, ErrorKind::invalid_metric,
            "metric not Hermitian in degree " + std::to_string(k));
    Eigen::SelfAdjointEigenSolver<cmat> es(c.G[k], Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() > 0.0, ErrorKind::invalid_metric,
            "metric not positive definite in degree " + std::to_string(k));
  }
  for (int k = 0; k < n; ++k)
    require(c.d[k].rows() == c.ranks[k + 1] && c.d[k].cols() == c.ranks[k], ErrorKind::invalid_complex,
            "differential shape mismatch in degree " + std::to_string(k));
  for (int k = 0; k + 1 < n; ++k) {
    if (c.d[k].size() == 0 || c.d[k + 1].size() == 0) continue;
    double scale = std::max(1.0, c.d[k + 1].norm() * c.d[k].norm());
    double res = (c.d[k + 1] * c.d[k]).norm() / scale;
    if (res > tol_d2) {
      std::ostringstream os;
      os << "d^2 != 0 at degree " << k << " (residual " << res << ")";
      throw Error(ErrorKind::invalid_complex, os.str());
    }
  }
}

inline GradedComplex make_complex(std::vector<int> ranks, std::vector<cmat> d, std::vector<cmat> G = {},
                                  double tol_d2 = 1e-9) {
  GradedComplex c;
  c.ranks = std::move(ranks);
  c.d = std::move(d);
  if (G.empty())
    for (int r : c.ranks) G.push_back(cmat::Identity(r, r));
  c.G = std::move(G);
  validate(c, tol_d2);
  return c;
}

// d*_k = G_k^{-1} d_k^dagger G_{k+1}, the adjoint of d_k in the given metrics.
inline std::vector<cmat> adjoints(const GradedComplex& c) {
  std::vector<cmat> out(c.d.size());
  for (std::size_t k = 0; k < c.d.size(); ++k) {
    if (c.ranks[k] == 0 || c.ranks[k + 1] == 0) {
      out[k] = cmat::Zero(c.ranks[k], c.ranks[k + 1]);
      continue;
    }
    Eigen::LLT<cmat> llt(c.G[k]);
    require(llt.info() == Eigen::Success, ErrorKind::invalid_metric, "singular metric in degree " + std::to_string(k));
    out[k] = llt.solve(c.d[k].adjoint() * c.G[k + 1]);
  }
  return out;
}

inline cmat laplacian(const GradedComplex& c, int k, const std::vector<cmat>& dstar) {
  const int r = c.ranks[k];
  cmat L = cmat::Zero(r, r);
  if (k < c.top()) L += dstar[k] * c.d[k];
  if (k > 0) L += c.d[k - 1] * dstar[k - 1];
  return L;
}

inline cmat laplacian(const GradedComplex& c, int k) { return laplacian(c, k, adjoints(c)); }

// Spectrum of Delta_k together with a G_k-orthonormal eigenbasis.
struct DegreeSpectrum {
  rvec values;
  cmat vectors;  // columns are G-orthonormal eigenvectors
};

inline DegreeSpectrum laplacian_spectrum(const GradedComplex& c, int k, const std::vector<cmat>& dstar) {
  DegreeSpectrum out;
  const int r = c.ranks[k];
  if (r == 0) {
    out.values = rvec(0);
    out.vectors = cmat(0, 0);
    return out;
  }
  Eigen::LLT<cmat> llt(c.G[k]);
  require(llt.info() == Eigen::Success, ErrorKind::invalid_metric, "singular metric");
  cmat Lf = llt.matrixL();
  cmat D = laplacian(c, k, dstar);
  // In coordinates y = L^dagger x the operator is L^dagger D L^{-dagger}, Hermitian.
  cmat Linv_adj = Lf.adjoint().triangularView<Eigen::Upper>().solve(cmat::Identity(r, r));
  cmat H = Lf.adjoint() * D * Linv_adj;
  H = 0.5 * (H + H.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<cmat> es(H);
  out.values = es.eigenvalues();
  out.vectors = Linv_adj * es.eigenvectors();
  return out;
}

struct KernelSplit {
  std::vector<int> kernel;     // indices into the spectrum
  std::vector<int> nonkernel;
  double threshold = 0.0;
};

// Kernel threshold 1e-10 * lambda_max (or 1e-10 if Delta = 0); eigenvalues inside
// [0.1, 10] x threshold are reported as indeterminate.
inline KernelSplit split_kernel(const rvec& vals, double rel = 1e-10) {
  KernelSplit ks;
  double lmax = vals.size() ? vals.cwiseAbs().maxCoeff() : 0.0;
  double scale = lmax > 0.0 ? lmax : 1.0;
  ks.threshold = rel * scale;
  for (int i = 0; i < vals.size(); ++i) {
    double v = vals(i);
    if (v >= 0.1 * ks.threshold && v <= 10.0 * ks.threshold) {
      std::ostringstream os;
      os << "eigenvalue " << v << " within ambiguity band around kernel threshold " << ks.threshold;
      throw Error(ErrorKind::indeterminate_kernel, os.str());
    }
    (v < ks.threshold ? ks.kernel : ks.nonkernel).push_back(i);
  }
  return ks;
}

// G-orthonormal basis of the harmonic space ker Delta_k.
inline cmat harmonic_basis(const GradedComplex& c, int k, const std::vector<cmat>& dstar) {
  DegreeSpectrum sp = laplacian_spectrum(c, k, dstar);
  KernelSplit ks = split_kernel(sp.values);
  cmat B(c.ranks[k], static_cast<int>(ks.kernel.size()));
  for (std::size_t j = 0; j < ks.kernel.size(); ++j) B.col(static_cast<int>(j)) = sp.vectors.col(ks.kernel[j]);
  return B;
}

inline std::vector<int> harmonic_ranks(const GradedComplex& c) {
  auto ds = adjoints(c);
  std::vector<int> h(c.ranks.size());
  for (int k = 0; k <= c.top(); ++k) h[k] = static_cast<int>(split_kernel(laplacian_spectrum(c, k, ds).values).kernel.size());
  return h;
}

// Cohomology ranks by elimination: dim H^k = r_k - rank d_k - rank d_{k-1}.
inline std::vector<int> cohomology_ranks_elimination(const GradedComplex& c, double rel_tol = 1e-9) {
  std::vector<int> rk(c.d.size(), 0);
  for (std::size_t k = 0; k < c.d.size(); ++k) {
    if (c.d[k].size() == 0) continue;
    Eigen::FullPivLU<cmat> lu(c.d[k]);
    lu.setThreshold(rel_tol);
    rk[k] = static_cast<int>(lu.rank());
  }
  std::vector<int> h(c.ranks.size());
  for (int k = 0; k <= c.top(); ++k) {
    int v = c.ranks[k];
    if (k < c.top()) v -= rk[k];
    if (k > 0) v -= rk[k - 1];
    h[k] = v;
  }
  return h;
}

inline EulerData euler_from_ranks(const std::vector<int>& r) {
  EulerData e;
  for (std::size_t k = 0; k < r.size(); ++k) {
    int s = (k % 2 == 0) ? 1 : -1;
    e.chi += s * r[k];
    e.chi_prime += s * static_cast<int>(k) * r[k];
  }
  return e;
}

inline EulerData euler_chars(const GradedComplex& c) { return euler_from_ranks(c.ranks); }
inline EulerData euler_chars_cohomology(const GradedComplex& c) { return euler_from_ranks(harmonic_ranks(c)); }

// (1/2) sum_k (-1)^k k log det' Delta_k.
inline double finite_torsion(const GradedComplex& c) {
  auto ds = adjoints(c);
  double t = 0.0;
  for (int k = 1; k <= c.top(); ++k) {
    DegreeSpectrum sp = laplacian_spectrum(c, k, ds);
    KernelSplit ks = split_kernel(sp.values);
    double ld = 0.0;
    for (int i : ks.nonkernel) ld += std::log(sp.values(i));
    t += ((k % 2 == 0) ? 1.0 : -1.0) * k * 0.5 * ld;
  }
  return t;
}

// Integrand of the point-base torsion integral at time t, i.e.
// (1/2)[Tr_s(N h'(X_t)) - chi'(H) - (chi'(E) - chi'(H)) h'(i sqrt(t)/2)]
// with X_t^2 = -t Delta / 4, evaluated by matrix exponentials.
inline double torsion_integrand(const std::vector<cmat>& lap_herm, const EulerData& eE, const EulerData& eH, double t) {
  double str = 0.0;
  for (std::size_t k = 1; k < lap_herm.size(); ++k) {
    const cmat& D = lap_herm[k];
    if (D.rows() == 0) continue;
    cmat A = -0.25 * t * D;
    cmat E = A.exp();
    cmat hp = (cmat::Identity(D.rows(), D.cols()) - 0.5 * t * D) * E;
    str += ((k % 2 == 0) ? 1.0 : -1.0) * static_cast<double>(k) * hp.trace().real();
  }
  double g = (1.0 - 0.5 * t) * std::exp(-0.25 * t);
  return 0.5 * (str - eH.chi_prime - (eE.chi_prime - eH.chi_prime) * g);
}

// Hermitian representatives L^dagger Delta_k L^{-dagger} per degree.
inline std::vector<cmat> hermitian_laplacians(const GradedComplex& c) {
  auto ds = adjoints(c);
  std::vector<cmat> out(c.ranks.size());
  for (int k = 0; k <= c.top(); ++k) {
    const int r = c.ranks[k];
    if (r == 0) {
      out[k] = cmat(0, 0);
      continue;
    }
    Eigen::LLT<cmat> llt(c.G[k]);
    cmat Lf = llt.matrixL();
    cmat Linv_adj = Lf.adjoint().triangularView<Eigen::Upper>().solve(cmat::Identity(r, r));
    cmat H = Lf.adjoint() * laplacian(c, k, ds) * Linv_adj;
    out[k] = 0.5 * (H + H.adjoint());
  }
  return out;
}

// Torsion as -int_0^inf (integrand) dt/t, trapezoid in log t. The window is
// taken from the spectrum bounds so both tails are below ~1e-10.
inline double finite_torsion_integral(const GradedComplex& c, double log_step = 0.04) {
  auto lh = hermitian_laplacians(c);
  EulerData eE = euler_chars(c);
  EulerData eH = euler_from_ranks(harmonic_ranks(c));
  double lmax = 1.0, lmin = 1.0;
  for (const auto& D : lh) {
    if (D.rows() == 0) continue;
    Eigen::SelfAdjointEigenSolver<cmat> es(D, Eigen::EigenvaluesOnly);
    KernelSplit ks = split_kernel(es.eigenvalues());
    for (int i : ks.nonkernel) {
      lmax = std::max(lmax, es.eigenvalues()(i));
      lmin = std::min(lmin, es.eigenvalues()(i));
    }
  }
  const double t0 = 1e-11 / lmax, t1 = 600.0 / lmin;
  const int n = static_cast<int>(std::ceil(std::log(t1 / t0) / log_step)) + 1;
  std::vector<double> t, w;
  log_trapezoid(n, t0, t1, t, w);
  std::vector<double> vals(n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) { vals[i] = torsion_integrand(lh, eE, eH, t[i]); });
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += w[i] * vals[i];
  return -s;
}

// Change of scalar torsion between metrics G0 (the complex's) and G1:
// (1/2) sum (-1)^k log det(G0^{-1} G1) minus the same for the L2 metric on cohomology.
inline double torsion_metric_anomaly(const GradedComplex& c0, const std::vector<cmat>& G1) {
  GradedComplex c1 = c0;
  c1.G = G1;
  validate(c1);
  auto ds0 = adjoints(c0);
  auto ds1 = adjoints(c1);
  double out = 0.0;
  for (int k = 0; k <= c0.top(); ++k) {
    if (c0.ranks[k] == 0) continue;
    double s = (k % 2 == 0) ? 1.0 : -1.0;
    Eigen::PartialPivLU<cmat> lu(c0.G[k]);
    cplx ld = (lu.solve(G1[k])).determinant();
    double vol = std::log(std::abs(ld));
    cmat B0 = harmonic_basis(c0, k, ds0);
    double hterm = 0.0;
    if (B0.cols() > 0) {
      cmat B1 = harmonic_basis(c1, k, ds1);
      cmat P = B1 * B1.adjoint() * G1[k] * B0;  // harmonic projection in metric 1
      cmat M = P.adjoint() * G1[k] * P;
      hterm = std::log(std::abs(M.determinant()));
    }
    out += 0.5 * s * (vol - hterm);
  }
  return out;
}

// Random complex with prescribed ranks: d_k = Q_{k+1} [I 0; 0 0] Q_k^{-1} style
// construction so that d^2 = 0 exactly up to rounding.
inline GradedComplex random_complex(const std::vector<int>& ranks, std::mt19937_64& rng, bool random_metric = true,
                                    const std::vector<int>* cohomology = nullptr) {
  const int n = static_cast<int>(ranks.size()) - 1;
  std::normal_distribution<double> N01(0.0, 1.0);
  auto rnd = [&](int r, int c) {
    cmat M(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) M(i, j) = cplx(N01(rng), N01(rng));
    return M;
  };
  // Choose image dimensions b_k = rank d_k compatible with the ranks.
  std::vector<int> b(std::max(n, 0), 0);
  int prev = 0;
  for (int k = 0; k < n; ++k) {
    int avail_src = ranks[k] - prev;
    int cap = std::min(avail_src, ranks[k + 1]);
    int want;
    if (cohomology) {
      want = ranks[k] - prev - (*cohomology)[k];
      want = std::clamp(want, 0, cap);
    } else {
      std::uniform_int_distribution<int> U(0, std::max(cap, 0));
      want = cap > 0 ? U(rng) : 0;
    }
    b[k] = want;
    prev = want;
  }
  // Basis changes per degree.
  std::vector<cmat> Q(n + 1), Qinv(n + 1);
  for (int k = 0; k <= n; ++k) {
    cmat M = rnd(ranks[k], ranks[k]) + 3.0 * cmat::Identity(ranks[k], ranks[k]);
    Q[k] = M;
    Qinv[k] = ranks[k] ? cmat(M.inverse()) : cmat(0, 0);
  }
  // In adapted coordinates degree k splits as [image of d_{k-1} | complement | source of d_k].
  std::vector<cmat> d(n);
  int in_prev = 0;
  for (int k = 0; k < n; ++k) {
    cmat D0 = cmat::Zero(ranks[k + 1], ranks[k]);
    // source block: last b[k] coordinates of degree k; target: first b[k] coordinates of degree k+1
    for (int j = 0; j < b[k]; ++j) D0(j, ranks[k] - b[k] + j) = 1.0;
    d[k] = Q[k + 1] * D0 * Qinv[k];
    in_prev = b[k];
  }
  (void)in_prev;
  std::vector<cmat> G(n + 1);
  for (int k = 0; k <= n; ++k) {
    if (random_metric) {
      cmat A = rnd(ranks[k], ranks[k]);
      G[k] = A * A.adjoint() + 0.5 * cmat::Identity(ranks[k], ranks[k]);
    } else {
      G[k] = cmat::Identity(ranks[k], ranks[k]);
    }
  }
  GradedComplex c;
  c.ranks = ranks;
  c.d = std::move(d);
  c.G = std::move(G);
  validate(c);
  return c;
}

}  // namespace tlab
