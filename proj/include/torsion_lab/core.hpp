#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tlab {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using rmat = Eigen::MatrixXd;
using rvec = Eigen::VectorXd;

enum class ErrorKind {
  invalid_argument,   // precondition / validation failure
  invalid_complex,    // d^2 != 0, shape mismatch
  invalid_metric,     // Gram matrix not Hermitian positive definite
  indeterminate_kernel,
  tail_not_converged,
  solver,
  non_transversal,
  non_acyclic,
  degenerate_model,
  infeasible_profile,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_complex: return "invalid-complex";
    case ErrorKind::invalid_metric: return "invalid-metric";
    case ErrorKind::indeterminate_kernel: return "indeterminate-kernel";
    case ErrorKind::tail_not_converged: return "tail-not-converged";
    case ErrorKind::solver: return "solver";
    case ErrorKind::non_transversal: return "non-transversal";
    case ErrorKind::non_acyclic: return "non-acyclic";
    case ErrorKind::degenerate_model: return "degenerate-model";
    case ErrorKind::infeasible_profile: return "infeasible-profile";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) throw Error(kind, what);
}

// Upper bound on worker threads; TORSION_LAB_THREADS caps it.
inline unsigned thread_budget() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TORSION_LAB_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<unsigned>(std::min<long>(v, 256));
  }
  return hw;
}

// Runs body(i) for i in [0, n). Each index writes only its own slot, so the
// result does not depend on scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  unsigned nt = static_cast<unsigned>(std::min<std::size_t>(thread_budget(), n));
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(nt);
  for (unsigned t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += nt) body(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

// Gauss-Legendre nodes/weights on [a, b] (Golub-Welsch).
inline void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    double beta = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = J(i - 1, i) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = es.eigenvalues()(i);
    double v = es.eigenvectors()(0, i);
    x[i] = 0.5 * (b - a) * t + 0.5 * (b + a);
    w[i] = (b - a) * v * v;
  }
}

// Trapezoid nodes in log t over [t0, t1]; returns t-nodes and weights for dt/t.
inline void log_trapezoid(int n, double t0, double t1, std::vector<double>& t, std::vector<double>& w) {
  t.resize(n);
  w.resize(n);
  const double a = std::log(t0), b = std::log(t1), h = (b - a) / (n - 1);
  for (int i = 0; i < n; ++i) {
    t[i] = std::exp(a + i * h);
    w[i] = (i == 0 || i == n - 1) ? 0.5 * h : h;
  }
}

// 64-bit FNV-1a; stable across platforms, used for config hashes.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

constexpr double pi = 3.14159265358979323846;

}  // namespace tlab
