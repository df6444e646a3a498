#pragma once

#include "core.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace tlab {

// Left-regular representation of Lambda(g odd generators) (x) End(E), E = C^r
// Z/2-graded by gamma (diagonal +-1). Basis monomials of the exterior algebra
// are bitmasks; generator a is bit a, and omega_I lists generators in
// increasing order. The representation space is Lambda (x) E of dimension
// 2^g r, block I holding the omega_I component.
class SuperAlgebra {
 public:
  SuperAlgebra(int generators, Eigen::VectorXd gamma) : g_(generators), gamma_(std::move(gamma)) {
    require(g_ >= 0 && g_ <= 3, ErrorKind::invalid_argument, "superalgebra supports up to three generators");
  }

  int generators() const { return g_; }
  int fiber_dim() const { return static_cast<int>(gamma_.size()); }
  int dim() const { return (1 << g_) * fiber_dim(); }
  const Eigen::VectorXd& gamma() const { return gamma_; }

  // Sign of omega_I wedge omega_J relative to omega_{I|J}; 0 if they overlap.
  static int wedge_sign(int I, int J) {
    if (I & J) return 0;
    int inv = 0;
    for (int a = 0; a < 8; ++a)
      if (I & (1 << a))
        for (int b = 0; b < a; ++b)
          if (J & (1 << b)) ++inv;
    return (inv % 2) ? -1 : 1;
  }

  // omega_I (x) A acting on the representation space.
  cmat embed(int I, const cmat& A) const {
    const int r = fiber_dim();
    cmat M = cmat::Zero(dim(), dim());
    for (int J = 0; J < (1 << g_); ++J) {
      int s = wedge_sign(I, J);
      if (s == 0) continue;
      cmat B = A;
      if (popcount(J) % 2) B = gamma_.asDiagonal() * A * gamma_.asDiagonal();
      M.block((I | J) * r, J * r, r, r) += static_cast<double>(s) * B;
    }
    return M;
  }

  // omega_I component of the element represented by M.
  cmat component(const cmat& M, int I) const {
    const int r = fiber_dim();
    return M.block(I * r, 0, r, r);
  }

  cplx supertrace(const cmat& M, int I) const {
    cmat C = component(M, I);
    cplx s = 0.0;
    for (int i = 0; i < C.rows(); ++i) s += gamma_(i) * C(i, i);
    return s;
  }

 private:
  static int popcount(int x) {
    int c = 0;
    while (x) {
      c += x & 1;
      x >>= 1;
    }
    return c;
  }

  int g_;
  Eigen::VectorXd gamma_;
};

// h'(X) = (1 + 2X^2) exp(X^2) for a matrix X.
inline cmat h_prime_matrix(const cmat& X) {
  cmat X2 = X * X;
  cmat E = X2.exp();
  return (cmat::Identity(X.rows(), X.cols()) + 2.0 * X2) * E;
}

inline cmat h_matrix(const cmat& X) {
  cmat X2 = X * X;
  cmat E = X2.exp();
  return X * E;
}

inline cplx supertrace(const Eigen::VectorXd& gamma, const cmat& A) {
  cplx s = 0.0;
  for (int i = 0; i < A.rows(); ++i) s += gamma(i) * A(i, i);
  return s;
}

}  // namespace tlab
