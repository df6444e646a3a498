#pragma once

#include "core.hpp"

namespace tlab {

// Value and first two derivatives of a scalar profile.
template <typename T>
struct Jet {
  T v{}, d1{}, d2{};
};

// Quintic smoothstep 6t^5 - 15t^4 + 10t^3 on [0,1], clamped outside.
template <typename T>
Jet<T> smoothstep(T t) {
  if (t <= T(0)) return {T(0), T(0), T(0)};
  if (t >= T(1)) return {T(1), T(0), T(0)};
  T t2 = t * t, t3 = t2 * t;
  return {t3 * (T(10) + t * (T(-15) + T(6) * t)), T(30) * t2 * (T(1) - t) * (T(1) - t),
          T(60) * t * (T(1) - t) * (T(1) - T(2) * t)};
}

// Quintic Hermite segment on [x0, x0+L] matching value/slope/curvature at both ends.
// Stored as monomial coefficients in x - x0.
class QuinticHermite {
 public:
  QuinticHermite() = default;
  QuinticHermite(double x0, double L, double p0, double m0, double c0, double p1, double m1, double c1) : x0_(x0), L_(L) {
    // unit-interval data
    double P0 = p0, M0 = m0 * L, C0 = c0 * L * L, P1 = p1, M1 = m1 * L, C1 = c1 * L * L;
    double a0 = P0, a1 = M0, a2 = 0.5 * C0;
    double r0 = P1 - a0 - a1 - a2, r1 = M1 - a1 - 2 * a2, r2 = C1 - 2 * a2;
    // solve [1 1 1; 3 4 5; 6 12 20] [a3 a4 a5] = [r0 r1 r2]
    double a3 = 10 * r0 - 4 * r1 + 0.5 * r2;
    double a4 = -15 * r0 + 7 * r1 - r2;
    double a5 = 6 * r0 - 3 * r1 + 0.5 * r2;
    double u[6] = {a0, a1, a2, a3, a4, a5};
    for (int k = 0; k < 6; ++k) c_[k] = u[k] / std::pow(L, k);
  }

  template <typename T>
  Jet<T> eval(T x) const {
    T t = x - T(x0_);
    T v = T(c_[5]), d1 = T(5 * c_[5]), d2 = T(20 * c_[5]);
    for (int k = 4; k >= 0; --k) v = v * t + T(c_[k]);
    for (int k = 4; k >= 1; --k) d1 = d1 * t + T(k * c_[k]);
    for (int k = 4; k >= 2; --k) d2 = d2 * t + T(k * (k - 1) * c_[k]);
    return {v, d1, d2};
  }

  // int_{x0}^{x} of the segment.
  template <typename T>
  T integral(T x) const {
    T t = x - T(x0_);
    T s = T(c_[5] / 6.0);
    for (int k = 4; k >= 0; --k) s = s * t + T(c_[k] / (k + 1.0));
    return s * t;
  }

 private:
  double x0_ = 0.0, L_ = 1.0;
  double c_[6] = {0, 0, 0, 0, 0, 0};
};

// Smoothed tent on [0, w]: sigma(x) = x on [0, a], a quintic cap on [a, w/2]
// with zero slope and curvature at the top, mirrored about w/2. The cap height
// w/2 - (w/2 - a)/5 keeps int_0^w sigma = w^2/4, the integral of the sharp tent.
class SmoothedTent {
 public:
  SmoothedTent() = default;
  SmoothedTent(double w, double a) : w_(w), a_(a) {
    require(w > 0 && a > 0 && a < 0.5 * w, ErrorKind::infeasible_profile, "tent cap must sit inside (0, w/2)");
    const double L = 0.5 * w - a;
    peak_ = 0.5 * w - 0.2 * L;
    cap_ = QuinticHermite(a, L, a, 1.0, 0.0, peak_, 0.0, 0.0);
    half_int_ = 0.5 * a * a + cap_.integral(0.5 * w);
  }

  double width() const { return w_; }
  double peak() const { return peak_; }
  double kink() const { return a_; }

  template <typename T>
  Jet<T> eval(T x) const {
    if (x <= T(0) || x >= T(w_)) return {T(0), T(0), T(0)};
    bool mirror = x > T(0.5 * w_);
    T y = mirror ? T(w_) - x : x;
    Jet<T> j = (y <= T(a_)) ? Jet<T>{y, T(1), T(0)} : cap_.eval(y);
    if (mirror) j.d1 = -j.d1;
    return j;
  }

  // int_0^x sigma, clamped to [0, w].
  template <typename T>
  T integral(T x) const {
    if (x <= T(0)) return T(0);
    if (x >= T(w_)) return T(2.0 * half_int_);
    bool mirror = x > T(0.5 * w_);
    T y = mirror ? T(w_) - x : x;
    T part = (y <= T(a_)) ? T(0.5) * y * y : T(0.5 * a_ * a_) + cap_.integral(y);
    return mirror ? T(2.0 * half_int_) - part : part;
  }

 private:
  double w_ = 1.0, a_ = 0.25, peak_ = 0.5, half_int_ = 0.25;
  QuinticHermite cap_;
};

// Ramp-plateau profile on [0, w]: sigma(x) = x on [0, w/8], a quintic climb on
// [w/8, w/4] to the plateau P = 149 w / 200, flat up to w/2, mirrored. P is
// fixed by int_0^w sigma = w^2/2.
class PlateauProfile {
 public:
  PlateauProfile() = default;
  explicit PlateauProfile(double w) : w_(w) {
    require(w > 0, ErrorKind::infeasible_profile, "plateau profile needs positive width");
    P_ = 149.0 * w / 200.0;
    climb_ = QuinticHermite(w / 8, w / 8, w / 8, 1.0, 0.0, P_, 0.0, 0.0);
    half_int_ = 0.5 * (w / 8) * (w / 8) + climb_.integral(w / 4) + P_ * (w / 4);
  }

  double width() const { return w_; }
  double plateau() const { return P_; }

  template <typename T>
  Jet<T> eval(T x) const {
    if (x <= T(0) || x >= T(w_)) return {T(0), T(0), T(0)};
    bool mirror = x > T(0.5 * w_);
    T y = mirror ? T(w_) - x : x;
    Jet<T> j;
    if (y <= T(w_ / 8)) j = {y, T(1), T(0)};
    else if (y < T(w_ / 4)) j = climb_.eval(y);
    else j = {T(P_), T(0), T(0)};
    if (mirror) j.d1 = -j.d1;
    return j;
  }

  template <typename T>
  T integral(T x) const {
    if (x <= T(0)) return T(0);
    if (x >= T(w_)) return T(2.0 * half_int_);
    bool mirror = x > T(0.5 * w_);
    T y = mirror ? T(w_) - x : x;
    T part;
    if (y <= T(w_ / 8)) part = T(0.5) * y * y;
    else if (y < T(w_ / 4)) part = T(0.5 * (w_ / 8) * (w_ / 8)) + climb_.integral(y);
    else part = T(0.5 * (w_ / 8) * (w_ / 8) + climb_.integral(w_ / 4)) + T(P_) * (y - T(w_ / 4));
    return mirror ? T(2.0 * half_int_) - part : part;
  }

 private:
  double w_ = 1.0, P_ = 0.745, half_int_ = 0.25;
  QuinticHermite climb_;
};

}  // namespace tlab
