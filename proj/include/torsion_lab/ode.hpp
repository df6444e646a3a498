#pragma once

#include "core.hpp"

namespace tlab {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h0 = 1e-4;
  double hmax = 1.0;
  double t_end = 1e3;
  long max_steps = 2'000'000;
};

enum class OdeStatus { event, reached_end, max_steps, step_underflow, aborted };

struct OdeResult {
  Eigen::VectorXd y;
  double t = 0.0;
  long steps = 0;
  OdeStatus status = OdeStatus::reached_end;
};

// Dormand-Prince 5(4) with step control. Integration stops when event(y) changes
// sign from positive to <= 0 (located by bisection on the last step) or when
// abort(y) returns true.
template <typename Rhs, typename Event, typename Abort>
OdeResult dopri45(Rhs&& rhs, Eigen::VectorXd y, Event&& event, Abort&& abort, const OdeOptions& opt = {}) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2;
  (void)c3;
  (void)c4;
  (void)c5;

  auto step = [&](const Eigen::VectorXd& y0, const Eigen::VectorXd& k1, double h, Eigen::VectorXd& y1,
                  Eigen::VectorXd& k7, double& err) {
    Eigen::VectorXd k2 = rhs(Eigen::VectorXd(y0 + h * a21 * k1));
    Eigen::VectorXd k3 = rhs(Eigen::VectorXd(y0 + h * (a31 * k1 + a32 * k2)));
    Eigen::VectorXd k4 = rhs(Eigen::VectorXd(y0 + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    Eigen::VectorXd k5 = rhs(Eigen::VectorXd(y0 + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    Eigen::VectorXd k6 = rhs(Eigen::VectorXd(y0 + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    y1 = y0 + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7 = rhs(y1);
    Eigen::VectorXd ev = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    err = 0.0;
    for (int i = 0; i < y0.size(); ++i) {
      double sc = opt.atol + opt.rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
      err = std::max(err, std::abs(ev(i)) / sc);
    }
  };

  OdeResult res;
  double t = 0.0, h = opt.h0;
  Eigen::VectorXd k1 = rhs(y);
  double g0 = event(y);
  for (long n = 0; n < opt.max_steps; ++n) {
    if (t >= opt.t_end) {
      res.status = OdeStatus::reached_end;
      res.y = y;
      res.t = t;
      res.steps = n;
      return res;
    }
    h = std::min({h, opt.hmax, opt.t_end - t});
    Eigen::VectorXd y1, k7;
    double err;
    step(y, k1, h, y1, k7, err);
    if (err > 1.0) {
      h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
      if (h < 1e-14 * std::max(1.0, t)) {
        res.status = OdeStatus::step_underflow;
        res.y = y;
        res.t = t;
        res.steps = n;
        return res;
      }
      continue;
    }
    double g1 = event(y1);
    if (g0 > 0.0 && g1 <= 0.0) {
      double lo = 0.0, hi = h;
      Eigen::VectorXd yb = y1, kk;
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        double e2;
        Eigen::VectorXd ym;
        step(y, k1, mid, ym, kk, e2);
        if (event(ym) > 0.0) {
          lo = mid;
        } else {
          hi = mid;
          yb = ym;
        }
        if (hi - lo < 1e-15 * std::max(1.0, h)) break;
      }
      res.status = OdeStatus::event;
      res.y = yb;
      res.t = t + hi;
      res.steps = n + 1;
      return res;
    }
    t += h;
    y = y1;
    k1 = k7;
    g0 = g1;
    if (abort(y)) {
      res.status = OdeStatus::aborted;
      res.y = y;
      res.t = t;
      res.steps = n + 1;
      return res;
    }
    h *= std::min(5.0, 0.9 * std::pow(std::max(err, 1e-10), -0.2));
  }
  res.status = OdeStatus::max_steps;
  res.y = y;
  res.t = t;
  res.steps = opt.max_steps;
  return res;
}

}  // namespace tlab
