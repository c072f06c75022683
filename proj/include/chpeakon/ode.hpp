#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "chpeakon/errors.hpp"

namespace chpeakon::ode {

using Vector = std::vector<double>;

struct Tolerances {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
};

/// Result of one Dormand-Prince 5(4) trial step.
struct Trial {
  Vector y;            ///< fifth-order solution
  Vector error;        ///< difference between the 5th and embedded 4th order solutions
  double error_norm;   ///< RMS of error scaled by the tolerances
};

/// One explicit Dormand-Prince 5(4) step of size h from (t, y).
template <class Rhs>
Trial dopri5_trial(Rhs& rhs, double t, const Vector& y, double h, const Tolerances& tol) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  // b - b_hat of the embedded fourth-order formula
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  const std::size_t n = y.size();
  Vector tmp(n);
  auto stage = [&](auto&& combine) {
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * combine(i);
    return tmp;
  };
  const Vector k1 = rhs(t, y);
  const Vector k2 = rhs(t + c2 * h, stage([&](std::size_t i) { return a21 * k1[i]; }));
  const Vector k3 = rhs(t + c3 * h, stage([&](std::size_t i) { return a31 * k1[i] + a32 * k2[i]; }));
  const Vector k4 =
      rhs(t + c4 * h, stage([&](std::size_t i) { return a41 * k1[i] + a42 * k2[i] + a43 * k3[i]; }));
  const Vector k5 = rhs(t + c5 * h, stage([&](std::size_t i) {
                          return a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i];
                        }));
  const Vector k6 = rhs(t + h, stage([&](std::size_t i) {
                          return a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i];
                        }));
  Trial trial;
  trial.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    trial.y[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
  }
  const Vector k7 = rhs(t + h, trial.y);
  trial.error.resize(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    trial.error[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    const double scale = tol.abs_tol + tol.rel_tol * std::max(std::abs(y[i]), std::abs(trial.y[i]));
    sum += std::pow(trial.error[i] / scale, 2);
  }
  trial.error_norm = n > 0 ? std::sqrt(sum / static_cast<double>(n)) : 0.0;
  return trial;
}

/// Step-size memory for the PI controller.
struct Controller {
  double h = 0.0;  ///< next step to try; 0 means "pick an initial step"
  double previous_error = 1e-4;
  static constexpr double kMinStep = 1e-14;
};

struct Accepted {
  double t;
  Vector y;
  double h_used;
  double error_norm;
  std::size_t rejections;
};

/// Takes one accepted adaptive step no longer than `h_cap`.
///
/// A trial is rejected when its scaled error exceeds one (the step shrinks
/// according to the error) or when `admissible(y_new)` is false or the
/// right-hand side throws DegenerateState (the step is halved). Throws
/// StepSizeUnderflow once the step would drop below 1e-14.
template <class Rhs, class Admissible>
Accepted adaptive_step(Rhs& rhs, double t, const Vector& y, double h_cap, double h_max, const Tolerances& tol,
                       Controller& ctl, Admissible&& admissible) {
  const double proposal = ctl.h > 0.0 ? std::min(ctl.h, h_max) : std::min(h_max, 1e-3);
  double h = std::min(proposal, h_cap);
  const bool clipped = h_cap < proposal;
  std::size_t rejections = 0;
  for (;;) {
    if (h < Controller::kMinStep && h < h_cap) {
      throw StepSizeUnderflow("adaptive step size fell below 1e-14 at t = " + std::to_string(t));
    }
    bool ok = true;
    Trial trial;
    try {
      trial = dopri5_trial(rhs, t, y, h, tol);
    } catch (const DegenerateState&) {
      ok = false;
    }
    if (ok) {
      for (double v : trial.y) ok = ok && std::isfinite(v);
    }
    if (!ok || !admissible(trial.y)) {
      h *= 0.5;
      ++rejections;
      continue;
    }
    const double err = std::max(trial.error_norm, 1e-16);
    if (err <= 1.0) {
      // PI control (Gustafsson) with the usual Dormand-Prince exponents.
      double factor = 0.9 * std::pow(err, -0.17) * std::pow(ctl.previous_error, 0.04);
      factor = std::clamp(factor, 0.2, 5.0);
      if (rejections > 0) factor = std::min(factor, 1.0);
      ctl.previous_error = std::max(err, 1e-4);
      const double next = std::min(h_max, h * factor);
      // A step shortened only to land on h_cap keeps the controller's proposal.
      ctl.h = (clipped && rejections == 0) ? std::max(next, proposal) : next;
      return {t + h, std::move(trial.y), h, trial.error_norm, rejections};
    }
    h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
    ++rejections;
  }
}

}  // namespace chpeakon::ode
