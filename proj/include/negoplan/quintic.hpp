#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace negoplan {

/// Position, velocity and acceleration of one axis.
template <typename Scalar>
using AxisState = Eigen::Matrix<Scalar, 3, 1>;

/// Degree-5 polynomial p(t) = sum c_k t^k on [0, duration]. Past the end the
/// segment continues at its terminal velocity (zero acceleration).
template <typename Scalar>
struct QuinticSegment {
  using Coeffs = Eigen::Matrix<Scalar, 6, 1>;

  Coeffs coeffs = Coeffs::Zero();
  Scalar duration = Scalar(1);

  Scalar value(Scalar t) const {
    if (t > duration) return raw(duration, 0) + raw(duration, 1) * (t - duration);
    return raw(t, 0);
  }
  Scalar first(Scalar t) const { return t > duration ? raw(duration, 1) : raw(t, 1); }
  Scalar second(Scalar t) const { return t > duration ? Scalar(0) : raw(t, 2); }
  Scalar third(Scalar t) const { return t > duration ? Scalar(0) : raw(t, 3); }

  AxisState<Scalar> state(Scalar t) const { return {value(t), first(t), second(t)}; }

  /// Exact integral of the squared third derivative over [0, duration].
  Scalar squared_jerk_integral() const {
    // p''' = 6 c3 + 24 c4 t + 60 c5 t^2
    const Scalar a = Scalar(6) * coeffs(3);
    const Scalar b = Scalar(24) * coeffs(4);
    const Scalar c = Scalar(60) * coeffs(5);
    const Scalar T = duration;
    const Scalar T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
    return a * a * T + a * b * T2 + (b * b + Scalar(2) * a * c) * T3 / Scalar(3) +
           b * c * T4 / Scalar(2) + c * c * T5 / Scalar(5);
  }

  /// k-th derivative of the polynomial itself (no continuation).
  Scalar raw(Scalar t, int k) const {
    Scalar acc = Scalar(0);
    for (int i = 5; i >= k; --i) {
      Scalar f = Scalar(1);
      for (int j = 0; j < k; ++j) f *= Scalar(i - j);
      acc = acc * t + f * coeffs(i);
    }
    return acc;
  }
};

/// Unique quintic matching position, velocity and acceleration at both ends.
/// The 6x6 boundary system is solved on the unit interval, where it is well
/// conditioned, and rescaled to physical time.
template <typename Scalar>
QuinticSegment<Scalar> quintic_connect(const AxisState<Scalar>& start, const AxisState<Scalar>& end,
                                       Scalar duration) {
  if (!(duration > Scalar(0))) throw std::invalid_argument("quintic_connect: duration must be positive");
  const Scalar T = duration;
  using Mat6 = Eigen::Matrix<Scalar, 6, 6>;
  using Vec6 = Eigen::Matrix<Scalar, 6, 1>;
  Mat6 A = Mat6::Zero();
  // Rows: p(0), p'(0), p''(0), p(1), p'(1), p''(1) in unit time.
  A(0, 0) = 1;
  A(1, 1) = 1;
  A(2, 2) = 2;
  for (int k = 0; k < 6; ++k) {
    A(3, k) = 1;
    A(4, k) = Scalar(k);
    A(5, k) = Scalar(k * (k - 1));
  }
  Vec6 rhs;
  rhs << start(0), start(1) * T, start(2) * T * T, end(0), end(1) * T, end(2) * T * T;
  const Vec6 unit = A.fullPivLu().solve(rhs);

  QuinticSegment<Scalar> seg;
  seg.duration = T;
  Scalar scale = Scalar(1);
  for (int k = 0; k < 6; ++k) {
    seg.coeffs(k) = unit(k) / scale;
    scale *= T;
  }
  return seg;
}

}  // namespace negoplan
