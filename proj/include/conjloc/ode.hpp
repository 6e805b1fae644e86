#pragma once

// Dormand-Prince 5(4) embedded Runge-Kutta pair with Hairer's fourth-order
// continuous extension (the "contd5" dense output).

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>

namespace conjloc::ode {

template <int N>
using Vector = Eigen::Matrix<double, N, 1>;

template <int N>
struct DenseSegment {
  double t0 = 0.0;
  double h = 0.0;
  std::array<Vector<N>, 5> rcont;

  double t1() const { return t0 + h; }

  Vector<N> eval(double t) const {
    const double s = (t - t0) / h;
    const double s1 = 1.0 - s;
    return rcont[0] +
           s * (rcont[1] + s1 * (rcont[2] + s * (rcont[3] + s1 * rcont[4])));
  }
};

struct Tolerances {
  double rtol = 1e-10;
  double atol = 1e-12;
};

template <int N>
struct StepAttempt {
  Vector<N> y_new;
  Vector<N> f_new;  // f(t + h, y_new); first stage of the next step (FSAL)
  double error = 0.0;  // scaled RMS error estimate; accept when <= 1
  DenseSegment<N> dense;
};

template <int N>
class DormandPrince54 {
 public:
  using Vec = Vector<N>;

  explicit DormandPrince54(Tolerances tol) : tol_(tol) {}

  // One trial step from (t, y) with f(t, y) = k1 already known.
  template <class Rhs>
  StepAttempt<N> attempt(Rhs&& f, double t, const Vec& y, const Vec& k1,
                         double h) const {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                            c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15,
                            a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113,
                            a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                            a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                            e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432.0,
                            d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0,
                            d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0,
                            d7 = 69997945.0 / 29380423.0;

    const Vec k2 = f(t + c2 * h, Vec(y + h * (a21 * k1)));
    const Vec k3 = f(t + c3 * h, Vec(y + h * (a31 * k1 + a32 * k2)));
    const Vec k4 =
        f(t + c4 * h, Vec(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    const Vec k5 = f(t + c5 * h,
                     Vec(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const Vec k6 = f(t + h, Vec(y + h * (a61 * k1 + a62 * k2 + a63 * k3 +
                                         a64 * k4 + a65 * k5)));

    StepAttempt<N> out;
    out.y_new =
        y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    out.f_new = f(t + h, out.y_new);

    const Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 +
                         e7 * out.f_new);
    double sum = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      const double scale =
          tol_.atol +
          tol_.rtol * std::max(std::abs(y[i]), std::abs(out.y_new[i]));
      const double r = err[i] / scale;
      sum += r * r;
    }
    out.error = std::sqrt(sum / static_cast<double>(y.size()));

    auto& rc = out.dense.rcont;
    out.dense.t0 = t;
    out.dense.h = h;
    rc[0] = y;
    rc[1] = out.y_new - y;
    rc[2] = h * k1 - rc[1];
    rc[3] = rc[1] - h * out.f_new - rc[2];
    rc[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 +
                 d7 * out.f_new);
    return out;
  }

  // Step-size factor from the error estimate (elementary controller).
  static double next_step_factor(double error, bool after_reject) {
    constexpr double safety = 0.9, fac_min = 0.2;
    const double fac_max = after_reject ? 1.0 : 5.0;
    if (!(error > 0.0)) return fac_max;
    return std::clamp(safety * std::pow(error, -0.2), fac_min, fac_max);
  }

  const Tolerances& tolerances() const { return tol_; }

 private:
  Tolerances tol_;
};

}  // namespace conjloc::ode
