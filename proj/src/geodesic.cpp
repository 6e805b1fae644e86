#include "conjloc/geodesic.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace conjloc {

Mat2 GeodesicBundleState::fields() const {
  Mat2 c;
  c << jacobi[0], jacobi[4], jacobi[1], jacobi[5];
  return c;
}

Mat2 GeodesicBundleState::field_rates() const {
  Mat2 c;
  c << jacobi[2], jacobi[6], jacobi[3], jacobi[7];
  return c;
}

StateVector GeodesicBundleState::to_vector() const {
  StateVector y;
  y.segment<3>(0) = q;
  y.segment<3>(3) = v;
  y.segment<3>(6) = n;
  y.segment<3>(9) = b;
  for (int i = 0; i < 8; ++i) y[12 + i] = jacobi[i];
  return y;
}

GeodesicBundleState GeodesicBundleState::from_vector(double t,
                                                     const StateVector& y,
                                                     ChartId chart) {
  GeodesicBundleState s;
  s.t = t;
  s.q = y.segment<3>(0);
  s.v = y.segment<3>(3);
  s.n = y.segment<3>(6);
  s.b = y.segment<3>(9);
  for (int i = 0; i < 8; ++i) s.jacobi[i] = y[12 + i];
  s.chart = chart;
  return s;
}

FramePair orthonormal_frame_at(const Manifold& manifold, const Vec3& p,
                               ChartId chart, const Vec3& t) {
  const Mat3 g = manifold.metric_at(p, chart);
  auto ip = [&](const Vec3& x, const Vec3& y) { return x.dot(g * y); };
  if (std::abs(ip(t, t) - 1.0) > 1e-8) {
    throw DomainError("orthonormal_frame_at: tangent is not unit length");
  }
  std::vector<Vec3> basis;
  for (int k = 0; k < 3 && basis.size() < 2; ++k) {
    Vec3 w = Vec3::Unit(k);
    // Two passes of modified Gram-Schmidt for stability.
    for (int pass = 0; pass < 2; ++pass) {
      w -= ip(w, t) * t;
      for (const Vec3& u : basis) w -= ip(w, u) * u;
    }
    const double norm = std::sqrt(std::max(ip(w, w), 0.0));
    if (norm < 1e-8) continue;
    basis.push_back(w / norm);
  }
  if (basis.size() < 2) {
    throw NumericalError("orthonormal_frame_at: degenerate coordinate basis");
  }
  FramePair frame{basis[0], basis[1]};
  Mat3 m;
  m << t, frame.n, frame.b;
  if (m.determinant() < 0.0) frame.b = -frame.b;
  return frame;
}

StateVector bundle_rhs(const Manifold& manifold, const StateVector& y,
                       ChartId chart, bool flat_jacobi) {
  const Vec3 q = y.segment<3>(0);
  const Vec3 v = y.segment<3>(3);
  const Vec3 n = y.segment<3>(6);
  const Vec3 b = y.segment<3>(9);
  const CurvaturePack pack = manifold.riemann_unchecked(q, chart);
  const Christoffel& gamma = pack.christoffel;

  StateVector dy;
  dy.segment<3>(0) = v;
  dy.segment<3>(3) = -gamma.contract(v, v);
  dy.segment<3>(6) = -gamma.contract(v, n);
  dy.segment<3>(9) = -gamma.contract(v, b);

  const Mat2 m = flat_jacobi ? Mat2::Zero() : curvature_matrix(pack, v, n, b);
  for (int f = 0; f < 2; ++f) {
    const int o = 12 + 4 * f;
    const Vec2 x(y[o], y[o + 1]);
    const Vec2 acc = -m * x;
    dy[o] = y[o + 2];
    dy[o + 1] = y[o + 3];
    dy[o + 2] = acc[0];
    dy[o + 3] = acc[1];
  }
  return dy;
}

GeodesicBundleState initial_state(const Manifold& manifold,
                                  const LaunchSpec& launch) {
  const Mat3 g = manifold.metric_at(launch.base_point, launch.chart);
  const double norm2 = launch.velocity.dot(g * launch.velocity);
  if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
    throw DomainError("launch direction must be a nonzero finite vector");
  }
  GeodesicBundleState s;
  s.t = 0.0;
  s.chart = launch.chart;
  s.q = launch.base_point;
  s.v = launch.velocity / std::sqrt(norm2);
  FramePair frame;
  if (launch.frame) {
    frame = *launch.frame;
    const std::array<Vec3, 3> triple{s.v, frame.n, frame.b};
    if (orthonormality_defect(g, triple) > 1e-8) {
      throw DomainError("launch frame is not orthonormal to the direction");
    }
  } else {
    frame = orthonormal_frame_at(manifold, s.q, s.chart, s.v);
  }
  s.n = frame.n;
  s.b = frame.b;
  // J_xi: xi'(0) = 1; J_eta: eta'(0) = 1.
  s.jacobi = {0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0};
  return s;
}

Trajectory::Trajectory(GeodesicBundleState initial)
    : initial_(std::move(initial)) {}

std::size_t Trajectory::locate(double t) const {
  if (segments_.empty()) {
    throw DomainError("trajectory has no accepted steps");
  }
  // First segment whose end is >= t.
  auto it = std::lower_bound(
      segments_.begin(), segments_.end(), t,
      [](const Segment& s, double value) { return s.dense.t1() < value; });
  if (it == segments_.end()) --it;
  return static_cast<std::size_t>(it - segments_.begin());
}

GeodesicBundleState Trajectory::segment_state(std::size_t i, double t) const {
  const Segment& s = segments_.at(i);
  return GeodesicBundleState::from_vector(t, s.dense.eval(t), s.chart);
}

GeodesicBundleState Trajectory::state_at(double t) const {
  if (t < t_begin() - 1e-14 || t > t_end() + 1e-14) {
    std::ostringstream msg;
    msg << "state_at: t = " << t << " outside [" << t_begin() << ", "
        << t_end() << "]";
    throw DomainError(msg.str());
  }
  if (segments_.empty()) return initial_;
  return segment_state(locate(t), t);
}

GeodesicBundleState Trajectory::node(std::size_t i) const {
  const Segment& s = segments_.at(i);
  return GeodesicBundleState::from_vector(s.dense.t1(), s.end, s.chart);
}

namespace {

void maybe_switch_chart(const Manifold& manifold, StateVector& y,
                        ChartId& chart) {
  const Vec3 q = y.segment<3>(0);
  if (manifold.chart_regularity(q, chart) >= manifold.switch_threshold()) {
    return;
  }
  const ChartId target = other_chart(chart);
  const std::array<Vec3, 3> vectors{y.segment<3>(3), y.segment<3>(6),
                                    y.segment<3>(9)};
  const ChartPoint moved =
      manifold.chart_transition(q, vectors, chart, target);
  y.segment<3>(0) = moved.q;
  y.segment<3>(3) = moved.vectors[0];
  y.segment<3>(6) = moved.vectors[1];
  y.segment<3>(9) = moved.vectors[2];
  chart = target;
}

}  // namespace

Trajectory integrate(const Manifold& manifold, const LaunchSpec& launch,
                     const IntegratorOptions& options,
                     const StepObserver& observer) {
  if (!(launch.t_max > 0.0)) {
    throw DomainError("integrate: t_max must be positive");
  }
  GeodesicBundleState start = initial_state(manifold, launch);
  StateVector y = start.to_vector();
  ChartId chart = start.chart;
  maybe_switch_chart(manifold, y, chart);
  start = GeodesicBundleState::from_vector(0.0, y, chart);
  Trajectory traj(start);
  if (chart != launch.chart) traj.note_chart_switch();

  const ode::DormandPrince54<kStateSize> stepper(
      ode::Tolerances{options.rtol, options.atol});
  auto f = [&](double, const StateVector& state) {
    return bundle_rhs(manifold, state, chart, options.flat_jacobi);
  };

  double t = 0.0;
  double h = std::min(options.h_initial, options.h_max);
  StateVector k1 = f(t, y);
  bool after_reject = false;
  std::size_t steps = 0;

  while (t < launch.t_max) {
    if (++steps > options.max_steps) {
      throw NumericalError("integrate: maximum step count exceeded");
    }
    const double remaining = launch.t_max - t;
    // Avoid a sliver of a final step.
    if (h >= remaining || remaining - h < 1e-3 * h) h = remaining;

    auto trial = stepper.attempt(f, t, y, k1, h);
    if (!std::isfinite(trial.error) || trial.error > 1.0) {
      const double fac =
          std::isfinite(trial.error)
              ? ode::DormandPrince54<kStateSize>::next_step_factor(
                    trial.error, true)
              : 0.2;
      h *= fac;
      after_reject = true;
      if (h < options.h_min) {
        std::ostringstream msg;
        msg << "integrate: step size underflow at t = " << t
            << " (direction " << launch.velocity.transpose() << ")";
        throw NumericalError(msg.str());
      }
      continue;
    }

    Trajectory::Segment seg;
    seg.dense = trial.dense;
    seg.chart = chart;
    seg.start = y;
    seg.end = trial.y_new;
    traj.push(seg);

    t = (h == remaining) ? launch.t_max : t + h;
    y = trial.y_new;
    k1 = trial.f_new;
    const double fac = ode::DormandPrince54<kStateSize>::next_step_factor(
        trial.error, after_reject);
    after_reject = false;
    h = std::min(h * fac, options.h_max);

    if (observer && !observer(traj, traj.segments().size() - 1)) break;

    const ChartId before = chart;
    maybe_switch_chart(manifold, y, chart);
    if (chart != before) {
      traj.note_chart_switch();
      k1 = f(t, y);
    }
  }
  return traj;
}

double speed_defect(const Manifold& manifold, const GeodesicBundleState& s) {
  const Mat3 g = manifold.metric_at(s.q, s.chart);
  return std::abs(s.v.dot(g * s.v) - 1.0);
}

double frame_defect(const Manifold& manifold, const GeodesicBundleState& s) {
  const Mat3 g = manifold.metric_at(s.q, s.chart);
  const std::array<Vec3, 3> triple{s.v, s.n, s.b};
  return orthonormality_defect(g, triple);
}

Vec4 ambient_position(const Manifold& manifold, const GeodesicBundleState& s) {
  return manifold.embed(s.q, s.chart);
}

Vec4 ambient_vector(const Manifold& manifold, const GeodesicBundleState& s,
                    const Vec3& v) {
  return manifold.embed_jacobian(s.q, s.chart) * v;
}

}  // namespace conjloc
