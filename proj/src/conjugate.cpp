#include "conjloc/conjugate.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace conjloc {

namespace {

// Bisection for a sign change of f on [lo, hi].
template <class F>
double bisect_root(F&& f, double lo, double hi, double tol) {
  double flo = f(lo);
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

template <class F>
double golden_minimize(F&& f, double lo, double hi, double tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

ConjugateKind classify_gap(double gap, const ConjugateOptions& options) {
  if (gap < options.umbilic_tol) return ConjugateKind::umbilic;
  if (gap < options.near_umbilic_factor * options.umbilic_tol) {
    return ConjugateKind::near_umbilic;
  }
  return ConjugateKind::generic;
}

}  // namespace

std::string_view to_string(ConjugateKind kind) {
  switch (kind) {
    case ConjugateKind::generic:
      return "generic";
    case ConjugateKind::near_umbilic:
      return "near_umbilic";
    case ConjugateKind::umbilic:
      return "umbilic";
  }
  return "unknown";
}

double area(const GeodesicBundleState& s) {
  const auto& j = s.jacobi;
  return j[0] * j[5] - j[4] * j[1];
}

double area_rate(const GeodesicBundleState& s) {
  const auto& j = s.jacobi;
  return (j[2] * j[5] - j[6] * j[1]) + (j[0] * j[7] - j[4] * j[3]);
}

double area_rate_cross(const GeodesicBundleState& s) {
  const auto& j = s.jacobi;
  return j[2] * j[7] - j[6] * j[3];
}

ConjugateDetector::ConjugateDetector(ConjugateOptions options)
    : options_(options) {}

int ConjugateDetector::root_count() const {
  int n = 0;
  for (const Root& r : roots_) n += r.double_root ? 2 : 1;
  return n;
}

void ConjugateDetector::add_root(double t, bool double_root) {
  if (root_count() < 2) roots_.push_back({t, double_root});
}

bool ConjugateDetector::on_step(const Trajectory& traj, std::size_t i) {
  if (done()) return false;
  const Trajectory::Segment& seg = traj.segments()[i];
  const double t0 = seg.dense.t0;
  const double t1 = seg.dense.t1();
  const auto s0 = GeodesicBundleState::from_vector(t0, seg.start, seg.chart);
  const auto s1 = traj.node(i);
  const double a1 = area(s1);
  const double d0 = area_rate(s0);
  const double d1 = area_rate(s1);
  scale_ = std::max({scale_, std::abs(area(s0)), std::abs(a1)});

  auto area_fn = [&](double t) { return area(traj.segment_state(i, t)); };
  auto rate_fn = [&](double t) { return area_rate(traj.segment_state(i, t)); };

  if (a1 * sign_ < 0.0) {
    add_root(bisect_root(area_fn, t0, t1, options_.root_tol), false);
    sign_ = -sign_;
  } else if (d0 * sign_ < 0.0 && d1 * sign_ > 0.0) {
    // |A| turns back away from zero inside the step: either a hidden pair
    // of roots or a touching double root.
    const double ts = bisect_root(rate_fn, t0, t1, options_.root_tol);
    const double as = area_fn(ts);
    if (as * sign_ < 0.0) {
      add_root(bisect_root(area_fn, t0, ts, options_.root_tol), false);
      add_root(bisect_root(area_fn, ts, t1, options_.root_tol), false);
    } else if (std::abs(as) <= options_.umbilic_area_tol * scale_) {
      add_root(ts, true);
    }
  }
  return !done();
}

StepObserver ConjugateDetector::observer() {
  return [this](const Trajectory& traj, std::size_t i) {
    return on_step(traj, i);
  };
}

ConjugateTimes ConjugateDetector::result(const Trajectory& traj) const {
  if (!done()) {
    throw HorizonTooShort(
        "fewer than two conjugate times before the horizon; raise t_max",
        traj.initial().v, traj.t_end());
  }
  ConjugateTimes out;
  out.area_scale = scale_;
  out.r1 = roots_[0].t;
  if (roots_[0].double_root) {
    out.r2 = out.r1;
    out.sign_changes = 0;
  } else {
    out.r2 = roots_[1].t;
    out.sign_changes = 2;
  }
  out.rate1 = std::abs(area_rate(traj.state_at(out.r1)));
  out.rate2 = std::abs(area_rate(traj.state_at(out.r2)));
  if (out.r2 > out.r1) {
    auto rate_fn = [&](double t) { return area_rate(traj.state_at(t)); };
    const double ra = rate_fn(out.r1), rb = rate_fn(out.r2);
    if ((ra < 0.0) != (rb < 0.0)) {
      const double ts = bisect_root(rate_fn, out.r1, out.r2, options_.root_tol);
      out.min_between = area(traj.state_at(ts));
    } else {
      out.min_between = area(traj.state_at(0.5 * (out.r1 + out.r2)));
    }
  }
  out.kind = classify_gap(out.r2 - out.r1, options_);
  return out;
}

ConjugateTimes find_conjugate_times(const Trajectory& traj,
                                    const ConjugateOptions& options) {
  ConjugateDetector detector(options);
  for (std::size_t i = 0; i < traj.segments().size(); ++i) {
    if (!detector.on_step(traj, i)) break;
  }
  return detector.result(traj);
}

Vec2 combined_field(const GeodesicBundleState& s, double alpha) {
  return s.fields() * Vec2(std::cos(alpha), std::sin(alpha));
}

double alpha_at(const Trajectory& traj, double r, ConjugateKind kind) {
  if (kind == ConjugateKind::umbilic) {
    throw UmbilicAmbiguity(
        "collapse direction is not unique at an umbilic direction");
  }
  const Mat2 c = traj.state_at(r).fields();
  const Eigen::JacobiSVD<Mat2> svd(c, Eigen::ComputeFullV);
  const Vec2 null = svd.matrixV().col(1);
  double alpha = std::atan2(null[1], null[0]);
  if (alpha < 0.0) alpha += kPi;
  if (alpha >= kPi) alpha -= kPi;
  return alpha;
}

double collapse_residual(const Trajectory& traj, double r, double alpha) {
  double peak = 0.0;
  for (std::size_t i = 0; i < traj.segments().size(); ++i) {
    peak = std::max(peak, combined_field(traj.node(i), alpha).norm());
  }
  const double at_r = combined_field(traj.state_at(r), alpha).norm();
  return peak > 0.0 ? at_r / peak : at_r;
}

ConjugateRecord analyse_direction(const Manifold& manifold,
                                  const LaunchSpec& launch,
                                  const IntegratorOptions& integrator,
                                  const ConjugateOptions& options,
                                  Trajectory& trajectory_out) {
  ConjugateDetector detector(options);
  trajectory_out =
      integrate(manifold, launch, integrator, detector.observer());
  const ConjugateTimes times = detector.result(trajectory_out);
  const Trajectory& traj = trajectory_out;

  ConjugateRecord rec;
  rec.velocity = traj.initial().v;
  if (traj.initial().chart != launch.chart) {
    // Launch was moved to the companion chart; report in the launch chart.
    const Mat3 g = manifold.metric_at(launch.base_point, launch.chart);
    rec.velocity =
        launch.velocity / std::sqrt(launch.velocity.dot(g * launch.velocity));
  }
  rec.r1 = times.r1;
  rec.r2 = times.r2;
  rec.kind = times.kind;
  rec.inv_product = 1.0 / (times.r1 * times.r2);
  rec.rate1 = times.rate1;
  rec.rate2 = times.rate2;
  rec.min_between = times.min_between;
  if (times.kind != ConjugateKind::umbilic) {
    rec.alpha1 = alpha_at(traj, times.r1, times.kind);
    rec.alpha2 = alpha_at(traj, times.r2, times.kind);
  }
  const GeodesicBundleState s1 = traj.state_at(times.r1);
  const GeodesicBundleState s2 = traj.state_at(times.r2);
  rec.c1_ambient = ambient_position(manifold, s1);
  rec.c2_ambient = ambient_position(manifold, s2);
  rec.t1_ambient = ambient_vector(manifold, s1, s1.v);
  rec.t2_ambient = ambient_vector(manifold, s2, s2.v);
  rec.c1_chart = manifold.chart_coordinates(rec.c1_ambient, ChartId::primary);
  rec.c2_chart = manifold.chart_coordinates(rec.c2_ambient, ChartId::primary);
  return rec;
}

ConjugateRecord analyse_direction(const Manifold& manifold,
                                  const LaunchSpec& launch,
                                  const IntegratorOptions& integrator,
                                  const ConjugateOptions& options) {
  Trajectory traj;
  return analyse_direction(manifold, launch, integrator, options, traj);
}

ExponentialMapOracle::ExponentialMapOracle(const Manifold& manifold,
                                           const LaunchSpec& launch,
                                           const OracleOptions& options)
    : manifold_(manifold), options_(options), horizon_(launch.t_max) {
  center_ = integrate(manifold, launch, options.integrator);
  // Perturbations are expressed in the launch chart, as is the velocity.
  const Mat3 g = manifold.metric_at(launch.base_point, launch.chart);
  const Vec3 v = launch.velocity /
                 std::sqrt(launch.velocity.dot(g * launch.velocity));
  FramePair frame = launch.frame
                        ? *launch.frame
                        : orthonormal_frame_at(manifold, launch.base_point,
                                               launch.chart, v);
  const std::array<Vec3, 4> dirs{v + options.h * frame.n,
                                 v - options.h * frame.n,
                                 v + options.h * frame.b,
                                 v - options.h * frame.b};
  for (int k = 0; k < 4; ++k) {
    LaunchSpec shifted = launch;
    shifted.velocity = dirs[k];
    shifted.frame.reset();
    shifted_[k] = integrate(manifold, shifted, options.integrator);
  }
}

double ExponentialMapOracle::volume(double t) const {
  const GeodesicBundleState c = center_.state_at(t);
  Eigen::Matrix4d m;
  m.col(0) = manifold_.ambient_normal(c.q, c.chart);
  m.col(1) = ambient_vector(manifold_, c, c.v);
  std::array<Vec4, 4> x;
  for (int k = 0; k < 4; ++k) {
    x[k] = ambient_position(manifold_, shifted_[k].state_at(t));
  }
  m.col(2) = (x[0] - x[1]) / (2.0 * options_.h);
  m.col(3) = (x[2] - x[3]) / (2.0 * options_.h);
  return m.determinant();
}

OracleResult oracle_conjugate_times(const Manifold& manifold,
                                    const LaunchSpec& launch,
                                    const OracleOptions& options) {
  const ExponentialMapOracle oracle(manifold, launch, options);
  auto f = [&](double t) { return oracle.volume(t); };

  std::vector<double> ts;
  for (double t = options.t_start; t <= oracle.horizon(); t += options.scan_step) {
    ts.push_back(t);
  }
  std::vector<double> fs(ts.size());
  double scale = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    fs[k] = f(ts[k]);
    scale = std::max(scale, std::abs(fs[k]));
  }

  std::vector<double> roots;
  double sign = fs.empty() || fs[0] >= 0.0 ? 1.0 : -1.0;
  constexpr double tol = 1e-11;
  for (std::size_t k = 1; k < ts.size() && roots.size() < 2; ++k) {
    if (fs[k] * sign < 0.0) {
      roots.push_back(bisect_root(f, ts[k - 1], ts[k], tol));
      sign = -sign;
      continue;
    }
    if (k + 1 < ts.size() && fs[k] * sign < fs[k - 1] * sign &&
        fs[k] * sign <= fs[k + 1] * sign && fs[k + 1] * sign > 0.0) {
      auto g = [&](double t) { return sign * f(t); };
      const double tm = golden_minimize(g, ts[k - 1], ts[k + 1], tol);
      const double fm = f(tm);
      if (fm * sign < 0.0) {
        roots.push_back(bisect_root(f, ts[k - 1], tm, tol));
        roots.push_back(bisect_root(f, tm, ts[k + 1], tol));
        ++k;  // both crossings of [k-1, k+1] are consumed
      } else if (std::abs(fm) <= 1e-8 * scale) {
        roots.push_back(tm);
        roots.push_back(tm);
      }
    }
  }
  if (roots.size() < 2) {
    throw HorizonTooShort("oracle found fewer than two conjugate times",
                          launch.velocity, launch.t_max);
  }
  return {roots[0], roots[1]};
}

IdentityReport verify_identities(const Manifold& manifold,
                                 const Trajectory& traj,
                                 const ConjugateOptions& options,
                                 bool flat_jacobi) {
  IdentityReport rep;
  constexpr double delta = 0.01;
  auto a = [&](double t) { return area(traj.state_at(t)); };
  const double lo = traj.t_begin() + 2.0 * delta;
  const double hi = traj.t_end() - 2.0 * delta;
  for (const auto& seg : traj.segments()) {
    const double t = 0.5 * (seg.dense.t0 + seg.dense.t1());
    if (t < lo || t > hi) continue;
    const double fm2 = a(t - 2 * delta), fm1 = a(t - delta), f0 = a(t),
                 fp1 = a(t + delta), fp2 = a(t + 2 * delta);
    const double d1_fd = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * delta);
    const double d2_fd =
        (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * delta * delta);

    const GeodesicBundleState s = traj.state_at(t);
    const CurvaturePack pack = manifold.riemann_at(s.q, s.chart);
    const Mat2 m = curvature_matrix(pack, s.v, s.n, s.b);
    const double two_ric = 2.0 * ricci_curvature(pack, s.v);
    const double curvature_trace = flat_jacobi ? 0.0 : two_ric;

    const double d1 = area_rate(s);
    const double d2 = -curvature_trace * area(s) + 2.0 * area_rate_cross(s);
    rep.first_derivative_residual =
        std::max(rep.first_derivative_residual, std::abs(d1_fd - d1));
    rep.second_derivative_residual =
        std::max(rep.second_derivative_residual, std::abs(d2_fd - d2));
    rep.trace_ricci_residual =
        std::max(rep.trace_ricci_residual, std::abs(m.trace() - two_ric));
    ++rep.samples;
  }

  try {
    const ConjugateTimes times = find_conjugate_times(traj, options);
    const bool umbilic = times.kind == ConjugateKind::umbilic;
    for (double r : {times.r1, times.r2}) {
      const double rate = std::abs(area_rate(traj.state_at(r)));
      rep.roots.push_back(r);
      rep.root_rates.push_back(rate);
      rep.root_simple.push_back(!umbilic && rate > options.simple_zero_floor);
    }
  } catch (const HorizonTooShort&) {
    // Report-only: no roots within the horizon.
  }
  return rep;
}

}  // namespace conjloc
