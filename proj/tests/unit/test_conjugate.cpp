#include "conjloc/conjugate.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace conjloc;

namespace {

const SemiAxes kDemo{0.9, 1.05, 1.15, 1.2};
const Vec3 kBase(kPi / 3, 2.3, -kPi / 5);

LaunchSpec demo_launch(const Vec3& v) {
  LaunchSpec l;
  l.base_point = kBase;
  l.velocity = v;
  l.t_max = 1.25 * kPi * 1.2;
  return l;
}

// Brute-force collapse angle: scan alpha for the smallest |J_alpha(R)|,
// then golden-section refine.
double alpha_scan_oracle(const Trajectory& traj, double r) {
  const GeodesicBundleState s = traj.state_at(r);
  auto f = [&](double a) { return combined_field(s, a).norm(); };
  double best = 0.0, best_val = INFINITY;
  for (int k = 0; k < 3600; ++k) {
    const double a = kPi * k / 3600;
    if (f(a) < best_val) {
      best_val = f(a);
      best = a;
    }
  }
  double lo = best - kPi / 3600, hi = best + kPi / 3600;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 100; ++it) {
    const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    (f(x1) < f(x2) ? hi : lo) = f(x1) < f(x2) ? x2 : x1;
  }
  double a = 0.5 * (lo + hi);
  if (a < 0.0) a += kPi;
  if (a >= kPi) a -= kPi;
  return a;
}

double angle_gap(double a, double b) {
  const double d = std::fmod(std::abs(a - b), kPi);
  return std::min(d, kPi - d);
}

}  // namespace

TEST_CASE("area scalar and its derivatives at launch") {
  GeodesicBundleState s;
  s.jacobi = {2.0, 3.0, 0.5, -1.0, 5.0, 7.0, 0.25, 4.0};
  CHECK(area(s) == doctest::Approx(2.0 * 7.0 - 5.0 * 3.0));
  CHECK(area_rate(s) == doctest::Approx((0.5 * 7.0 - 0.25 * 3.0) + (2.0 * 4.0 - 5.0 * -1.0)));
  CHECK(area_rate_cross(s) == doctest::Approx(0.5 * 4.0 - 0.25 * -1.0));
  CHECK(combined_field(s, 0.0).isApprox(Vec2(2.0, 3.0)));
}

TEST_CASE("round sphere of radius r: double root at pi r") {
  for (double r : {1.0, 1.7}) {
    const Ellipsoid m(SemiAxes{r, r, r, r});
    LaunchSpec l = demo_launch(Vec3(0.5, -0.2, 0.8));
    l.t_max = 1.25 * kPi * r;
    Trajectory traj;
    const ConjugateRecord rec =
        analyse_direction(m, l, IntegratorOptions{}, ConjugateOptions{}, traj);
    CHECK(rec.kind == ConjugateKind::umbilic);
    CHECK(rec.r1 == doctest::Approx(kPi * r).epsilon(1e-9));
    CHECK(rec.r2 == rec.r1);
    CHECK(std::isnan(rec.alpha1));
    CHECK_THROWS_AS(alpha_at(traj, rec.r1, ConjugateKind::umbilic), UmbilicAmbiguity);
    for (double t : {0.5, 1.5, 2.5}) {
      const double sn = r * std::sin(t / r);
      CHECK(area(traj.state_at(t)) == doctest::Approx(sn * sn).epsilon(1e-8));
    }
  }
}

TEST_CASE("demonstration direction: two simple roots frozen against the oracle") {
  // Frozen from oracle_conjugate_times (differenced exponential map).
  const double kR1 = 3.41539566;
  const double kR2 = 3.63437873;
  const Ellipsoid m(kDemo);
  const LaunchSpec launch = demo_launch(Vec3(-0.730, 0.425, -0.774));
  Trajectory traj;
  const ConjugateRecord rec =
      analyse_direction(m, launch, IntegratorOptions{}, ConjugateOptions{}, traj);
  CHECK(rec.kind == ConjugateKind::generic);
  CHECK(rec.r1 == doctest::Approx(kR1).epsilon(1e-8));
  CHECK(rec.r2 == doctest::Approx(kR2).epsilon(1e-8));
  CHECK(rec.rate1 > 1e-2);
  CHECK(rec.rate2 > 1e-2);
  CHECK(rec.inv_product == doctest::Approx(1.0 / (kR1 * kR2)).epsilon(1e-7));
  const OracleResult o = oracle_conjugate_times(m, launch);
  CHECK(std::abs(o.r1 - rec.r1) < 1e-6);
  CHECK(std::abs(o.r2 - rec.r2) < 1e-6);
  // The sheet points are the geodesic positions at R1, R2.
  CHECK((rec.c1_ambient - ambient_position(m, traj.state_at(rec.r1))).norm() < 1e-12);
  CHECK((rec.c2_ambient - m.embed(rec.c2_chart)).norm() < 1e-9);
}

TEST_CASE("collapse angle agrees with a brute-force scan") {
  const Ellipsoid m(kDemo);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 8; ++k) {
    const Vec3 v(nd(rng), nd(rng), nd(rng));
    Trajectory traj;
    const ConjugateRecord rec = analyse_direction(
        m, demo_launch(v), IntegratorOptions{}, ConjugateOptions{}, traj);
    REQUIRE(rec.kind == ConjugateKind::generic);
    CHECK(angle_gap(rec.alpha1, alpha_scan_oracle(traj, rec.r1)) < 1e-6);
    CHECK(angle_gap(rec.alpha2, alpha_scan_oracle(traj, rec.r2)) < 1e-6);
    CHECK(rec.alpha1 >= 0.0);
    CHECK(rec.alpha1 < kPi);
    CHECK(collapse_residual(traj, rec.r1, rec.alpha1) < 1e-8);
    CHECK(collapse_residual(traj, rec.r2, rec.alpha2) < 1e-8);
    CHECK(rec.r1 < rec.r2);
  }
}

TEST_CASE("frame rotation leaves R unchanged and shifts alpha") {
  const Ellipsoid m(kDemo);
  const LaunchSpec base = demo_launch(Vec3(0.2, 1.0, -0.5));
  const ConjugateRecord ref =
      analyse_direction(m, base, IntegratorOptions{}, ConjugateOptions{});
  const GeodesicBundleState s0 = initial_state(m, base);
  for (double beta : {0.3, 1.1, 2.0, 4.4, 5.9}) {
    LaunchSpec turned = base;
    turned.frame = FramePair{std::cos(beta) * s0.n + std::sin(beta) * s0.b,
                             -std::sin(beta) * s0.n + std::cos(beta) * s0.b};
    const ConjugateRecord rec =
        analyse_direction(m, turned, IntegratorOptions{}, ConjugateOptions{});
    CHECK(std::abs(rec.r1 - ref.r1) < 1e-8);
    CHECK(std::abs(rec.r2 - ref.r2) < 1e-8);
    CHECK(angle_gap(rec.alpha1, ref.alpha1 - beta) < 1e-6);
    CHECK(angle_gap(rec.alpha2, ref.alpha2 - beta) < 1e-6);
  }
}

TEST_CASE("classification bands follow umbilic_tol") {
  const Ellipsoid m(kDemo);
  // Gap about 0.026: generic at the default tolerance, near-umbilic once the
  // band (100 x umbilic_tol) exceeds it, umbilic once umbilic_tol does.
  const LaunchSpec launch = demo_launch(Vec3(-0.36, -0.694, 0.997));
  ConjugateOptions opt;
  CHECK(analyse_direction(m, launch, {}, opt).kind == ConjugateKind::generic);
  opt.umbilic_tol = 1e-3;
  CHECK(analyse_direction(m, launch, {}, opt).kind == ConjugateKind::near_umbilic);
  opt.umbilic_tol = 0.05;
  CHECK(analyse_direction(m, launch, {}, opt).kind == ConjugateKind::umbilic);
}

TEST_CASE("short horizon reports the direction") {
  const Ellipsoid m(kDemo);
  LaunchSpec launch = demo_launch(Vec3(-0.730, 0.425, -0.774));
  launch.t_max = 3.5;  // past R1, before R2
  try {
    analyse_direction(m, launch, {}, {});
    FAIL("expected HorizonTooShort");
  } catch (const HorizonTooShort& e) {
    CHECK(e.horizon() == doctest::Approx(3.5));
    CHECK(e.direction().norm() > 0.0);
  }
}

TEST_CASE("determinant identities hold along trajectories") {
  const Ellipsoid m(kDemo);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 5; ++k) {
    const Trajectory traj =
        integrate(m, demo_launch(Vec3(nd(rng), nd(rng), nd(rng))));
    const IdentityReport rep = verify_identities(m, traj);
    CHECK(rep.samples > 20);
    CHECK(rep.first_derivative_residual < 1e-6);
    CHECK(rep.second_derivative_residual < 1e-5);
    CHECK(rep.trace_ricci_residual < 1e-9);
    REQUIRE(rep.roots.size() == 2);
    CHECK(rep.root_simple[0]);
    CHECK(rep.root_simple[1]);
  }
  IntegratorOptions flat;
  flat.flat_jacobi = true;
  LaunchSpec l = demo_launch(Vec3(1, 0, 0));
  l.t_max = 2.0;
  const IdentityReport rep = verify_identities(m, integrate(m, l, flat), {}, true);
  CHECK(rep.second_derivative_residual < 1e-6);
  CHECK(rep.roots.empty());
}

TEST_CASE("oracle volume vanishes at the conjugate times") {
  const Ellipsoid m(kDemo);
  const LaunchSpec launch = demo_launch(Vec3(0.9, -0.1, 0.3));
  const ConjugateRecord rec = analyse_direction(m, launch, {}, {});
  const ExponentialMapOracle oracle(m, launch, OracleOptions{});
  const double scale = std::abs(oracle.volume(0.5 * rec.r1));
  CHECK(std::abs(oracle.volume(rec.r1)) < 1e-6 * scale);
  CHECK(std::abs(oracle.volume(rec.r2)) < 1e-6 * scale);
}

TEST_CASE("detector is deterministic") {
  const Ellipsoid m(kDemo);
  const LaunchSpec launch = demo_launch(Vec3(0.3, 0.3, 0.3));
  const ConjugateRecord a = analyse_direction(m, launch, {}, {});
  const ConjugateRecord b = analyse_direction(m, launch, {}, {});
  CHECK(a.r1 == b.r1);
  CHECK(a.r2 == b.r2);
  CHECK(a.alpha1 == b.alpha1);
}
