#include "conjloc/manifold.hpp"

#include <doctest.h>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <random>

using namespace conjloc;

namespace {

const SemiAxes kDemo{0.9, 1.05, 1.15, 1.2};

std::vector<Vec3> random_points(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> polar(0.2, kPi - 0.2);
  std::uniform_real_distribution<double> azimuth(-kPi, kPi);
  std::vector<Vec3> out;
  for (int k = 0; k < n; ++k) out.emplace_back(polar(rng), polar(rng), azimuth(rng));
  return out;
}

Mat43 fd_jacobian(const Manifold& m, const Vec3& q, ChartId chart, double h) {
  Mat43 d;
  for (int i = 0; i < 3; ++i) {
    Vec3 p = q, n = q;
    p[i] += h;
    n[i] -= h;
    d.col(i) = (m.embed(p, chart) - m.embed(n, chart)) / (2 * h);
  }
  return d;
}

// Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij), metric differenced.
Christoffel christoffel_oracle(const Ellipsoid& m, const Vec3& q, double h) {
  std::array<Mat3, 3> dg;
  for (int i = 0; i < 3; ++i) {
    Vec3 p = q, n = q;
    p[i] += h;
    n[i] -= h;
    dg[i] = (m.metric_at(p) - m.metric_at(n)) / (2 * h);
  }
  const Mat3 ginv = m.metric_at(q).inverse();
  Christoffel out;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int l = 0; l < 3; ++l) {
          s += 0.5 * ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        }
        out.upper[k](i, j) = s;
      }
  return out;
}

// Gauss equation: R(i,j,k,l) = II_ik II_jl - II_il II_jk with the second
// fundamental form from differenced embedding derivatives.
double gauss_oracle(const Ellipsoid& m, const Vec3& q, int i, int j, int k,
                    int l) {
  const double h = 1e-4;
  const Vec4 n = m.ambient_normal(q, ChartId::primary);
  Mat3 second;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      Vec3 pp = q, pm = q, mp = q, mm = q;
      pp[a] += h; pp[b] += h;
      pm[a] += h; pm[b] -= h;
      mp[a] -= h; mp[b] += h;
      mm[a] -= h; mm[b] -= h;
      const Vec4 d2 = (m.embed(pp) - m.embed(pm) - m.embed(mp) + m.embed(mm)) /
                      (4 * h * h);
      second(a, b) = d2.dot(n);
    }
  return second(i, k) * second(j, l) - second(i, l) * second(j, k);
}

}  // namespace

TEST_CASE("semi-axes and domain validation") {
  CHECK_THROWS_AS(Ellipsoid(SemiAxes{1, 1, 0, 1}), DomainError);
  CHECK_THROWS_AS(Ellipsoid(SemiAxes{1, -1, 1, 1}), DomainError);
  const Ellipsoid m(kDemo);
  CHECK_THROWS_AS(m.embed(Vec3(0.0, 1.0, 0.0)), DomainError);
  CHECK_THROWS_AS(m.metric_at(Vec3(1.0, kPi, 0.0)), DomainError);
  CHECK_THROWS_AS(m.riemann_at(Vec3(1.0, NAN, 0.0)), DomainError);
  CHECK_NOTHROW(m.embed(Vec3(1.0, 1.0, -7.0)));
  CHECK(kDemo.longest() == doctest::Approx(1.2));
  CHECK(SemiAxes{1, 1, 1, 1}.is_round());
  CHECK_FALSE(kDemo.is_round());
}

TEST_CASE("embedding lies on the ellipsoid and the metric is its pullback") {
  const Ellipsoid m(kDemo);
  for (ChartId chart : {ChartId::primary, ChartId::companion}) {
    for (const Vec3& q : random_points(25, 7)) {
      const Vec4 x = m.embed(q, chart);
      const double level = x[0] * x[0] / (0.9 * 0.9) + x[1] * x[1] / (1.05 * 1.05) +
                           x[2] * x[2] / (1.15 * 1.15) + x[3] * x[3] / (1.2 * 1.2);
      CHECK(level == doctest::Approx(1.0).epsilon(1e-14));
      const Mat43 d = fd_jacobian(m, q, chart, 1e-6);
      CHECK((d - m.embed_jacobian(q, chart)).norm() < 1e-8);
      CHECK((d.transpose() * d - m.metric_at(q, chart)).norm() < 1e-8);
      CHECK(std::abs(m.ambient_normal(q, chart).dot(d.col(0))) < 1e-8);
      CHECK((m.chart_coordinates(x, chart) - q).head<2>().norm() < 1e-12);
    }
  }
}

TEST_CASE("christoffel symbols match differenced metric") {
  const Ellipsoid m(kDemo);
  double worst = 0.0;
  for (const Vec3& q : random_points(30, 11)) {
    const Christoffel a = m.christoffel_at(q);
    const Christoffel b = christoffel_oracle(m, q, 1e-5);
    for (int k = 0; k < 3; ++k) worst = std::max(worst, (a.upper[k] - b.upper[k]).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("closed-form curvature agrees with the Gauss equation") {
  const Ellipsoid m(kDemo);
  double worst = 0.0;
  for (const Vec3& q : random_points(30, 13)) {
    const CurvaturePack pack = m.riemann_at(q);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            worst = std::max(worst, std::abs(pack.component(i, j, k, l) -
                                             gauss_oracle(m, q, i, j, k, l)));
          }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("round sphere of radius r has constant curvature 1/r^2") {
  for (double r : {1.0, 2.5}) {
    const Ellipsoid m(SemiAxes{r, r, r, r});
    for (const Vec3& q : random_points(10, 17)) {
      const CurvaturePack pack = m.riemann_at(q);
      const Mat3& g = pack.metric;
      CHECK(pack.r1212 == doctest::Approx(g(0, 0) * g(1, 1) / (r * r)));
      CHECK(pack.r1313 == doctest::Approx(g(0, 0) * g(2, 2) / (r * r)));
      CHECK(pack.r2323 == doctest::Approx(g(1, 1) * g(2, 2) / (r * r)));
      CHECK(sectional_curvature(pack, Vec3(1, 2, 3), Vec3(-1, 0.5, 2)) ==
            doctest::Approx(1.0 / (r * r)));
      CHECK(ricci_curvature(pack, Vec3(1, 0, 0) / std::sqrt(g(0, 0))) ==
            doctest::Approx(1.0 / (r * r)));
    }
  }
}

TEST_CASE("curvature matrix trace is gauge invariant and equals 2 Ric") {
  const Ellipsoid m(kDemo);
  std::mt19937_64 rng(23);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  for (const Vec3& q : random_points(20, 19)) {
    const CurvaturePack pack = m.riemann_at(q);
    const Mat3& g = pack.metric;
    auto ip = [&](const Vec3& a, const Vec3& b) { return a.dot(g * b); };
    Vec3 t(nd(rng), nd(rng), nd(rng));
    t /= std::sqrt(ip(t, t));
    Vec3 n(nd(rng), nd(rng), nd(rng));
    n -= ip(n, t) * t;
    n /= std::sqrt(ip(n, n));
    Vec3 b(nd(rng), nd(rng), nd(rng));
    b -= ip(b, t) * t + ip(b, n) * n;
    b /= std::sqrt(ip(b, b));
    const Mat2 m0 = curvature_matrix(m, q, ChartId::primary, t, n, b);
    CHECK(m0(0, 1) == doctest::Approx(m0(1, 0)));
    CHECK(m0(0, 0) == doctest::Approx(sectional_curvature(pack, t, n)));
    CHECK(m0.trace() == doctest::Approx(2.0 * ricci_curvature(pack, t)).epsilon(1e-12));
    const double beta = angle(rng);
    const Vec3 n2 = std::cos(beta) * n + std::sin(beta) * b;
    const Vec3 b2 = -std::sin(beta) * n + std::cos(beta) * b;
    const Mat2 m1 = curvature_matrix(pack, t, n2, b2);
    CHECK(std::abs(m1.trace() - m0.trace()) < 1e-10);
    CHECK(std::abs(m1.determinant() - m0.determinant()) < 1e-10);
  }
}

TEST_CASE("checked curvature matrix rejects a non-orthonormal frame") {
  const Ellipsoid m(kDemo);
  const Vec3 q(1.0, 2.0, 0.5);
  CHECK_THROWS_AS(curvature_matrix(m, q, ChartId::primary, Vec3(1, 0, 0),
                                   Vec3(0, 1, 0), Vec3(0, 0, 1)),
                  DomainError);
}

TEST_CASE("companion chart covers the primary chart's singular set") {
  const Ellipsoid m(kDemo);
  // Near x1 = x2 = 0: theta or phi close to the primary chart's edge.
  for (const Vec3& q : {Vec3(0.03, 1.2, 0.4), Vec3(1.3, 0.02, -2.0),
                        Vec3(kPi - 0.01, 0.7, 1.0)}) {
    CHECK(m.chart_regularity(q, ChartId::primary) < 0.1);
    const std::array<Vec3, 2> vs{Vec3(0.3, -0.2, 0.1), Vec3(0.0, 1.0, 0.5)};
    const ChartPoint c =
        m.chart_transition(q, vs, ChartId::primary, ChartId::companion);
    CHECK(m.chart_regularity(c.q, ChartId::companion) > 0.5);
    CHECK((m.embed(c.q, ChartId::companion) - m.embed(q)).norm() < 1e-13);
    for (int k = 0; k < 2; ++k) {
      const Vec4 a = m.embed_jacobian(q) * vs[k];
      const Vec4 b = m.embed_jacobian(c.q, ChartId::companion) * c.vectors[k];
      CHECK((a - b).norm() < 1e-10);
    }
    const ChartPoint back =
        m.chart_transition(c.q, c.vectors, ChartId::companion, ChartId::primary);
    CHECK((m.embed(back.q) - m.embed(q)).norm() < 1e-13);
  }
}
