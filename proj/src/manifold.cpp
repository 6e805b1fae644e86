#include "conjloc/manifold.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace conjloc {

namespace {

struct Trig {
  double st, ct, sf, cf, sp, cp;
  explicit Trig(const Vec3& q)
      : st(std::sin(q[0])),
        ct(std::cos(q[0])),
        sf(std::sin(q[1])),
        cf(std::cos(q[1])),
        sp(std::sin(q[2])),
        cp(std::cos(q[2])) {}
};

// Slot permutation: slot i of the chart maps to ambient axis kSlotToAmbient[c][i].
constexpr std::array<std::array<int, 4>, 2> kSlotToAmbient{{{0, 1, 2, 3},
                                                            {2, 3, 0, 1}}};

int bivector_index(int i, int j, double& sign) {
  sign = 1.0;
  if (i > j) {
    std::swap(i, j);
    sign = -1.0;
  }
  if (i == 0 && j == 1) return 0;
  if (i == 0 && j == 2) return 1;
  if (i == 1 && j == 2) return 2;
  sign = 0.0;
  return 0;
}

}  // namespace

const char* to_string(ChartId chart) {
  return chart == ChartId::primary ? "primary" : "companion";
}

ChartId other_chart(ChartId chart) {
  return chart == ChartId::primary ? ChartId::companion : ChartId::primary;
}

Vec3 wedge(const Vec3& x, const Vec3& y) {
  return {x[0] * y[1] - x[1] * y[0], x[0] * y[2] - x[2] * y[0],
          x[1] * y[2] - x[2] * y[1]};
}

double CurvaturePack::component(int i, int j, int k, int l) const {
  double s1 = 0.0, s2 = 0.0;
  const int p = bivector_index(i, j, s1);
  const int r = bivector_index(k, l, s2);
  return s1 * s2 * bivector(p, r);
}

double CurvaturePack::evaluate(const Vec3& x, const Vec3& y, const Vec3& z,
                               const Vec3& w) const {
  return wedge(x, y).dot(bivector * wedge(z, w));
}

ChartPoint Manifold::chart_transition(const Vec3& q,
                                      std::span<const Vec3> vectors,
                                      ChartId from, ChartId to) const {
  ChartPoint out;
  out.chart = to;
  if (from == to) {
    out.q = q;
    out.vectors.assign(vectors.begin(), vectors.end());
    return out;
  }
  const Vec4 x = embed(q, from);
  out.q = chart_coordinates(x, to);
  if (chart_regularity(out.q, to) <= 1e-8) {
    std::ostringstream msg;
    msg << "point singular in both charts at ambient (" << x.transpose()
        << ")";
    throw NumericalError(msg.str());
  }
  const Mat43 d_from = embed_jacobian(q, from);
  const Mat43 d_to = embed_jacobian(out.q, to);
  const Mat3 g_to = d_to.transpose() * d_to;
  const Eigen::PartialPivLU<Mat3> solver(g_to);
  out.vectors.reserve(vectors.size());
  for (const Vec3& v : vectors) {
    const Vec4 w = d_from * v;
    out.vectors.emplace_back(solver.solve(d_to.transpose() * w));
  }
  return out;
}

bool SemiAxes::is_round(double tol) const {
  const auto ax = as_array();
  const auto [lo, hi] = std::minmax_element(ax.begin(), ax.end());
  return *hi - *lo <= tol;
}

double SemiAxes::longest() const {
  const auto ax = as_array();
  return *std::max_element(ax.begin(), ax.end());
}

Ellipsoid::Ellipsoid(SemiAxes axes) : axes_(axes) {
  for (double v : axes_.as_array()) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError("ellipsoid semi-axes must be finite and positive");
    }
  }
}

std::array<double, 4> Ellipsoid::slot_axes(ChartId chart) const {
  const auto ax = axes_.as_array();
  const auto& perm = kSlotToAmbient[static_cast<int>(chart)];
  return {ax[perm[0]], ax[perm[1]], ax[perm[2]], ax[perm[3]]};
}

Vec4 Ellipsoid::slots_to_ambient(const Vec4& s, ChartId chart) const {
  const auto& perm = kSlotToAmbient[static_cast<int>(chart)];
  Vec4 x;
  for (int i = 0; i < 4; ++i) x[perm[i]] = s[i];
  return x;
}

Vec4 Ellipsoid::ambient_to_slots(const Vec4& x, ChartId chart) const {
  const auto& perm = kSlotToAmbient[static_cast<int>(chart)];
  Vec4 s;
  for (int i = 0; i < 4; ++i) s[i] = x[perm[i]];
  return s;
}

void Ellipsoid::check_domain(const Vec3& q) const {
  if (!q.allFinite() || !(q[0] > 0.0 && q[0] < kPi) ||
      !(q[1] > 0.0 && q[1] < kPi)) {
    std::ostringstream msg;
    msg << "chart coordinates (" << q.transpose()
        << ") outside the open domain theta, phi in (0, pi)";
    throw DomainError(msg.str());
  }
}

Vec4 Ellipsoid::embed(const Vec3& q, ChartId chart) const {
  check_domain(q);
  const auto A = slot_axes(chart);
  const Trig t(q);
  const Vec4 s(A[0] * t.st * t.sf * t.cp, A[1] * t.st * t.sf * t.sp,
               A[2] * t.st * t.cf, A[3] * t.ct);
  return slots_to_ambient(s, chart);
}

Mat43 Ellipsoid::embed_jacobian(const Vec3& q, ChartId chart) const {
  const auto A = slot_axes(chart);
  const Trig t(q);
  Mat43 d;
  d.col(0) = Vec4(A[0] * t.ct * t.sf * t.cp, A[1] * t.ct * t.sf * t.sp,
                  A[2] * t.ct * t.cf, -A[3] * t.st);
  d.col(1) = Vec4(A[0] * t.st * t.cf * t.cp, A[1] * t.st * t.cf * t.sp,
                  -A[2] * t.st * t.sf, 0.0);
  d.col(2) = Vec4(-A[0] * t.st * t.sf * t.sp, A[1] * t.st * t.sf * t.cp, 0.0,
                  0.0);
  // Rows are in slot order; permute them into ambient order.
  const auto& perm = kSlotToAmbient[static_cast<int>(chart)];
  Mat43 out;
  for (int i = 0; i < 4; ++i) out.row(perm[i]) = d.row(i);
  return out;
}

Vec3 Ellipsoid::chart_coordinates(const Vec4& x, ChartId chart) const {
  const auto A = slot_axes(chart);
  const Vec4 s = ambient_to_slots(x, chart);
  const Vec4 y(s[0] / A[0], s[1] / A[1], s[2] / A[2], s[3] / A[3]);
  const double rho01 = std::hypot(y[0], y[1]);
  return {std::atan2(std::hypot(rho01, y[2]), y[3]), std::atan2(rho01, y[2]),
          std::atan2(y[1], y[0])};
}

Mat3 Ellipsoid::metric_at(const Vec3& q, ChartId chart) const {
  check_domain(q);
  const Mat43 d = embed_jacobian(q, chart);
  return d.transpose() * d;
}

Christoffel Ellipsoid::christoffel_at(const Vec3& q, ChartId chart) const {
  check_domain(q);
  return riemann_unchecked(q, chart).christoffel;
}

CurvaturePack Ellipsoid::riemann_at(const Vec3& q, ChartId chart) const {
  check_domain(q);
  return riemann_unchecked(q, chart);
}

Vec4 Ellipsoid::ambient_normal(const Vec3& q, ChartId chart) const {
  const Vec4 x = embed(q, chart);
  const auto ax = axes_.as_array();
  Vec4 n;
  for (int i = 0; i < 4; ++i) n[i] = x[i] / (ax[i] * ax[i]);
  return n.normalized();
}

double Ellipsoid::chart_regularity(const Vec3& q, ChartId) const {
  return std::min(std::sin(q[0]), std::sin(q[1]));
}

CurvaturePack Ellipsoid::riemann_unchecked(const Vec3& q,
                                             ChartId chart) const {
  // Everything is computed in slot order, which is an isometry of R^4 away
  // from ambient order, so inner products are unaffected.
  const auto A = slot_axes(chart);
  const Trig t(q);
  const double st = t.st, ct = t.ct, sf = t.sf, cf = t.cf, sp = t.sp,
               cp = t.cp;

  Mat43 d;
  d.col(0) << A[0] * ct * sf * cp, A[1] * ct * sf * sp, A[2] * ct * cf,
      -A[3] * st;
  d.col(1) << A[0] * st * cf * cp, A[1] * st * cf * sp, -A[2] * st * sf, 0.0;
  d.col(2) << -A[0] * st * sf * sp, A[1] * st * sf * cp, 0.0, 0.0;

  // Second derivatives of the embedding, indexed [i][j] for i <= j.
  Vec4 h[3][3];
  h[0][0] << -A[0] * st * sf * cp, -A[1] * st * sf * sp, -A[2] * st * cf,
      -A[3] * ct;
  h[0][1] << A[0] * ct * cf * cp, A[1] * ct * cf * sp, -A[2] * ct * sf, 0.0;
  h[0][2] << -A[0] * ct * sf * sp, A[1] * ct * sf * cp, 0.0, 0.0;
  h[1][1] << -A[0] * st * sf * cp, -A[1] * st * sf * sp, -A[2] * st * cf, 0.0;
  h[1][2] << -A[0] * st * cf * sp, A[1] * st * cf * cp, 0.0, 0.0;
  h[2][2] << -A[0] * st * sf * cp, -A[1] * st * sf * sp, 0.0, 0.0;

  CurvaturePack pack;
  pack.metric = d.transpose() * d;
  const Eigen::PartialPivLU<Mat3> solver(pack.metric);
  if (!(std::abs(pack.metric.determinant()) > 0.0)) {
    throw NumericalError("singular metric in christoffel evaluation");
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      const Vec3 gamma = solver.solve(d.transpose() * h[i][j]);
      for (int k = 0; k < 3; ++k) {
        pack.christoffel.upper[k](i, j) = gamma[k];
        pack.christoffel.upper[k](j, i) = gamma[k];
      }
    }
  }

  // Gauss equation with a second fundamental form diagonal in these
  // coordinates reduces to a single scalar times the round factors.
  const double st2 = st * st, sf2 = sf * sf;
  const double denom =
      st2 * (sf2 * (cp * cp / (A[0] * A[0]) + sp * sp / (A[1] * A[1])) +
             cf * cf / (A[2] * A[2])) +
      ct * ct / (A[3] * A[3]);
  pack.r1212 = st2 / denom;
  pack.r1313 = pack.r1212 * sf2;
  pack.r2323 = pack.r1212 * st2 * sf2;
  pack.bivector.setZero();
  pack.bivector(0, 0) = pack.r1212;
  pack.bivector(1, 1) = pack.r1313;
  pack.bivector(2, 2) = pack.r2323;
  return pack;
}

Mat2 curvature_matrix(const CurvaturePack& pack, const Vec3& t, const Vec3& n,
                      const Vec3& b) {
  const Vec3 tn = wedge(t, n);
  const Vec3 tb = wedge(t, b);
  const Vec3 r_tn = pack.bivector * tn;
  Mat2 m;
  m(0, 0) = tn.dot(r_tn);
  m(0, 1) = tb.dot(r_tn);
  m(1, 0) = m(0, 1);
  m(1, 1) = tb.dot(pack.bivector * tb);
  return m;
}

Mat2 curvature_matrix(const Manifold& manifold, const Vec3& q, ChartId chart,
                      const Vec3& t, const Vec3& n, const Vec3& b) {
  const CurvaturePack pack = manifold.riemann_at(q, chart);
  const std::array<Vec3, 3> frame{t, n, b};
  const double defect = orthonormality_defect(pack.metric, frame);
  if (defect > 1e-6) {
    std::ostringstream msg;
    msg << "curvature_matrix: frame not orthonormal (defect " << defect
        << ")";
    throw DomainError(msg.str());
  }
  return curvature_matrix(pack, t, n, b);
}

double sectional_curvature(const CurvaturePack& pack, const Vec3& x,
                           const Vec3& y) {
  const Mat3& g = pack.metric;
  const double xx = x.dot(g * x), yy = y.dot(g * y), xy = x.dot(g * y);
  return pack.evaluate(x, y, x, y) / (xx * yy - xy * xy);
}

double ricci_curvature(const CurvaturePack& pack, const Vec3& x) {
  const Mat3 ginv = pack.metric.inverse();
  double sum = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d)
          sum += pack.component(a, b, c, d) * x[a] * x[c] * ginv(b, d);
  return sum / 2.0;
}

double orthonormality_defect(const Mat3& metric,
                             std::span<const Vec3> vectors) {
  double worst = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i; j < vectors.size(); ++j) {
      const double gij = vectors[i].dot(metric * vectors[j]);
      worst = std::max(worst, std::abs(gij - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

}  // namespace conjloc
