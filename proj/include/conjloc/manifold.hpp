#pragma once

#include "conjloc/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace conjloc {

// Which coordinate patch a point or vector is expressed in. The companion
// chart is the same spherical-polar parameterisation with the ambient axis
// pairs (x1,x2) and (x3,x4) exchanged, so its singular set {x3 = x4 = 0}
// is disjoint from the primary chart's {x1 = x2 = 0}.
enum class ChartId : std::uint8_t { primary = 0, companion = 1 };

const char* to_string(ChartId chart);
ChartId other_chart(ChartId chart);

// Christoffel symbols of the second kind, upper[k](i, j) = Gamma^k_ij.
struct Christoffel {
  std::array<Mat3, 3> upper{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};

  // Gamma^k_ij x^i y^j
  Vec3 contract(const Vec3& x, const Vec3& y) const {
    return {x.dot(upper[0] * y), x.dot(upper[1] * y), x.dot(upper[2] * y)};
  }
  double operator()(int k, int i, int j) const { return upper[k](i, j); }
};

// Curvature at a point. In three dimensions the Riemann tensor is a
// symmetric operator on bivectors; `bivector` holds it in the coordinate
// basis (e1^e2, e1^e3, e2^e3), so bivector(0,0) = R_1212 and so on.
// Sign convention: R(X,Y,X,Y) = K |X ^ Y|^2, i.e. positive on spheres.
struct CurvaturePack {
  double r1212 = 0.0;
  double r1313 = 0.0;
  double r2323 = 0.0;
  Mat3 bivector = Mat3::Zero();
  Mat3 metric = Mat3::Identity();
  Christoffel christoffel;

  // Full covariant tensor R_ijkl, zero-based indices.
  double component(int i, int j, int k, int l) const;
  // R(X, Y, Z, W)
  double evaluate(const Vec3& x, const Vec3& y, const Vec3& z,
                  const Vec3& w) const;
};

Vec3 wedge(const Vec3& x, const Vec3& y);

struct ChartPoint {
  Vec3 q;
  std::vector<Vec3> vectors;
  ChartId chart = ChartId::primary;
};

// A three-dimensional Riemannian manifold covered by a small atlas and
// isometrically embedded in R^4 (the embedding is used for output and for
// chart transitions).
class Manifold {
 public:
  virtual ~Manifold() = default;

  virtual Vec4 embed(const Vec3& q, ChartId chart) const = 0;
  virtual Mat43 embed_jacobian(const Vec3& q, ChartId chart) const = 0;
  virtual Vec3 chart_coordinates(const Vec4& x, ChartId chart) const = 0;

  virtual Mat3 metric_at(const Vec3& q, ChartId chart) const = 0;
  virtual Christoffel christoffel_at(const Vec3& q, ChartId chart) const = 0;
  virtual CurvaturePack riemann_at(const Vec3& q, ChartId chart) const = 0;
  // Same as riemann_at without the domain check; used inside ODE right-hand
  // sides where stage states may sit marginally outside the open domain.
  virtual CurvaturePack riemann_unchecked(const Vec3& q, ChartId chart) const {
    return riemann_at(q, chart);
  }

  // Unit normal of the embedded hypersurface at q.
  virtual Vec4 ambient_normal(const Vec3& q, ChartId chart) const = 0;

  // Distance-like measure from the chart's coordinate singularity; the
  // integrator switches charts when this drops below switch_threshold().
  virtual double chart_regularity(const Vec3& q, ChartId chart) const = 0;
  virtual double switch_threshold() const { return 0.1; }

  // Re-express a point and tangent vectors in another chart.
  ChartPoint chart_transition(const Vec3& q, std::span<const Vec3> vectors,
                              ChartId from, ChartId to) const;

  // Metric-aware helpers.
  double inner(const Vec3& q, ChartId chart, const Vec3& x,
               const Vec3& y) const {
    return x.dot(metric_at(q, chart) * y);
  }
};

// Semi-axes of the quadraxial ellipsoid x1^2/a^2 + x2^2/b^2 + x3^2/c^2 +
// x4^2/d^2 = 1.
struct SemiAxes {
  double a = 0.9;
  double b = 1.05;
  double c = 1.15;
  double d = 1.2;

  std::array<double, 4> as_array() const { return {a, b, c, d}; }
  bool is_round(double tol = 0.0) const;
  double longest() const;
};

// Chart (theta, phi, psi) -> (a sin(theta) sin(phi) cos(psi),
//   b sin(theta) sin(phi) sin(psi), c sin(theta) cos(phi), d cos(theta)).
// theta, phi live in (0, pi); psi is periodic and accepted for any finite
// value.
class Ellipsoid final : public Manifold {
 public:
  explicit Ellipsoid(SemiAxes axes);

  const SemiAxes& axes() const { return axes_; }

  Vec4 embed(const Vec3& q, ChartId chart = ChartId::primary) const override;
  Mat43 embed_jacobian(const Vec3& q,
                       ChartId chart = ChartId::primary) const override;
  Vec3 chart_coordinates(const Vec4& x,
                         ChartId chart = ChartId::primary) const override;
  Mat3 metric_at(const Vec3& q,
                 ChartId chart = ChartId::primary) const override;
  Christoffel christoffel_at(const Vec3& q,
                             ChartId chart = ChartId::primary) const override;
  CurvaturePack riemann_at(const Vec3& q,
                           ChartId chart = ChartId::primary) const override;
  Vec4 ambient_normal(const Vec3& q,
                      ChartId chart = ChartId::primary) const override;
  double chart_regularity(const Vec3& q, ChartId chart) const override;

  CurvaturePack riemann_unchecked(const Vec3& q,
                                  ChartId chart) const override;

 private:
  std::array<double, 4> slot_axes(ChartId chart) const;
  Vec4 slots_to_ambient(const Vec4& s, ChartId chart) const;
  Vec4 ambient_to_slots(const Vec4& x, ChartId chart) const;
  void check_domain(const Vec3& q) const;

  SemiAxes axes_;
};

// The 2x2 matrix of the Jacobi system in a parallel frame {T, N, B}:
//   [ (T,N,T,N)  (T,N,T,B) ]
//   [ (T,N,T,B)  (T,B,T,B) ]
// Unchecked variant: the caller guarantees orthonormality.
Mat2 curvature_matrix(const CurvaturePack& pack, const Vec3& t, const Vec3& n,
                      const Vec3& b);

// Checked variant; throws DomainError if {T, N, B} deviates from
// orthonormal by more than 1e-6.
Mat2 curvature_matrix(const Manifold& manifold, const Vec3& q, ChartId chart,
                      const Vec3& t, const Vec3& n, const Vec3& b);

double sectional_curvature(const CurvaturePack& pack, const Vec3& x,
                           const Vec3& y);

// Ricci curvature in the normalised convention Ric(x) = Ric(x,x)/(n-1) for
// unit x, computed by full contraction g^{bd} R_abcd x^a x^c.
double ricci_curvature(const CurvaturePack& pack, const Vec3& x);

// Largest |G - I| entry for the Gram matrix of the given vectors.
double orthonormality_defect(const Mat3& metric, std::span<const Vec3> vectors);

}  // namespace conjloc
