#pragma once

#include "conjloc/geodesic.hpp"

#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace conjloc {

enum class ConjugateKind { generic, near_umbilic, umbilic };

std::string_view to_string(ConjugateKind kind);

struct ConjugateOptions {
  // Refined roots closer than this are one double root.
  double umbilic_tol = 1e-5;
  // Gaps below near_umbilic_factor * umbilic_tol are flagged near_umbilic.
  double near_umbilic_factor = 100.0;
  // A touching minimum of |area| below this (relative to max |area|) is a
  // double root even without a sign change.
  double umbilic_area_tol = 1e-8;
  // Bisection width on the dense interpolant.
  double root_tol = 1e-10;
  // |A'(R)| above this counts as a simple zero.
  double simple_zero_floor = 1e-3;
};

// Area scalar [J_xi, J_eta] = xi1 eta2 - xi2 eta1.
double area(const GeodesicBundleState& s);
// [J_xi', J_eta] + [J_xi, J_eta'], the exact derivative of area().
double area_rate(const GeodesicBundleState& s);
// [J_xi', J_eta']
double area_rate_cross(const GeodesicBundleState& s);

struct ConjugateTimes {
  double r1 = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
  ConjugateKind kind = ConjugateKind::generic;
  double rate1 = 0.0;  // |A'(R1)|
  double rate2 = 0.0;  // |A'(R2)|
  double min_between = 0.0;  // extreme area value between R1 and R2
  double area_scale = 0.0;  // max |A| on [0, R2]
  int sign_changes = 0;
};

// Incremental scan of a trajectory's accepted steps for the first two
// zeros of the area scalar. Usable as a StepObserver for early stopping.
class ConjugateDetector {
 public:
  explicit ConjugateDetector(ConjugateOptions options = {});

  // Returns false once two roots (a double root counts twice) are known.
  bool on_step(const Trajectory& traj, std::size_t segment);
  bool done() const { return root_count() >= 2; }
  // Valid when done(); classifies and gathers diagnostics.
  ConjugateTimes result(const Trajectory& traj) const;

  StepObserver observer();

 private:
  struct Root {
    double t;
    bool double_root;
  };
  int root_count() const;
  void add_root(double t, bool double_root);

  ConjugateOptions options_;
  std::vector<Root> roots_;
  double scale_ = 0.0;
  double sign_ = 1.0;
};

// Scans a full trajectory; throws HorizonTooShort if fewer than two roots.
ConjugateTimes find_conjugate_times(const Trajectory& traj,
                                    const ConjugateOptions& options = {});

// Collapse angle at a conjugate time: the null direction of the 2x2 field
// matrix, as a line direction in [0, pi). Throws UmbilicAmbiguity when
// `kind` is umbilic.
double alpha_at(const Trajectory& traj, double r,
                ConjugateKind kind = ConjugateKind::generic);

// |J_alpha(r)| relative to max_t |J_alpha(t)| over accepted nodes.
double collapse_residual(const Trajectory& traj, double r, double alpha);

// Frame components of J_alpha = cos(alpha) J_xi + sin(alpha) J_eta.
Vec2 combined_field(const GeodesicBundleState& s, double alpha);

// Per-direction result.
struct ConjugateRecord {
  double sphere_theta = std::numeric_limits<double>::quiet_NaN();
  double sphere_phi = std::numeric_limits<double>::quiet_NaN();
  Vec3 velocity = Vec3::Zero();  // unit, in the base chart
  double r1 = 0.0;
  double r2 = 0.0;
  double alpha1 = std::numeric_limits<double>::quiet_NaN();
  double alpha2 = std::numeric_limits<double>::quiet_NaN();
  ConjugateKind kind = ConjugateKind::generic;
  double inv_product = 0.0;  // 1 / (R1 R2)
  double rate1 = 0.0;
  double rate2 = 0.0;
  double min_between = 0.0;
  Vec4 c1_ambient = Vec4::Zero();
  Vec4 c2_ambient = Vec4::Zero();
  Vec3 c1_chart = Vec3::Zero();  // primary-chart coordinates
  Vec3 c2_chart = Vec3::Zero();
  Vec4 t1_ambient = Vec4::Zero();  // geodesic tangent at R1, R2
  Vec4 t2_ambient = Vec4::Zero();
};

// Integrate one direction (stopping after the second root) and build its
// record. Throws HorizonTooShort.
ConjugateRecord analyse_direction(const Manifold& manifold,
                                  const LaunchSpec& launch,
                                  const IntegratorOptions& integrator,
                                  const ConjugateOptions& options);

// Lower-level variant that also hands back the trajectory.
ConjugateRecord analyse_direction(const Manifold& manifold,
                                  const LaunchSpec& launch,
                                  const IntegratorOptions& integrator,
                                  const ConjugateOptions& options,
                                  Trajectory& trajectory_out);

// Independent check of R1, R2: central finite differences of the exponential
// map in the two directions orthogonal to the launch velocity, assembled
// into the signed volume det[normal, T, dX/dv1, dX/dv2] in R^4.
struct OracleOptions {
  double h = 1e-5;
  double scan_step = 5e-3;
  double t_start = 0.05;
  IntegratorOptions integrator{1e-12, 1e-14};
};

struct OracleResult {
  double r1 = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
};

OracleResult oracle_conjugate_times(const Manifold& manifold,
                                    const LaunchSpec& launch,
                                    const OracleOptions& options = {});

// Signed oracle volume at time t, exposed for tests.
class ExponentialMapOracle {
 public:
  ExponentialMapOracle(const Manifold& manifold, const LaunchSpec& launch,
                       const OracleOptions& options);
  double volume(double t) const;
  double horizon() const { return horizon_; }

 private:
  const Manifold& manifold_;
  OracleOptions options_;
  Trajectory center_;
  std::array<Trajectory, 4> shifted_;
  double horizon_ = 0.0;
};

struct IdentityReport {
  double first_derivative_residual = 0.0;
  double second_derivative_residual = 0.0;
  double trace_ricci_residual = 0.0;  // |Tr M - 2 Ric(T)|
  std::vector<double> roots;
  std::vector<double> root_rates;  // |A'(R_i)|
  std::vector<bool> root_simple;
  std::size_t samples = 0;
};

// Finite-difference check of d/dt[J1,J2] = [J1',J2] + [J1,J2'] and
// d2/dt2[J1,J2] = -Tr(M)[J1,J2] + 2[J1',J2'] along the trajectory, plus the
// simple-zero test at detected roots.
IdentityReport verify_identities(const Manifold& manifold,
                                 const Trajectory& traj,
                                 const ConjugateOptions& options = {},
                                 bool flat_jacobi = false);

}  // namespace conjloc
