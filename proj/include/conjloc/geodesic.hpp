#pragma once

#include "conjloc/manifold.hpp"
#include "conjloc/ode.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace conjloc {

inline constexpr int kStateSize = 20;
using StateVector = ode::Vector<kStateSize>;

// Combined state along a unit-speed geodesic: position and velocity,
// parallel-transported frame vectors N and B, and the frame components of
// the two Jacobi fields J_xi (launched with xi'(0) = 1) and J_eta
// (eta'(0) = 1). Jacobi fields carry no tangential part.
struct GeodesicBundleState {
  double t = 0.0;
  Vec3 q = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 n = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  // (xi1, eta1, xi1', eta1', xi2, eta2, xi2', eta2')
  std::array<double, 8> jacobi{};
  ChartId chart = ChartId::primary;

  // Columns are J_xi and J_eta in the {N, B} frame: [[xi1, xi2], [eta1, eta2]].
  Mat2 fields() const;
  Mat2 field_rates() const;

  StateVector to_vector() const;
  static GeodesicBundleState from_vector(double t, const StateVector& y,
                                         ChartId chart);
};

struct FramePair {
  Vec3 n;
  Vec3 b;
};

// Initial data for one geodesic. The velocity is a raw coordinate vector in
// `chart` at `base_point` and is rescaled to unit metric norm.
struct LaunchSpec {
  Vec3 base_point = Vec3::Zero();
  ChartId chart = ChartId::primary;
  Vec3 velocity = Vec3::Zero();
  double t_max = 0.0;
  // Override for the initial {N, B}; must be orthonormal to the unit velocity.
  std::optional<FramePair> frame;
};

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_initial = 1e-3;
  double h_max = 0.1;
  double h_min = 1e-12;
  std::size_t max_steps = 1'000'000;
  // Test harness: drop the curvature term from the Jacobi equations.
  bool flat_jacobi = false;
};

// Deterministic gauge at p: Gram-Schmidt the coordinate basis vectors
// against the unit tangent t, skipping near-dependent ones, then orient so
// that det[t, N, B] > 0 in chart coordinates.
FramePair orthonormal_frame_at(const Manifold& manifold, const Vec3& p,
                               ChartId chart, const Vec3& t);

// Right-hand side of the combined geodesic / parallel-transport / Jacobi
// system.
StateVector bundle_rhs(const Manifold& manifold, const StateVector& y,
                       ChartId chart, bool flat_jacobi = false);

GeodesicBundleState initial_state(const Manifold& manifold,
                                  const LaunchSpec& launch);

class Trajectory {
 public:
  struct Segment {
    ode::DenseSegment<kStateSize> dense;
    ChartId chart = ChartId::primary;
    StateVector start;
    StateVector end;
  };

  Trajectory() = default;
  explicit Trajectory(GeodesicBundleState initial);

  const GeodesicBundleState& initial() const { return initial_; }
  const std::vector<Segment>& segments() const { return segments_; }
  double t_begin() const { return initial_.t; }
  double t_end() const {
    return segments_.empty() ? initial_.t : segments_.back().dense.t1();
  }
  std::size_t chart_switches() const { return chart_switches_; }

  // Dense-output state at any t in [t_begin, t_end].
  GeodesicBundleState state_at(double t) const;
  GeodesicBundleState segment_state(std::size_t i, double t) const;
  // Exact state at the end of accepted step i.
  GeodesicBundleState node(std::size_t i) const;

  void push(const Segment& segment) { segments_.push_back(segment); }
  void note_chart_switch() { ++chart_switches_; }

 private:
  std::size_t locate(double t) const;

  GeodesicBundleState initial_;
  std::vector<Segment> segments_;
  std::size_t chart_switches_ = 0;
};

// Called after every accepted step with the index of the new segment;
// returning false stops the integration early.
using StepObserver = std::function<bool(const Trajectory&, std::size_t)>;

// Adaptive Dormand-Prince 5(4) integration from t = 0 to launch.t_max with
// transparent chart switching. Throws NumericalError on step underflow.
Trajectory integrate(const Manifold& manifold, const LaunchSpec& launch,
                     const IntegratorOptions& options = {},
                     const StepObserver& observer = {});

// Unit-speed defect |<v,v> - 1| and frame defect of a state.
double speed_defect(const Manifold& manifold, const GeodesicBundleState& s);
double frame_defect(const Manifold& manifold, const GeodesicBundleState& s);

// Position in the ambient R^4.
Vec4 ambient_position(const Manifold& manifold, const GeodesicBundleState& s);
// A tangent vector of the state's chart pushed forward into R^4.
Vec4 ambient_vector(const Manifold& manifold, const GeodesicBundleState& s,
                    const Vec3& v);

}  // namespace conjloc
