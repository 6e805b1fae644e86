#pragma once

#include "conjloc/config.hpp"
#include "conjloc/locus.hpp"

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace conjloc {

enum class CheckStatus { pass, fail, not_applicable };

std::string_view to_string(CheckStatus status);

struct CheckResult {
  std::string id;  // "1", "3a", "7c", "schema", ...
  std::string title;
  CheckStatus status = CheckStatus::fail;
  std::string detail;
  double seconds = 0.0;
};

// Shared state for a verification run. The sweep and the ridge network are
// computed on first use and reused by later checks.
class VerifyContext {
 public:
  explicit VerifyContext(RunConfig config);
  ~VerifyContext();

  const RunConfig& config() const { return config_; }
  const Ellipsoid& manifold() const { return manifold_; }
  const TangentSphereFrame& frame() const { return frame_; }
  LocusOptions options() const { return config_.locus_options(); }

  const SweepResult& sweep_result();
  const RidgeNetwork& network();

 private:
  RunConfig config_;
  Ellipsoid manifold_;
  TangentSphereFrame frame_;
  std::unique_ptr<SweepResult> sweep_;
  std::unique_ptr<RidgeNetwork> network_;
};

// Criteria are addressed by number ("1" .. "10") or "schema"; a criterion
// may produce several lettered results.
std::vector<std::string> criterion_ids();
std::vector<CheckResult> run_criterion(std::string_view id, VerifyContext& ctx);

std::vector<CheckResult> run_verify(const RunConfig& config,
                                    const std::vector<std::string>& ids,
                                    std::ostream& progress);

std::string format_check(const CheckResult& r);
bool all_passed(const std::vector<CheckResult>& results);

// Curvature tensor from central differences of the Christoffel symbols,
// R(i,j,k,l) = g(R(e_i,e_j)e_l, e_k), positive on spheres.
std::array<double, 81> finite_difference_riemann(const Manifold& manifold,
                                                 const Vec3& q, ChartId chart,
                                                 double h = 1e-5);

// Attach radius (radians on the tangent sphere) used for partial ridges.
inline constexpr double kAttachRadius = 0.05;

}  // namespace conjloc
