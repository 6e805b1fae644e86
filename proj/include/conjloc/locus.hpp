#pragma once

#include "conjloc/conjugate.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace conjloc {

// Fixed orthonormal basis (E1, E2, E3) of T_pM. Directions on the unit
// tangent sphere are handled as unit 3-vectors of components in this basis;
// sphere angles are v = cos(Theta) E3 + sin(Theta)(cos(Phi) E1 + sin(Phi) E2).
class TangentSphereFrame {
 public:
  // Gram-Schmidt of the chart basis at p, then E'_j = sum_i rotation(i,j) E_i.
  static TangentSphereFrame build(const Manifold& manifold, const Vec3& p,
                                  ChartId chart = ChartId::primary,
                                  const Mat3& rotation = Mat3::Identity());

  const Vec3& base_point() const { return base_point_; }
  ChartId chart() const { return chart_; }
  const std::array<Vec3, 3>& basis() const { return basis_; }
  const Mat3& metric() const { return metric_; }

  static Vec3 unit_from_angles(double theta, double phi);
  static Vec2 angles_from_unit(const Vec3& u);

  // Coordinate velocity for a unit vector of frame components.
  Vec3 velocity(const Vec3& unit) const;
  Vec3 velocity(double theta, double phi) const {
    return velocity(unit_from_angles(theta, phi));
  }
  // Frame components of a coordinate tangent vector.
  Vec3 components(const Vec3& coordinate_vector) const;

 private:
  Vec3 base_point_ = Vec3::Zero();
  ChartId chart_ = ChartId::primary;
  std::array<Vec3, 3> basis_;
  Mat3 metric_ = Mat3::Identity();
};

struct LocusOptions {
  IntegratorOptions integrator;
  ConjugateOptions conjugate;
  double t_max = 0.0;
  int n_theta = 64;
  int n_phi = 128;
  unsigned threads = 1;

  // Jacobi coordinate lines.
  double line_step = 0.02;
  double closure_tol = 5e-3;
  int max_line_steps = 1000;
  // Consecutive line directions with |cos| below this abort the line.
  double alignment_floor = 0.2;

  // Covering family: seeds are dropped when closer than this (radians on
  // the tangent sphere) to an existing line of the same family.
  double line_spacing = 0.08;
  int max_lines_per_family = 80;
  // Seed rings around umbilic directions (radii in radians).
  std::vector<double> umbilic_ring_radii{0.03, 0.06};
  int umbilic_ring_seeds = 8;
};

// --- sweep -----------------------------------------------------------------

struct SweepResult {
  TangentSphereFrame frame;
  int n_theta = 0;
  int n_phi = 0;
  int frame_retries = 0;
  std::vector<ConjugateRecord> records;  // index i * n_phi + j

  const ConjugateRecord& at(int i, int j) const {
    return records[static_cast<std::size_t>(i) * n_phi + j];
  }
  static double theta_of(int i, int n_theta) {
    return (i + 0.5) * kPi / n_theta;
  }
  static double phi_of(int j, int n_phi) { return kTwoPi * j / n_phi; }
};

// Integrate and analyse every lattice direction. Directions are processed
// by a worker pool into preallocated slots, so output order and values do
// not depend on the thread count. A frame whose poles fall in the umbilic
// band is rotated and retried.
SweepResult sweep(const Manifold& manifold, const TangentSphereFrame& frame,
                  const LocusOptions& options);

// Analyse a single tangent-sphere direction given by frame components.
ConjugateRecord analyse_unit(const Manifold& manifold,
                             const TangentSphereFrame& frame, const Vec3& unit,
                             const LocusOptions& options);

struct SheetVertex {
  Vec3 chart = Vec3::Zero();
  Vec4 ambient = Vec4::Zero();
  double r = 0.0;
  ConjugateKind kind = ConjugateKind::generic;
  bool ridge = false;
};

struct SheetMesh {
  int sheet = 1;
  int n_theta = 0;
  int n_phi = 0;
  std::vector<SheetVertex> vertices;
  std::vector<std::array<int, 4>> faces;
};

// Sheet 1 from the R1 points, sheet 2 from the R2 points. Quads touching an
// umbilic-flagged vertex are omitted.
SheetMesh build_sheet(const SweepResult& sweep, int sheet);

// Polar surfaces r = R1 and r = R2 over the lattice, in frame components.
struct PolarMesh {
  int sheet = 1;
  int n_theta = 0;
  int n_phi = 0;
  std::vector<Vec3> vertices;
  std::vector<double> r;
  std::vector<ConjugateKind> kind;
  std::vector<std::array<int, 4>> faces;
};

std::array<PolarMesh, 2> distance_spheres(const SweepResult& sweep);

// --- polylines, coordinate lines, ridges ------------------------------------

enum class PolyLineLabel {
  u_coordinate_line,
  v_coordinate_line,
  ridge_r1,
  ridge_r2,
  rib,
  umbilic_set
};
enum class Extremum { max, min };
enum class LineSpace { tangent_sphere, chart };

std::string_view to_string(PolyLineLabel label);
std::string_view to_string(Extremum e);

struct PolyLine {
  PolyLineLabel label = PolyLineLabel::u_coordinate_line;
  LineSpace space = LineSpace::tangent_sphere;
  bool closed = false;
  std::optional<Extremum> extremum;
  int sheet = 0;  // ribs and ridges: 1 or 2
  std::vector<Vec3> points;
  std::vector<Vec4> ambient;  // ribs only
  std::vector<double> r1;  // per point, when known
  std::vector<double> r2;
};

enum class LineFamily { u, v };

enum class LineTermination {
  closed,
  umbilic_band,
  alignment_lost,
  max_steps,
  integration_failure
};

std::string_view to_string(LineTermination t);

struct LineFieldSample {
  Vec3 unit = Vec3::Zero();
  Vec3 direction = Vec3::Zero();  // unit tangent of the line field, frame components
  double r1 = 0.0;
  double r2 = 0.0;
  double alpha = 0.0;
  ConjugateKind kind = ConjugateKind::generic;
};

// Line field cos(alpha_i) N(0) + sin(alpha_i) B(0) at a sphere direction.
// Throws UmbilicAmbiguity at umbilic directions.
LineFieldSample evaluate_line_field(const Manifold& manifold,
                                    const TangentSphereFrame& frame,
                                    const Vec3& unit, LineFamily family,
                                    const LocusOptions& options);

struct CoordinateLine {
  PolyLine line;
  LineFamily family = LineFamily::u;
  LineTermination forward = LineTermination::max_steps;
  LineTermination backward = LineTermination::max_steps;
  // Closed lines: distance from the first point to the closing segment.
  double closure_gap = 0.0;
};

// Integral curve of the line field through `start` by fourth-order
// Runge-Kutta on the sphere. Open lines are traced in both directions.
CoordinateLine jacobi_coordinate_line(const Manifold& manifold,
                                      const TangentSphereFrame& frame,
                                      const Vec3& start, LineFamily family,
                                      const LocusOptions& options);

struct RidgePoint {
  Vec3 unit = Vec3::Zero();
  double s = 0.0;  // arc length along the source line
  double r = 0.0;
  Extremum type = Extremum::max;
  int which = 1;  // 1: R1 along a u-line, 2: R2 along a v-line
  std::size_t line_id = 0;
};

// Stationary points of R_which along a sampled line. Closed lines are
// treated periodically (the last point is not repeated).
std::vector<RidgePoint> find_ridges(const PolyLine& line, int which,
                                    std::size_t line_id = 0);

struct CoordinateNet {
  std::vector<CoordinateLine> u_lines;
  std::vector<CoordinateLine> v_lines;
};

// Covering family of coordinate lines seeded from the sweep lattice, plus
// rings of seeds around the given umbilic directions so that ridges are
// sampled up to their umbilic endpoints.
CoordinateNet trace_coordinate_net(const Manifold& manifold,
                                   const SweepResult& sweep,
                                   const LocusOptions& options,
                                   const std::vector<Vec3>& umbilics = {});

// --- umbilics ----------------------------------------------------------------

struct UmbilicDirection {
  Vec3 unit = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double r = 0.0;  // common conjugate distance
  double gap = 0.0;  // R2 - R1 after refinement
};

struct UmbilicSearch {
  bool all_sphere = false;  // every lattice direction is umbilic
  std::vector<UmbilicDirection> directions;
  std::vector<std::string> warnings;
};

UmbilicSearch find_umbilic_directions(const Manifold& manifold,
                                      const SweepResult& sweep,
                                      const LocusOptions& options);

// Minimise (R2 - R1)^2 near `seed` with local quadratic models.
UmbilicDirection refine_umbilic(const Manifold& manifold,
                                const TangentSphereFrame& frame,
                                const Vec3& seed, const LocusOptions& options);

// --- ridges and ribs -----------------------------------------------------------

struct ChainOptions {
  // Ridge points further apart than this on the sphere are not linked.
  double link_limit = 0.25;
  // Consecutive chained points closer than this are thinned out.
  double min_spacing = 0.02;
  // Ribs split where an image link exceeds gap_factor * median link.
  double gap_factor = 5.0;
  int min_points = 4;  // shorter chains are dropped as fragments
};

// Nearest-neighbour chaining of ridge points of one family and extremum
// type into tangent-sphere polylines.
std::vector<PolyLine> chain_ridge_points(const std::vector<RidgePoint>& points,
                                         const ChainOptions& options = {});

struct RibAssembly {
  std::vector<PolyLine> ribs;
  std::size_t splits = 0;  // ribs cut at an oversized image gap
};

// Image of ridge polylines under the exponential map at their R values,
// in primary-chart coordinates with the ambient points alongside.
RibAssembly assemble_ribs(const Manifold& manifold,
                          const TangentSphereFrame& frame,
                          const std::vector<PolyLine>& ridges,
                          const LocusOptions& options,
                          const ChainOptions& chain = {});

// Flag sheet vertices within one lattice cell of a ridge point of that sheet.
void mark_ridge_vertices(SheetMesh& mesh, const SweepResult& sweep,
                         const std::vector<RidgePoint>& points);

// Ridge indicator from the sheet Jacobian: finite differences of c_i over
// the lattice applied to the collapsing direction, projected on gamma'.
// Lattice edges where it changes sign (with line-field orientation aligned
// across the edge) carry a ridge crossing.
struct GridRidgeCrossing {
  Vec3 unit = Vec3::Zero();
  int which = 1;
};
std::vector<GridRidgeCrossing> sheet_rank_deficiency_set(
    const Manifold& manifold, const SweepResult& sweep, int which);

// Numerical witness that ds^2 = dR1^2 + |J_v(R1)|^2 dv^2 on sheet 1.
struct LineElementReport {
  std::size_t samples = 0;
  double max_relative_residual = 0.0;
  double max_cross_term = 0.0;
};

LineElementReport sheet_line_element_check(
    const Manifold& manifold, const TangentSphereFrame& frame,
    const std::vector<Vec3>& sample_units, const LocusOptions& options,
    double epsilon = 1e-4);

// --- assembled ridge network ----------------------------------------------------

struct RidgeAttachment {
  std::size_t ridge = 0;
  std::array<int, 2> umbilic{-1, -1};  // nearest umbilic at each end
  std::array<double, 2> distance{0.0, 0.0};  // sphere distance to it
};

struct RidgeNetwork {
  CoordinateNet net;
  std::vector<RidgePoint> points;
  std::vector<PolyLine> ridges;
  RibAssembly ribs;
  UmbilicSearch umbilics;
  std::vector<Vec4> umbilic_images;  // ambient point X(R u) per umbilic
  std::vector<RidgeAttachment> attachments;  // open ridges only
  std::size_t suspect_lines = 0;  // closed lines with < 2 stationary points
};

// Umbilics, covering net, ridge points, chained ridges and ribs.
RidgeNetwork analyse_ridge_network(const Manifold& manifold,
                                   const SweepResult& sweep,
                                   const LocusOptions& options,
                                   const ChainOptions& chain = {});

struct StructureSummary {
  std::array<int, 2> closed_ribs{0, 0};  // per sheet
  std::array<int, 2> partial_ribs{0, 0};
  // Extremum type of the closed ridges per sheet; empty when mixed or none.
  std::array<std::optional<Extremum>, 2> closed_type;
  std::array<std::optional<Extremum>, 2> partial_type;
  double worst_attachment = 0.0;  // largest endpoint-to-umbilic distance
  bool partials_attached = false;
  // Partial ridges and umbilics form one cycle in which every umbilic joins
  // an R1 ridge to an R2 ridge.
  bool broken_cycle_closed = false;
  int broken_cycle_length = 0;
  double worst_image_gap = 0.0;  // partial rib ends vs umbilic images
};

StructureSummary summarize_structure(const RidgeNetwork& network,
                                     double attach_radius);

// Great-circle distance between unit vectors.
double sphere_distance(const Vec3& a, const Vec3& b);

}  // namespace conjloc
