#include "conjloc/locus.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

using namespace conjloc;

namespace {

const SemiAxes kDemo{0.9, 1.05, 1.15, 1.2};
const Vec3 kBase(kPi / 3, 2.3, -kPi / 5);

LocusOptions options_for(const SemiAxes& axes, int n_theta, int n_phi) {
  LocusOptions o;
  o.t_max = 1.25 * kPi * axes.longest();
  o.n_theta = n_theta;
  o.n_phi = n_phi;
  return o;
}

// One coarse network shared by the structural tests.
struct Coarse {
  Ellipsoid manifold{kDemo};
  LocusOptions options = options_for(kDemo, 16, 32);
  SweepResult sweep_result;
  RidgeNetwork network;
};

const Coarse& coarse() {
  static const std::unique_ptr<Coarse> c = [] {
    auto p = std::make_unique<Coarse>();
    const TangentSphereFrame frame = TangentSphereFrame::build(p->manifold, kBase);
    p->sweep_result = sweep(p->manifold, frame, p->options);
    p->network = analyse_ridge_network(p->manifold, p->sweep_result, p->options);
    return p;
  }();
  return *c;
}

double distance_to_polyline(const Vec3& x, const std::vector<Vec3>& pts, bool closed) {
  double best = INFINITY;
  const std::size_t n = pts.size();
  const std::size_t segs = closed ? n : n - 1;
  for (std::size_t k = 0; k < segs; ++k) {
    const Vec3& a = pts[k];
    const Vec3& b = pts[(k + 1) % n];
    const Vec3 d = b - a;
    const double s = std::clamp((x - a).dot(d) / std::max(d.squaredNorm(), 1e-300), 0.0, 1.0);
    best = std::min(best, (x - (a + s * d)).norm());
  }
  return best;
}

PolyLine equator_line(int n, double (*r1)(double)) {
  PolyLine line;
  line.closed = true;
  for (int k = 0; k < n; ++k) {
    const double s = kTwoPi * k / n;
    line.points.emplace_back(std::cos(s), std::sin(s), 0.0);
    line.r1.push_back(r1(s));
    line.r2.push_back(r1(s) + 1.0);
  }
  return line;
}

}  // namespace

TEST_CASE("tangent sphere frame is orthonormal and angles round trip") {
  const Ellipsoid m(kDemo);
  const TangentSphereFrame f = TangentSphereFrame::build(m, kBase);
  const Mat3& g = f.metric();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(f.basis()[i].dot(g * f.basis()[j]) == doctest::Approx(i == j ? 1.0 : 0.0));
  for (double th : {0.2, 1.0, 2.9})
    for (double ph : {0.1, 3.0, 6.0}) {
      const Vec3 u = TangentSphereFrame::unit_from_angles(th, ph);
      CHECK(u.norm() == doctest::Approx(1.0));
      const Vec2 a = TangentSphereFrame::angles_from_unit(u);
      CHECK(a[0] == doctest::Approx(th));
      CHECK(std::remainder(a[1] - ph, kTwoPi) == doctest::Approx(0.0));
      CHECK((f.components(f.velocity(u)) - u).norm() < 1e-12);
    }
  CHECK(sphere_distance(Vec3(1, 0, 0), Vec3(0, 1, 0)) == doctest::Approx(kPi / 2));
  CHECK(sphere_distance(Vec3(0, 0, 1), Vec3(0, 0, 1)) == 0.0);
}

TEST_CASE("sweep output does not depend on the thread count") {
  const Ellipsoid m(kDemo);
  const TangentSphereFrame frame = TangentSphereFrame::build(m, kBase);
  LocusOptions one = options_for(kDemo, 16, 32);
  LocusOptions three = one;
  three.threads = 3;
  const SweepResult a = sweep(m, frame, one);
  const SweepResult b = sweep(m, frame, three);
  REQUIRE(a.records.size() == 16u * 32u);
  REQUIRE(b.records.size() == a.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    CHECK(a.records[k].r1 == b.records[k].r1);
    CHECK(a.records[k].r2 == b.records[k].r2);
    CHECK(a.records[k].kind == b.records[k].kind);
    CHECK(a.records[k].r1 <= a.records[k].r2);
  }
  // Each lattice record matches a direct analysis of its direction.
  const ConjugateRecord direct = analyse_unit(
      m, frame, TangentSphereFrame::unit_from_angles(SweepResult::theta_of(5, 16),
                                                     SweepResult::phi_of(7, 32)),
      one);
  CHECK(direct.r1 == a.at(5, 7).r1);
}

TEST_CASE("sheet vertices are conjugate points and distance spheres nest") {
  const Coarse& c = coarse();
  const SweepResult& s = c.sweep_result;
  for (int sheet : {1, 2}) {
    const SheetMesh mesh = build_sheet(s, sheet);
    REQUIRE(mesh.vertices.size() == s.records.size());
    for (int i = 1; i < s.n_theta; i += 5)
      for (int j = 0; j < s.n_phi; j += 7) {
        const SheetVertex& v = mesh.vertices[i * s.n_phi + j];
        if (v.kind != ConjugateKind::generic) continue;
        LaunchSpec l;
        l.base_point = kBase;
        l.velocity = s.frame.velocity(SweepResult::theta_of(i, s.n_theta),
                                      SweepResult::phi_of(j, s.n_phi));
        l.t_max = c.options.t_max;
        const Trajectory traj = integrate(c.manifold, l);
        const GeodesicBundleState st = traj.state_at(v.r);
        const double scale = std::abs(area(traj.state_at(0.5 * v.r)));
        CHECK(std::abs(area(st)) < 1e-7 * scale);
        CHECK((ambient_position(c.manifold, st) - v.ambient).norm() < 1e-9);
      }
    for (const auto& f : mesh.faces)
      for (int k : f) CHECK(mesh.vertices[k].kind != ConjugateKind::umbilic);
  }
  const auto polar = distance_spheres(s);
  for (std::size_t k = 0; k < s.records.size(); ++k) {
    CHECK(polar[0].r[k] <= polar[1].r[k]);
    CHECK(polar[0].vertices[k].norm() == doctest::Approx(polar[0].r[k]));
  }
}

TEST_CASE("umbilic directions are stable under lattice refinement") {
  const Ellipsoid m(kDemo);
  const TangentSphereFrame frame = TangentSphereFrame::build(m, kBase);
  const LocusOptions lo = options_for(kDemo, 32, 64);
  const LocusOptions hi = options_for(kDemo, 64, 128);
  const UmbilicSearch a = find_umbilic_directions(m, sweep(m, frame, lo), lo);
  const UmbilicSearch b = find_umbilic_directions(m, sweep(m, frame, hi), hi);
  CHECK_FALSE(a.all_sphere);
  REQUIRE(a.directions.size() == b.directions.size());
  CHECK(a.directions.size() >= 2);
  for (const UmbilicDirection& u : a.directions) {
    double best = INFINITY;
    for (const UmbilicDirection& w : b.directions)
      best = std::min(best, sphere_distance(u.unit, w.unit));
    CHECK(best < 1e-4);
    CHECK(u.gap < 1e-6 * u.r);
    const ConjugateRecord rec = analyse_unit(m, frame, u.unit, lo);
    CHECK(rec.r2 - rec.r1 < 1e-5);
  }
}

TEST_CASE("stationary points of R along a closed synthetic line") {
  const PolyLine line = equator_line(400, [](double s) { return 2.0 + 0.1 * std::cos(2 * s); });
  const std::vector<RidgePoint> pts = find_ridges(line, 1, 9);
  REQUIRE(pts.size() == 4);
  int maxima = 0;
  for (const RidgePoint& p : pts) {
    CHECK(p.line_id == 9u);
    CHECK(p.which == 1);
    const double s = std::atan2(p.unit[1], p.unit[0]);
    if (p.type == Extremum::max) {
      ++maxima;
      CHECK(std::abs(std::sin(s)) < 1e-3);
      CHECK(p.r == doctest::Approx(2.1).epsilon(1e-5));
    } else {
      CHECK(std::abs(std::cos(s)) < 1e-3);
      CHECK(p.r == doctest::Approx(1.9).epsilon(1e-5));
    }
  }
  CHECK(maxima == 2);
  const PolyLine flat = equator_line(100, [](double) { return 2.0; });
  CHECK(find_ridges(flat, 1).empty());
}

TEST_CASE("ridge points chain into circles and arcs") {
  std::vector<RidgePoint> circle, arc;
  std::mt19937_64 rng(3);
  for (int k = 0; k < 60; ++k) {
    const double s = kTwoPi * k / 60;
    RidgePoint p;
    p.unit = Vec3(std::cos(s), std::sin(s), 0.0);
    p.r = 3.0;
    circle.push_back(p);
    if (k < 20) {
      RidgePoint q = p;
      q.unit = Vec3(0.0, std::cos(s), std::sin(s));
      arc.push_back(q);
    }
  }
  std::shuffle(circle.begin(), circle.end(), rng);
  std::shuffle(arc.begin(), arc.end(), rng);
  const auto closed = chain_ridge_points(circle);
  REQUIRE(closed.size() == 1);
  CHECK(closed[0].closed);
  CHECK(closed[0].points.size() >= 30);
  const auto open = chain_ridge_points(arc);
  REQUIRE(open.size() == 1);
  CHECK_FALSE(open[0].closed);
  const double ends = sphere_distance(open[0].points.front(), open[0].points.back());
  CHECK(ends == doctest::Approx(kTwoPi * 19 / 60).epsilon(0.05));
}

TEST_CASE("round sphere: every direction is umbilic and there are no ribs") {
  const SemiAxes round{1, 1, 1, 1};
  const Ellipsoid m(round);
  const LocusOptions o = options_for(round, 16, 32);
  const TangentSphereFrame frame = TangentSphereFrame::build(m, kBase);
  const SweepResult s = sweep(m, frame, o);
  for (const ConjugateRecord& r : s.records) {
    CHECK(r.kind == ConjugateKind::umbilic);
    CHECK(r.r1 == doctest::Approx(kPi).epsilon(1e-9));
  }
  CHECK(find_umbilic_directions(m, s, o).all_sphere);
  CHECK_THROWS_AS(evaluate_line_field(m, frame, Vec3(0, 0, 1), LineFamily::u, o),
                  UmbilicAmbiguity);
  const RidgeNetwork net = analyse_ridge_network(m, s, o);
  CHECK(net.umbilics.all_sphere);
  CHECK(net.ribs.ribs.empty());
  CHECK(net.ridges.empty());
}

TEST_CASE("line field is unit and tangent to the sphere") {
  const Coarse& c = coarse();
  for (const Vec3& u : {Vec3(0.3, 0.4, 0.866), Vec3(-0.8, 0.1, 0.59)}) {
    const Vec3 unit = u.normalized();
    const auto fu = evaluate_line_field(c.manifold, c.sweep_result.frame, unit, LineFamily::u, c.options);
    const auto fv = evaluate_line_field(c.manifold, c.sweep_result.frame, unit, LineFamily::v, c.options);
    CHECK(fu.direction.norm() == doctest::Approx(1.0));
    CHECK(std::abs(fu.direction.dot(unit)) < 1e-10);
    CHECK(fu.r1 < fu.r2);
    CHECK(fv.r1 == fu.r1);
  }
}

TEST_CASE("closed coordinate lines are reproduced from another start point") {
  const Coarse& c = coarse();
  int checked = 0;
  for (const CoordinateLine& line : c.network.net.u_lines) {
    if (!line.line.closed || checked == 3) continue;
    CHECK(line.closure_gap < c.options.closure_tol);
    const Vec3 start = line.line.points[line.line.points.size() / 3];
    const CoordinateLine again = jacobi_coordinate_line(
        c.manifold, c.sweep_result.frame, start, LineFamily::u, c.options);
    CHECK(again.line.closed);
    double worst = 0.0;
    for (const Vec3& p : again.line.points)
      worst = std::max(worst, distance_to_polyline(p, line.line.points, true));
    CHECK(worst < 10 * c.options.closure_tol);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("coarse network structure") {
  const Coarse& c = coarse();
  const RidgeNetwork& n = c.network;
  CHECK(n.umbilics.directions.size() == 4);
  CHECK_FALSE(n.ridges.empty());
  const StructureSummary sum = summarize_structure(n, 0.05);
  CHECK(sum.closed_ribs[0] >= 1);
  CHECK(sum.closed_ribs[1] >= 1);
  CHECK(sum.partials_attached);
  CHECK(sum.broken_cycle_closed);
  CHECK(sum.worst_attachment <= 0.05);
  for (const PolyLine& rib : n.ribs.ribs) {
    CHECK(rib.ambient.size() == rib.points.size());
    CHECK((rib.sheet == 1 || rib.sheet == 2));
  }
  // Ridges seen along coordinate lines sit next to sign changes of the
  // sheet Jacobian indicator on the lattice.
  const auto crossings = sheet_rank_deficiency_set(c.manifold, c.sweep_result, 1);
  CHECK_FALSE(crossings.empty());
  double worst = 0.0;
  const double cell = kPi / c.sweep_result.n_theta;
  for (const PolyLine& ridge : n.ridges) {
    if (ridge.label != PolyLineLabel::ridge_r1) continue;
    for (const Vec3& p : ridge.points) {
      double best = INFINITY;
      for (const GridRidgeCrossing& x : crossings)
        best = std::min(best, sphere_distance(p, x.unit));
      worst = std::max(worst, best);
    }
  }
  CHECK(worst < 3 * cell);

  SheetMesh mesh = build_sheet(c.sweep_result, 1);
  mark_ridge_vertices(mesh, c.sweep_result, n.points);
  const auto flagged = std::count_if(mesh.vertices.begin(), mesh.vertices.end(),
                                     [](const SheetVertex& v) { return v.ridge; });
  CHECK(flagged > 0);
  CHECK(static_cast<std::size_t>(flagged) < mesh.vertices.size());
}
