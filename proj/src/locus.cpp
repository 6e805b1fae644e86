#include "conjloc/locus.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

namespace conjloc {

namespace {

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      body(i);
    }
  };
  if (workers == 1) {
    run();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
}

Vec3 normalized(const Vec3& x) { return x / x.norm(); }

// Orthonormal pair spanning the tangent plane of S^2 at u.
std::pair<Vec3, Vec3> sphere_tangent_basis(const Vec3& u) {
  Vec3 seed = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 a = normalized(seed - seed.dot(u) * u);
  return {a, u.cross(a)};
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return (a + s * ab - p).norm();
}

}  // namespace

double sphere_distance(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

// --- frame --------------------------------------------------------------------

TangentSphereFrame TangentSphereFrame::build(const Manifold& manifold,
                                             const Vec3& p, ChartId chart,
                                             const Mat3& rotation) {
  TangentSphereFrame f;
  f.base_point_ = p;
  f.chart_ = chart;
  f.metric_ = manifold.metric_at(p, chart);
  const Mat3& g = f.metric_;
  auto ip = [&](const Vec3& x, const Vec3& y) { return x.dot(g * y); };
  std::array<Vec3, 3> e;
  for (int k = 0; k < 3; ++k) {
    Vec3 w = Vec3::Unit(k);
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < k; ++j) w -= ip(w, e[j]) * e[j];
    }
    e[k] = w / std::sqrt(ip(w, w));
  }
  if ((rotation.transpose() * rotation - Mat3::Identity()).norm() > 1e-12) {
    throw DomainError("frame rotation is not orthogonal");
  }
  for (int j = 0; j < 3; ++j) {
    f.basis_[j] = rotation(0, j) * e[0] + rotation(1, j) * e[1] +
                  rotation(2, j) * e[2];
  }
  return f;
}

Vec3 TangentSphereFrame::unit_from_angles(double theta, double phi) {
  return Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
              std::cos(theta));
}

Vec2 TangentSphereFrame::angles_from_unit(const Vec3& u) {
  const double theta = std::atan2(std::hypot(u.x(), u.y()), u.z());
  double phi = std::atan2(u.y(), u.x());
  if (phi < 0.0) phi += kTwoPi;
  return Vec2(theta, phi);
}

Vec3 TangentSphereFrame::velocity(const Vec3& unit) const {
  return unit.x() * basis_[0] + unit.y() * basis_[1] + unit.z() * basis_[2];
}

Vec3 TangentSphereFrame::components(const Vec3& x) const {
  const Vec3 gx = metric_ * x;
  return Vec3(basis_[0].dot(gx), basis_[1].dot(gx), basis_[2].dot(gx));
}

// --- sweep --------------------------------------------------------------------

ConjugateRecord analyse_unit(const Manifold& manifold,
                             const TangentSphereFrame& frame, const Vec3& unit,
                             const LocusOptions& options) {
  LaunchSpec launch;
  launch.base_point = frame.base_point();
  launch.chart = frame.chart();
  launch.velocity = frame.velocity(normalized(unit));
  launch.t_max = options.t_max;
  ConjugateRecord rec =
      analyse_direction(manifold, launch, options.integrator, options.conjugate);
  const Vec2 angles = TangentSphereFrame::angles_from_unit(unit);
  rec.sphere_theta = angles[0];
  rec.sphere_phi = angles[1];
  return rec;
}

SweepResult sweep(const Manifold& manifold, const TangentSphereFrame& frame,
                  const LocusOptions& options) {
  if (options.n_theta < 16 || options.n_phi < 32) {
    throw ConfigError("sweep: grid resolution must be at least 16x32");
  }
  SweepResult out;
  out.n_theta = options.n_theta;
  out.n_phi = options.n_phi;
  out.frame = frame;

  // Move the lattice poles off umbilic directions.
  constexpr int kMaxRetries = 4;
  for (int attempt = 0;; ++attempt) {
    bool pole_in_band = false;
    for (double sign : {1.0, -1.0}) {
      const ConjugateRecord rec =
          analyse_unit(manifold, out.frame, Vec3(0, 0, sign), options);
      if (rec.kind != ConjugateKind::generic) pole_in_band = true;
    }
    if (!pole_in_band || attempt == kMaxRetries) break;
    const Mat3 turn =
        Eigen::AngleAxisd(0.3 + 0.1 * attempt, Vec3(1, 1, 0).normalized())
            .toRotationMatrix();
    const TangentSphereFrame plain =
        TangentSphereFrame::build(manifold, frame.base_point(), frame.chart());
    Mat3 current;
    for (int j = 0; j < 3; ++j) current.col(j) = plain.components(out.frame.basis()[j]);
    out.frame = TangentSphereFrame::build(manifold, frame.base_point(),
                                          frame.chart(), current * turn);
    ++out.frame_retries;
  }

  const std::size_t n =
      static_cast<std::size_t>(out.n_theta) * static_cast<std::size_t>(out.n_phi);
  out.records.resize(n);
  std::vector<std::exception_ptr> errors(n);
  parallel_for(n, options.threads, [&](std::size_t k) {
    const int i = static_cast<int>(k / out.n_phi);
    const int j = static_cast<int>(k % out.n_phi);
    try {
      const Vec3 u = TangentSphereFrame::unit_from_angles(
          SweepResult::theta_of(i, out.n_theta),
          SweepResult::phi_of(j, out.n_phi));
      out.records[k] = analyse_unit(manifold, out.frame, u, options);
      out.records[k].sphere_theta = SweepResult::theta_of(i, out.n_theta);
      out.records[k].sphere_phi = SweepResult::phi_of(j, out.n_phi);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  });
  for (std::size_t k = 0; k < n; ++k) {
    if (!errors[k]) continue;
    const int i = static_cast<int>(k / out.n_phi);
    const int j = static_cast<int>(k % out.n_phi);
    std::ostringstream where;
    where << "sweep aborted at lattice direction (Theta, Phi) = ("
          << SweepResult::theta_of(i, out.n_theta) << ", "
          << SweepResult::phi_of(j, out.n_phi) << "): ";
    try {
      std::rethrow_exception(errors[k]);
    } catch (const HorizonTooShort& e) {
      throw HorizonTooShort(where.str() + e.what(), e.direction(), e.horizon());
    } catch (const NumericalError& e) {
      throw NumericalError(where.str() + e.what());
    }
  }
  return out;
}

SheetMesh build_sheet(const SweepResult& sweep, int sheet) {
  if (sheet != 1 && sheet != 2) throw DomainError("sheet must be 1 or 2");
  SheetMesh mesh;
  mesh.sheet = sheet;
  mesh.n_theta = sweep.n_theta;
  mesh.n_phi = sweep.n_phi;
  mesh.vertices.reserve(sweep.records.size());
  for (const ConjugateRecord& rec : sweep.records) {
    SheetVertex v;
    v.chart = sheet == 1 ? rec.c1_chart : rec.c2_chart;
    v.ambient = sheet == 1 ? rec.c1_ambient : rec.c2_ambient;
    v.r = sheet == 1 ? rec.r1 : rec.r2;
    v.kind = rec.kind;
    mesh.vertices.push_back(v);
  }
  auto index = [&](int i, int j) { return i * sweep.n_phi + (j % sweep.n_phi); };
  for (int i = 0; i + 1 < sweep.n_theta; ++i) {
    for (int j = 0; j < sweep.n_phi; ++j) {
      const std::array<int, 4> quad{index(i, j), index(i + 1, j),
                                    index(i + 1, j + 1), index(i, j + 1)};
      const bool degenerate = std::any_of(quad.begin(), quad.end(), [&](int k) {
        return mesh.vertices[k].kind == ConjugateKind::umbilic;
      });
      if (!degenerate) mesh.faces.push_back(quad);
    }
  }
  return mesh;
}

void mark_ridge_vertices(SheetMesh& mesh, const SweepResult& sweep,
                         const std::vector<RidgePoint>& points) {
  const double cell = kPi / sweep.n_theta;
  for (int i = 0; i < sweep.n_theta; ++i) {
    for (int j = 0; j < sweep.n_phi; ++j) {
      const Vec3 u = TangentSphereFrame::unit_from_angles(
          SweepResult::theta_of(i, sweep.n_theta),
          SweepResult::phi_of(j, sweep.n_phi));
      SheetVertex& v = mesh.vertices[static_cast<std::size_t>(i) * sweep.n_phi + j];
      v.ridge = std::any_of(points.begin(), points.end(), [&](const RidgePoint& p) {
        return p.which == mesh.sheet && sphere_distance(p.unit, u) <= cell;
      });
    }
  }
}

std::array<PolarMesh, 2> distance_spheres(const SweepResult& sweep) {
  std::array<PolarMesh, 2> out;
  for (int s = 0; s < 2; ++s) {
    PolarMesh& m = out[s];
    m.sheet = s + 1;
    m.n_theta = sweep.n_theta;
    m.n_phi = sweep.n_phi;
    for (int i = 0; i < sweep.n_theta; ++i) {
      for (int j = 0; j < sweep.n_phi; ++j) {
        const ConjugateRecord& rec = sweep.at(i, j);
        const double r = s == 0 ? rec.r1 : rec.r2;
        m.vertices.push_back(
            r * TangentSphereFrame::unit_from_angles(
                    SweepResult::theta_of(i, sweep.n_theta),
                    SweepResult::phi_of(j, sweep.n_phi)));
        m.r.push_back(r);
        m.kind.push_back(rec.kind);
      }
    }
    for (int i = 0; i + 1 < sweep.n_theta; ++i) {
      for (int j = 0; j < sweep.n_phi; ++j) {
        const int j1 = (j + 1) % sweep.n_phi;
        m.faces.push_back({i * sweep.n_phi + j, (i + 1) * sweep.n_phi + j,
                           (i + 1) * sweep.n_phi + j1, i * sweep.n_phi + j1});
      }
    }
  }
  return out;
}

// --- labels -------------------------------------------------------------------

std::string_view to_string(PolyLineLabel label) {
  switch (label) {
    case PolyLineLabel::u_coordinate_line:
      return "u_coordinate_line";
    case PolyLineLabel::v_coordinate_line:
      return "v_coordinate_line";
    case PolyLineLabel::ridge_r1:
      return "ridge_R1";
    case PolyLineLabel::ridge_r2:
      return "ridge_R2";
    case PolyLineLabel::rib:
      return "rib";
    case PolyLineLabel::umbilic_set:
      return "umbilic_set";
  }
  return "unknown";
}

std::string_view to_string(Extremum e) {
  return e == Extremum::max ? "max" : "min";
}

std::string_view to_string(LineTermination t) {
  switch (t) {
    case LineTermination::closed:
      return "closed";
    case LineTermination::umbilic_band:
      return "umbilic_band";
    case LineTermination::alignment_lost:
      return "alignment_lost";
    case LineTermination::max_steps:
      return "max_steps";
    case LineTermination::integration_failure:
      return "integration_failure";
  }
  return "unknown";
}

// --- coordinate lines ---------------------------------------------------------

LineFieldSample evaluate_line_field(const Manifold& manifold,
                                    const TangentSphereFrame& frame,
                                    const Vec3& unit, LineFamily family,
                                    const LocusOptions& options) {
  const Vec3 u = normalized(unit);
  const ConjugateRecord rec = analyse_unit(manifold, frame, u, options);
  LineFieldSample s;
  s.unit = u;
  s.r1 = rec.r1;
  s.r2 = rec.r2;
  s.kind = rec.kind;
  if (rec.kind == ConjugateKind::umbilic) {
    throw UmbilicAmbiguity("line field is undefined at an umbilic direction");
  }
  s.alpha = family == LineFamily::u ? rec.alpha1 : rec.alpha2;
  const Vec3 v = frame.velocity(u);
  const FramePair nb =
      orthonormal_frame_at(manifold, frame.base_point(), frame.chart(), v);
  const Vec3 w = std::cos(s.alpha) * nb.n + std::sin(s.alpha) * nb.b;
  s.direction = frame.components(w);
  return s;
}

namespace {

struct HalfLine {
  std::vector<LineFieldSample> samples;
  LineTermination termination = LineTermination::max_steps;
  double closure_gap = 0.0;
};

HalfLine trace_half(const Manifold& manifold, const TangentSphereFrame& frame,
                    const LineFieldSample& first, double sign,
                    LineFamily family, const LocusOptions& options,
                    bool allow_closure) {
  HalfLine out;
  out.samples.push_back(first);
  const double h = options.line_step;
  const Vec3 start = first.unit;
  Vec3 u = first.unit;
  Vec3 d = sign * first.direction;

  auto eval = [&](const Vec3& x, LineFieldSample& s) {
    try {
      s = evaluate_line_field(manifold, frame, x, family, options);
    } catch (const UmbilicAmbiguity&) {
      out.termination = LineTermination::umbilic_band;
      return false;
    } catch (const NumericalError&) {
      out.termination = LineTermination::integration_failure;
      return false;
    }
    if (s.kind != ConjugateKind::generic) {
      out.termination = LineTermination::umbilic_band;
      return false;
    }
    return true;
  };
  // Lift of the line field at x aligned with the reference direction.
  auto aligned = [&](const Vec3& x, const Vec3& ref, Vec3& k,
                     LineFieldSample& s) {
    if (!eval(x, s)) return false;
    const double c = s.direction.dot(ref);
    if (std::abs(c) < options.alignment_floor) {
      out.termination = LineTermination::alignment_lost;
      return false;
    }
    k = c < 0.0 ? Vec3(-s.direction) : s.direction;
    return true;
  };

  for (int step = 1; step <= options.max_line_steps; ++step) {
    LineFieldSample s2, s3, s4, s_new;
    Vec3 k2, k3, k4, d_new;
    const Vec3& k1 = d;
    if (!aligned(normalized(u + 0.5 * h * k1), k1, k2, s2)) return out;
    if (!aligned(normalized(u + 0.5 * h * k2), k1, k3, s3)) return out;
    if (!aligned(normalized(u + h * k3), k1, k4, s4)) return out;
    const Vec3 u_new = normalized(u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    if (!aligned(u_new, k1, d_new, s_new)) return out;
    if (allow_closure && step >= 10) {
      const double gap = point_segment_distance(start, u, u_new);
      if (gap < options.closure_tol) {
        out.termination = LineTermination::closed;
        out.closure_gap = gap;
        return out;
      }
    }
    out.samples.push_back(s_new);
    u = u_new;
    d = d_new;
  }
  out.termination = LineTermination::max_steps;
  return out;
}

}  // namespace

CoordinateLine jacobi_coordinate_line(const Manifold& manifold,
                                      const TangentSphereFrame& frame,
                                      const Vec3& start, LineFamily family,
                                      const LocusOptions& options) {
  const LineFieldSample first =
      evaluate_line_field(manifold, frame, start, family, options);
  if (first.kind != ConjugateKind::generic) {
    throw DomainError("coordinate line seed lies in the near-umbilic band");
  }
  CoordinateLine out;
  out.family = family;
  out.line.label = family == LineFamily::u ? PolyLineLabel::u_coordinate_line
                                           : PolyLineLabel::v_coordinate_line;
  HalfLine fwd = trace_half(manifold, frame, first, 1.0, family, options, true);
  out.forward = fwd.termination;
  std::vector<LineFieldSample> samples;
  if (fwd.termination == LineTermination::closed) {
    out.backward = LineTermination::closed;
    out.line.closed = true;
    out.closure_gap = fwd.closure_gap;
    samples = std::move(fwd.samples);
  } else {
    HalfLine bwd =
        trace_half(manifold, frame, first, -1.0, family, options, false);
    out.backward = bwd.termination;
    samples.assign(bwd.samples.rbegin(), bwd.samples.rend());
    samples.insert(samples.end(), fwd.samples.begin() + 1, fwd.samples.end());
  }
  for (const LineFieldSample& s : samples) {
    out.line.points.push_back(s.unit);
    out.line.r1.push_back(s.r1);
    out.line.r2.push_back(s.r2);
  }
  return out;
}

std::vector<RidgePoint> find_ridges(const PolyLine& line, int which,
                                    std::size_t line_id) {
  if (which != 1 && which != 2) throw DomainError("which must be 1 or 2");
  const std::vector<double>& r = which == 1 ? line.r1 : line.r2;
  const std::size_t n = line.points.size();
  if (r.size() != n) throw DomainError("find_ridges: line carries no R values");
  std::vector<RidgePoint> out;
  if (n < 5) return out;
  const bool closed = line.closed;

  std::vector<double> s(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    s[k] = s[k - 1] + (line.points[k] - line.points[k - 1]).norm();
  }
  const double length =
      closed ? s[n - 1] + (line.points[0] - line.points[n - 1]).norm() : s[n - 1];
  // Arc position of sample k + offset, unwrapped across the seam.
  auto pos = [&](long k) {
    const long m = static_cast<long>(n);
    const long wraps = (k >= 0 ? k / m : (k - m + 1) / m);
    return s[static_cast<std::size_t>(k - wraps * m)] + wraps * length;
  };
  auto val = [&](long k) {
    const long m = static_cast<long>(n);
    return r[static_cast<std::size_t>(((k % m) + m) % m)];
  };

  const long lo = closed ? 0 : 1;
  const long hi = closed ? static_cast<long>(n) : static_cast<long>(n) - 1;
  std::vector<double> d(n, 0.0);
  for (long k = lo; k < hi; ++k) {
    d[static_cast<std::size_t>(k)] =
        (val(k + 1) - val(k - 1)) / (pos(k + 1) - pos(k - 1));
  }
  auto deriv = [&](long k) {
    const long m = static_cast<long>(n);
    return d[static_cast<std::size_t>(((k % m) + m) % m)];
  };

  const long last = closed ? static_cast<long>(n) : static_cast<long>(n) - 2;
  for (long k = lo; k < last; ++k) {
    const double a = deriv(k), b = deriv(k + 1);
    if ((a >= 0.0) == (b >= 0.0)) continue;
    long m = std::abs(a) <= std::abs(b) ? k : k + 1;
    if (!closed) m = std::clamp<long>(m, 1, static_cast<long>(n) - 2);
    const double x0 = pos(m - 1) - pos(m), x2 = pos(m + 1) - pos(m);
    const double y0 = val(m - 1), y1 = val(m), y2 = val(m + 1);
    // Parabola y = c + b x + a x^2 through (x0,y0), (0,y1), (x2,y2).
    const double qa = ((y2 - y1) / x2 - (y0 - y1) / x0) / (x2 - x0);
    const double qb = (y2 - y1) / x2 - qa * x2;
    if (qa == 0.0) continue;
    double xv = -qb / (2.0 * qa);
    xv = std::clamp(xv, x0, x2);

    RidgePoint p;
    p.which = which;
    p.line_id = line_id;
    p.type = qa < 0.0 ? Extremum::max : Extremum::min;
    p.r = y1 + qb * xv + qa * xv * xv;
    double target = pos(m) + xv;
    if (closed) target = std::fmod(std::fmod(target, length) + length, length);
    p.s = target;
    // Locate target on the polyline.
    long seg = static_cast<long>(
        std::upper_bound(s.begin(), s.end(), target) - s.begin()) - 1;
    seg = std::clamp<long>(seg, 0, static_cast<long>(n) - 1);
    const Vec3& a0 = line.points[static_cast<std::size_t>(seg)];
    Vec3 a1;
    double seg_len;
    if (seg + 1 < static_cast<long>(n)) {
      a1 = line.points[static_cast<std::size_t>(seg + 1)];
      seg_len = s[static_cast<std::size_t>(seg + 1)] - s[static_cast<std::size_t>(seg)];
    } else {
      a1 = line.points[0];
      seg_len = length - s[n - 1];
    }
    const double f =
        seg_len > 0.0 ? (target - s[static_cast<std::size_t>(seg)]) / seg_len : 0.0;
    const Vec3 x = a0 + std::clamp(f, 0.0, 1.0) * (a1 - a0);
    p.unit = line.space == LineSpace::tangent_sphere ? normalized(x) : x;
    out.push_back(p);
  }
  return out;
}

CoordinateNet trace_coordinate_net(const Manifold& manifold,
                                   const SweepResult& sweep,
                                   const LocusOptions& options,
                                   const std::vector<Vec3>& umbilics) {
  CoordinateNet net;
  std::vector<Vec3> ring_seeds;
  for (const Vec3& c : umbilics) {
    const auto [a, b] = sphere_tangent_basis(normalized(c));
    for (double radius : options.umbilic_ring_radii) {
      for (int k = 0; k < options.umbilic_ring_seeds; ++k) {
        const double ang = kTwoPi * k / options.umbilic_ring_seeds;
        ring_seeds.push_back(normalized(
            normalized(c) +
            std::tan(radius) * (std::cos(ang) * a + std::sin(ang) * b)));
      }
    }
  }
  // Seeds from a coarse sub-lattice, visited in lattice order.
  const int di = std::max(1, sweep.n_theta / 16);
  const int dj = std::max(1, sweep.n_phi / 16);
  std::vector<Vec3> seeds;
  for (int i = di / 2; i < sweep.n_theta; i += di) {
    for (int j = 0; j < sweep.n_phi; j += dj) {
      const ConjugateRecord& rec = sweep.at(i, j);
      if (rec.kind != ConjugateKind::generic) continue;
      seeds.push_back(TangentSphereFrame::unit_from_angles(
          SweepResult::theta_of(i, sweep.n_theta),
          SweepResult::phi_of(j, sweep.n_phi)));
    }
  }
  for (LineFamily family : {LineFamily::u, LineFamily::v}) {
    std::vector<CoordinateLine>& lines =
        family == LineFamily::u ? net.u_lines : net.v_lines;
    const std::size_t lattice_lines_end = seeds.size();
    std::vector<Vec3> all_seeds = seeds;
    all_seeds.insert(all_seeds.end(), ring_seeds.begin(), ring_seeds.end());
    int traced = 0;
    for (std::size_t si = 0; si < all_seeds.size(); ++si) {
      const Vec3& seed = all_seeds[si];
      const bool ring = si >= lattice_lines_end;
      if (!ring && traced >= options.max_lines_per_family) continue;
      // Ring seeds only need to avoid duplicating a line exactly.
      const double spacing =
          ring ? 0.1 * options.line_spacing : options.line_spacing;
      bool covered = false;
      for (const CoordinateLine& l : lines) {
        for (const Vec3& p : l.line.points) {
          if (sphere_distance(p, seed) < spacing) {
            covered = true;
            break;
          }
        }
        if (covered) break;
      }
      if (covered) continue;
      try {
        lines.push_back(
            jacobi_coordinate_line(manifold, sweep.frame, seed, family, options));
        ++traced;
      } catch (const DomainError&) {
        continue;
      } catch (const UmbilicAmbiguity&) {
        continue;
      }
    }
  }
  return net;
}

// --- umbilics -------------------------------------------------------------------

UmbilicDirection refine_umbilic(const Manifold& manifold,
                                const TangentSphereFrame& frame,
                                const Vec3& seed, const LocusOptions& options) {
  Vec3 u = normalized(seed);
  auto gap2 = [&](const Vec3& x) {
    const ConjugateRecord rec = analyse_unit(manifold, frame, x, options);
    const double g = rec.r2 - rec.r1;
    return g * g;
  };
  double f0 = gap2(u);
  double rho = 0.02;
  for (int it = 0; it < 60 && f0 > 1e-20 && rho > 1e-10; ++it) {
    const auto [a, b] = sphere_tangent_basis(u);
    auto at = [&](double x, double y) { return gap2(normalized(u + x * a + y * b)); };
    const double fxp = at(rho, 0), fxm = at(-rho, 0);
    const double fyp = at(0, rho), fym = at(0, -rho);
    const double fxy = at(rho, rho);
    const Vec2 grad((fxp - fxm) / (2 * rho), (fyp - fym) / (2 * rho));
    Mat2 hess;
    hess(0, 0) = (fxp - 2 * f0 + fxm) / (rho * rho);
    hess(1, 1) = (fyp - 2 * f0 + fym) / (rho * rho);
    hess(0, 1) = hess(1, 0) = (fxy - fxp - fyp + f0) / (rho * rho);
    Vec2 step;
    if (hess(0, 0) > 0.0 && hess.determinant() > 0.0) {
      step = -hess.inverse() * grad;
    } else {
      step = -rho * grad / std::max(grad.norm(), 1e-300);
    }
    if (step.norm() > 4.0 * rho) step *= 4.0 * rho / step.norm();
    const Vec3 cand = normalized(u + step[0] * a + step[1] * b);
    const double fc = gap2(cand);
    if (fc < f0) {
      u = cand;
      f0 = fc;
      rho = std::clamp(0.5 * step.norm(), 1e-10, 0.02);
    } else {
      rho *= 0.25;
    }
  }
  const ConjugateRecord rec = analyse_unit(manifold, frame, u, options);
  UmbilicDirection out;
  out.unit = u;
  out.velocity = rec.velocity;
  out.r = 0.5 * (rec.r1 + rec.r2);
  out.gap = rec.r2 - rec.r1;
  return out;
}

UmbilicSearch find_umbilic_directions(const Manifold& manifold,
                                      const SweepResult& sweep,
                                      const LocusOptions& options) {
  UmbilicSearch out;
  const bool all_umbilic =
      std::all_of(sweep.records.begin(), sweep.records.end(),
                  [](const ConjugateRecord& r) {
                    return r.kind == ConjugateKind::umbilic;
                  });
  if (all_umbilic) {
    out.all_sphere = true;
    return out;
  }
  auto gap = [&](int i, int j) {
    const ConjugateRecord& r = sweep.at(i, (j + sweep.n_phi) % sweep.n_phi);
    return r.r2 - r.r1;
  };
  // Seeds: flagged vertices and discrete local minima of the gap.
  std::vector<Vec3> seeds;
  for (int i = 0; i < sweep.n_theta; ++i) {
    for (int j = 0; j < sweep.n_phi; ++j) {
      const double g = gap(i, j);
      bool minimum = true;
      for (int a = -1; a <= 1 && minimum; ++a) {
        for (int b = -1; b <= 1; ++b) {
          if ((a == 0 && b == 0) || i + a < 0 || i + a >= sweep.n_theta) continue;
          if (gap(i + a, j + b) < g) {
            minimum = false;
            break;
          }
        }
      }
      if (minimum || sweep.at(i, j).kind != ConjugateKind::generic) {
        seeds.push_back(TangentSphereFrame::unit_from_angles(
            SweepResult::theta_of(i, sweep.n_theta),
            SweepResult::phi_of(j, sweep.n_phi)));
      }
    }
  }
  const double merge = 2.0 * kPi / sweep.n_theta;
  for (const Vec3& seed : seeds) {
    bool known = std::any_of(out.directions.begin(), out.directions.end(),
                             [&](const UmbilicDirection& d) {
                               return sphere_distance(d.unit, seed) < merge;
                             });
    if (known) continue;
    const UmbilicDirection d = refine_umbilic(manifold, sweep.frame, seed, options);
    if (d.gap >= 1e-6) continue;
    known = std::any_of(out.directions.begin(), out.directions.end(),
                        [&](const UmbilicDirection& e) {
                          return sphere_distance(d.unit, e.unit) < 1e-3;
                        });
    if (!known) out.directions.push_back(d);
  }
  if (out.directions.empty()) {
    out.warnings.push_back(
        "no umbilic directions found on a non-round manifold");
  }
  return out;
}

// --- ridges and ribs ------------------------------------------------------------

namespace {

struct Chain {
  std::vector<std::size_t> order;
  bool closed = false;
};

// Connected components of the graph linking points closer than `limit`.
// A component that winds once around its mean axis with no oversized gap
// is a loop ordered by azimuth; otherwise it is ordered by graph distance
// from one end of its diameter.
std::vector<Chain> chain_sphere_points(const std::vector<Vec3>& pts,
                                       double limit) {
  const std::size_t n = pts.size();
  std::vector<double> d(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d[i * n + j] = sphere_distance(pts[i], pts[j]);
  }
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d[i * n + j] <= limit) parent[find(j)] = find(i);
    }
  }
  std::vector<std::vector<std::size_t>> comps;
  std::vector<long> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<long>(comps.size());
      comps.emplace_back();
    }
    comps[static_cast<std::size_t>(slot[r])].push_back(i);
  }

  auto graph_distances = [&](const std::vector<std::size_t>& comp, std::size_t src) {
    std::vector<double> dist(comp.size(), std::numeric_limits<double>::infinity());
    std::vector<bool> done(comp.size(), false);
    dist[src] = 0.0;
    for (std::size_t it = 0; it < comp.size(); ++it) {
      std::size_t u = comp.size();
      for (std::size_t k = 0; k < comp.size(); ++k) {
        if (!done[k] && (u == comp.size() || dist[k] < dist[u])) u = k;
      }
      done[u] = true;
      for (std::size_t k = 0; k < comp.size(); ++k) {
        const double w = d[comp[u] * n + comp[k]];
        if (!done[k] && w <= limit) dist[k] = std::min(dist[k], dist[u] + w);
      }
    }
    return dist;
  };

  std::vector<Chain> out;
  for (const auto& comp : comps) {
    Chain chain;
    Vec3 mean = Vec3::Zero();
    for (std::size_t k : comp) mean += pts[k];
    if (comp.size() > 3) {
      // Loops spread over a hemisphere or more: azimuth about the fitted
      // plane normal instead of the mean direction.
      Vec3 c = mean / static_cast<double>(comp.size());
      if (c.norm() < 0.5) {
        Mat3 cov = Mat3::Zero();
        for (std::size_t k : comp) cov += (pts[k] - c) * (pts[k] - c).transpose();
        const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
        c = eig.eigenvectors().col(0);
        if (c.dot(mean) < 0.0) c = -c;
      }
      c = normalized(c);
      const auto [ea, eb] = sphere_tangent_basis(c);
      std::vector<std::pair<double, std::size_t>> az;
      for (std::size_t k : comp) {
        az.emplace_back(std::atan2(pts[k].dot(eb), pts[k].dot(ea)), k);
      }
      std::sort(az.begin(), az.end());
      double worst = 0.0;
      for (std::size_t k = 0; k < az.size(); ++k) {
        const std::size_t next = az[(k + 1) % az.size()].second;
        worst = std::max(worst, d[az[k].second * n + next]);
      }
      if (worst <= limit) {
        chain.closed = true;
        for (const auto& [angle, k] : az) chain.order.push_back(k);
        out.push_back(std::move(chain));
        continue;
      }
    }
    const std::vector<double> from_first = graph_distances(comp, 0);
    const std::size_t end = static_cast<std::size_t>(
        std::max_element(from_first.begin(), from_first.end()) - from_first.begin());
    const std::vector<double> from_end = graph_distances(comp, end);
    std::vector<std::size_t> idx(comp.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
      return from_end[x] < from_end[y];
    });
    for (std::size_t k : idx) chain.order.push_back(comp[k]);
    out.push_back(std::move(chain));
  }
  return out;
}

}  // namespace

std::vector<PolyLine> chain_ridge_points(const std::vector<RidgePoint>& points,
                                         const ChainOptions& options) {
  std::vector<PolyLine> out;
  for (int which : {1, 2}) {
    for (Extremum type : {Extremum::min, Extremum::max}) {
      std::vector<RidgePoint> group;
      for (const RidgePoint& p : points) {
        if (p.which == which && p.type == type) group.push_back(p);
      }
      std::vector<Vec3> units;
      for (const RidgePoint& p : group) units.push_back(p.unit);
      const std::vector<Chain> chains =
          chain_sphere_points(units, options.link_limit);
      for (const Chain& chain : chains) {
        if (static_cast<int>(chain.order.size()) < options.min_points) continue;
        PolyLine line;
        line.label = which == 1 ? PolyLineLabel::ridge_r1 : PolyLineLabel::ridge_r2;
        line.space = LineSpace::tangent_sphere;
        line.extremum = type;
        line.sheet = which;
        line.closed = chain.closed;
        for (std::size_t k : chain.order) {
          if (!line.points.empty() &&
              sphere_distance(line.points.back(), group[k].unit) <
                  options.min_spacing &&
              k != chain.order.back()) {
            continue;
          }
          line.points.push_back(group[k].unit);
          (which == 1 ? line.r1 : line.r2).push_back(group[k].r);
        }
        out.push_back(std::move(line));
      }
    }
  }
  return out;
}

RibAssembly assemble_ribs(const Manifold& manifold,
                          const TangentSphereFrame& frame,
                          const std::vector<PolyLine>& ridges,
                          const LocusOptions& options,
                          const ChainOptions& chain) {
  RibAssembly out;
  for (const PolyLine& ridge : ridges) {
    PolyLine rib;
    rib.label = PolyLineLabel::rib;
    rib.space = LineSpace::chart;
    rib.extremum = ridge.extremum;
    rib.sheet = ridge.sheet;
    std::vector<ConjugateRecord> recs;
    for (const Vec3& u : ridge.points) {
      recs.push_back(analyse_unit(manifold, frame, u, options));
    }
    for (const ConjugateRecord& rec : recs) {
      rib.points.push_back(ridge.sheet == 1 ? rec.c1_chart : rec.c2_chart);
      rib.ambient.push_back(ridge.sheet == 1 ? rec.c1_ambient : rec.c2_ambient);
      rib.r1.push_back(rec.r1);
      rib.r2.push_back(rec.r2);
    }
    // Split at image gaps beyond gap_factor times the median link.
    const std::size_t n = rib.ambient.size();
    std::vector<double> links;
    for (std::size_t k = 1; k < n; ++k) {
      links.push_back((rib.ambient[k] - rib.ambient[k - 1]).norm());
    }
    double limit = std::numeric_limits<double>::infinity();
    if (!links.empty()) {
      std::vector<double> sorted = links;
      std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                       sorted.end());
      limit = chain.gap_factor * sorted[sorted.size() / 2];
    }
    std::size_t begin = 0;
    auto emit = [&](std::size_t b, std::size_t e, bool closed) {
      PolyLine piece = rib;
      piece.points.assign(rib.points.begin() + b, rib.points.begin() + e);
      piece.ambient.assign(rib.ambient.begin() + b, rib.ambient.begin() + e);
      piece.r1.assign(rib.r1.begin() + b, rib.r1.begin() + e);
      piece.r2.assign(rib.r2.begin() + b, rib.r2.begin() + e);
      piece.closed = closed;
      out.ribs.push_back(std::move(piece));
    };
    bool split = false;
    for (std::size_t k = 1; k < n; ++k) {
      if (links[k - 1] > limit) {
        emit(begin, k, false);
        begin = k;
        split = true;
        ++out.splits;
      }
    }
    emit(begin, n, ridge.closed && !split);
  }
  return out;
}

// --- grid ridge witness ---------------------------------------------------------

std::vector<GridRidgeCrossing> sheet_rank_deficiency_set(
    const Manifold& manifold, const SweepResult& sweep, int which) {
  const int nt = sweep.n_theta, np = sweep.n_phi;
  const double dt = kPi / nt, dp = kTwoPi / np;
  const std::size_t n = static_cast<std::size_t>(nt) * np;
  std::vector<double> f(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<Vec3> w(n, Vec3::Zero());
  auto idx = [&](int i, int j) {
    return static_cast<std::size_t>(i) * np + ((j % np + np) % np);
  };
  auto c_of = [&](int i, int j) -> const Vec4& {
    const ConjugateRecord& r = sweep.records[idx(i, j)];
    return which == 1 ? r.c1_ambient : r.c2_ambient;
  };
  for (int i = 1; i + 1 < nt; ++i) {
    for (int j = 0; j < np; ++j) {
      const ConjugateRecord& rec = sweep.records[idx(i, j)];
      if (rec.kind != ConjugateKind::generic) continue;
      bool near_band = false;
      for (int a = -1; a <= 1; ++a) {
        for (int b = -1; b <= 1; ++b) {
          near_band |= sweep.records[idx(i + a, j + b)].kind != ConjugateKind::generic;
        }
      }
      if (near_band) continue;
      const double th = SweepResult::theta_of(i, nt), ph = SweepResult::phi_of(j, np);
      const Vec3 u = TangentSphereFrame::unit_from_angles(th, ph);
      const Vec3 u_th(std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph),
                      -std::sin(th));
      const Vec3 u_ph(-std::sin(th) * std::sin(ph), std::sin(th) * std::cos(ph), 0.0);
      const Vec4 c_th = (c_of(i + 1, j) - c_of(i - 1, j)) / (2 * dt);
      const Vec4 c_ph = (c_of(i, j + 1) - c_of(i, j - 1)) / (2 * dp);
      const double alpha = which == 1 ? rec.alpha1 : rec.alpha2;
      const Vec3 v = sweep.frame.velocity(u);
      const FramePair nb = orthonormal_frame_at(manifold, sweep.frame.base_point(),
                                                sweep.frame.chart(), v);
      const Vec3 wd =
          sweep.frame.components(std::cos(alpha) * nb.n + std::sin(alpha) * nb.b);
      // wd = x u_th + y u_ph (u_th, u_ph are orthogonal).
      const double x = wd.dot(u_th) / u_th.squaredNorm();
      const double y = wd.dot(u_ph) / u_ph.squaredNorm();
      const Vec4 dc = x * c_th + y * c_ph;
      const Vec4& tangent = which == 1 ? rec.t1_ambient : rec.t2_ambient;
      f[idx(i, j)] = dc.dot(tangent);
      w[idx(i, j)] = wd;
    }
  }
  std::vector<GridRidgeCrossing> out;
  auto edge = [&](std::size_t a, std::size_t b, const Vec3& ua, const Vec3& ub) {
    if (std::isnan(f[a]) || std::isnan(f[b])) return;
    const double fa = f[a];
    double fb = f[b];
    const double c = w[a].dot(w[b]);
    if (std::abs(c) < 0.5) return;
    if (c < 0.0) fb = -fb;
    if ((fa < 0.0) == (fb < 0.0)) return;
    const double s = fa / (fa - fb);
    out.push_back({normalized(ua + s * (ub - ua)), which});
  };
  for (int i = 1; i + 1 < nt; ++i) {
    for (int j = 0; j < np; ++j) {
      const Vec3 u = TangentSphereFrame::unit_from_angles(
          SweepResult::theta_of(i, nt), SweepResult::phi_of(j, np));
      const Vec3 ur = TangentSphereFrame::unit_from_angles(
          SweepResult::theta_of(i, nt), SweepResult::phi_of(j + 1, np));
      edge(idx(i, j), idx(i, j + 1), u, ur);
      if (i + 2 < nt) {
        const Vec3 ud = TangentSphereFrame::unit_from_angles(
            SweepResult::theta_of(i + 1, nt), SweepResult::phi_of(j, np));
        edge(idx(i, j), idx(i + 1, j), u, ud);
      }
    }
  }
  return out;
}

// --- line element ---------------------------------------------------------------

LineElementReport sheet_line_element_check(
    const Manifold& manifold, const TangentSphereFrame& frame,
    const std::vector<Vec3>& sample_units, const LocusOptions& options,
    double epsilon) {
  LineElementReport rep;
  for (const Vec3& raw : sample_units) {
    const Vec3 u = normalized(raw);
    Trajectory traj;
    LaunchSpec launch;
    launch.base_point = frame.base_point();
    launch.chart = frame.chart();
    launch.velocity = frame.velocity(u);
    launch.t_max = options.t_max;
    const ConjugateRecord rec = analyse_direction(
        manifold, launch, options.integrator, options.conjugate, traj);
    if (rec.kind == ConjugateKind::umbilic) continue;
    const Vec3 v = frame.velocity(u);
    const FramePair nb =
        orthonormal_frame_at(manifold, frame.base_point(), frame.chart(), v);
    auto line_dir = [&](double alpha) {
      return frame.components(std::cos(alpha) * nb.n + std::sin(alpha) * nb.b);
    };
    const Vec3 w1 = line_dir(rec.alpha1);
    const Vec3 w2 = line_dir(rec.alpha2);
    const double j2 = combined_field(traj.state_at(rec.r1), rec.alpha2).norm();

    // Finite-difference Jacobian of c1 and gradient of R1 in the tangent
    // basis (ta, tb) of the sphere at u.
    const auto [ta, tb] = sphere_tangent_basis(u);
    Eigen::Matrix<double, 4, 2> dc;
    Vec2 dr;
    for (int k = 0; k < 2; ++k) {
      const Vec3 e = k == 0 ? ta : tb;
      const ConjugateRecord p =
          analyse_unit(manifold, frame, normalized(u + epsilon * e), options);
      const ConjugateRecord m =
          analyse_unit(manifold, frame, normalized(u - epsilon * e), options);
      dc.col(k) = (p.c1_ambient - m.c1_ambient) / (2 * epsilon);
      dr[k] = (p.r1 - m.r1) / (2 * epsilon);
    }
    // dv is the w2 coefficient of a displacement written as du w1 + dv w2.
    Mat2 basis;
    basis << w1.dot(ta), w2.dot(ta), w1.dot(tb), w2.dot(tb);
    const Vec2 dv = basis.inverse().row(1).transpose();
    const Mat2 measured = dc.transpose() * dc;
    const Mat2 predicted = dr * dr.transpose() + j2 * j2 * dv * dv.transpose();
    const double scale = predicted.norm();
    rep.max_relative_residual =
        std::max(rep.max_relative_residual, (measured - predicted).norm() / scale);
    // Cross term in (R1, v) parameters: I(w1, w2) - dR1(w1) dR1(w2).
    const Vec2 c1(w1.dot(ta), w1.dot(tb)), c2(w2.dot(ta), w2.dot(tb));
    const double cross = c1.dot(measured * c2) - dr.dot(c1) * dr.dot(c2);
    rep.max_cross_term = std::max(rep.max_cross_term, std::abs(cross) / scale);
    ++rep.samples;
  }
  return rep;
}

// --- assembled network ------------------------------------------------------------

RidgeNetwork analyse_ridge_network(const Manifold& manifold,
                                   const SweepResult& sweep,
                                   const LocusOptions& options,
                                   const ChainOptions& chain) {
  RidgeNetwork out;
  out.umbilics = find_umbilic_directions(manifold, sweep, options);
  if (out.umbilics.all_sphere) return out;
  std::vector<Vec3> centres;
  for (const UmbilicDirection& d : out.umbilics.directions) {
    centres.push_back(d.unit);
    out.umbilic_images.push_back(
        analyse_unit(manifold, sweep.frame, d.unit, options).c1_ambient);
  }
  out.net = trace_coordinate_net(manifold, sweep, options, centres);
  std::size_t id = 0;
  for (const auto* family : {&out.net.u_lines, &out.net.v_lines}) {
    const int which = family == &out.net.u_lines ? 1 : 2;
    for (const CoordinateLine& line : *family) {
      const auto pts = find_ridges(line.line, which, id++);
      if (line.line.closed && pts.size() < 2) ++out.suspect_lines;
      out.points.insert(out.points.end(), pts.begin(), pts.end());
    }
  }
  out.ridges = chain_ridge_points(out.points, chain);
  out.ribs = assemble_ribs(manifold, sweep.frame, out.ridges, options, chain);
  for (std::size_t r = 0; r < out.ridges.size(); ++r) {
    const PolyLine& ridge = out.ridges[r];
    if (ridge.closed) continue;
    RidgeAttachment att;
    att.ridge = r;
    for (int end = 0; end < 2; ++end) {
      const Vec3& p = end == 0 ? ridge.points.front() : ridge.points.back();
      att.distance[end] = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < centres.size(); ++k) {
        const double dist = sphere_distance(p, centres[k]);
        if (dist < att.distance[end]) {
          att.distance[end] = dist;
          att.umbilic[end] = static_cast<int>(k);
        }
      }
    }
    out.attachments.push_back(att);
  }
  return out;
}

StructureSummary summarize_structure(const RidgeNetwork& network,
                                     double attach_radius) {
  StructureSummary out;
  std::array<std::vector<Extremum>, 2> closed_types, partial_types;
  for (const PolyLine& ridge : network.ridges) {
    const int s = ridge.sheet - 1;
    if (ridge.closed) {
      ++out.closed_ribs[s];
      closed_types[s].push_back(*ridge.extremum);
    } else {
      ++out.partial_ribs[s];
      partial_types[s].push_back(*ridge.extremum);
    }
  }
  auto common = [](const std::vector<Extremum>& v) -> std::optional<Extremum> {
    if (v.empty()) return std::nullopt;
    for (Extremum e : v) {
      if (e != v.front()) return std::nullopt;
    }
    return v.front();
  };
  for (int s = 0; s < 2; ++s) {
    out.closed_type[s] = common(closed_types[s]);
    out.partial_type[s] = common(partial_types[s]);
  }

  out.partials_attached = !network.attachments.empty();
  for (const RidgeAttachment& a : network.attachments) {
    for (int end = 0; end < 2; ++end) {
      out.worst_attachment = std::max(out.worst_attachment, a.distance[end]);
      if (a.umbilic[end] < 0 || a.distance[end] > attach_radius) {
        out.partials_attached = false;
      }
    }
  }

  // Walk the umbilic graph formed by the partial ridges.
  const std::size_t nu = network.umbilics.directions.size();
  std::vector<std::vector<std::size_t>> incident(nu);
  bool valid = out.partials_attached;
  for (std::size_t e = 0; e < network.attachments.size() && valid; ++e) {
    const RidgeAttachment& a = network.attachments[e];
    if (a.umbilic[0] == a.umbilic[1]) valid = false;
    for (int end = 0; end < 2 && valid; ++end) {
      incident[static_cast<std::size_t>(a.umbilic[end])].push_back(e);
    }
  }
  std::size_t touched = 0;
  for (std::size_t u = 0; u < nu && valid; ++u) {
    if (incident[u].empty()) continue;
    ++touched;
    if (incident[u].size() != 2) {
      valid = false;
      break;
    }
    const int s0 = network.ridges[network.attachments[incident[u][0]].ridge].sheet;
    const int s1 = network.ridges[network.attachments[incident[u][1]].ridge].sheet;
    if (s0 == s1) valid = false;
  }
  if (valid && !network.attachments.empty()) {
    // Connected: follow edges from the first one.
    std::vector<bool> seen(network.attachments.size(), false);
    std::size_t edge = 0;
    int at = network.attachments[0].umbilic[1];
    int length = 0;
    while (!seen[edge]) {
      seen[edge] = true;
      ++length;
      const auto& inc = incident[static_cast<std::size_t>(at)];
      edge = inc[0] == edge ? inc[1] : inc[0];
      const RidgeAttachment& a = network.attachments[edge];
      at = a.umbilic[0] == at ? a.umbilic[1] : a.umbilic[0];
    }
    out.broken_cycle_length = length;
    out.broken_cycle_closed =
        length == static_cast<int>(network.attachments.size()) &&
        touched == network.attachments.size();
  }

  // Rib images end at the umbilic images.
  for (const PolyLine& rib : network.ribs.ribs) {
    if (rib.closed || rib.ambient.empty()) continue;
    for (const Vec4* end : {&rib.ambient.front(), &rib.ambient.back()}) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec4& img : network.umbilic_images) {
        best = std::min(best, (img - *end).norm());
      }
      out.worst_image_gap = std::max(out.worst_image_gap, best);
    }
  }
  return out;
}

}  // namespace conjloc
