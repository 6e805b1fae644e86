#include "conjloc/verify.hpp"

#include "conjloc/io.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <utility>

namespace conjloc {

namespace {

constexpr double kSphereTol = 1e-6;
constexpr double kAreaTraceTol = 1e-7;
constexpr double kCurvatureTol = 1e-5;
constexpr double kUmbilicAreaTol = 1e-6;
constexpr double kOracleTol = 1e-4;
constexpr double kIdentityTol = 1e-5;
constexpr double kDriftTol = 1e-7;
constexpr double kGaugeRTol = 1e-8;
constexpr double kGaugeAlphaTol = 1e-6;
constexpr double kLineElementTol = 1e-2;
constexpr double kCrossTermTol = 1e-3;
constexpr double kNearRoundTol = 1e-3;
constexpr double kRidgeClearance = 0.2;

const Vec3 kTraceDirection(-0.730, 0.425, -0.774);
const Vec3 kUmbilicDirection(0.36, 0.694, 0.997);

std::string fmt(double x, int digits = 3) {
  std::ostringstream s;
  s << std::setprecision(digits) << std::scientific << x;
  return s.str();
}

CheckResult make(std::string id, std::string title, bool ok,
                 std::string detail) {
  CheckResult r;
  r.id = std::move(id);
  r.title = std::move(title);
  r.status = ok ? CheckStatus::pass : CheckStatus::fail;
  r.detail = std::move(detail);
  return r;
}

CheckResult not_applicable(std::string id, std::string title,
                           std::string why) {
  CheckResult r;
  r.id = std::move(id);
  r.title = std::move(title);
  r.status = CheckStatus::not_applicable;
  r.detail = std::move(why);
  return r;
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    const Vec3 v(n(rng), n(rng), n(rng));
    if (v.norm() > 1e-6) return v.normalized();
  }
}

double wrap_pi(double x) {
  x = std::fmod(x, kPi);
  if (x < 0.0) x += kPi;
  return std::min(x, kPi - x);
}

LaunchSpec launch_for(const VerifyContext& ctx, const Vec3& velocity) {
  LaunchSpec launch = ctx.config().launch();
  launch.velocity = velocity;
  return launch;
}

std::uint64_t stream_seed(const RunConfig& config, std::uint64_t salt) {
  return config.seed * 1000003ull + salt;
}

// --- 1 -------------------------------------------------------------------------

std::vector<CheckResult> round_sphere_baseline(VerifyContext& ctx) {
  const Ellipsoid sphere(SemiAxes{1.0, 1.0, 1.0, 1.0});
  const TangentSphereFrame frame =
      TangentSphereFrame::build(sphere, ctx.config().base_point);
  std::mt19937_64 rng(stream_seed(ctx.config(), 1));
  const IntegratorOptions integrator = ctx.config().integrator_options();
  double worst_r = 0.0, worst_area = 0.0;
  for (int k = 0; k < 100; ++k) {
    LaunchSpec launch;
    launch.base_point = ctx.config().base_point;
    launch.velocity = frame.velocity(random_unit(rng));
    launch.t_max = default_t_max(sphere.axes());
    Trajectory traj;
    const ConjugateRecord rec = analyse_direction(
        sphere, launch, integrator, ctx.config().conjugate_options(), traj);
    worst_r = std::max({worst_r, std::abs(rec.r1 - kPi), std::abs(rec.r2 - kPi)});
    for (const auto& seg : traj.segments()) {
      for (double s : {0.0, 0.25, 0.5, 0.75}) {
        const double t = seg.dense.t0 + s * seg.dense.h;
        const double sn = std::sin(t);
        worst_area = std::max(
            worst_area, std::abs(area(traj.state_at(t)) - sn * sn));
      }
    }
  }
  return {make("1", "round 3-sphere baseline",
               worst_r < kSphereTol && worst_area < kAreaTraceTol,
               "100 directions: max|R-pi| = " + fmt(worst_r) +
                   ", max|A - sin^2 t| = " + fmt(worst_area))};
}

// --- 2 -------------------------------------------------------------------------

bool in_stated_pairs(int i, int j, int k, int l) {
  if (i == j || k == l) return false;
  const auto pair = [](int a, int b) { return std::pair<int, int>(std::minmax(a, b)); };
  return pair(i, j) == pair(k, l);
}

std::vector<CheckResult> curvature_cross_check(VerifyContext& ctx) {
  std::mt19937_64 rng(stream_seed(ctx.config(), 2));
  std::uniform_real_distribution<double> polar(0.15, kPi - 0.15);
  std::uniform_real_distribution<double> azimuth(-kPi, kPi);
  double worst_pairs = 0.0, worst_other = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Vec3 q(polar(rng), polar(rng), azimuth(rng));
    const CurvaturePack pack = ctx.manifold().riemann_at(q, ChartId::primary);
    const auto fd = finite_difference_riemann(ctx.manifold(), q, ChartId::primary);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) {
            const double v = fd[((i * 3 + j) * 3 + a) * 3 + b];
            if (!std::isfinite(v)) {
              worst_pairs = worst_other = std::numeric_limits<double>::infinity();
            } else if (in_stated_pairs(i, j, a, b)) {
              worst_pairs = std::max(
                  worst_pairs, std::abs(v - pack.component(i, j, a, b)));
            } else {
              worst_other = std::max(worst_other, std::abs(v));
            }
          }
  }
  return {make("2", "curvature cross-check",
               worst_pairs < kCurvatureTol && worst_other < kCurvatureTol,
               "100 points: closed form vs finite differences " +
                   fmt(worst_pairs) + ", other components " +
                   fmt(worst_other))};
}

// --- 3 -------------------------------------------------------------------------

struct TraceFacts {
  int sign_changes = 0;
  ConjugateTimes times;
  double normalized_minimum = 0.0;
};

TraceFacts trace_facts(const VerifyContext& ctx, const Vec3& velocity) {
  const Trajectory traj =
      integrate(ctx.manifold(), launch_for(ctx, velocity),
                ctx.config().integrator_options());
  TraceFacts f;
  double prev = area(traj.node(0));
  for (std::size_t i = 1; i < traj.segments().size(); ++i) {
    const double a = area(traj.node(i));
    if ((a < 0.0) != (prev < 0.0) && a != 0.0) ++f.sign_changes;
    prev = a;
  }
  f.times = find_conjugate_times(traj, ctx.config().conjugate_options());
  f.normalized_minimum = f.times.area_scale > 0.0
                             ? std::abs(f.times.min_between) / f.times.area_scale
                             : 0.0;
  return f;
}

std::vector<CheckResult> demonstration_directions(VerifyContext& ctx) {
  const std::string t1 = "area trace of (-0.730, 0.425, -0.774)";
  const std::string t2 = "umbilic classification of (0.36, 0.694, 0.997)";
  const SemiAxes& axes = ctx.manifold().axes();
  if (axes.is_round()) {
    std::vector<CheckResult> out;
    for (const auto& [id, dir, title] :
         {std::tuple{"3a", kTraceDirection, t1},
          std::tuple{"3b", kUmbilicDirection, t2}}) {
      const TraceFacts f = trace_facts(ctx, dir);
      const double r = kPi * axes.a;
      out.push_back(make(id, title + " (round: double root at pi r)",
                         f.times.kind == ConjugateKind::umbilic &&
                             std::abs(f.times.r1 - r) < kSphereTol,
                         "kind " + std::string(to_string(f.times.kind)) +
                             ", R = " + fmt(f.times.r1, 9)));
    }
    return out;
  }
  if (!ctx.config().is_demonstration_case()) {
    return {not_applicable("3a", t1, "only defined for the demonstration case"),
            not_applicable("3b", t2, "only defined for the demonstration case")};
  }

  std::vector<CheckResult> out;
  {
    const TraceFacts f = trace_facts(ctx, kTraceDirection);
    const double floor = ctx.config().conjugate_options().simple_zero_floor;
    const bool simple = f.times.rate1 > floor && f.times.rate2 > floor;
    out.push_back(make(
        "3a", t1,
        f.sign_changes == 2 && simple &&
            f.times.kind == ConjugateKind::generic,
        std::to_string(f.sign_changes) + " sign changes up to t_max, R1 = " +
            fmt(f.times.r1, 7) + ", R2 = " + fmt(f.times.r2, 7) +
            ", |A'| = " + fmt(f.times.rate1) + ", " + fmt(f.times.rate2)));
  }
  {
    const TraceFacts f = trace_facts(ctx, kUmbilicDirection);
    const bool ok = f.times.kind == ConjugateKind::umbilic &&
                    f.normalized_minimum < kUmbilicAreaTol;
    std::string detail = "kind " + std::string(to_string(f.times.kind)) +
                         ", R2-R1 = " + fmt(f.times.r2 - f.times.r1) +
                         ", normalized area minimum = " +
                         fmt(f.normalized_minimum);
    // Diagnostic: the nearest true umbilic direction.
    const Vec3 flipped(-kUmbilicDirection[0], -kUmbilicDirection[1],
                       kUmbilicDirection[2]);
    const UmbilicDirection u = refine_umbilic(
        ctx.manifold(), ctx.frame(), ctx.frame().components(flipped).normalized(),
        ctx.options());
    const Vec3 v = u.velocity;
    detail += "; nearest umbilic velocity (" + fmt(v[0], 5) + ", " +
              fmt(v[1], 5) + ", " + fmt(v[2], 5) + ") R = " + fmt(u.r, 7) +
              " gap " + fmt(u.gap) + ", " +
              fmt(sphere_distance(u.unit,
                                  ctx.frame().components(flipped).normalized()),
                  2) +
              " rad from the sign-flipped triple";
    out.push_back(make("3b", t2, ok, detail));
  }
  return out;
}

// --- 4 -------------------------------------------------------------------------

std::vector<CheckResult> oracle_equivalence(VerifyContext& ctx) {
  const std::string title = "area method vs exponential-map oracle";
  if (ctx.manifold().axes().is_round()) {
    return {not_applicable("4", title, "no generic directions on a round sphere")};
  }
  std::mt19937_64 rng(stream_seed(ctx.config(), 4));
  double worst = 0.0;
  int used = 0, skipped = 0;
  while (used < 50) {
    const Vec3 v = ctx.frame().velocity(random_unit(rng));
    const LaunchSpec launch = launch_for(ctx, v);
    const ConjugateRecord rec =
        analyse_direction(ctx.manifold(), launch, ctx.config().integrator_options(),
                          ctx.config().conjugate_options());
    if (rec.kind != ConjugateKind::generic) {
      ++skipped;
      continue;
    }
    const OracleResult o = oracle_conjugate_times(ctx.manifold(), launch);
    worst = std::max({worst, std::abs(o.r1 - rec.r1), std::abs(o.r2 - rec.r2)});
    if (!std::isfinite(o.r1) || !std::isfinite(o.r2)) worst = INFINITY;
    ++used;
  }
  return {make("4", title, worst < kOracleTol,
               "50 generic directions (" + std::to_string(skipped) +
                   " non-generic skipped): max |dR| = " + fmt(worst))};
}

// --- 5 -------------------------------------------------------------------------

std::vector<CheckResult> identity_suite(VerifyContext& ctx) {
  std::mt19937_64 rng(stream_seed(ctx.config(), 5));
  double d1 = 0.0, d2 = 0.0, tr = 0.0, speed = 0.0, frame = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Vec3 v = ctx.frame().velocity(random_unit(rng));
    const Trajectory traj = integrate(ctx.manifold(), launch_for(ctx, v),
                                      ctx.config().integrator_options());
    const IdentityReport rep = verify_identities(
        ctx.manifold(), traj, ctx.config().conjugate_options());
    d1 = std::max(d1, rep.first_derivative_residual);
    d2 = std::max(d2, rep.second_derivative_residual);
    tr = std::max(tr, rep.trace_ricci_residual);
    for (std::size_t i = 0; i < traj.segments().size(); ++i) {
      const GeodesicBundleState s = traj.node(i);
      speed = std::max(speed, speed_defect(ctx.manifold(), s));
      frame = std::max(frame, frame_defect(ctx.manifold(), s));
    }
  }
  const bool ok = d1 < kIdentityTol && d2 < kIdentityTol && tr < kIdentityTol &&
                  speed < kDriftTol && frame < kDriftTol;
  return {make("5", "ODE identity suite", ok,
               "20 trajectories: first " + fmt(d1) + ", second " + fmt(d2) +
                   ", TrM-2Ric " + fmt(tr) + ", speed drift " + fmt(speed) +
                   ", frame drift " + fmt(frame))};
}

// --- 6 -------------------------------------------------------------------------

std::vector<CheckResult> gauge_invariance(VerifyContext& ctx) {
  std::mt19937_64 rng(stream_seed(ctx.config(), 6));
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  const bool round = ctx.manifold().axes().is_round();
  double worst_r = 0.0, worst_alpha = 0.0;
  int directions = 0;
  while (directions < 3) {
    const Vec3 v = ctx.frame().velocity(random_unit(rng));
    const LaunchSpec base = launch_for(ctx, v);
    const ConjugateRecord ref =
        analyse_direction(ctx.manifold(), base, ctx.config().integrator_options(),
                          ctx.config().conjugate_options());
    if (!round && ref.kind != ConjugateKind::generic) continue;
    ++directions;
    const GeodesicBundleState s0 = initial_state(ctx.manifold(), base);
    for (int k = 0; k < 5; ++k) {
      const double beta = angle(rng);
      LaunchSpec turned = base;
      turned.frame = FramePair{std::cos(beta) * s0.n + std::sin(beta) * s0.b,
                               -std::sin(beta) * s0.n + std::cos(beta) * s0.b};
      const ConjugateRecord rec = analyse_direction(
          ctx.manifold(), turned, ctx.config().integrator_options(),
          ctx.config().conjugate_options());
      worst_r = std::max({worst_r, std::abs(rec.r1 - ref.r1),
                          std::abs(rec.r2 - ref.r2)});
      if (!round) {
        worst_alpha = std::max({worst_alpha,
                                wrap_pi(ref.alpha1 - rec.alpha1 - beta),
                                wrap_pi(ref.alpha2 - rec.alpha2 - beta)});
      }
    }
  }
  const bool ok = worst_r < kGaugeRTol && worst_alpha < kGaugeAlphaTol;
  return {make("6", "gauge invariance", ok,
               "3 directions x 5 rotations: max |dR| = " + fmt(worst_r) +
                   (round ? std::string(", alpha undefined (umbilic)")
                          : ", max alpha shift error = " + fmt(worst_alpha)))};
}

// --- 7 -------------------------------------------------------------------------

std::string ext(const std::optional<Extremum>& e) {
  return e ? std::string(to_string(*e)) : std::string("mixed/none");
}

std::vector<CheckResult> structural_claims(VerifyContext& ctx) {
  const RidgeNetwork& net = ctx.network();
  if (net.umbilics.all_sphere) {
    const bool ok = net.ribs.ribs.empty() && net.ridges.empty();
    return {make("7a", "round sphere: every direction umbilic, no ribs", ok,
                 std::to_string(net.ribs.ribs.size()) + " ribs")};
  }
  const StructureSummary s = summarize_structure(net, kAttachRadius);
  std::vector<CheckResult> out;
  const bool demo = ctx.config().is_demonstration_case();
  const auto claim = [&](std::string id, std::string title, bool ok,
                         std::string detail) {
    if (demo) {
      out.push_back(make(std::move(id), std::move(title), ok, std::move(detail)));
    } else {
      CheckResult r = not_applicable(std::move(id), std::move(title),
                                     std::move(detail));
      out.push_back(std::move(r));
    }
  };

  claim("7a", "one closed and two partial ribs per sheet",
        s.closed_ribs == std::array<int, 2>{1, 1} &&
            s.partial_ribs == std::array<int, 2>{2, 2},
        "closed " + std::to_string(s.closed_ribs[0]) + "/" +
            std::to_string(s.closed_ribs[1]) + ", partial " +
            std::to_string(s.partial_ribs[0]) + "/" +
            std::to_string(s.partial_ribs[1]) + ", " +
            std::to_string(net.umbilics.directions.size()) + " umbilics");
  claim("7b", "partial ribs chain through the umbilic images",
        s.partials_attached && s.broken_cycle_closed &&
            s.worst_image_gap < kAttachRadius,
        "cycle " + std::string(s.broken_cycle_closed ? "closed" : "open") +
            " through " + std::to_string(s.broken_cycle_length) +
            " partial ribs, worst endpoint distance " +
            fmt(s.worst_attachment) + " rad, image gap " +
            fmt(s.worst_image_gap));
  claim("7c", "ridge extremum types",
        s.closed_type[0] == Extremum::min && s.closed_type[1] == Extremum::max &&
            s.partial_type[0] == Extremum::max &&
            s.partial_type[1] == Extremum::min,
        "closed R1 " + ext(s.closed_type[0]) + ", closed R2 " +
            ext(s.closed_type[1]) + ", partial R1 " + ext(s.partial_type[0]) +
            ", partial R2 " + ext(s.partial_type[1]));

  int closed = 0, balanced = 0;
  for (const auto* family : {&net.net.u_lines, &net.net.v_lines}) {
    const int which = family == &net.net.u_lines ? 1 : 2;
    for (const CoordinateLine& line : *family) {
      if (!line.line.closed) continue;
      ++closed;
      int maxima = 0, minima = 0;
      for (const RidgePoint& p : find_ridges(line.line, which)) {
        (p.type == Extremum::max ? maxima : minima)++;
      }
      if (maxima == minima && maxima >= 1) ++balanced;
    }
  }
  const std::size_t lines = net.net.u_lines.size() + net.net.v_lines.size();
  out.push_back(make("7d", "coordinate lines close with balanced extrema",
                     closed >= 5 && balanced == closed,
                     std::to_string(closed) + " of " + std::to_string(lines) +
                         " lines closed, " + std::to_string(balanced) +
                         " balanced"));
  return out;
}

// --- 8 -------------------------------------------------------------------------

std::vector<Vec3> clear_samples(const SweepResult& sweep,
                                const std::vector<RidgePoint>& points) {
  std::vector<Vec3> samples;
  const int di = std::max(1, sweep.n_theta / 8);
  const int dj = std::max(1, sweep.n_phi / 8);
  for (int i = di / 2; i < sweep.n_theta; i += di) {
    for (int j = 0; j < sweep.n_phi; j += dj) {
      if (sweep.at(i, j).kind != ConjugateKind::generic) continue;
      const Vec3 u = TangentSphereFrame::unit_from_angles(
          SweepResult::theta_of(i, sweep.n_theta),
          SweepResult::phi_of(j, sweep.n_phi));
      double nearest = INFINITY;
      for (const RidgePoint& p : points) {
        nearest = std::min(nearest, sphere_distance(p.unit, u));
      }
      if (nearest >= kRidgeClearance) samples.push_back(u);
    }
  }
  return samples;
}

std::vector<CheckResult> line_element(VerifyContext& ctx) {
  const std::string title = "sheet line element dR1^2 + |J_v(R1)|^2 dv^2";
  if (ctx.manifold().axes().is_round()) {
    return {not_applicable("8", title, "sheets collapse to a point")};
  }
  const RidgeNetwork& net = ctx.network();
  const std::vector<Vec3> samples = clear_samples(ctx.sweep_result(), net.points);
  const LineElementReport rep = sheet_line_element_check(
      ctx.manifold(), ctx.sweep_result().frame, samples, ctx.options());

  const Ellipsoid near_round(SemiAxes{1.0, 1.0, 1.0, 1.01});
  const TangentSphereFrame nr_frame =
      TangentSphereFrame::build(near_round, ctx.config().base_point);
  LocusOptions nr_options = ctx.options();
  nr_options.t_max = default_t_max(near_round.axes());
  std::vector<Vec3> nr_samples;
  std::mt19937_64 rng(stream_seed(ctx.config(), 8));
  for (int k = 0; k < 12; ++k) nr_samples.push_back(random_unit(rng));
  const LineElementReport nr = sheet_line_element_check(
      near_round, nr_frame, nr_samples, nr_options);

  const bool ok = rep.samples >= 10 && rep.max_relative_residual < kLineElementTol &&
                  rep.max_cross_term < kCrossTermTol &&
                  nr.max_relative_residual < kNearRoundTol;
  return {make("8", title, ok,
               std::to_string(rep.samples) + " samples >= 0.2 rad from ridges: residual " +
                   fmt(rep.max_relative_residual) + ", cross term " +
                   fmt(rep.max_cross_term) + "; axes (1,1,1,1.01): residual " +
                   fmt(nr.max_relative_residual) + " over " +
                   std::to_string(nr.samples) + " samples")};
}

// --- 9 -------------------------------------------------------------------------

std::vector<CheckResult> nesting(VerifyContext& ctx) {
  const SweepResult& sweep = ctx.sweep_result();
  const double tol = ctx.config().umbilic_tol;
  std::size_t inverted = 0, unflagged_contact = 0, umbilic = 0;
  double min_generic_gap = INFINITY;
  for (const ConjugateRecord& rec : sweep.records) {
    if (rec.r1 > rec.r2) ++inverted;
    const double gap = rec.r2 - rec.r1;
    if (rec.kind == ConjugateKind::umbilic) {
      ++umbilic;
    } else {
      if (gap < tol) ++unflagged_contact;
      min_generic_gap = std::min(min_generic_gap, gap);
    }
  }
  std::string detail = std::to_string(sweep.records.size()) +
                       " directions: R1 > R2 at " + std::to_string(inverted) +
                       ", unflagged contact at " +
                       std::to_string(unflagged_contact) + ", " +
                       std::to_string(umbilic) + " umbilic flags";
  bool contact_ok = true;
  if (umbilic < sweep.records.size()) {
    detail += ", min non-umbilic gap " + fmt(min_generic_gap);
    const RidgeNetwork& net = ctx.network();
    double worst = 0.0;
    for (const UmbilicDirection& u : net.umbilics.directions) {
      worst = std::max(worst, u.gap);
    }
    contact_ok = !net.umbilics.directions.empty() && worst < tol;
    detail += ", contact at " + std::to_string(net.umbilics.directions.size()) +
              " refined umbilics with gap <= " + fmt(worst);
  }
  return {make("9", "distance-sphere nesting",
               inverted == 0 && unflagged_contact == 0 && contact_ok, detail)};
}

// --- 10 ------------------------------------------------------------------------

std::vector<CheckResult> determinism(VerifyContext& ctx) {
  LocusOptions options = ctx.options();
  const auto run = [&](unsigned threads) {
    options.threads = threads;
    std::ostringstream csv;
    write_sweep_csv(csv, sweep(ctx.manifold(), ctx.frame(), options));
    return csv.str();
  };
  const std::string a = run(ctx.options().threads);
  const std::string b = run(ctx.options().threads);
  const std::string c = run(ctx.options().threads == 1 ? 3 : 1);
  const bool ok = a == b && a == c;
  return {make("10", "sweep determinism", ok,
               "fnv1a " + hash_hex(fnv1a(a)) + " / " + hash_hex(fnv1a(b)) +
                   " / " + hash_hex(fnv1a(c)) + " (" + std::to_string(a.size()) +
                   " bytes; third run with a different thread count)")};
}

std::vector<CheckResult> schemas(VerifyContext&) {
  std::vector<std::string> drifted;
  for (const CsvSchema* s : all_schemas()) {
    if (!schema_consistent(*s)) drifted.push_back(s->id());
  }
  std::string detail = drifted.empty() ? "all CSV schemas match their frozen fingerprints"
                                       : "drifted without a version bump:";
  for (const auto& d : drifted) detail += " " + d;
  return {make("schema", "CSV schema versions", drifted.empty(), detail)};
}

using Runner = std::vector<CheckResult> (*)(VerifyContext&);

const std::vector<std::pair<std::string, Runner>>& runners() {
  static const std::vector<std::pair<std::string, Runner>> table = {
      {"1", round_sphere_baseline}, {"2", curvature_cross_check},
      {"3", demonstration_directions},            {"4", oracle_equivalence},
      {"5", identity_suite},        {"6", gauge_invariance},
      {"7", structural_claims},     {"8", line_element},
      {"9", nesting},               {"10", determinism},
      {"schema", schemas},
  };
  return table;
}

}  // namespace

std::string_view to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::pass:
      return "PASS";
    case CheckStatus::fail:
      return "FAIL";
    case CheckStatus::not_applicable:
      return "N/A";
  }
  return "?";
}

VerifyContext::VerifyContext(RunConfig config)
    : config_(std::move(config)),
      manifold_(config_.semi_axes),
      frame_(TangentSphereFrame::build(manifold_, config_.base_point)) {}

VerifyContext::~VerifyContext() = default;

const SweepResult& VerifyContext::sweep_result() {
  if (!sweep_) {
    sweep_ = std::make_unique<SweepResult>(sweep(manifold_, frame_, options()));
  }
  return *sweep_;
}

const RidgeNetwork& VerifyContext::network() {
  if (!network_) {
    network_ = std::make_unique<RidgeNetwork>(
        analyse_ridge_network(manifold_, sweep_result(), options()));
  }
  return *network_;
}

std::array<double, 81> finite_difference_riemann(const Manifold& manifold,
                                                 const Vec3& q, ChartId chart,
                                                 double h) {
  std::array<Christoffel, 3> dgamma;
  for (int m = 0; m < 3; ++m) {
    Vec3 qp = q, qm = q;
    qp[m] += h;
    qm[m] -= h;
    const Christoffel gp = manifold.christoffel_at(qp, chart);
    const Christoffel gm = manifold.christoffel_at(qm, chart);
    for (int k = 0; k < 3; ++k) {
      dgamma[m].upper[k] = (gp.upper[k] - gm.upper[k]) / (2.0 * h);
    }
  }
  const Christoffel g = manifold.christoffel_at(q, chart);
  const Mat3 metric = manifold.metric_at(q, chart);

  // up(m) = R^m_{lij} with R(e_i,e_j)e_l = R^m_{lij} e_m.
  std::array<double, 81> out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int l = 0; l < 3; ++l) {
        Vec3 up;
        for (int m = 0; m < 3; ++m) {
          double v = dgamma[i](m, j, l) - dgamma[j](m, i, l);
          for (int p = 0; p < 3; ++p) {
            v += g(m, i, p) * g(p, j, l) - g(m, j, p) * g(p, i, l);
          }
          up[m] = v;
        }
        const Vec3 lowered = metric * up;
        for (int k = 0; k < 3; ++k) {
          out[((i * 3 + j) * 3 + k) * 3 + l] = lowered[k];
        }
      }
  return out;
}

std::vector<std::string> criterion_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, run] : runners()) ids.push_back(id);
  return ids;
}

std::vector<CheckResult> run_criterion(std::string_view id, VerifyContext& ctx) {
  for (const auto& [name, run] : runners()) {
    if (name != id) continue;
    const auto start = std::chrono::steady_clock::now();
    std::vector<CheckResult> results = run(ctx);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    for (auto& r : results) r.seconds = seconds;
    return results;
  }
  throw ConfigError("unknown criterion '" + std::string(id) + "'");
}

std::vector<CheckResult> run_verify(const RunConfig& config,
                                    const std::vector<std::string>& ids,
                                    std::ostream& progress) {
  VerifyContext ctx(config);
  std::vector<CheckResult> all;
  for (const std::string& id : ids.empty() ? criterion_ids() : ids) {
    for (CheckResult& r : run_criterion(id, ctx)) {
      progress << format_check(r) << std::endl;
      all.push_back(std::move(r));
    }
  }
  return all;
}

std::string format_check(const CheckResult& r) {
  std::ostringstream s;
  s << "criterion " << std::left << std::setw(6) << r.id << ' ' << std::setw(4)
    << to_string(r.status) << "  " << r.title << " | " << r.detail << " ["
    << std::fixed << std::setprecision(2) << r.seconds << " s]";
  return s.str();
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::none_of(results.begin(), results.end(), [](const CheckResult& r) {
    return r.status == CheckStatus::fail;
  });
}

}  // namespace conjloc
