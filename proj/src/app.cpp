#include "conjloc/app.hpp"

#include "conjloc/io.hpp"
#include "conjloc/verify.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace conjloc {

namespace {

constexpr std::string_view kPlySchema = "conjloc.ply/1";

Vec3 launch_velocity(const RunConfig& config, const Manifold& manifold) {
  if (config.direction_mode == DirectionMode::angles) {
    const TangentSphereFrame frame =
        TangentSphereFrame::build(manifold, config.base_point);
    return frame.velocity(config.direction[0], config.direction[1]);
  }
  return config.direction;
}

template <class Writer>
void emit(const RunConfig& config, std::string_view name,
          std::string_view schema, std::ostream& log, Writer&& write) {
  std::ostringstream buffer;
  write(buffer);
  const auto path = config.output_dir / name;
  emit_file(path, buffer.str(), config, schema);
  log << "wrote " << path.string() << '\n';
}

int run_trace(const RunConfig& config, std::ostream& log) {
  const Ellipsoid manifold(config.semi_axes);
  LaunchSpec launch = config.launch();
  launch.velocity = launch_velocity(config, manifold);
  const Trajectory traj =
      integrate(manifold, launch, config.integrator_options());
  emit(config, "trace.csv", trace_schema().id(), log,
       [&](std::ostream& out) { write_trace_csv(out, traj); });
  int changes = 0;
  double prev = area(traj.node(0));
  for (std::size_t i = 1; i < traj.segments().size(); ++i) {
    const double a = area(traj.node(i));
    if ((a < 0.0) != (prev < 0.0) && a != 0.0) ++changes;
    prev = a;
  }
  const ConjugateTimes times =
      find_conjugate_times(traj, config.conjugate_options());
  log << "R1 = " << format_double(times.r1) << ", R2 = "
      << format_double(times.r2) << ", kind " << to_string(times.kind) << ", "
      << changes << " sign changes of the area scalar up to t = "
      << format_double(traj.t_end()) << '\n';
  return kExitOk;
}

SweepResult run_sweep_only(const RunConfig& config, const Ellipsoid& manifold,
                           std::ostream& log) {
  const TangentSphereFrame frame =
      TangentSphereFrame::build(manifold, config.base_point);
  SweepResult result = sweep(manifold, frame, config.locus_options());
  std::size_t flagged = 0;
  for (const auto& rec : result.records) {
    if (rec.kind != ConjugateKind::generic) ++flagged;
  }
  log << "swept " << result.records.size() << " directions ("
      << flagged << " flagged near-umbilic or umbilic, "
      << result.frame_retries << " frame rotations)\n";
  return result;
}

int run_sweep(const RunConfig& config, std::ostream& log) {
  const Ellipsoid manifold(config.semi_axes);
  const SweepResult result = run_sweep_only(config, manifold, log);
  emit(config, "sweep.csv", sweep_schema().id(), log,
       [&](std::ostream& out) { write_sweep_csv(out, result); });
  const auto spheres = distance_spheres(result);
  for (const PolarMesh& mesh : spheres) {
    emit(config, "distance_r" + std::to_string(mesh.sheet) + ".ply", kPlySchema,
         log, [&](std::ostream& out) {
           write_polar_ply(out, mesh, config.ply_encoding);
         });
  }
  return kExitOk;
}

int run_sheets(const RunConfig& config, std::ostream& log) {
  const Ellipsoid manifold(config.semi_axes);
  const SweepResult result = run_sweep_only(config, manifold, log);
  const RidgeNetwork network =
      analyse_ridge_network(manifold, result, config.locus_options());
  for (int sheet : {1, 2}) {
    SheetMesh mesh = build_sheet(result, sheet);
    mark_ridge_vertices(mesh, result, network.points);
    emit(config, "sheet" + std::to_string(sheet) + ".ply", kPlySchema, log,
         [&](std::ostream& out) {
           write_sheet_ply(out, mesh, config.ply_coordinates,
                           config.ply_encoding);
         });
  }
  return kExitOk;
}

int run_coords(const RunConfig& config, std::ostream& log) {
  const Ellipsoid manifold(config.semi_axes);
  const SweepResult result = run_sweep_only(config, manifold, log);
  const LocusOptions options = config.locus_options();
  const UmbilicSearch umbilics =
      find_umbilic_directions(manifold, result, options);
  if (umbilics.all_sphere) {
    log << "every direction is umbilic; Jacobi coordinates are undefined\n";
  }
  CoordinateNet net;
  if (!umbilics.all_sphere) {
    std::vector<Vec3> centres;
    for (const auto& u : umbilics.directions) centres.push_back(u.unit);
    net = trace_coordinate_net(manifold, result, options, centres);
  }
  for (const auto& [name, family] :
       {std::pair{"coords_u.csv", &net.u_lines},
        std::pair{"coords_v.csv", &net.v_lines}}) {
    std::vector<PolyLine> lines;
    std::size_t closed = 0;
    for (const CoordinateLine& l : *family) {
      lines.push_back(l.line);
      if (l.line.closed) ++closed;
    }
    log << name << ": " << lines.size() << " lines, " << closed << " closed\n";
    emit(config, name, polyline_schema().id(), log,
         [&](std::ostream& out) { write_polyline_csv(out, lines); });
  }
  emit(config, "umbilics.csv", umbilic_schema().id(), log,
       [&](std::ostream& out) { write_umbilic_csv(out, umbilics); });
  return kExitOk;
}

int run_ridges(const RunConfig& config, std::ostream& log) {
  const Ellipsoid manifold(config.semi_axes);
  const SweepResult result = run_sweep_only(config, manifold, log);
  const RidgeNetwork network =
      analyse_ridge_network(manifold, result, config.locus_options());
  const StructureSummary s = summarize_structure(network, kAttachRadius);
  log << network.umbilics.directions.size() << " umbilic directions, "
      << network.ridges.size() << " ridges, " << network.ribs.ribs.size()
      << " ribs; closed ribs " << s.closed_ribs[0] << "/" << s.closed_ribs[1]
      << ", partial ribs " << s.partial_ribs[0] << "/" << s.partial_ribs[1]
      << '\n';
  emit(config, "ridges.csv", polyline_schema().id(), log,
       [&](std::ostream& out) { write_polyline_csv(out, network.ridges); });
  emit(config, "ribs.csv", polyline_schema().id(), log,
       [&](std::ostream& out) { write_polyline_csv(out, network.ribs.ribs); });
  emit(config, "umbilics.csv", umbilic_schema().id(), log,
       [&](std::ostream& out) { write_umbilic_csv(out, network.umbilics); });
  return kExitOk;
}

int run_verify_command(const RunConfig& config, std::ostream& log,
                       const std::vector<std::string>& ids) {
  const std::vector<CheckResult> results = run_verify(config, ids, log);
  std::ostringstream table;
  for (const CheckResult& r : results) table << format_check(r) << '\n';
  const bool ok = all_passed(results);
  table << (ok ? "verify: all checks passed\n" : "verify: FAILED\n");
  log << (ok ? "verify: all checks passed\n" : "verify: FAILED\n");
  std::filesystem::create_directories(config.output_dir);
  std::ofstream(config.output_dir / "verify.txt") << table.str();
  return ok ? kExitOk : kExitVerifyFailed;
}

void write_diagnostics(const RunConfig& config, std::string_view name,
                       const std::exception& e) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  std::ofstream out(config.output_dir / "diagnostics.txt");
  out << "subcommand = " << name << '\n';
  out << "error = " << e.what() << '\n';
  if (const auto* h = dynamic_cast<const HorizonTooShort*>(&e)) {
    out << "direction = (" << format_double(h->direction()[0]) << ", "
        << format_double(h->direction()[1]) << ", "
        << format_double(h->direction()[2]) << ")\n";
    out << "horizon = " << format_double(h->horizon()) << '\n';
  }
  out << "config_hash = " << hash_hex(config.hash()) << '\n';
  out << "[config]\n" << config.to_text();
}

}  // namespace

std::vector<std::string_view> subcommand_names() {
  return {"trace", "sweep", "sheets", "coords", "ridges", "verify"};
}

RunConfig resolve_threads(RunConfig config) {
  if (const char* env = std::getenv("CONJLOC_THREADS")) {
    const std::string_view s(env);
    unsigned n = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), n);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
      throw ConfigError("CONJLOC_THREADS: malformed thread count '" +
                        std::string(s) + "'");
    }
    config.threads = n;
  }
  if (config.threads == 0) {
    config.threads = std::max(1u, std::thread::hardware_concurrency());
  }
  return config;
}

int run_subcommand(std::string_view name, const RunConfig& config,
                   std::ostream& log, const std::vector<std::string>& verify_ids) {
  try {
    if (name == "trace") return run_trace(config, log);
    if (name == "sweep") return run_sweep(config, log);
    if (name == "sheets") return run_sheets(config, log);
    if (name == "coords") return run_coords(config, log);
    if (name == "ridges") return run_ridges(config, log);
    if (name == "verify") return run_verify_command(config, log, verify_ids);
    log << "error: unknown subcommand '" << name << "'\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    log << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    log << "numerical failure: " << e.what() << '\n';
    write_diagnostics(config, name, e);
    return kExitNumerical;
  }
}

}  // namespace conjloc
