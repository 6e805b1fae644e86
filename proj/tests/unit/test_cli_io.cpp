#include "conjloc/app.hpp"
#include "conjloc/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace conjloc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("conjloc_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_error(std::string_view text,
                         const std::vector<std::string>& overrides = {}) {
  try {
    parse_config(text, overrides);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

SheetMesh tiny_mesh() {
  SheetMesh m;
  m.n_theta = 2;
  m.n_phi = 2;
  for (int k = 0; k < 4; ++k) {
    SheetVertex v;
    v.chart = Vec3(k, 0.5 * k, -k);
    v.ambient = Vec4(k, 1, 2, 3);
    v.r = 3.0 + k;
    v.ridge = k == 2;
    m.vertices.push_back(v);
  }
  m.faces.push_back({0, 1, 3, 2});
  return m;
}

}  // namespace

TEST_CASE("empty config resolves to the demonstration case") {
  const RunConfig c = parse_config("");
  CHECK(c.is_demonstration_case());
  CHECK(c.semi_axes.longest() == 1.2);
  CHECK(c.base_point[0] == doctest::Approx(kPi / 3));
  CHECK(c.direction_mode == DirectionMode::velocity);
  CHECK(c.locus_options().t_max == doctest::Approx(1.25 * kPi * 1.2));
  CHECK(default_t_max(SemiAxes{1, 1, 1, 2}) == doctest::Approx(2.5 * kPi));
  const RunConfig round = parse_config("semi_axes = (1, 1, 1, 1)");
  CHECK(round.semi_axes.is_round());
  CHECK_FALSE(round.is_demonstration_case());
}

TEST_CASE("config errors name the offending key") {
  CHECK(config_error("t_max = -1").find("t_max") != std::string::npos);
  CHECK(config_error("bogus = 3").find("bogus") != std::string::npos);
  CHECK(config_error("n_phi = 64\nn_phi = 32").find("n_phi") != std::string::npos);
  CHECK(config_error("rtol = abc").find("rtol") != std::string::npos);
  CHECK(config_error("semi_axes = (1, 1, 1)").find("semi_axes") != std::string::npos);
  CHECK(config_error("semi_axes = (1, 1, -1, 1)").find("semi_axes") != std::string::npos);
  CHECK(config_error("base_point = (0, 1, 1)").find("base_point") != std::string::npos);
  CHECK(config_error("n_theta = 4").find("n_theta") != std::string::npos);
  CHECK(config_error("", {"threads"}).find("threads") != std::string::npos);
  CHECK(config_error("ply_encoding = gzip").find("ply_encoding") != std::string::npos);
}

TEST_CASE("grammar: tuples, comments and pi expressions") {
  const RunConfig c = parse_config(
      "# leading comment\n"
      "base_point = pi/4, 2*pi/3, -pi/5   # trailing comment\n"
      "\n"
      "direction = (0.5, 1.5)\n"
      "t_max = 2.5\n");
  CHECK(c.base_point[0] == doctest::Approx(kPi / 4));
  CHECK(c.base_point[1] == doctest::Approx(2 * kPi / 3));
  CHECK(c.base_point[2] == doctest::Approx(-kPi / 5));
  CHECK(c.direction_mode == DirectionMode::angles);
  CHECK(c.direction[0] == 0.5);
  CHECK(c.direction[1] == 1.5);
  CHECK(c.t_max == 2.5);
}

TEST_CASE("overrides win over the file and text round trips") {
  const RunConfig c = parse_config("n_theta = 32\nrtol = 1e-9", {"n_theta=20", "seed=7"});
  CHECK(c.n_theta == 20);
  CHECK(c.seed == 7u);
  CHECK(c.rtol == 1e-9);
  const RunConfig back = parse_config(c.to_text());
  CHECK(back.to_text() == c.to_text());
  CHECK(back.hash() == c.hash());
  CHECK(c.hash() != parse_config("").hash());
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(hash_hex(0xabcull) == "0000000000000abc");
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(kPi)) == kPi);
}

TEST_CASE("csv schemas are frozen") {
  for (const CsvSchema* s : all_schemas()) {
    CHECK(schema_consistent(*s));
    CHECK(s->computed_fingerprint() == s->fingerprint);
  }
  CHECK(trace_schema().id() == "conjloc.trace/1");
  CHECK(trace_schema().fingerprint == 0x509e04363ba3c920ull);
  CHECK(sweep_schema().fingerprint == 0x9204e2dd3b2daf3eull);
  CHECK(polyline_schema().fingerprint == 0x133e13faf1c08e2aull);
  CHECK(umbilic_schema().fingerprint == 0x29eadd25223ffec9ull);
  CsvSchema edited = trace_schema();
  edited.columns.pop_back();
  CHECK_FALSE(schema_consistent(edited));
}

TEST_CASE("ply encodings") {
  const SheetMesh m = tiny_mesh();
  std::ostringstream ascii, binary;
  write_sheet_ply(ascii, m, PlyCoordinates::chart, PlyEncoding::ascii);
  write_sheet_ply(binary, m, PlyCoordinates::ambient, PlyEncoding::binary);
  const std::string a = ascii.str(), b = binary.str();
  CHECK(a.rfind("ply\nformat ascii 1.0\n", 0) == 0);
  CHECK(a.find("element vertex 4") != std::string::npos);
  CHECK(a.find("element face 1") != std::string::npos);
  CHECK(a.find("property uchar ridge_flag") != std::string::npos);
  CHECK(b.find("format binary_little_endian 1.0") != std::string::npos);
  const std::string end = "end_header\n";
  const std::size_t body = b.size() - (b.find(end) + end.size());
  // 4 doubles and 2 uchars per vertex, one uchar count and 4 ints per face.
  CHECK(body == 4 * (4 * 8 + 2) + (1 + 4 * 4));
}

TEST_CASE("trace subcommand writes data and sidecar") {
  const fs::path dir = scratch("trace");
  RunConfig c = parse_config("");
  c.output_dir = dir;
  std::ostringstream log;
  CHECK(run_subcommand("trace", c, log) == kExitOk);
  CHECK(log.str().find(" 2 sign changes") != std::string::npos);
  const std::string csv = slurp(dir / "trace.csv");
  CHECK(csv.rfind(trace_schema().header() + "\n", 0) == 0);
  const std::string meta = slurp(dir / "trace.csv.meta");
  CHECK(meta.find("conjloc.trace/1") != std::string::npos);
  CHECK(meta.find(hash_hex(c.hash())) != std::string::npos);
  CHECK(meta.find(hash_hex(fnv1a(csv))) != std::string::npos);
  CHECK(meta.find("[config]") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("short horizon exits with a numerical failure and diagnostics") {
  const fs::path dir = scratch("horizon");
  RunConfig c = parse_config("t_max = 1");
  c.output_dir = dir;
  std::ostringstream log;
  CHECK(run_subcommand("trace", c, log) == kExitNumerical);
  const std::string diag = slurp(dir / "diagnostics.txt");
  CHECK(diag.find("horizon = 1") != std::string::npos);
  CHECK(diag.find("direction = (") != std::string::npos);
  CHECK(run_subcommand("nonsense", c, log) == kExitConfig);
  fs::remove_all(dir);
}

TEST_CASE("sweep output is byte-identical across runs and thread counts") {
  const fs::path a = scratch("sweep_a"), b = scratch("sweep_b");
  RunConfig c = parse_config("n_theta = 16\nn_phi = 32\nthreads = 1");
  c.output_dir = a;
  std::ostringstream log;
  REQUIRE(run_subcommand("sweep", c, log) == kExitOk);
  c.output_dir = b;
  c.threads = 2;
  REQUIRE(run_subcommand("sweep", c, log) == kExitOk);
  for (const char* f : {"sweep.csv", "distance_r1.ply", "distance_r2.ply"}) {
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(fs::exists(a / (std::string(f) + ".meta")));
  }
  const std::string csv = slurp(a / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 16 * 32);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("angles direction mode launches along the frame direction") {
  const fs::path dir = scratch("angles");
  RunConfig c = parse_config("direction = (1.2, 0.4)");
  c.output_dir = dir;
  std::ostringstream log;
  CHECK(run_subcommand("trace", c, log) == kExitOk);
  const Ellipsoid m(c.semi_axes);
  const TangentSphereFrame f = TangentSphereFrame::build(m, c.base_point);
  const ConjugateRecord rec = analyse_unit(
      m, f, TangentSphereFrame::unit_from_angles(1.2, 0.4), c.locus_options());
  CHECK(log.str().find("R1 = " + format_double(rec.r1)) != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("thread count resolution") {
  RunConfig c = parse_config("threads = 0");
  ::unsetenv("CONJLOC_THREADS");
  CHECK(resolve_threads(c).threads >= 1);
  ::setenv("CONJLOC_THREADS", "3", 1);
  CHECK(resolve_threads(c).threads == 3);
  ::setenv("CONJLOC_THREADS", "x3", 1);
  CHECK_THROWS_AS(resolve_threads(c), ConfigError);
  ::unsetenv("CONJLOC_THREADS");
}
