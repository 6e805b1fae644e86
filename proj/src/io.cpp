#include "conjloc/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace conjloc {

namespace {

std::string num(double x) { return format_double(x); }

class Row {
 public:
  explicit Row(std::ostream& out) : out_(out) {}
  ~Row() { out_ << '\n'; }
  Row& operator<<(double x) { return put(num(x)); }
  Row& operator<<(int x) { return put(std::to_string(x)); }
  Row& operator<<(std::size_t x) { return put(std::to_string(x)); }
  Row& operator<<(std::string_view s) { return put(s); }

 private:
  Row& put(std::string_view s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }
  std::ostream& out_;
  bool first_ = true;
};

template <class T>
void put_binary(std::ostream& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.write(bytes, sizeof(T));
}

void ply_header(std::ostream& out, PlyEncoding encoding, std::size_t vertices,
                std::size_t faces, std::string_view comment) {
  out << "ply\n";
  out << (encoding == PlyEncoding::ascii ? "format ascii 1.0\n"
                                         : "format binary_little_endian 1.0\n");
  out << "comment " << comment << '\n';
  out << "element vertex " << vertices << '\n';
  out << "property double x\nproperty double y\nproperty double z\n";
  out << "property double R\nproperty uchar kind\nproperty uchar ridge_flag\n";
  out << "element face " << faces << '\n';
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";
}

void ply_vertex(std::ostream& out, PlyEncoding encoding, const Vec3& p,
                double r, ConjugateKind kind, bool ridge) {
  const auto k = static_cast<unsigned char>(kind);
  const auto f = static_cast<unsigned char>(ridge ? 1 : 0);
  if (encoding == PlyEncoding::ascii) {
    out << num(p[0]) << ' ' << num(p[1]) << ' ' << num(p[2]) << ' ' << num(r)
        << ' ' << int(k) << ' ' << int(f) << '\n';
    return;
  }
  put_binary(out, p[0]);
  put_binary(out, p[1]);
  put_binary(out, p[2]);
  put_binary(out, r);
  put_binary(out, k);
  put_binary(out, f);
}

void ply_faces(std::ostream& out, PlyEncoding encoding,
               const std::vector<std::array<int, 4>>& faces) {
  for (const auto& f : faces) {
    if (encoding == PlyEncoding::ascii) {
      out << "4 " << f[0] << ' ' << f[1] << ' ' << f[2] << ' ' << f[3] << '\n';
      continue;
    }
    put_binary(out, static_cast<unsigned char>(4));
    for (int v : f) put_binary(out, static_cast<std::int32_t>(v));
  }
}

void sidecar_with_hash(const std::filesystem::path& data_file,
                       const RunConfig& config, std::string_view schema_id,
                       std::uint64_t data_hash) {
  std::ofstream meta(data_file.string() + ".meta", std::ios::binary);
  if (!meta) throw Error("cannot write " + data_file.string() + ".meta");
  meta << "file = " << data_file.filename().string() << '\n';
  meta << "schema = " << schema_id << '\n';
  meta << "config_hash = " << hash_hex(config.hash()) << '\n';
  meta << "data_fnv1a = " << hash_hex(data_hash) << '\n';
  meta << "[config]\n" << config.to_text();
}

}  // namespace

std::string CsvSchema::id() const {
  return std::string(name) + "/" + std::to_string(version);
}

std::string CsvSchema::header() const {
  std::string s;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) s += ',';
    s += columns[i];
  }
  return s;
}

std::uint64_t CsvSchema::computed_fingerprint() const {
  return fnv1a(id() + ":" + header());
}

const CsvSchema& trace_schema() {
  static const CsvSchema s{
      "conjloc.trace",
      1,
      {"t", "theta", "phi", "psi", "v_theta", "v_phi", "v_psi", "xi1", "eta1",
       "xi2", "eta2", "area", "chart"},
      0x509e04363ba3c920ull};
  return s;
}

const CsvSchema& sweep_schema() {
  static const CsvSchema s{
      "conjloc.sweep",
      1,
      {"i", "j", "sphere_theta", "sphere_phi", "v_theta", "v_phi", "v_psi",
       "R1", "R2", "alpha1", "alpha2", "kind", "inv_product", "rate1", "rate2",
       "min_between"},
      0x9204e2dd3b2daf3eull};
  return s;
}

const CsvSchema& polyline_schema() {
  static const CsvSchema s{
      "conjloc.polyline",
      1,
      {"line", "label", "sheet", "closed", "extremum", "index", "p1", "p2",
       "p3", "x1", "x2", "x3", "x4", "R1", "R2"},
      0x133e13faf1c08e2aull};
  return s;
}

const CsvSchema& umbilic_schema() {
  static const CsvSchema s{
      "conjloc.umbilic",
      1,
      {"index", "u1", "u2", "u3", "v_theta", "v_phi", "v_psi", "R", "gap"},
      0x29eadd25223ffec9ull};
  return s;
}

std::vector<const CsvSchema*> all_schemas() {
  return {&trace_schema(), &sweep_schema(), &polyline_schema(),
          &umbilic_schema()};
}

bool schema_consistent(const CsvSchema& schema) {
  return schema.computed_fingerprint() == schema.fingerprint;
}

void write_trace_csv(std::ostream& out, const Trajectory& trajectory) {
  out << trace_schema().header() << '\n';
  const auto row = [&](const GeodesicBundleState& s) {
    Row r(out);
    r << s.t << s.q[0] << s.q[1] << s.q[2] << s.v[0] << s.v[1] << s.v[2];
    for (int k : {0, 1, 4, 5}) r << s.jacobi[k];
    r << area(s) << std::string_view(to_string(s.chart));
  };
  row(trajectory.initial());
  for (std::size_t i = 0; i < trajectory.segments().size(); ++i) {
    row(trajectory.node(i));
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << sweep_schema().header() << '\n';
  for (int i = 0; i < sweep.n_theta; ++i) {
    for (int j = 0; j < sweep.n_phi; ++j) {
      const ConjugateRecord& rec = sweep.at(i, j);
      Row r(out);
      r << i << j << rec.sphere_theta << rec.sphere_phi << rec.velocity[0]
        << rec.velocity[1] << rec.velocity[2] << rec.r1 << rec.r2
        << rec.alpha1 << rec.alpha2 << to_string(rec.kind) << rec.inv_product
        << rec.rate1 << rec.rate2 << rec.min_between;
    }
  }
}

void write_polyline_csv(std::ostream& out, const std::vector<PolyLine>& lines) {
  out << polyline_schema().header() << '\n';
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const PolyLine& line = lines[l];
    for (std::size_t k = 0; k < line.points.size(); ++k) {
      Row r(out);
      r << l << to_string(line.label) << line.sheet
        << std::string_view(line.closed ? "1" : "0")
        << (line.extremum ? to_string(*line.extremum) : std::string_view())
        << k << line.points[k][0] << line.points[k][1] << line.points[k][2];
      if (k < line.ambient.size()) {
        for (int c = 0; c < 4; ++c) r << line.ambient[k][c];
      } else {
        r << std::string_view() << std::string_view() << std::string_view()
          << std::string_view();
      }
      if (k < line.r1.size()) r << line.r1[k]; else r << std::string_view();
      if (k < line.r2.size()) r << line.r2[k]; else r << std::string_view();
    }
  }
}

void write_umbilic_csv(std::ostream& out, const UmbilicSearch& umbilics) {
  out << umbilic_schema().header() << '\n';
  for (std::size_t k = 0; k < umbilics.directions.size(); ++k) {
    const UmbilicDirection& u = umbilics.directions[k];
    Row r(out);
    r << k << u.unit[0] << u.unit[1] << u.unit[2] << u.velocity[0]
      << u.velocity[1] << u.velocity[2] << u.r << u.gap;
  }
}

void write_sheet_ply(std::ostream& out, const SheetMesh& mesh,
                     PlyCoordinates coordinates, PlyEncoding encoding) {
  ply_header(out, encoding, mesh.vertices.size(), mesh.faces.size(),
             "conjloc sheet " + std::to_string(mesh.sheet) +
                 (coordinates == PlyCoordinates::chart
                      ? " chart (theta,phi,psi)"
                      : " ambient (x1,x2,x3)"));
  for (const SheetVertex& v : mesh.vertices) {
    const Vec3 p = coordinates == PlyCoordinates::chart
                       ? v.chart
                       : Vec3(v.ambient[0], v.ambient[1], v.ambient[2]);
    ply_vertex(out, encoding, p, v.r, v.kind, v.ridge);
  }
  ply_faces(out, encoding, mesh.faces);
}

void write_polar_ply(std::ostream& out, const PolarMesh& mesh,
                     PlyEncoding encoding) {
  ply_header(out, encoding, mesh.vertices.size(), mesh.faces.size(),
             "conjloc distance sphere r=R" + std::to_string(mesh.sheet));
  for (std::size_t k = 0; k < mesh.vertices.size(); ++k) {
    ply_vertex(out, encoding, mesh.vertices[k], mesh.r[k], mesh.kind[k],
               false);
  }
  ply_faces(out, encoding, mesh.faces);
}

void write_sidecar(const std::filesystem::path& data_file,
                   const RunConfig& config, std::string_view schema_id) {
  std::ifstream in(data_file, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  sidecar_with_hash(data_file, config, schema_id, fnv1a(buffer.str()));
}

void emit_file(const std::filesystem::path& path, const std::string& contents,
               const RunConfig& config, std::string_view schema_id) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << contents;
  out.close();
  sidecar_with_hash(path, config, schema_id, fnv1a(contents));
}

}  // namespace conjloc
