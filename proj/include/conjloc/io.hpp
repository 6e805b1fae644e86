#pragma once

#include "conjloc/config.hpp"
#include "conjloc/locus.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace conjloc {

// A versioned CSV layout. `fingerprint` is frozen alongside the version;
// editing the columns without bumping the version makes schema_consistent()
// fail.
struct CsvSchema {
  std::string_view name;
  int version;
  std::vector<std::string_view> columns;
  std::uint64_t fingerprint;

  std::string id() const;  // name/version
  std::string header() const;
  std::uint64_t computed_fingerprint() const;
};

const CsvSchema& trace_schema();
const CsvSchema& sweep_schema();
const CsvSchema& polyline_schema();
const CsvSchema& umbilic_schema();
std::vector<const CsvSchema*> all_schemas();
bool schema_consistent(const CsvSchema& schema);

void write_trace_csv(std::ostream& out, const Trajectory& trajectory);
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);
void write_polyline_csv(std::ostream& out, const std::vector<PolyLine>& lines);
void write_umbilic_csv(std::ostream& out, const UmbilicSearch& umbilics);

void write_sheet_ply(std::ostream& out, const SheetMesh& mesh,
                     PlyCoordinates coordinates, PlyEncoding encoding);
void write_polar_ply(std::ostream& out, const PolarMesh& mesh,
                     PlyEncoding encoding);

// Resolved configuration, its hash, the schema and a digest of the data,
// written next to every output file as <file>.meta.
void write_sidecar(const std::filesystem::path& data_file,
                   const RunConfig& config, std::string_view schema_id);

// Writes `contents` to `path` and its sidecar.
void emit_file(const std::filesystem::path& path, const std::string& contents,
               const RunConfig& config, std::string_view schema_id);

}  // namespace conjloc
