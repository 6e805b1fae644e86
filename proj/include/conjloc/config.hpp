#pragma once

#include "conjloc/locus.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace conjloc {

enum class DirectionMode { velocity, angles };
enum class PlyCoordinates { chart, ambient };
enum class PlyEncoding { ascii, binary };

// Fully resolved run configuration. Defaults are the demonstration ellipsoid
// and base point.
struct RunConfig {
  SemiAxes semi_axes;
  Vec3 base_point{kPi / 3.0, 2.3, -kPi / 5.0};
  // <= 0 before resolution means "derive from the semi-axes".
  double t_max = 0.0;
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_max = 0.1;
  int n_theta = 64;
  int n_phi = 128;
  double umbilic_tol = 1e-5;
  double closure_tol = 5e-3;
  double line_step = 0.02;
  double line_spacing = 0.08;
  unsigned threads = 0;  // 0: hardware concurrency
  std::uint64_t seed = 20240601;
  std::filesystem::path output_dir = "out";
  PlyCoordinates ply_coordinates = PlyCoordinates::chart;
  PlyEncoding ply_encoding = PlyEncoding::ascii;
  DirectionMode direction_mode = DirectionMode::velocity;
  Vec3 direction{-0.730, 0.425, -0.774};

  bool is_demonstration_case() const;
  LocusOptions locus_options() const;
  IntegratorOptions integrator_options() const;
  ConjugateOptions conjugate_options() const;
  LaunchSpec launch() const;

  // Canonical key = value text; parse_config(to_text()) reproduces *this.
  std::string to_text() const;
  // FNV-1a of to_text().
  std::uint64_t hash() const;
};

double default_t_max(const SemiAxes& axes);

// Grammar, one entry per line:
//   key = value       scalars
//   key = (a, b, c)   tuples; the parentheses are optional
//   # comment         also allowed after a value
// Overrides use the same key=value form and are applied after the file.
// Throws ConfigError naming the offending key.
RunConfig parse_config(std::string_view text,
                       const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::filesystem::path& file,
                      const std::vector<std::string>& overrides = {});

std::vector<std::string_view> config_keys();

std::string hash_hex(std::uint64_t h);
std::uint64_t fnv1a(std::string_view bytes);

// Shortest round-trip decimal form.
std::string format_double(double x);

}  // namespace conjloc
