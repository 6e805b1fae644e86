#include "conjloc/app.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

int main(int argc, char** argv) {
  using namespace conjloc;

  CLI::App app{"Conjugate locus of a point on a quadraxial ellipsoid"};
  app.require_subcommand(1, 1);

  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::string> output, direction, semi_axes, base_point;
  std::optional<double> t_max;
  std::optional<int> n_theta, n_phi;
  std::optional<unsigned> threads;
  std::optional<std::string> ply_coordinates;
  bool ply_binary = false;
  std::vector<std::string> criteria;

  app.add_option("-c,--config", config_file, "key = value config file")
      ->check(CLI::ExistingFile);
  app.add_option("-s,--set", sets, "override, e.g. --set n_theta=32");
  app.add_option("-o,--output", output, "output directory");
  app.add_option("-d,--direction", direction,
                 "launch direction: raw velocity 'a,b,c' or sphere angles "
                 "'Theta,Phi'");
  app.add_option("--semi-axes", semi_axes, "a,b,c,d");
  app.add_option("--base-point", base_point, "theta,phi,psi");
  app.add_option("--t-max", t_max, "integration horizon");
  app.add_option("--n-theta", n_theta, "sweep lattice rows");
  app.add_option("--n-phi", n_phi, "sweep lattice columns");
  app.add_option("-j,--threads", threads, "worker threads (0: all cores)");
  app.add_option("--ply-coordinates", ply_coordinates, "chart or ambient");
  app.add_flag("--ply-binary", ply_binary, "binary little-endian PLY");
  app.fallthrough();

  for (std::string_view name : subcommand_names()) {
    app.add_subcommand(std::string(name));
  }
  app.get_subcommand("trace")->description("area scalar along one geodesic");
  app.get_subcommand("sweep")->description(
      "conjugate records over the tangent sphere and distance-sphere meshes");
  app.get_subcommand("sheets")->description("sheet meshes of the conjugate locus");
  app.get_subcommand("coords")->description("Jacobi coordinate lines");
  app.get_subcommand("ridges")->description("ridges, ribs and umbilic directions");
  app.get_subcommand("verify")
      ->description("run the acceptance checks")
      ->add_option("--criterion", criteria, "criterion ids (default: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  std::vector<std::string> overrides = sets;
  const auto add = [&](const char* key, const std::string& value) {
    overrides.push_back(std::string(key) + "=" + value);
  };
  if (output) add("output_dir", *output);
  if (direction) add("direction", *direction);
  if (semi_axes) add("semi_axes", *semi_axes);
  if (base_point) add("base_point", *base_point);
  if (t_max) add("t_max", std::to_string(*t_max));
  if (n_theta) add("n_theta", std::to_string(*n_theta));
  if (n_phi) add("n_phi", std::to_string(*n_phi));
  if (threads) add("threads", std::to_string(*threads));
  if (ply_coordinates) add("ply_coordinates", *ply_coordinates);
  if (ply_binary) add("ply_encoding", "binary");

  RunConfig config;
  try {
    config = config_file.empty() ? parse_config("", overrides)
                                 : load_config(config_file, overrides);
    config = resolve_threads(config);
  } catch (const Error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  return run_subcommand(name, config, std::cout, criteria);
}
