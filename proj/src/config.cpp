#include "conjloc/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace conjloc {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(std::string_view key, const std::string& why) {
  throw ConfigError("config key '" + std::string(key) + "': " + why);
}

bool parse_plain(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

// number | [-][k*]pi[/m]
double parse_real(std::string_view key, std::string_view s) {
  s = trim(s);
  double x = 0.0;
  if (parse_plain(s, x)) {
    if (!std::isfinite(x)) fail(key, "non-finite value '" + std::string(s) + "'");
    return x;
  }
  const auto pos = s.find("pi");
  if (pos == std::string_view::npos) {
    fail(key, "malformed number '" + std::string(s) + "'");
  }
  double factor = 1.0;
  std::string_view head = trim(s.substr(0, pos));
  if (!head.empty() && head.front() == '-') {
    factor = -1.0;
    head = trim(head.substr(1));
  }
  if (!head.empty()) {
    if (head.back() != '*') fail(key, "malformed number '" + std::string(s) + "'");
    double k = 0.0;
    if (!parse_plain(trim(head.substr(0, head.size() - 1)), k)) {
      fail(key, "malformed number '" + std::string(s) + "'");
    }
    factor *= k;
  }
  std::string_view tail = trim(s.substr(pos + 2));
  double divisor = 1.0;
  if (!tail.empty()) {
    if (tail.front() != '/' || !parse_plain(trim(tail.substr(1)), divisor) ||
        divisor == 0.0) {
      fail(key, "malformed number '" + std::string(s) + "'");
    }
  }
  return factor * kPi / divisor;
}

std::vector<double> parse_tuple(std::string_view key, std::string_view s,
                                std::size_t n) {
  s = trim(s);
  if (!s.empty() && s.front() == '(') {
    if (s.back() != ')') fail(key, "unbalanced parentheses");
    s = s.substr(1, s.size() - 2);
  }
  std::vector<double> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(parse_real(key, s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  if (out.size() != n) {
    fail(key, "expected " + std::to_string(n) + " values, got " +
                  std::to_string(out.size()));
  }
  return out;
}

long long parse_integer(std::string_view key, std::string_view s) {
  s = trim(s);
  long long x = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    fail(key, "malformed integer '" + std::string(s) + "'");
  }
  return x;
}

template <class E, std::size_t N>
E parse_enum(std::string_view key, std::string_view s,
             const std::array<std::pair<std::string_view, E>, N>& names) {
  s = trim(s);
  for (const auto& [name, value] : names) {
    if (name == s) return value;
  }
  std::string allowed;
  for (const auto& [name, value] : names) {
    if (!allowed.empty()) allowed += ", ";
    allowed += name;
  }
  fail(key, "unknown value '" + std::string(s) + "' (one of " + allowed + ")");
}

constexpr std::array<std::pair<std::string_view, PlyCoordinates>, 2>
    kPlyCoordinates{{{"chart", PlyCoordinates::chart},
                     {"ambient", PlyCoordinates::ambient}}};
constexpr std::array<std::pair<std::string_view, PlyEncoding>, 2>
    kPlyEncodings{{{"ascii", PlyEncoding::ascii},
                   {"binary", PlyEncoding::binary}}};

template <class E, std::size_t N>
std::string_view enum_name(
    E value, const std::array<std::pair<std::string_view, E>, N>& names) {
  for (const auto& [name, v] : names) {
    if (v == value) return name;
  }
  return "?";
}

using Setter = std::function<void(RunConfig&, std::string_view key,
                                  std::string_view value)>;

const std::vector<std::pair<std::string_view, Setter>>& setters() {
  static const std::vector<std::pair<std::string_view, Setter>> table = {
      {"semi_axes",
       [](RunConfig& c, auto k, auto v) {
         const auto x = parse_tuple(k, v, 4);
         c.semi_axes = SemiAxes{x[0], x[1], x[2], x[3]};
       }},
      {"base_point",
       [](RunConfig& c, auto k, auto v) {
         const auto x = parse_tuple(k, v, 3);
         c.base_point = Vec3(x[0], x[1], x[2]);
       }},
      {"t_max", [](RunConfig& c, auto k, auto v) { c.t_max = parse_real(k, v); }},
      {"rtol", [](RunConfig& c, auto k, auto v) { c.rtol = parse_real(k, v); }},
      {"atol", [](RunConfig& c, auto k, auto v) { c.atol = parse_real(k, v); }},
      {"h_max", [](RunConfig& c, auto k, auto v) { c.h_max = parse_real(k, v); }},
      {"n_theta",
       [](RunConfig& c, auto k, auto v) {
         c.n_theta = static_cast<int>(parse_integer(k, v));
       }},
      {"n_phi",
       [](RunConfig& c, auto k, auto v) {
         c.n_phi = static_cast<int>(parse_integer(k, v));
       }},
      {"umbilic_tol",
       [](RunConfig& c, auto k, auto v) { c.umbilic_tol = parse_real(k, v); }},
      {"closure_tol",
       [](RunConfig& c, auto k, auto v) { c.closure_tol = parse_real(k, v); }},
      {"line_step",
       [](RunConfig& c, auto k, auto v) { c.line_step = parse_real(k, v); }},
      {"line_spacing",
       [](RunConfig& c, auto k, auto v) { c.line_spacing = parse_real(k, v); }},
      {"threads",
       [](RunConfig& c, auto k, auto v) {
         const long long n = parse_integer(k, v);
         if (n < 0) fail(k, "must be >= 0");
         c.threads = static_cast<unsigned>(n);
       }},
      {"seed",
       [](RunConfig& c, auto k, auto v) {
         const long long n = parse_integer(k, v);
         if (n < 0) fail(k, "must be >= 0");
         c.seed = static_cast<std::uint64_t>(n);
       }},
      {"output_dir",
       [](RunConfig& c, auto k, auto v) {
         v = trim(v);
         if (v.empty()) fail(k, "empty path");
         c.output_dir = std::string(v);
       }},
      {"ply_coordinates",
       [](RunConfig& c, auto k, auto v) {
         c.ply_coordinates = parse_enum(k, v, kPlyCoordinates);
       }},
      {"ply_encoding",
       [](RunConfig& c, auto k, auto v) {
         c.ply_encoding = parse_enum(k, v, kPlyEncodings);
       }},
      {"direction",
       [](RunConfig& c, auto k, auto v) {
         std::string_view s = trim(v);
         const auto inner = s.size() >= 2 && s.front() == '(' ? s.substr(1, s.size() - 2) : s;
         const auto commas = std::count(inner.begin(), inner.end(), ',');
         if (commas == 1) {
           const auto x = parse_tuple(k, v, 2);
           c.direction = Vec3(x[0], x[1], 0.0);
           c.direction_mode = DirectionMode::angles;
         } else {
           const auto x = parse_tuple(k, v, 3);
           c.direction = Vec3(x[0], x[1], x[2]);
           c.direction_mode = DirectionMode::velocity;
         }
       }},
  };
  return table;
}

void apply_line(RunConfig& config, std::string_view line,
                std::map<std::string, int>& seen, int line_no) {
  if (const auto hash = line.find('#'); hash != std::string_view::npos) {
    line = line.substr(0, hash);
  }
  line = trim(line);
  if (line.empty()) return;
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("config line " + std::to_string(line_no) +
                      ": expected key = value");
  }
  const std::string_view key = trim(line.substr(0, eq));
  const std::string_view value = trim(line.substr(eq + 1));
  const auto& table = setters();
  const auto it = std::find_if(table.begin(), table.end(),
                               [&](const auto& e) { return e.first == key; });
  if (it == table.end()) fail(key, "unknown key");
  if (value.empty()) fail(key, "missing value");
  if (line_no > 0 && seen[std::string(key)]++ > 0) fail(key, "duplicate key");
  it->second(config, key, value);
}

void validate(RunConfig& c) {
  for (double a : c.semi_axes.as_array()) {
    if (!(a > 0.0)) fail("semi_axes", "all semi-axes must be positive");
  }
  if (!(std::sin(c.base_point[0]) > 0.0) || !(std::sin(c.base_point[1]) > 0.0)) {
    fail("base_point", "theta and phi must lie in (0, pi)");
  }
  const auto positive = [](std::string_view key, double x) {
    if (!(x > 0.0)) fail(key, "must be positive");
  };
  positive("rtol", c.rtol);
  positive("atol", c.atol);
  positive("h_max", c.h_max);
  positive("umbilic_tol", c.umbilic_tol);
  positive("closure_tol", c.closure_tol);
  positive("line_step", c.line_step);
  positive("line_spacing", c.line_spacing);
  if (c.n_theta < 16) fail("n_theta", "must be >= 16");
  if (c.n_phi < 32) fail("n_phi", "must be >= 32");
  if (c.direction_mode == DirectionMode::velocity && c.direction.norm() == 0.0) {
    fail("direction", "zero velocity");
  }
}

}  // namespace

double default_t_max(const SemiAxes& axes) {
  return 1.25 * kPi * axes.longest();
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  const auto r = std::to_chars(buf, buf + 16, h, 16);
  std::string s(buf, r.ptr);
  return std::string(16 - s.size(), '0') + s;
}

std::string format_double(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::vector<std::string_view> config_keys() {
  std::vector<std::string_view> keys;
  for (const auto& [k, s] : setters()) keys.push_back(k);
  return keys;
}

RunConfig parse_config(std::string_view text,
                       const std::vector<std::string>& overrides) {
  RunConfig config;
  std::map<std::string, int> seen;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    apply_line(config, text.substr(0, nl), seen, ++line_no);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  std::map<std::string, int> ignored;
  for (const auto& o : overrides) {
    if (o.find('=') == std::string::npos) {
      throw ConfigError("override '" + o + "': expected key=value");
    }
    apply_line(config, o, ignored, 0);
  }
  if (config.t_max == 0.0) {
    config.t_max = default_t_max(config.semi_axes);
  } else if (!(config.t_max > 0.0)) {
    fail("t_max", "must be positive");
  }
  validate(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& file,
                      const std::vector<std::string>& overrides) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), overrides);
}

bool RunConfig::is_demonstration_case() const {
  const RunConfig demo;
  return semi_axes.as_array() == demo.semi_axes.as_array() &&
         base_point == demo.base_point;
}

IntegratorOptions RunConfig::integrator_options() const {
  IntegratorOptions o;
  o.rtol = rtol;
  o.atol = atol;
  o.h_max = h_max;
  return o;
}

ConjugateOptions RunConfig::conjugate_options() const {
  ConjugateOptions o;
  o.umbilic_tol = umbilic_tol;
  return o;
}

LocusOptions RunConfig::locus_options() const {
  LocusOptions o;
  o.integrator = integrator_options();
  o.conjugate = conjugate_options();
  o.t_max = t_max > 0.0 ? t_max : default_t_max(semi_axes);
  o.n_theta = n_theta;
  o.n_phi = n_phi;
  o.threads = threads;
  o.closure_tol = closure_tol;
  o.line_step = line_step;
  o.line_spacing = line_spacing;
  return o;
}

LaunchSpec RunConfig::launch() const {
  LaunchSpec launch;
  launch.base_point = base_point;
  launch.chart = ChartId::primary;
  launch.t_max = t_max > 0.0 ? t_max : default_t_max(semi_axes);
  return launch;
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  const auto tuple = [](std::initializer_list<double> xs) {
    std::string s = "(";
    bool first = true;
    for (double x : xs) {
      if (!first) s += ", ";
      s += format_double(x);
      first = false;
    }
    return s + ")";
  };
  out << "semi_axes = "
      << tuple({semi_axes.a, semi_axes.b, semi_axes.c, semi_axes.d}) << '\n';
  out << "base_point = "
      << tuple({base_point[0], base_point[1], base_point[2]}) << '\n';
  out << "t_max = " << format_double(t_max) << '\n';
  out << "rtol = " << format_double(rtol) << '\n';
  out << "atol = " << format_double(atol) << '\n';
  out << "h_max = " << format_double(h_max) << '\n';
  out << "n_theta = " << n_theta << '\n';
  out << "n_phi = " << n_phi << '\n';
  out << "umbilic_tol = " << format_double(umbilic_tol) << '\n';
  out << "closure_tol = " << format_double(closure_tol) << '\n';
  out << "line_step = " << format_double(line_step) << '\n';
  out << "line_spacing = " << format_double(line_spacing) << '\n';
  out << "threads = " << threads << '\n';
  out << "seed = " << seed << '\n';
  out << "output_dir = " << output_dir.string() << '\n';
  out << "ply_coordinates = " << enum_name(ply_coordinates, kPlyCoordinates)
      << '\n';
  out << "ply_encoding = " << enum_name(ply_encoding, kPlyEncodings) << '\n';
  if (direction_mode == DirectionMode::angles) {
    out << "direction = " << tuple({direction[0], direction[1]}) << '\n';
  } else {
    out << "direction = " << tuple({direction[0], direction[1], direction[2]})
        << '\n';
  }
  return out.str();
}

std::uint64_t RunConfig::hash() const { return fnv1a(to_text()); }

}  // namespace conjloc
