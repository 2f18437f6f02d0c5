#include "minlor/config.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "minlor/errors.hpp"
#include "minlor/fourier.hpp"

namespace minlor {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

double parse_double(const std::string& where, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) fail(where, "trailing characters in number '" + v + "'");
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(where, "not a number: '" + v + "'");
  }
}

int parse_int(const std::string& where, const std::string& v) {
  try {
    size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) fail(where, "trailing characters in integer '" + v + "'");
    if (x < INT_MIN || x > INT_MAX) fail(where, "integer out of range");
    return static_cast<int>(x);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(where, "not an integer: '" + v + "'");
  }
}

bool parse_bool(const std::string& where, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  fail(where, "not a boolean: '" + v + "'");
}

std::vector<double> parse_list(const std::string& where, const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(where, "empty list entry");
    out.push_back(parse_double(where, item));
  }
  if (out.empty()) fail(where, "empty list");
  return out;
}

void apply_kv(RunConfig& c, const std::string& section, const std::string& key,
              const std::string& value, const std::string& where) {
  if (section == "metric") {
    if (key == "type") {
      c.metric_type = value;
    } else if (key == "dimension") {
      c.dimension = parse_int(where, value);
    } else if (key == "param") {
      c.metric_param = parse_double(where, value);
    } else {
      fail(where, "unknown key '" + key + "' in [metric]");
    }
    return;
  }
  if (section == "curve") {
    if (key == "type") {
      c.curve_type = value;
    } else if (key == "radius") {
      c.radius = parse_double(where, value);
    } else if (key == "semi_a") {
      c.semi_a = parse_double(where, value);
    } else if (key == "semi_b") {
      c.semi_b = parse_double(where, value);
    } else if (key == "k1_time") {
      c.k1_time = parse_double(where, value);
    } else if (key == "file") {
      c.curve_file = value;
    } else if (key == "project_orthogonal") {
      c.project_orthogonal = parse_bool(where, value);
    } else if (key == "conformalize") {
      c.conformalize = parse_bool(where, value);
    } else {
      fail(where, "unknown key '" + key + "' in [curve]");
    }
    return;
  }
  if (section == "solver") {
    if (key == "n") {
      c.n = parse_int(where, value);
    } else if (key == "t_target") {
      c.t_target = parse_double(where, value);
    } else if (key == "tol") {
      c.tol = parse_double(where, value);
    } else if (key == "max_iter") {
      c.max_iter = parse_int(where, value);
    } else if (key == "delta") {
      c.delta = value == "auto" ? 0.0 : parse_double(where, value);
    } else if (key == "tol_null") {
      c.tol_null = parse_double(where, value);
    } else if (key == "tol_causal") {
      c.tol_causal = parse_double(where, value);
    } else {
      fail(where, "unknown key '" + key + "' in [solver]");
    }
    return;
  }
  if (section == "run") {
    if (key == "mode") {
      if (value == "single") {
        c.mode = StudyMode::Single;
      } else if (value == "convergence") {
        c.mode = StudyMode::Convergence;
      } else if (value == "stability") {
        c.mode = StudyMode::Stability;
      } else if (value == "backward") {
        c.mode = StudyMode::Backward;
      } else {
        fail(where, "unknown mode '" + value + "'");
      }
    } else if (key == "levels") {
      c.levels = parse_int(where, value);
    } else if (key == "epsilons") {
      c.epsilons = parse_list(where, value);
    } else if (key == "output_dir") {
      c.output_dir = value;
    } else if (key == "surface_format") {
      c.surface_format = value;
    } else {
      fail(where, "unknown key '" + key + "' in [run]");
    }
    return;
  }
  fail(where, "unknown section [" + section + "]");
}

void apply_override(RunConfig& c, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    fail("override '" + spec + "'", "expected section.key=value");
  const std::string lhs = trim(spec.substr(0, eq));
  const std::string value = trim(spec.substr(eq + 1));
  const auto dot = lhs.find('.');
  if (dot == std::string::npos)
    fail("override '" + spec + "'", "expected section.key=value");
  apply_kv(c, lhs.substr(0, dot), lhs.substr(dot + 1), value,
           "override '" + spec + "'");
}

void apply_env(RunConfig& c) {
  if (const char* dir = std::getenv("MINLOR_OUTPUT_DIR"); dir && *dir)
    c.output_dir = dir;
}

}  // namespace

void RunConfig::check() const {
  if (!is_power_of_two(n) || n < 16)
    throw ConfigError("solver.n must be a power of two >= 16, got " +
                      std::to_string(n));
  if (!std::isfinite(t_target)) throw ConfigError("solver.t_target must be finite");
  if (!(tol > 0.0)) throw ConfigError("solver.tol must be positive");
  if (!(tol_null > 0.0)) throw ConfigError("solver.tol_null must be positive");
  if (!(tol_causal > 0.0)) throw ConfigError("solver.tol_causal must be positive");
  if (max_iter < 1) throw ConfigError("solver.max_iter must be >= 1");
  if (delta < 0.0) throw ConfigError("solver.delta must be 'auto' or positive");
  if (dimension < 2) throw ConfigError("metric.dimension must be >= 2");
  if (metric_type != "minkowski" && metric_type != "flrw-constant" &&
      metric_type != "flrw-exponential" && metric_type != "flrw-polynomial")
    throw ConfigError("unknown metric.type '" + metric_type + "'");
  if (curve_type != "circle" && curve_type != "ellipse" && curve_type != "file")
    throw ConfigError("unknown curve.type '" + curve_type + "'");
  if (curve_type == "file" && curve_file.empty())
    throw ConfigError("curve.file required for curve.type = file");
  if (surface_format != "tsv" && surface_format != "json")
    throw ConfigError("run.surface_format must be tsv or json");
  if (levels < 1) throw ConfigError("run.levels must be >= 1");
  for (double e : epsilons)
    if (!(e > 0.0)) throw ConfigError("run.epsilons must be positive");
}

RunConfig parse_config(const std::string& path,
                       const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);

  RunConfig c;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(where, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(where, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(where, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(where, "empty key");
    if (section.empty()) fail(where, "key outside any [section]");
    apply_kv(c, section, key, value, where);
  }

  apply_env(c);
  for (const auto& o : overrides) apply_override(c, o);
  c.check();
  return c;
}

RunConfig config_from_overrides(const std::vector<std::string>& overrides) {
  RunConfig c;
  apply_env(c);
  for (const auto& o : overrides) apply_override(c, o);
  c.check();
  return c;
}

std::string echo_config(const RunConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "[metric]\n"
     << "type = " << c.metric_type << "\n"
     << "dimension = " << c.dimension << "\n"
     << "param = " << c.metric_param << "\n\n"
     << "[curve]\n"
     << "type = " << c.curve_type << "\n"
     << "radius = " << c.radius << "\n"
     << "semi_a = " << c.semi_a << "\n"
     << "semi_b = " << c.semi_b << "\n"
     << "k1_time = " << c.k1_time << "\n"
     << "file = " << c.curve_file << "\n"
     << "project_orthogonal = " << (c.project_orthogonal ? "true" : "false")
     << "\n"
     << "conformalize = " << (c.conformalize ? "true" : "false") << "\n\n"
     << "[solver]\n"
     << "n = " << c.n << "\n"
     << "t_target = " << c.t_target << "\n"
     << "tol = " << c.tol << "\n"
     << "max_iter = " << c.max_iter << "\n";
  if (c.delta > 0.0) {
    os << "delta = " << c.delta << "\n";
  } else {
    os << "delta = auto\n";
  }
  os << "tol_null = " << c.tol_null << "\n"
     << "tol_causal = " << c.tol_causal << "\n\n"
     << "[run]\n"
     << "mode = ";
  switch (c.mode) {
    case StudyMode::Single: os << "single"; break;
    case StudyMode::Convergence: os << "convergence"; break;
    case StudyMode::Stability: os << "stability"; break;
    case StudyMode::Backward: os << "backward"; break;
  }
  os << "\n"
     << "levels = " << c.levels << "\n"
     << "epsilons = ";
  for (size_t i = 0; i < c.epsilons.size(); ++i)
    os << (i ? "," : "") << c.epsilons[i];
  os << "\n"
     << "output_dir = " << c.output_dir << "\n"
     << "surface_format = " << c.surface_format << "\n";
  return os.str();
}

}  // namespace minlor
