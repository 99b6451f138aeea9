#include "wgfem/config.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace wgfem {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& where) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (...) {
    throw ConfigError(where + ": expected a number, got '" + v + "'");
  }
}

int parse_int(const std::string& v, const std::string& where) {
  try {
    size_t pos = 0;
    const int i = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return i;
  } catch (...) {
    throw ConfigError(where + ": expected an integer, got '" + v + "'");
  }
}

// amplitude: plain real "2.5" or complex "(re,im)"
Complex parse_complex(const std::string& v, const std::string& where) {
  const std::string s = trim(v);
  if (!s.empty() && s.front() == '(') {
    if (s.back() != ')') throw ConfigError(where + ": unbalanced parentheses in '" + v + "'");
    const auto comma = s.find(',');
    if (comma == std::string::npos)
      throw ConfigError(where + ": complex value needs '(re,im)', got '" + v + "'");
    return {parse_double(trim(s.substr(1, comma - 1)), where),
            parse_double(trim(s.substr(comma + 1, s.size() - comma - 2)), where)};
  }
  return {parse_double(s, where), 0.0};
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : v) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if ((c == ',' || c == ' ' || c == '\t') && depth == 0) {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

void parse_incident(const std::string& v, RunConfig::PortBlock& port,
                    const std::string& where) {
  port.incident.clear();
  for (const std::string& item : split_list(v)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError(where + ": incident entries use 'mode:amplitude', got '" + item + "'");
    const int mode = parse_int(trim(item.substr(0, colon)), where);
    if (mode < 1) throw ConfigError(where + ": mode indices are 1-based");
    port.incident.emplace_back(mode, parse_complex(trim(item.substr(colon + 1)), where));
  }
}

} // namespace

CVector RunConfig::incident_vector(const PortBlock& port, int n_modes) const {
  CVector alpha = CVector::Zero(n_modes);
  for (const auto& [mode, amp] : port.incident) {
    if (mode > n_modes)
      throw ConfigError("incident mode index " + std::to_string(mode) +
                        " exceeds the retained mode count " + std::to_string(n_modes));
    alpha(mode - 1) = amp;
  }
  return alpha;
}

RunConfig parse_config(std::istream& is, const std::string& name) {
  RunConfig cfg;
  bool saw_materials = false;
  std::string line, section;
  int lineno = 0;
  bool have_eval_offset = false;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = name + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const std::string at = where + " [" + section + "] " + key;

    if (section == "run") {
      if (key == "experiment") cfg.experiment = val;
      else if (key == "wavelength") cfg.wavelength = parse_double(val, at);
      else if (key == "order") cfg.order = parse_int(val, at);
      else if (key == "threads") cfg.threads = parse_int(val, at);
      else if (key == "output_dir") cfg.output_dir = val;
      else throw ConfigError(at + ": unknown key");
    } else if (section == "geometry") {
      if (key == "core_width") cfg.geometry.core_width = parse_double(val, at);
      else if (key == "core_width2") cfg.geometry.core_width2 = parse_double(val, at);
      else if (key == "z_disc") cfg.geometry.z_disc = parse_double(val, at);
      else if (key == "cladding_extent") cfg.geometry.cladding_extent = parse_double(val, at);
      else if (key == "domain_length") cfg.geometry.domain_length = parse_double(val, at);
      else if (key == "eval_offset") {
        cfg.geometry.eval_offset = parse_double(val, at);
        have_eval_offset = true;
      } else if (key == "element_size") cfg.geometry.element_size = parse_double(val, at);
      else throw ConfigError(at + ": unknown key");
    } else if (section == "materials") {
      // an explicit materials section replaces the built-in defaults
      if (!saw_materials) {
        cfg.materials.clear();
        saw_materials = true;
      }
      cfg.materials[key] = parse_complex(val, at);
    } else if (section == "pml") {
      if (key == "m") cfg.pml.m = parse_double(val, at);
      else if (key == "R") cfg.pml.R = parse_double(val, at);
      else if (key == "width_x") cfg.pml.width_x = parse_double(val, at);
      else if (key == "width_z") cfg.pml.width_z = parse_double(val, at);
      else if (key == "alpha_max_x") cfg.pml.alpha_max_x = parse_double(val, at);
      else if (key == "alpha_max_z") cfg.pml.alpha_max_z = parse_double(val, at);
      else throw ConfigError(at + ": unknown key");
    } else if (section == "ports") {
      RunConfig::PortBlock* port = nullptr;
      std::string sub;
      if (key.rfind("in.", 0) == 0) {
        port = &cfg.port_in;
        sub = key.substr(3);
      } else if (key.rfind("out.", 0) == 0) {
        port = &cfg.port_out;
        sub = key.substr(4);
      } else {
        throw ConfigError(at + ": port keys start with 'in.' or 'out.'");
      }
      if (sub == "nmodes") port->nmodes = parse_int(val, at);
      else if (sub == "incident") parse_incident(val, *port, at);
      else throw ConfigError(at + ": unknown port key");
    } else if (section == "modal") {
      if (key == "nmodes") cfg.modal.nmodes = parse_int(val, at);
      else if (key == "target") cfg.modal.target = parse_complex(val, at);
      else if (key == "solver") {
        if (val == "dense") cfg.modal.solver = EigenSolverKind::dense;
        else if (val == "shift_invert") cfg.modal.solver = EigenSolverKind::shift_invert;
        else if (val == "auto") cfg.modal.solver = EigenSolverKind::automatic;
        else throw ConfigError(at + ": solver must be dense|shift_invert|auto");
      } else throw ConfigError(at + ": unknown key");
    } else if (section == "nmodes") {
      if (key == "grid") {
        cfg.nmodes_grid.clear();
        for (const std::string& item : split_list(val)) {
          if (item == "full") cfg.nmodes_grid.push_back(-1);
          else cfg.nmodes_grid.push_back(parse_int(item, at));
        }
        if (cfg.nmodes_grid.empty()) throw ConfigError(at + ": empty grid");
      } else throw ConfigError(at + ": unknown key");
    } else {
      throw ConfigError(where + ": unknown section '" + section + "'");
    }
  }

  if (cfg.wavelength <= 0) throw ConfigError(name + ": wavelength must be > 0");
  if (cfg.order < 1) throw ConfigError(name + ": order must be >= 1");
  for (const char* required : {"core", "cladding"})
    if (!cfg.materials.count(required))
      throw ConfigError(name + ": materials must define '" + std::string(required) + "'");
  cfg.geometry.pml_width_x = cfg.pml.width_x;
  cfg.geometry.pml_width_z = cfg.pml.width_z;
  if (!have_eval_offset) cfg.geometry.eval_offset = 0; // one element column
  if (cfg.geometry.core_width2 && !cfg.materials.count("core2"))
    cfg.materials["core2"] = cfg.materials.at("core");
  cfg.geometry.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(is, path);
}

} // namespace wgfem
