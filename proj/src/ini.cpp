#include "rilo/ini.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "rilo/errors.hpp"

namespace rilo {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bad_value(const IniSection& s, const std::string& key, const std::string& value,
                            const std::string& want) {
  throw ConfigError("[" + s.name + "] " + key + " = \"" + value + "\": expected " + want);
}

[[noreturn]] void missing(const IniSection& s, const std::string& key) {
  throw ConfigError("[" + s.name + "] is missing required key \"" + key + "\"");
}

}  // namespace

std::optional<std::string> IniSection::find(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return v;
  return std::nullopt;
}

bool IniSection::has(const std::string& key) const { return find(key).has_value(); }

std::string IniSection::get_string(const std::string& key) const {
  auto v = find(key);
  if (!v) missing(*this, key);
  return *v;
}

std::string IniSection::get_string(const std::string& key, const std::string& fallback) const {
  auto v = find(key);
  return v ? *v : fallback;
}

double IniSection::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    bad_value(*this, key, v, "a number");
  }
  if (trim(v.substr(used)).size() != 0) bad_value(*this, key, v, "a number");
  return out;
}

double IniSection::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long IniSection::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  std::size_t used = 0;
  long out = 0;
  try {
    out = std::stol(v, &used);
  } catch (const std::exception&) {
    bad_value(*this, key, v, "an integer");
  }
  if (trim(v.substr(used)).size() != 0) bad_value(*this, key, v, "an integer");
  return out;
}

long IniSection::get_int(const std::string& key, long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool IniSection::get_bool(const std::string& key) const {
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(*this, key, v, "a boolean (true/false)");
}

bool IniSection::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

Eigen::Vector3d IniSection::get_vec3(const std::string& key) const {
  const std::string v = get_string(key);
  std::istringstream ss(v);
  Eigen::Vector3d out;
  std::string tail;
  if (!(ss >> out.x() >> out.y() >> out.z()) || (ss >> tail))
    bad_value(*this, key, v, "three numbers");
  return out;
}

Eigen::Vector3d IniSection::get_vec3(const std::string& key, const Eigen::Vector3d& fallback) const {
  return has(key) ? get_vec3(key) : fallback;
}

Eigen::Vector2d IniSection::get_vec2(const std::string& key) const {
  const std::string v = get_string(key);
  std::istringstream ss(v);
  Eigen::Vector2d out;
  std::string tail;
  if (!(ss >> out.x() >> out.y()) || (ss >> tail))
    bad_value(*this, key, v, "two numbers");
  return out;
}

Eigen::Vector2d IniSection::get_vec2(const std::string& key, const Eigen::Vector2d& fallback) const {
  return has(key) ? get_vec2(key) : fallback;
}

const IniSection* IniDoc::find(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

std::vector<const IniSection*> IniDoc::find_all(const std::string& name) const {
  std::vector<const IniSection*> out;
  for (const auto& s : sections)
    if (s.name == name) out.push_back(&s);
  return out;
}

IniDoc parse_ini(const std::string& text, const std::string& origin) {
  IniDoc doc;
  IniSection current;  // implicit unnamed top section
  bool current_used = false;

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::size_t cut = raw.find_first_of("#;");
    std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
      if (current_used || !current.entries.empty()) doc.sections.push_back(std::move(current));
      current = IniSection{trim(line.substr(1, line.size() - 2)), lineno, {}};
      if (current.name.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      current_used = true;
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value, got \"" +
                        line + "\"");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    current.entries.emplace_back(std::move(key), std::move(value));
  }
  if (current_used || !current.entries.empty()) doc.sections.push_back(std::move(current));
  return doc;
}

IniDoc load_ini(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ini(buf.str(), path.string());
}

}  // namespace rilo
