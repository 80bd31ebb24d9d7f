#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rilo {

// Minimal INI reader. Sections may repeat (a scene lists one [box] section per
// box), so the document is an ordered list rather than a map.
struct IniSection {
  std::string name;
  int line = 0;  // 1-based line of the [header], 0 for the implicit top section
  std::vector<std::pair<std::string, std::string>> entries;

  std::optional<std::string> find(const std::string& key) const;
  bool has(const std::string& key) const;

  // Typed lookups; throw ConfigError (naming section and key) when the key is
  // missing and no default is given, or when the value does not parse.
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  Eigen::Vector3d get_vec3(const std::string& key) const;
  Eigen::Vector3d get_vec3(const std::string& key, const Eigen::Vector3d& fallback) const;
  Eigen::Vector2d get_vec2(const std::string& key) const;
  Eigen::Vector2d get_vec2(const std::string& key, const Eigen::Vector2d& fallback) const;
};

struct IniDoc {
  std::vector<IniSection> sections;

  // First section with the given name, if any.
  const IniSection* find(const std::string& name) const;
  std::vector<const IniSection*> find_all(const std::string& name) const;
};

// Parses `text`. Lines are `key = value` under `[section]` headers; `#` or `;`
// start a comment; blank lines are ignored. Values keep interior whitespace
// ("1.0 2.0 3.0" stays one value). Throws ConfigError with a line number on
// malformed input. `origin` names the source in error messages.
IniDoc parse_ini(const std::string& text, const std::string& origin = "<string>");

IniDoc load_ini(const std::filesystem::path& path);

}  // namespace rilo
