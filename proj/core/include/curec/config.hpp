#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "curec/common.hpp"

namespace curec {

// Sectioned key=value text. `[section]` headers, `key = value` lines, `#`
// comments. Keys may repeat within a section (order preserved), which is how
// manifests declare task lists.
class ConfigDoc {
 public:
  struct Entry {
    std::string key;
    std::string value;
  };

  static ConfigDoc parse_file(const std::string& path);
  static ConfigDoc parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has_section(const std::string& section) const;
  std::vector<std::string> section_names() const;

  // Single-valued access. Throws ParseError if the key repeats.
  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::string require(const std::string& section, const std::string& key) const;

  std::int64_t require_int(const std::string& section, const std::string& key) const;
  double require_double(const std::string& section, const std::string& key) const;
  std::optional<std::int64_t> get_int(const std::string& section, const std::string& key) const;
  std::optional<double> get_double(const std::string& section, const std::string& key) const;
  std::optional<bool> get_bool(const std::string& section, const std::string& key) const;

  std::vector<std::string> get_all(const std::string& section, const std::string& key) const;
  const std::vector<Entry>& entries(const std::string& section) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  void append(const std::string& section, const std::string& key, const std::string& value);

  // Rejects any key in `section` that is not listed. Used for strict CLI
  // config parsing.
  void check_known_keys(const std::string& section,
                        const std::vector<std::string>& known) const;

  std::string to_string() const;

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::vector<Entry>> sections_;
  std::string origin_;
};

std::vector<std::string> split_csv(const std::string& line);
std::int64_t parse_int(const std::string& s, const std::string& what);
double parse_double(const std::string& s, const std::string& what);

}  // namespace curec
