#include "curec/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace curec {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigDoc ConfigDoc::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

ConfigDoc ConfigDoc::parse_string(const std::string& text, const std::string& origin) {
  ConfigDoc doc;
  doc.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ParseError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ParseError(origin + ":" + std::to_string(lineno) + ": empty section name");
      if (!doc.sections_.count(section)) {
        doc.order_.push_back(section);
        doc.sections_[section] = {};
      }
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ParseError(origin + ":" + std::to_string(lineno) + ": key before any [section]");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ParseError(origin + ":" + std::to_string(lineno) + ": empty key");
    doc.sections_[section].push_back({key, value});
  }
  return doc;
}

bool ConfigDoc::has_section(const std::string& section) const {
  return sections_.count(section) != 0;
}

std::vector<std::string> ConfigDoc::section_names() const { return order_; }

const std::vector<ConfigDoc::Entry>& ConfigDoc::entries(const std::string& section) const {
  static const std::vector<Entry> empty;
  auto it = sections_.find(section);
  return it == sections_.end() ? empty : it->second;
}

std::optional<std::string> ConfigDoc::get(const std::string& section,
                                          const std::string& key) const {
  auto it = sections_.find(section);
  if (it == sections_.end()) return std::nullopt;
  std::optional<std::string> found;
  for (const auto& e : it->second) {
    if (e.key == key) {
      if (found)
        throw ParseError(origin_ + ": key '" + key + "' repeats in [" + section + "]");
      found = e.value;
    }
  }
  return found;
}

std::string ConfigDoc::require(const std::string& section, const std::string& key) const {
  auto v = get(section, key);
  if (!v)
    throw ConfigError(origin_ + ": missing required key '" + key + "' in [" + section + "]");
  return *v;
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ParseError("invalid integer for " + what + ": '" + s + "'");
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    double out = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return out;
  } catch (const std::exception&) {
    throw ParseError("invalid number for " + what + ": '" + s + "'");
  }
}

std::int64_t ConfigDoc::require_int(const std::string& section, const std::string& key) const {
  return parse_int(require(section, key), "[" + section + "]." + key);
}

double ConfigDoc::require_double(const std::string& section, const std::string& key) const {
  return parse_double(require(section, key), "[" + section + "]." + key);
}

std::optional<std::int64_t> ConfigDoc::get_int(const std::string& section,
                                               const std::string& key) const {
  auto v = get(section, key);
  if (!v) return std::nullopt;
  return parse_int(*v, "[" + section + "]." + key);
}

std::optional<double> ConfigDoc::get_double(const std::string& section,
                                            const std::string& key) const {
  auto v = get(section, key);
  if (!v) return std::nullopt;
  return parse_double(*v, "[" + section + "]." + key);
}

std::optional<bool> ConfigDoc::get_bool(const std::string& section,
                                        const std::string& key) const {
  auto v = get(section, key);
  if (!v) return std::nullopt;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ParseError("invalid boolean for [" + section + "]." + key + ": '" + *v + "'");
}

std::vector<std::string> ConfigDoc::get_all(const std::string& section,
                                            const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& e : entries(section))
    if (e.key == key) out.push_back(e.value);
  return out;
}

void ConfigDoc::set(const std::string& section, const std::string& key,
                    const std::string& value) {
  if (!sections_.count(section)) {
    order_.push_back(section);
    sections_[section] = {};
  }
  auto& es = sections_[section];
  for (auto& e : es) {
    if (e.key == key) {
      e.value = value;
      return;
    }
  }
  es.push_back({key, value});
}

void ConfigDoc::append(const std::string& section, const std::string& key,
                       const std::string& value) {
  if (!sections_.count(section)) {
    order_.push_back(section);
    sections_[section] = {};
  }
  sections_[section].push_back({key, value});
}

void ConfigDoc::check_known_keys(const std::string& section,
                                 const std::vector<std::string>& known) const {
  for (const auto& e : entries(section)) {
    if (std::find(known.begin(), known.end(), e.key) == known.end())
      throw ConfigError(origin_ + ": unknown key '" + e.key + "' in [" + section + "]");
  }
}

std::string ConfigDoc::to_string() const {
  std::ostringstream out;
  for (const auto& name : order_) {
    out << "[" << name << "]\n";
    for (const auto& e : entries(name)) out << e.key << " = " << e.value << "\n";
    out << "\n";
  }
  return out.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return std::string();
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  };
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace curec
