#include "cfs/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace cfs {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(t.c_str(), &end);
  return errno == 0 && end == t.c_str() + t.size();
}

}  // namespace

IniConfig IniConfig::parse(const std::string& text, const std::string& origin) {
  IniConfig c;
  c.origin_ = origin;
  std::istringstream is(text);
  std::string line, section;
  int no = 0;
  while (std::getline(is, line)) {
    ++no;
    const auto hash = line.find_first_of("#;");
    std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    auto bad = [&](const std::string& what) {
      throw Error(ErrorKind::Config, origin + ":" + std::to_string(no) + ": " + what);
    };
    if (t.front() == '[') {
      if (t.back() != ']') bad("unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) bad("empty section name");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) bad("expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) bad("missing key");
    if (section.empty()) bad("key '" + key + "' outside of a section");
    if (c.data_[section].count(key)) bad("duplicate key '" + key + "' in [" + section + "]");
    c.data_[section][key] = {value, no};
  }
  return c;
}

IniConfig IniConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

const IniConfig::Entry* IniConfig::find(const std::string& section, const std::string& key) const {
  auto s = data_.find(section);
  if (s == data_.end()) return nullptr;
  auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  used_.insert(section + "." + key);
  return &k->second;
}

void IniConfig::fail(const std::string& section, const std::string& key, const std::string& what) const {
  std::string where = origin_;
  auto s = data_.find(section);
  if (s != data_.end()) {
    auto k = s->second.find(key);
    if (k != s->second.end()) where += ":" + std::to_string(k->second.line);
  }
  throw Error(ErrorKind::Config, where + ": [" + section + "] " + key + ": " + what);
}

bool IniConfig::has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }

std::string IniConfig::get_string(const std::string& section, const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e) fail(section, key, "missing required field");
  return e->value;
}

std::string IniConfig::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
  const Entry* e = find(section, key);
  return e ? e->value : fallback;
}

double IniConfig::get_double(const std::string& section, const std::string& key) const {
  const std::string v = get_string(section, key);
  double d;
  if (!parse_double(v, d)) fail(section, key, "expected a number, got '" + v + "'");
  return d;
}

double IniConfig::get_double(const std::string& section, const std::string& key, double fallback) const {
  return find(section, key) ? get_double(section, key) : fallback;
}

long IniConfig::get_int(const std::string& section, const std::string& key) const {
  const std::string v = trim(get_string(section, key));
  char* end = nullptr;
  errno = 0;
  const long r = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || errno != 0 || end != v.c_str() + v.size()) fail(section, key, "expected an integer, got '" + v + "'");
  return r;
}

long IniConfig::get_int(const std::string& section, const std::string& key, long fallback) const {
  return find(section, key) ? get_int(section, key) : fallback;
}

bool IniConfig::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!find(section, key)) return fallback;
  const std::string v = get_string(section, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(section, key, "expected a boolean, got '" + v + "'");
}

std::vector<double> IniConfig::get_list(const std::string& section, const std::string& key) const {
  const std::string v = get_string(section, key);
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double d;
    if (!parse_double(item, d)) fail(section, key, "expected a comma-separated list of numbers");
    out.push_back(d);
  }
  if (out.empty()) fail(section, key, "empty list");
  return out;
}

std::vector<double> IniConfig::get_list(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) const {
  return find(section, key) ? get_list(section, key) : fallback;
}

std::vector<std::string> IniConfig::get_words(const std::string& section, const std::string& key,
                                             const std::vector<std::string>& fallback) const {
  if (!find(section, key)) return fallback;
  std::vector<std::string> out;
  std::stringstream ss(get_string(section, key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(section, key, "empty entry in list");
    out.push_back(item);
  }
  if (out.empty()) fail(section, key, "empty list");
  return out;
}

std::vector<std::string> IniConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [s, keys] : data_)
    for (const auto& [k, e] : keys)
      if (!used_.count(s + "." + k)) out.push_back(origin_ + ":" + std::to_string(e.line) + ": [" + s + "] " + k);
  return out;
}

void IniConfig::require_no_unused() const {
  auto u = unused_keys();
  if (!u.empty()) throw Error(ErrorKind::Config, u.front() + ": unknown field");
}

}  // namespace cfs
