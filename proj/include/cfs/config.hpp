#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cfs/operator_core.hpp"

namespace cfs {

// Line-oriented "key = value" file with [section] headers and '#' or ';' comments.
class IniConfig {
 public:
  static IniConfig parse(const std::string& text, const std::string& origin = "<string>");
  static IniConfig load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long get_int(const std::string& section, const std::string& key) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  // Comma-separated numbers.
  std::vector<double> get_list(const std::string& section, const std::string& key) const;
  std::vector<double> get_list(const std::string& section, const std::string& key,
                               const std::vector<double>& fallback) const;
  // Comma-separated words.
  std::vector<std::string> get_words(const std::string& section, const std::string& key,
                                     const std::vector<std::string>& fallback) const;
  // Keys in a section that were never read; used to reject typos.
  std::vector<std::string> unused_keys() const;
  void require_no_unused() const;
  const std::string& origin() const { return origin_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  const Entry* find(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const;

  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> data_;
  mutable std::set<std::string> used_;
};

}  // namespace cfs
