#pragma once

#include <string>
#include <vector>

namespace cfs {

// One summary entry: a measured value compared against an expected value or bound.
struct Check {
  std::string name;
  double measured = 0.0;
  double expected = 0.0;  // target value, or the bound for "<=" checks
  double tolerance = 0.0;  // |measured − expected| ≤ tolerance for "≈" checks
  std::string relation;    // "<=", ">=", "≈" or "==" (textual)
  std::string measured_text, expected_text;  // used by "==" checks
  std::string provenance;  // source tag or property name
  bool pass = false;
};
Check check_le(const std::string& name, double measured, double bound, const std::string& provenance);
Check check_ge(const std::string& name, double measured, double bound, const std::string& provenance);
Check check_text(const std::string& name, const std::string& measured, const std::string& expected, bool pass,
                 const std::string& provenance);
Check check_near(const std::string& name, double measured, double expected, double tol, const std::string& provenance);

struct Table {
  std::string name;  // file stem
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  void add(const std::vector<double>& values);
  void add_row(std::vector<std::string> cells) { rows.push_back(std::move(cells)); }
};

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool has_fit = false;
  double slope = 0.0, intercept = 0.0;  // log y = intercept + slope·log x
};

struct Plot {
  std::string name;
  std::string title;
  std::string xlabel, ylabel;
  bool loglog = true;
  std::vector<PlotSeries> series;
};

struct Summary {
  std::string experiment;
  std::string config;
  unsigned long long seed = 0;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, std::string>> notes;
  bool all_pass() const;
};

std::string fmt(double v);  // shortest round-trip representation
void write_csv(const std::string& dir, const Table& t);
void write_summary_json(const std::string& dir, const Summary& s);
std::string summary_json(const Summary& s);
void write_svg(const std::string& dir, const Plot& p);
std::string svg_string(const Plot& p);
void write_text(const std::string& dir, const std::string& name, const std::string& text);

}  // namespace cfs
