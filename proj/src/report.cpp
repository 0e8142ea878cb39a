#include "cfs/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cfs/operator_core.hpp"
#include "json.hpp"

namespace cfs {

namespace {

std::ofstream open_out(const std::string& dir, const std::string& file) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / file).string();
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path);
  return os;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<')
      o += "&lt;";
    else if (c == '>')
      o += "&gt;";
    else if (c == '&')
      o += "&amp;";
    else
      o += c;
  }
  return o;
}

}  // namespace

Check check_le(const std::string& name, double measured, double bound, const std::string& provenance) {
  Check c;
  c.name = name;
  c.measured = measured;
  c.expected = bound;
  c.relation = "<=";
  c.provenance = provenance;
  c.pass = std::isfinite(measured) && measured <= bound;
  return c;
}

Check check_ge(const std::string& name, double measured, double bound, const std::string& provenance) {
  Check c = check_le(name, measured, bound, provenance);
  c.relation = ">=";
  c.pass = std::isfinite(measured) && measured >= bound;
  return c;
}

Check check_text(const std::string& name, const std::string& measured, const std::string& expected, bool pass,
                 const std::string& provenance) {
  Check c;
  c.name = name;
  c.relation = "==";
  c.measured_text = measured;
  c.expected_text = expected;
  c.provenance = provenance;
  c.pass = pass;
  return c;
}

Check check_near(const std::string& name, double measured, double expected, double tol, const std::string& provenance) {
  Check c;
  c.name = name;
  c.measured = measured;
  c.expected = expected;
  c.tolerance = tol;
  c.relation = "≈";
  c.provenance = provenance;
  c.pass = std::isfinite(measured) && std::abs(measured - expected) <= tol;
  return c;
}

void Table::add(const std::vector<double>& values) {
  std::vector<std::string> r;
  for (double v : values) r.push_back(fmt(v));
  rows.push_back(std::move(r));
}

bool Summary::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_csv(const std::string& dir, const Table& t) {
  auto os = open_out(dir, t.name + ".csv");
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << csv_cell(t.header[i]);
  os << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_cell(r[i]);
    os << "\n";
  }
}

std::string summary_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["experiment"] = s.experiment;
  j["config"] = s.config;
  j["seed"] = s.seed;
  j["pass"] = s.all_pass();
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return fmt(v);
  };
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const auto& c : s.checks) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    const bool text = c.relation == "==";
    e["measured"] = text ? nlohmann::ordered_json(c.measured_text) : num(c.measured);
    e["relation"] = c.relation;
    e["expected"] = text ? nlohmann::ordered_json(c.expected_text) : num(c.expected);
    if (c.relation == "≈") e["tolerance"] = num(c.tolerance);
    e["provenance"] = c.provenance;
    e["pass"] = c.pass;
    checks.push_back(e);
  }
  j["checks"] = checks;
  nlohmann::ordered_json notes = nlohmann::ordered_json::object();
  for (const auto& [k, v] : s.notes) notes[k] = v;
  j["notes"] = notes;
  return j.dump(2) + "\n";
}

void write_summary_json(const std::string& dir, const Summary& s) {
  auto os = open_out(dir, "summary.json");
  os << summary_json(s);
}

std::string svg_string(const Plot& p) {
  const double W = 640, H = 440, L = 80, R = 20, T = 40, B = 60;
  auto tx = [&](double v) { return p.loglog ? std::log10(v) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : p.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (p.loglog && (s.x[i] <= 0 || s.y[i] == 0)) continue;
      const double X = tx(s.x[i]), Y = tx(std::abs(s.y[i]));
      x0 = std::min(x0, X);
      x1 = std::max(x1, X);
      y0 = std::min(y0, Y);
      y1 = std::max(y1, Y);
    }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  const double px = 0.05 * (x1 - x0), py = 0.05 * (y1 - y0);
  x0 -= px;
  x1 += px;
  y0 -= py;
  y1 += py;
  auto sx = [&](double X) { return L + (X - x0) / (x1 - x0) * (W - L - R); };
  auto sy = [&](double Y) { return H - B - (Y - y0) / (y1 - y0) * (H - T - B); };
  std::ostringstream o;
  o.precision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(p.title)
    << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  const int ticks = 5;
  for (int k = 0; k <= ticks; ++k) {
    const double X = x0 + (x1 - x0) * k / ticks, Y = y0 + (y1 - y0) * k / ticks;
    o << "<text x=\"" << sx(X) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
      << (p.loglog ? "1e" : "") << fmt(std::round(X * 100) / 100) << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << sy(Y) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
      << (p.loglog ? "1e" : "") << fmt(std::round(Y * 100) / 100) << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\" font-size=\"13\">"
    << xml_escape(p.xlabel) << "</text>\n";
  o << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
    << (T + H - B) / 2 << ")\">" << xml_escape(p.ylabel) << "</text>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  int ci = 0;
  for (const auto& s : p.series) {
    const char* col = colors[ci++ % 5];
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (p.loglog && (s.x[i] <= 0 || s.y[i] == 0)) continue;
      o << "<circle cx=\"" << sx(tx(s.x[i])) << "\" cy=\"" << sy(tx(std::abs(s.y[i]))) << "\" r=\"3.5\" fill=\"" << col
        << "\"/>\n";
    }
    if (s.has_fit && !s.x.empty()) {
      const auto [mn, mx] = std::minmax_element(s.x.begin(), s.x.end());
      const double a = tx(*mn), b = tx(*mx);
      // Fit is in natural logs; convert to log10 coordinates.
      auto fy = [&](double X) { return (s.intercept + s.slope * X * std::log(10.0)) / std::log(10.0); };
      o << "<line x1=\"" << sx(a) << "\" y1=\"" << sy(fy(a)) << "\" x2=\"" << sx(b) << "\" y2=\"" << sy(fy(b))
        << "\" stroke=\"" << col << "\" stroke-dasharray=\"5,3\"/>\n";
    }
    o << "<text x=\"" << L + 10 << "\" y=\"" << T + 14 * ci << "\" font-size=\"12\" fill=\"" << col << "\">"
      << xml_escape(s.label) << (s.has_fit ? " (slope " + fmt(std::round(s.slope * 1000) / 1000) + ")" : "")
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_svg(const std::string& dir, const Plot& p) {
  auto os = open_out(dir, p.name + ".svg");
  os << svg_string(p);
}

void write_text(const std::string& dir, const std::string& name, const std::string& text) {
  auto os = open_out(dir, name);
  os << text;
}

}  // namespace cfs
