#include "tnoise/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "tnoise/corrector.hpp"
#include "tnoise/statistics.hpp"

namespace tnoise {

namespace fs = std::filesystem;

int CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw std::runtime_error("csv: no column '" + name + "'");
  std::vector<double> out;
  for (const auto& r : rows) {
    const std::string& s = static_cast<std::size_t>(c) < r.size() ? r[c] : std::string();
    out.push_back(s.empty() ? std::nan("") : std::strtod(s.c_str(), nullptr));
  }
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path + ": empty file");
  t.header = split_line(line);
  while (std::getline(is, line))
    if (!line.empty()) t.rows.push_back(split_line(line));
  return t;
}

namespace {

constexpr double kW = 640, kH = 440, kLeft = 78, kRight = 20, kTop = 40, kBottom = 52;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char ch : s) {
    if (ch == '<') o += "&lt;";
    else if (ch == '>') o += "&gt;";
    else if (ch == '&') o += "&amp;";
    else o += ch;
  }
  return o;
}

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;
  double pixel_lo = 0, pixel_hi = 1;
  double map(double v) const {
    const double a = log ? std::log10(v) : v;
    return pixel_lo + (a - lo) / (hi - lo) * (pixel_hi - pixel_lo);
  }
  std::vector<double> ticks() const {
    std::vector<double> t;
    if (log) {
      for (double e = std::ceil(lo - 1e-9); e <= hi + 1e-9; e += 1.0) t.push_back(std::pow(10.0, e));
      return t;
    }
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (m * mag >= raw) {
        step = m * mag;
        break;
      }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return t;
  }
};

Axis make_axis(const std::vector<double>& values, bool log, double p0, double p1) {
  Axis a;
  a.log = log;
  a.pixel_lo = p0;
  a.pixel_hi = p1;
  double lo = INFINITY, hi = -INFINITY;
  for (double v : values) {
    if (!std::isfinite(v) || (log && v <= 0.0)) continue;
    const double w = log ? std::log10(v) : v;
    lo = std::min(lo, w);
    hi = std::max(hi, w);
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) {
    lo -= log ? 0.5 : std::max(0.5, std::abs(lo) * 0.1);
    hi += log ? 0.5 : std::max(0.5, std::abs(hi) * 0.1);
  }
  const double pad = 0.05 * (hi - lo);
  a.lo = lo - pad;
  a.hi = hi + pad;
  return a;
}

std::string tick_label(double v, bool log) {
  if (log) return "1e" + fmt("%.0f", std::log10(v));
  return fmt("%g", v);
}

bool usable(double x, double y, bool logx, bool logy) {
  return std::isfinite(x) && std::isfinite(y) && (!logx || x > 0) && (!logy || y > 0);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << text;
}

}  // namespace

std::string render_line_plot(const PlotSpec& spec) {
  std::vector<double> xs, ys;
  for (const auto& s : spec.series)
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (usable(s.x[i], s.y[i], spec.logx, spec.logy)) {
        xs.push_back(s.x[i]);
        ys.push_back(s.y[i]);
      }
  const Axis ax = make_axis(xs, spec.logx, kLeft, kW - kRight);
  const Axis ay = make_axis(ys, spec.logy, kH - kBottom, kTop);
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(spec.title) << "</text>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kW - kLeft - kRight << "\" height=\"" << kH - kTop - kBottom
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ax.ticks()) {
    const double px = ax.map(t);
    o << "<line x1=\"" << fmt("%.2f", px) << "\" y1=\"" << kH - kBottom << "\" x2=\"" << fmt("%.2f", px) << "\" y2=\"" << kH - kBottom + 5
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << fmt("%.2f", px) << "\" y=\"" << kH - kBottom + 18 << "\" text-anchor=\"middle\">" << tick_label(t, ax.log) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double py = ay.map(t);
    o << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt("%.2f", py) << "\" x2=\"" << kLeft << "\" y2=\"" << fmt("%.2f", py)
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt("%.2f", py + 4) << "\" text-anchor=\"end\">" << tick_label(t, ay.log) << "</text>\n";
  }
  o << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">" << escape(spec.xlabel) << "</text>\n";
  o << "<text transform=\"translate(16," << (kTop + kH - kBottom) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << escape(spec.ylabel)
    << "</text>\n";
  int legend = 0;
  for (const auto& s : spec.series) {
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (usable(s.x[i], s.y[i], spec.logx, spec.logy))
        pts += fmt("%.2f", ax.map(s.x[i])) + "," + fmt("%.2f", ay.map(s.y[i])) + " ";
    if (pts.empty()) continue;
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.6\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "")
      << " points=\"" << pts << "\"/>\n";
    if (!s.label.empty()) {
      const double y = kTop + 16 + 16 * legend++;
      o << "<line x1=\"" << kLeft + 10 << "\" y1=\"" << y - 4 << "\" x2=\"" << kLeft + 34 << "\" y2=\"" << y - 4 << "\" stroke=\"" << s.color
        << "\" stroke-width=\"1.6\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
      o << "<text x=\"" << kLeft + 40 << "\" y=\"" << y << "\">" << escape(s.label) << "</text>\n";
    }
  }
  for (std::size_t i = 0; i < spec.notes.size(); ++i)
    o << "<text class=\"note\" x=\"" << kW - kRight - 8 << "\" y=\"" << kTop + 16 + 16 * i << "\" text-anchor=\"end\">" << escape(spec.notes[i])
      << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

std::string render_heat_map(const std::string& title, const std::vector<std::string>& xlabels,
                            const std::vector<std::string>& ylabels, const std::vector<std::vector<double>>& values,
                            const std::string& xname, const std::string& yname) {
  const double x0 = kLeft, y0 = kTop, w = kW - kLeft - 110, h = kH - kTop - kBottom;
  const double cw = w / std::max<std::size_t>(1, xlabels.size()), ch = h / std::max<std::size_t>(1, ylabels.size());
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
  auto color = [](double v) {
    const double t = std::clamp(v, 0.0, 1.0);
    const int r = static_cast<int>(255 - 40 * t), g = static_cast<int>(255 - 200 * t), b = static_cast<int>(255 - 215 * t);
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return std::string(buf);
  };
  for (std::size_t j = 0; j < ylabels.size(); ++j)
    for (std::size_t i = 0; i < xlabels.size(); ++i) {
      const double v = values[j][i];
      const double x = x0 + i * cw, y = y0 + (ylabels.size() - 1 - j) * ch;
      o << "<rect x=\"" << fmt("%.2f", x) << "\" y=\"" << fmt("%.2f", y) << "\" width=\"" << fmt("%.2f", cw) << "\" height=\"" << fmt("%.2f", ch)
        << "\" fill=\"" << (std::isfinite(v) ? color(v) : "#ffffff") << "\" stroke=\"black\"/>\n";
      if (std::isfinite(v))
        o << "<text x=\"" << fmt("%.2f", x + cw / 2) << "\" y=\"" << fmt("%.2f", y + ch / 2 + 4) << "\" text-anchor=\"middle\">" << fmt("%.2f", v)
          << "</text>\n";
    }
  for (std::size_t i = 0; i < xlabels.size(); ++i)
    o << "<text x=\"" << fmt("%.2f", x0 + (i + 0.5) * cw) << "\" y=\"" << y0 + h + 18 << "\" text-anchor=\"middle\">" << escape(xlabels[i])
      << "</text>\n";
  for (std::size_t j = 0; j < ylabels.size(); ++j)
    o << "<text x=\"" << x0 - 8 << "\" y=\"" << fmt("%.2f", y0 + (ylabels.size() - 0.5 - j) * ch + 4) << "\" text-anchor=\"end\">"
      << escape(ylabels[j]) << "</text>\n";
  o << "<text x=\"" << x0 + w / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">" << escape(xname) << "</text>\n";
  o << "<text transform=\"translate(16," << y0 + h / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << escape(yname) << "</text>\n";
  for (int s = 0; s <= 10; ++s) {
    const double v = s / 10.0;
    o << "<rect x=\"" << kW - 90 << "\" y=\"" << fmt("%.2f", y0 + h - (s + 1) * h / 11) << "\" width=\"18\" height=\"" << fmt("%.2f", h / 11)
      << "\" fill=\"" << color(v) << "\"/>\n";
    if (s % 5 == 0)
      o << "<text x=\"" << kW - 66 << "\" y=\"" << fmt("%.2f", y0 + h - (s + 0.5) * h / 11 + 4) << "\">" << fmt("%.1f", v) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

namespace {

bool load(const fs::path& p, CsvTable& t, PlotOutcome& out, const std::string& what) {
  if (!fs::exists(p)) {
    out.warnings.push_back(what + ": skipped, missing table " + p.string());
    return false;
  }
  t = read_csv(p.string());
  if (t.rows.empty()) {
    out.warnings.push_back(what + ": skipped, empty table " + p.string());
    return false;
  }
  return true;
}

void merge(PlotOutcome& into, const PlotOutcome& from) {
  into.written.insert(into.written.end(), from.written.begin(), from.written.end());
  into.warnings.insert(into.warnings.end(), from.warnings.begin(), from.warnings.end());
  into.fitted_slopes.insert(into.fitted_slopes.end(), from.fitted_slopes.begin(), from.fitted_slopes.end());
}

}  // namespace

PlotOutcome plot_corrector(const std::string& run_dir, const std::string& out_dir) {
  PlotOutcome out;
  CsvTable t;
  if (!load(fs::path(run_dir) / "convergence.csv", t, out, "corrector plot")) return out;
  fs::create_directories(out_dir);
  const auto N = t.numbers("N"), alpha = t.numbers("alpha"), dev = t.numbers("deviation"), dim = t.numbers("d");
  std::map<std::pair<int, double>, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (std::size_t i = 0; i < N.size(); ++i) {
    auto& g = groups[{static_cast<int>(dim[i]), alpha[i]}];
    g.first.push_back(N[i]);
    g.second.push_back(dev[i]);
  }
  for (const auto& [key, xy] : groups) {
    const auto& [d, a] = key;
    std::vector<double> fx, fy;
    for (std::size_t i = 0; i < xy.first.size(); ++i)
      if (xy.second[i] > 0.0) {
        fx.push_back(xy.first[i]);
        fy.push_back(xy.second[i]);
      }
    if (fx.size() < 2) {
      out.warnings.push_back("corrector plot: fewer than two positive deviations for d=" + std::to_string(d));
      continue;
    }
    const double slope = loglog_slope(fx, fy);
    PlotSpec spec;
    spec.title = "Corrector deviation, d = " + std::to_string(d) + ", alpha = " + fmt("%g", a);
    spec.xlabel = "N";
    spec.ylabel = "deviation in H^-(1+alpha)";
    spec.logx = spec.logy = true;
    spec.series.push_back({"deviation", fx, fy, kPalette[0], false});
    std::vector<double> ry;
    for (double x : fx) ry.push_back(fy.front() * std::pow(x / fx.front(), -a));
    spec.series.push_back({"reference slope " + fmt("%.2f", -a), fx, ry, "#555555", true});
    spec.notes.push_back("fitted slope " + fmt("%.2f", slope));
    const fs::path p = fs::path(out_dir) / ("corrector_d" + std::to_string(d) + "_alpha" + fmt("%g", a) + ".svg");
    write_file(p.string(), render_line_plot(spec));
    out.written.push_back(p.string());
    out.fitted_slopes.push_back(slope);
  }
  return out;
}

PlotOutcome plot_dissipation(const std::string& run_dir, const std::string& out_dir) {
  PlotOutcome out;
  CsvTable cells;
  if (!load(fs::path(run_dir) / "cells.csv", cells, out, "dissipation plot")) return out;
  fs::create_directories(out_dir);
  const int ck = cells.column("kappa"), cn = cells.column("N");
  std::map<std::string, std::vector<std::pair<double, std::string>>> byN;
  for (const auto& r : cells.rows) byN[r[cn]].push_back({std::strtod(r[ck].c_str(), nullptr), r[ck]});
  for (auto& [n, ks] : byN) {
    std::sort(ks.begin(), ks.end());
    PlotSpec spec;
    spec.title = "Median decay, N = " + n;
    spec.xlabel = "t";
    spec.ylabel = "median log ||u_t|| / ||u_0||";
    for (std::size_t j = 0; j < ks.size(); ++j) {
      CsvTable tr;
      if (!load(fs::path(run_dir) / ("traj_kappa" + ks[j].second + "_N" + n + ".csv"), tr, out, "dissipation plot")) continue;
      const auto id = tr.numbers("traj"), t = tr.numbers("t"), l2 = tr.numbers("l2");
      std::map<double, std::vector<double>> at;
      std::map<int, double> first;
      for (std::size_t i = 0; i < t.size(); ++i) {
        const int k = static_cast<int>(id[i]);
        if (!first.count(k)) first[k] = l2[i];
        if (l2[i] > 0.0 && first[k] > 0.0) at[t[i]].push_back(std::log(l2[i] / first[k]));
      }
      Series s;
      s.label = "kappa = " + ks[j].second;
      s.color = kPalette[j % 7];
      for (const auto& [time, v] : at) {
        s.x.push_back(time);
        s.y.push_back(median(v));
      }
      spec.series.push_back(std::move(s));
    }
    if (spec.series.empty()) continue;
    spec.notes.push_back("curves ordered by kappa");
    const fs::path p = fs::path(out_dir) / ("decay_N" + n + ".svg");
    write_file(p.string(), render_line_plot(spec));
    out.written.push_back(p.string());
  }
  return out;
}

PlotOutcome plot_blowup(const std::string& run_dir, const std::string& out_dir) {
  PlotOutcome out;
  CsvTable t;
  if (!load(fs::path(run_dir) / "frequencies.csv", t, out, "blow-up plot")) return out;
  fs::create_directories(out_dir);
  const int ck = t.column("kappa"), cn = t.column("N"), cf = t.column("frequency");
  std::vector<std::pair<double, std::string>> ks, ns;
  for (const auto& r : t.rows) {
    std::pair<double, std::string> k{std::strtod(r[ck].c_str(), nullptr), r[ck]}, n{std::strtod(r[cn].c_str(), nullptr), r[cn]};
    if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
    if (std::find(ns.begin(), ns.end(), n) == ns.end()) ns.push_back(n);
  }
  std::sort(ks.begin(), ks.end());
  std::sort(ns.begin(), ns.end());
  std::vector<std::vector<double>> v(ns.size(), std::vector<double>(ks.size(), std::nan("")));
  for (const auto& r : t.rows) {
    const auto i = std::find_if(ks.begin(), ks.end(), [&](auto& p) { return p.second == r[ck]; }) - ks.begin();
    const auto j = std::find_if(ns.begin(), ns.end(), [&](auto& p) { return p.second == r[cn]; }) - ns.begin();
    v[j][i] = std::strtod(r[cf].c_str(), nullptr);
  }
  std::vector<std::string> xl, yl;
  for (auto& k : ks) xl.push_back(k.second);
  for (auto& n : ns) yl.push_back(n.second);
  const fs::path p = fs::path(out_dir) / "blowup_frequency.svg";
  write_file(p.string(), render_heat_map("Possible blow-up frequency", xl, yl, v, "kappa", "N"));
  out.written.push_back(p.string());
  return out;
}

PlotOutcome plot_all(const std::string& run_dir, const std::string& out_dir) {
  PlotOutcome out;
  const fs::path d(run_dir);
  bool any = false;
  if (fs::exists(d / "convergence.csv")) {
    merge(out, plot_corrector(run_dir, out_dir));
    any = true;
  }
  if (fs::exists(d / "cells.csv")) {
    merge(out, plot_dissipation(run_dir, out_dir));
    any = true;
  }
  if (fs::exists(d / "frequencies.csv")) {
    merge(out, plot_blowup(run_dir, out_dir));
    any = true;
  }
  if (!any) out.warnings.push_back("no plottable tables in " + run_dir);
  return out;
}

}  // namespace tnoise
