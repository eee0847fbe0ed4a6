#pragma once

#include <string>
#include <vector>

namespace tnoise {

// Comma separated table with a header row; quoted cells may contain commas.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;  // -1 when absent
  std::vector<double> numbers(const std::string& name) const;
};
CsvTable read_csv(const std::string& path);

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::string color;
  bool dashed = false;
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
  std::vector<Series> series;
  std::vector<std::string> notes;  // drawn in the upper right corner
};
std::string render_line_plot(const PlotSpec& spec);

// Cells with value in [0, 1]; NaN cells are left blank.
std::string render_heat_map(const std::string& title, const std::vector<std::string>& xlabels,
                            const std::vector<std::string>& ylabels, const std::vector<std::vector<double>>& values,
                            const std::string& xname, const std::string& yname);

struct PlotOutcome {
  std::vector<std::string> written;   // SVG paths
  std::vector<std::string> warnings;  // skipped plots
  std::vector<double> fitted_slopes;  // corrector plots, in the order written
};

// Corrector deviation vs N (log-log) with a reference slope -alpha and the fitted slope.
PlotOutcome plot_corrector(const std::string& run_dir, const std::string& out_dir);
// Median log ||u_t|| vs t, one curve per kappa.
PlotOutcome plot_dissipation(const std::string& run_dir, const std::string& out_dir);
// Event frequency over (kappa, N).
PlotOutcome plot_blowup(const std::string& run_dir, const std::string& out_dir);
// Every plot whose tables exist in run_dir.
PlotOutcome plot_all(const std::string& run_dir, const std::string& out_dir);

}  // namespace tnoise
