#pragma once

#include <string>
#include <vector>

namespace cssdf {

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
};

/// Minimal line chart writer.
struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<PlotSeries> series;

  std::string to_svg(int width = 640, int height = 400) const;
  void save(const std::string& path, int width = 640, int height = 400) const;
};

/// Reads a numeric CSV with a header row; returns columns by header name
/// order. Non-numeric cells become NaN.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  const std::vector<double>& column(const std::string& name) const;
  bool has(const std::string& name) const;
};
CsvTable read_csv(const std::string& path);

}  // namespace cssdf
