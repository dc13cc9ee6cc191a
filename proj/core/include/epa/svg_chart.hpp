#pragma once

#include <string>
#include <vector>

namespace epa {

enum class ChartKind { bar, scatter, line };

struct ChartSeries {
  enum class Mark { automatic, points, line };

  std::string name;
  std::vector<double> x;  // ignored for bar charts (categories give x)
  std::vector<double> y;
  /// Optional band drawn as a shaded polygon behind the series; both empty
  /// or both the length of y.
  std::vector<double> lower;
  std::vector<double> upper;
  Mark mark = Mark::automatic;
};

struct ChartSpec {
  ChartKind kind = ChartKind::line;
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> categories;  // bar charts: one per group
  std::vector<ChartSeries> series;
  int width = 800;
  int height = 480;
};

/// Standalone SVG 1.1 text. Coordinates use 6 significant digits, so equal
/// specs give identical bytes. Throws InvalidArgument for an empty chart.
std::string emit_svg_chart(const ChartSpec& spec);

}  // namespace epa
