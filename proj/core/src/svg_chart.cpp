#include "epa/svg_chart.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string_view>

#include "epa/error.hpp"
#include "epa/format.hpp"

namespace epa {
namespace {

constexpr std::array<std::string_view, 8> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

constexpr double kLeft = 80, kRight = 160, kTop = 48, kBottom = 90;

std::string num(double v) { return format_sig(v, 6); }

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (lo == hi) {
      const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
      lo -= pad;
      hi += pad;
    }
  }
};

/// Round step of the 1-2-5 family giving about `target` intervals.
double tick_step(const Range& r, int target) {
  const double raw = (r.hi - r.lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double nice = norm <= 1.0 ? 1.0 : norm <= 2.0 ? 2.0 : norm <= 5.0 ? 5.0 : 10.0;
  return nice * mag;
}

void expand_to_ticks(Range& r, double step) {
  r.lo = std::floor(r.lo / step) * step;
  r.hi = std::ceil(r.hi / step) * step;
}

struct Frame {
  double x0, y0, w, h;
  Range xr, yr;
  double px(double x) const { return x0 + (x - xr.lo) / (xr.hi - xr.lo) * w; }
  double py(double y) const { return y0 + h - (y - yr.lo) / (yr.hi - yr.lo) * h; }
};

void text(std::string& out, double x, double y, std::string_view anchor, std::string_view content,
          std::string_view extra = "") {
  out += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + std::string(anchor) +
         "\"" + std::string(extra) + ">" + xml_escape(content) + "</text>\n";
}

void y_axis(std::string& out, const Frame& f, double step) {
  const auto ticks = static_cast<long>(std::lround((f.yr.hi - f.yr.lo) / step));
  for (long i = 0; i <= ticks; ++i) {
    const double v = f.yr.lo + static_cast<double>(i) * step;
    const double y = f.py(v);
    out += "<line x1=\"" + num(f.x0) + "\" y1=\"" + num(y) + "\" x2=\"" + num(f.x0 + f.w) +
           "\" y2=\"" + num(y) + "\" stroke=\"#e0e0e0\"/>\n";
    text(out, f.x0 - 6, y + 4, "end", num(std::abs(v) < step * 1e-9 ? 0.0 : v));
  }
}

void x_axis_numeric(std::string& out, const Frame& f, double step) {
  const auto ticks = static_cast<long>(std::lround((f.xr.hi - f.xr.lo) / step));
  for (long i = 0; i <= ticks; ++i) {
    const double v = f.xr.lo + static_cast<double>(i) * step;
    const double x = f.px(v);
    out += "<line x1=\"" + num(x) + "\" y1=\"" + num(f.y0) + "\" x2=\"" + num(x) + "\" y2=\"" +
           num(f.y0 + f.h) + "\" stroke=\"#f0f0f0\"/>\n";
    text(out, x, f.y0 + f.h + 18, "middle", num(std::abs(v) < step * 1e-9 ? 0.0 : v));
  }
}

void band(std::string& out, const Frame& f, const std::vector<double>& xs, const ChartSeries& s,
          std::string_view colour) {
  if (s.lower.empty()) return;
  std::string pts;
  for (std::size_t i = 0; i < xs.size(); ++i)
    pts += num(f.px(xs[i])) + "," + num(f.py(s.upper[i])) + " ";
  for (std::size_t i = xs.size(); i-- > 0;)
    pts += num(f.px(xs[i])) + "," + num(f.py(s.lower[i])) + (i ? " " : "");
  out += "<polygon points=\"" + pts + "\" fill=\"" + std::string(colour) +
         "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
}

void validate(const ChartSpec& spec) {
  if (spec.series.empty()) fail(ErrorCode::InvalidArgument, "chart has no series");
  for (const auto& s : spec.series) {
    if (s.y.empty()) fail(ErrorCode::InvalidArgument, "chart series '" + s.name + "' is empty");
    if (spec.kind == ChartKind::bar) {
      if (s.y.size() != spec.categories.size())
        fail(ErrorCode::InvalidArgument, "bar series length must match the category count");
    } else if (s.x.size() != s.y.size()) {
      fail(ErrorCode::InvalidArgument, "series '" + s.name + "' has mismatched x and y");
    }
    if (s.lower.size() != s.upper.size() || (!s.lower.empty() && s.lower.size() != s.y.size()))
      fail(ErrorCode::InvalidArgument, "series '" + s.name + "' has a malformed band");
  }
}

}  // namespace

std::string emit_svg_chart(const ChartSpec& spec) {
  validate(spec);
  const double width = spec.width, height = spec.height;
  Frame f{kLeft, kTop, width - kLeft - kRight, height - kTop - kBottom, {}, {}};

  for (const auto& s : spec.series) {
    for (double v : s.y) f.yr.include(v);
    for (double v : s.lower) f.yr.include(v);
    for (double v : s.upper) f.yr.include(v);
    for (double v : s.x) f.xr.include(v);
  }
  if (spec.kind == ChartKind::bar) {
    f.yr.include(0.0);
    f.xr = {0.0, static_cast<double>(spec.categories.size())};
  }
  f.yr.finish();
  f.xr.finish();
  const double ystep = tick_step(f.yr, 5);
  expand_to_ticks(f.yr, ystep);
  double xstep = 1.0;
  if (spec.kind != ChartKind::bar) {
    xstep = tick_step(f.xr, 8);
    expand_to_ticks(f.xr, xstep);
  }

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(width) +
         "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" fill=\"#ffffff\"/>\n";
  text(out, width / 2, 24, "middle", spec.title, " font-size=\"15\"");

  y_axis(out, f, ystep);
  if (spec.kind == ChartKind::bar) {
    const double slot = f.w / static_cast<double>(spec.categories.size());
    for (std::size_t c = 0; c < spec.categories.size(); ++c) {
      const double cx = f.x0 + slot * (c + 0.5);
      const double cy = f.y0 + f.h + 12;
      text(out, cx, cy, "end", spec.categories[c],
           " transform=\"rotate(-45 " + num(cx) + " " + num(cy) + ")\"");
    }
  } else {
    x_axis_numeric(out, f, xstep);
  }
  out += "<rect x=\"" + num(f.x0) + "\" y=\"" + num(f.y0) + "\" width=\"" + num(f.w) +
         "\" height=\"" + num(f.h) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
  text(out, f.x0 + f.w / 2, height - 12, "middle", spec.x_label);
  const double ylx = 18, yly = f.y0 + f.h / 2;
  text(out, ylx, yly, "middle", spec.y_label,
       " transform=\"rotate(-90 " + num(ylx) + " " + num(yly) + ")\"");

  const std::size_t groups = spec.series.size();
  for (std::size_t si = 0; si < groups; ++si) {
    const auto& s = spec.series[si];
    const auto colour = kPalette[si % kPalette.size()];
    out += "<g id=\"series-" + std::to_string(si) + "\">\n";
    if (spec.kind == ChartKind::bar) {
      const double slot = f.w / static_cast<double>(spec.categories.size());
      const double bar = slot * 0.8 / static_cast<double>(groups);
      for (std::size_t c = 0; c < s.y.size(); ++c) {
        const double x = f.x0 + slot * c + slot * 0.1 + bar * si;
        const double top = f.py(std::max(s.y[c], 0.0));
        const double base = f.py(std::min(s.y[c], 0.0));
        out += "<rect x=\"" + num(x) + "\" y=\"" + num(top) + "\" width=\"" + num(bar) +
               "\" height=\"" + num(base - top) + "\" fill=\"" + std::string(colour) + "\"/>\n";
      }
    } else {
      band(out, f, s.x, s, colour);
      const bool points = s.mark == ChartSeries::Mark::points ||
                          (s.mark == ChartSeries::Mark::automatic && spec.kind == ChartKind::scatter);
      if (points) {
        for (std::size_t i = 0; i < s.y.size(); ++i) {
          out += "<circle cx=\"" + num(f.px(s.x[i])) + "\" cy=\"" + num(f.py(s.y[i])) +
                 "\" r=\"3\" fill=\"" + std::string(colour) + "\" fill-opacity=\"0.7\"/>\n";
        }
      } else {
        std::string pts;
        for (std::size_t i = 0; i < s.y.size(); ++i)
          pts += (i ? " " : "") + num(f.px(s.x[i])) + "," + num(f.py(s.y[i]));
        out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + std::string(colour) +
               "\" stroke-width=\"2\"/>\n";
      }
    }
    out += "</g>\n";
    const double ly = f.y0 + 14 + 18 * static_cast<double>(si);
    const double lx = f.x0 + f.w + 14;
    out += "<rect x=\"" + num(lx) + "\" y=\"" + num(ly - 9) + "\" width=\"12\" height=\"12\" fill=\"" +
           std::string(colour) + "\"/>\n";
    text(out, lx + 18, ly + 1, "start", s.name);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace epa
