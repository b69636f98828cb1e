#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "paretoab/stats.hpp"

namespace paretoab {

namespace {

constexpr double kWidth = 420, kHeight = 320, kMargin = 50;
constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

void write_scatter_svg(const std::filesystem::path& path, const std::string& title,
                       std::span<const ScatterRow> panel) {
  if (panel.empty()) throw std::invalid_argument("write_scatter_svg: empty panel");
  double x_max = 0, y_min = 0, y_max = 0;
  for (const ScatterRow& r : panel) {
    x_max = std::max(x_max, r.x);
    y_min = std::min(y_min, r.kpi_change);
    y_max = std::max(y_max, r.kpi_change);
  }
  if (x_max <= 0) x_max = 1e-6;
  if (y_max - y_min <= 0) y_max = y_min + 1e-6;
  const auto px = [&](double x) { return kMargin + (kWidth - 2 * kMargin) * x / x_max; };
  const auto py = [&](double y) { return kHeight - kMargin - (kHeight - 2 * kMargin) * (y - y_min) / (y_max - y_min); };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << title << "</text>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin << "\" y2=\""
      << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\"" << kHeight - kMargin
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 15 << "\">0%</text>\n";
  out << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 15 << "\" text-anchor=\"end\">"
      << fmt("%.1f%%", 100 * x_max) << "</text>\n";
  out << "<text x=\"" << kMargin - 4 << "\" y=\"" << py(y_max) << "\" text-anchor=\"end\">"
      << fmt("%.1f%%", 100 * y_max) << "</text>\n";
  out << "<text x=\"" << kMargin - 4 << "\" y=\"" << py(y_min) << "\" text-anchor=\"end\">"
      << fmt("%.1f%%", 100 * y_min) << "</text>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">offline metric change</text>\n";

  out << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
  for (const ScatterRow& r : panel) {
    if (r.kind == "fit") out << fmt("%.2f", px(r.x)) << ',' << fmt("%.2f", py(r.kpi_change)) << ' ';
  }
  out << "\"/>\n";
  for (const ScatterRow& r : panel) {
    if (r.kind != "group") continue;
    out << "<circle cx=\"" << fmt("%.2f", px(r.x)) << "\" cy=\"" << fmt("%.2f", py(r.kpi_change))
        << "\" r=\"5\" fill=\"" << kColors[static_cast<std::size_t>(r.group) % 10] << "\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace paretoab
