#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "sce/csv.hpp"
#include "sce/solver.hpp"

namespace sce {

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string num(double v) { return fmt_fixed(v, 2); }

}  // namespace detail

// Grouped accuracy bars with Wilson CI whiskers and a dashed chance line at
// 1/n. Bars appear in the given order; a wider gap opens wherever the
// predictive feature changes, and each group is labeled with its feature.
inline std::string svg_accuracy_bars(std::span<const AccuracyStats> stats,
                                     const std::string& title, double chance = 0.25) {
  using detail::num;
  const double bar_w = 10, gap = 2, group_gap = 16;
  const double ml = 46, mr = 12, mt = 28, mb = 52;
  const double plot_h = 220;

  double x = 0;
  std::vector<double> xs(stats.size());
  for (size_t i = 0; i < stats.size(); ++i) {
    if (i > 0 && stats[i].spec.predictive != stats[i - 1].spec.predictive) x += group_gap;
    xs[i] = x;
    x += bar_w + gap;
  }
  const double plot_w = std::max(x - gap, bar_w);
  const double W = ml + plot_w + mr, H = mt + plot_h + mb;

  auto ax = [&](double px) { return ml + px; };
  auto ay = [&](double acc) { return mt + plot_h * (1.0 - acc); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) +
       "\" viewBox=\"0 0 " + num(W) + " " + num(H) + "\">\n";
  s += "<text x=\"" + num(W / 2) + "\" y=\"16\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
       detail::xml_escape(title) + "</text>\n";

  for (double tick : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double y = ay(tick);
    s += "<line x1=\"" + num(ml - 4) + "\" y1=\"" + num(y) + "\" x2=\"" + num(ml + plot_w) +
         "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    s += "<text x=\"" + num(ml - 8) + "\" y=\"" + num(y + 3) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"9\">" + fmt_fixed(tick, 2) +
         "</text>\n";
  }

  for (size_t i = 0; i < stats.size(); ++i) {
    const double x0 = ax(xs[i]);
    const double ytop = ay(stats[i].accuracy);
    s += "<rect x=\"" + num(x0) + "\" y=\"" + num(ytop) + "\" width=\"" + num(bar_w) +
         "\" height=\"" + num(ay(0.0) - ytop) + "\" fill=\"#4878a8\"/>\n";
    const double cx = x0 + bar_w / 2;
    const double ylo = ay(std::max(0.0, stats[i].ci.low));
    const double yhi = ay(std::min(1.0, stats[i].ci.high));
    s += "<line x1=\"" + num(cx) + "\" y1=\"" + num(ylo) + "\" x2=\"" + num(cx) + "\" y2=\"" +
         num(yhi) + "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
    s += "<line x1=\"" + num(cx - 3) + "\" y1=\"" + num(ylo) + "\" x2=\"" + num(cx + 3) +
         "\" y2=\"" + num(ylo) + "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
    s += "<line x1=\"" + num(cx - 3) + "\" y1=\"" + num(yhi) + "\" x2=\"" + num(cx + 3) +
         "\" y2=\"" + num(yhi) + "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
    s += "<text x=\"" + num(cx) + "\" y=\"" + num(ay(0.0) + 10) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"7\">" +
         std::to_string(stats[i].spec.difficulty()) + "</text>\n";
  }

  // Group labels under the difficulty row.
  size_t g0 = 0;
  for (size_t i = 0; i <= stats.size(); ++i) {
    if (i == stats.size() || (i > 0 && stats[i].spec.predictive != stats[i - 1].spec.predictive)) {
      const double xa = ax(xs[g0]), xb = ax(xs[i - 1]) + bar_w;
      s += "<text x=\"" + num((xa + xb) / 2) + "\" y=\"" + num(ay(0.0) + 24) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
           to_string(stats[g0].spec.predictive) + "</text>\n";
      g0 = i;
    }
  }

  const double yc = ay(chance);
  s += "<line x1=\"" + num(ml) + "\" y1=\"" + num(yc) + "\" x2=\"" + num(ml + plot_w) +
       "\" y2=\"" + num(yc) + "\" stroke=\"#c03030\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n";
  s += "<text x=\"" + num(ml + plot_w) + "\" y=\"" + num(yc - 3) +
       "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"8\" fill=\"#c03030\">chance " +
       fmt_fixed(chance, 2) + "</text>\n";
  s += "<text x=\"" + num(ml + plot_w / 2) + "\" y=\"" + num(H - 6) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"9\">bars: conditions "
       "(digit = distractor count); whiskers: Wilson 95% CI</text>\n";
  s += "</svg>\n";
  return s;
}

// Single-series line plot (smoothed anomaly score over frame index).
inline std::string svg_line_plot(std::span<const double> xs, std::span<const double> ys,
                                 const std::string& title, const std::string& xlabel,
                                 const std::string& ylabel) {
  using detail::num;
  if (xs.size() != ys.size() || xs.empty()) fail(Errc::bad_argument, "line plot needs matching nonempty series");
  const double ml = 52, mr = 14, mt = 28, mb = 40;
  const double plot_w = 520, plot_h = 220;
  const double W = ml + plot_w + mr, H = mt + plot_h + mb;

  double xmin = xs[0], xmax = xs[0], ymin = ys[0], ymax = ys[0];
  for (size_t i = 0; i < xs.size(); ++i) {
    xmin = std::min(xmin, xs[i]);
    xmax = std::max(xmax, xs[i]);
    ymin = std::min(ymin, ys[i]);
    ymax = std::max(ymax, ys[i]);
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  auto px = [&](double v) { return ml + plot_w * (v - xmin) / (xmax - xmin); };
  auto py = [&](double v) { return mt + plot_h * (1.0 - (v - ymin) / (ymax - ymin)); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) +
       "\" viewBox=\"0 0 " + num(W) + " " + num(H) + "\">\n";
  s += "<text x=\"" + num(W / 2) + "\" y=\"16\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
       detail::xml_escape(title) + "</text>\n";
  s += "<rect x=\"" + num(ml) + "\" y=\"" + num(mt) + "\" width=\"" + num(plot_w) + "\" height=\"" +
       num(plot_h) + "\" fill=\"none\" stroke=\"#888888\" stroke-width=\"1\"/>\n";

  if (ymin < 0.0 && ymax > 0.0) {
    s += "<line x1=\"" + num(ml) + "\" y1=\"" + num(py(0.0)) + "\" x2=\"" + num(ml + plot_w) +
         "\" y2=\"" + num(py(0.0)) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
  }

  std::string pts;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) pts += ' ';
    pts += num(px(xs[i])) + "," + num(py(ys[i]));
  }
  s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"#4878a8\" stroke-width=\"1.5\"/>\n";

  s += "<text x=\"" + num(ml - 6) + "\" y=\"" + num(py(ymax) + 4) +
       "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"9\">" + fmt_g(ymax) + "</text>\n";
  s += "<text x=\"" + num(ml - 6) + "\" y=\"" + num(py(ymin) + 4) +
       "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"9\">" + fmt_g(ymin) + "</text>\n";
  s += "<text x=\"" + num(ml) + "\" y=\"" + num(H - 8) +
       "\" text-anchor=\"start\" font-family=\"sans-serif\" font-size=\"9\">" + fmt_g(xmin) + "</text>\n";
  s += "<text x=\"" + num(ml + plot_w) + "\" y=\"" + num(H - 8) +
       "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"9\">" + fmt_g(xmax) + "</text>\n";
  s += "<text x=\"" + num(ml + plot_w / 2) + "\" y=\"" + num(H - 8) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
       detail::xml_escape(xlabel) + "</text>\n";
  s += "<text x=\"14\" y=\"" + num(mt + plot_h / 2) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\" transform=\"rotate(-90 14 " +
       num(mt + plot_h / 2) + ")\">" + detail::xml_escape(ylabel) + "</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace sce
