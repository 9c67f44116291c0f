#include "corrml/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "corrml/errors.hpp"

namespace corrml::svg {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 70;

const char* const kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
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

std::string text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 12,
                 const std::string& extra = "") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + std::to_string(size) +
         "\" text-anchor=\"" + anchor + "\"" + extra + ">" + escape(s) + "</text>\n";
}

std::string line(double x1, double y1, double x2, double y2, const char* stroke, const char* extra = "") {
  return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
         "\" stroke=\"" + stroke + "\"" + extra + "/>\n";
}

std::string header(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + text(kWidth / 2, 24, title, "middle", 15);
}

// Rounds the span out to a tidy tick step; returns ticks from lo to hi.
std::vector<double> ticks(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  lo = std::floor(lo / step) * step;
  hi = std::ceil(hi / step) * step;
  std::vector<double> out;
  for (int k = 0; lo + k * step <= hi + step * 1e-9; ++k) out.push_back(lo + k * step);
  return out;
}

}  // namespace

std::string render_bar_chart(const BarChart& c) {
  if (c.values.size() != c.series.size()) throw ValidationError("bar chart: series count mismatch");
  for (const auto& s : c.values)
    if (s.size() != c.groups.size()) throw ValidationError("bar chart: group count mismatch");

  double lo = 0.0, hi = 0.0;
  for (const auto& s : c.values)
    for (const auto& v : s)
      if (v && std::isfinite(*v)) {
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
      }
  const auto tk = ticks(lo, hi);
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  auto ypix = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };

  std::string out = header(c.title);
  for (double t : tk) {
    out += line(kLeft, ypix(t), kLeft + plot_w, ypix(t), "#dddddd");
    out += text(kLeft - 6, ypix(t) + 4, label(t), "end", 11);
  }
  out += line(kLeft, kTop, kLeft, kTop + plot_h, "black");
  out += line(kLeft, ypix(0.0), kLeft + plot_w, ypix(0.0), "black");
  out += text(18, kTop + plot_h / 2, c.y_label, "middle", 12,
              " transform=\"rotate(-90 18 " + num(kTop + plot_h / 2) + ")\"");

  const double ng = static_cast<double>(std::max<std::size_t>(c.groups.size(), 1));
  const double ns = static_cast<double>(std::max<std::size_t>(c.series.size(), 1));
  const double group_w = plot_w / ng;
  const double bar_w = group_w * 0.8 / ns;
  for (std::size_t g = 0; g < c.groups.size(); ++g) {
    const double gx = kLeft + group_w * static_cast<double>(g) + group_w * 0.1;
    for (std::size_t s = 0; s < c.series.size(); ++s) {
      const auto& v = c.values[s][g];
      if (!v || !std::isfinite(*v)) continue;
      const double top = std::min(ypix(*v), ypix(0.0)), bottom = std::max(ypix(*v), ypix(0.0));
      const double x = gx + bar_w * static_cast<double>(s);
      out += "<rect x=\"" + num(x) + "\" y=\"" + num(top) + "\" width=\"" + num(bar_w * 0.95) + "\" height=\"" +
             num(bottom - top) + "\" fill=\"" + kPalette[s % std::size(kPalette)] + "\"/>\n";
      out += text(x + bar_w * 0.475, top - 3, label(*v), "middle", 9);
    }
    out += text(gx + group_w * 0.4, kTop + plot_h + 18, c.groups[g]);
  }
  for (std::size_t s = 0; s < c.series.size(); ++s) {
    const double x = kLeft + 120.0 * static_cast<double>(s), y = kHeight - 22;
    out += "<rect x=\"" + num(x) + "\" y=\"" + num(y - 10) + "\" width=\"12\" height=\"12\" fill=\"" +
           kPalette[s % std::size(kPalette)] + "\"/>\n";
    out += text(x + 16, y, c.series[s], "start", 11);
  }
  out += "</svg>\n";
  return out;
}

std::string render_scatter(const Scatter& p) {
  if (p.x.size() != p.y.size()) throw ValidationError("scatter: x and y lengths differ");
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (Eigen::Index i = 0; i < p.x.size(); ++i)
    for (double v : {p.x(i), p.y(i)})
      if (std::isfinite(v)) {
        lo = any ? std::min(lo, v) : v;
        hi = any ? std::max(hi, v) : v;
        any = true;
      }
  const auto tk = ticks(lo, hi);
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  auto xpix = [&](double v) { return kLeft + plot_w * (v - lo) / (hi - lo); };
  auto ypix = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };

  std::string out = header(p.title);
  for (double t : tk) {
    out += line(kLeft, ypix(t), kLeft + plot_w, ypix(t), "#eeeeee");
    out += line(xpix(t), kTop, xpix(t), kTop + plot_h, "#eeeeee");
    out += text(kLeft - 6, ypix(t) + 4, label(t), "end", 11);
    out += text(xpix(t), kTop + plot_h + 16, label(t), "middle", 11);
  }
  out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(plot_w) + "\" height=\"" +
         num(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  out += line(xpix(lo), ypix(lo), xpix(hi), ypix(hi), "#888888", " stroke-dasharray=\"4 3\"");
  for (Eigen::Index i = 0; i < p.x.size(); ++i) {
    if (!std::isfinite(p.x(i)) || !std::isfinite(p.y(i))) continue;
    out += "<circle cx=\"" + num(xpix(p.x(i))) + "\" cy=\"" + num(ypix(p.y(i))) +
           "\" r=\"3\" fill=\"#4c72b0\" fill-opacity=\"0.7\"/>\n";
  }
  out += text(kLeft + plot_w / 2, kHeight - 30, p.x_label);
  out += text(18, kTop + plot_h / 2, p.y_label, "middle", 12,
              " transform=\"rotate(-90 18 " + num(kTop + plot_h / 2) + ")\"");
  out += "</svg>\n";
  return out;
}

}  // namespace corrml::svg
