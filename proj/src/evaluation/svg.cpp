#include "flowcast/evaluation/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "flowcast/error.hpp"

namespace flowcast::evaluation {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

SvgChart::SvgChart(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

std::string SvgChart::next_color() {
  return kPalette[palette_index_++ % (sizeof kPalette / sizeof kPalette[0])];
}

void SvgChart::add_line(std::string name, std::vector<double> xs, std::vector<double> ys,
                        std::string color, bool dashed) {
  if (xs.size() != ys.size()) throw InputError("svg: line coordinates differ in length");
  if (color.empty()) color = next_color();
  series_.push_back({dashed ? Kind::DashedLine : Kind::Line, std::move(name), std::move(color),
                     std::move(xs), std::move(ys), {}});
}

void SvgChart::add_band(std::string name, std::vector<double> xs, std::vector<double> lower,
                        std::vector<double> upper, std::string color) {
  if (xs.size() != lower.size() || xs.size() != upper.size()) {
    throw InputError("svg: band coordinates differ in length");
  }
  if (color.empty()) color = next_color();
  series_.push_back({Kind::Band, std::move(name), std::move(color), std::move(xs), std::move(lower),
                     std::move(upper)});
}

void SvgChart::add_points(std::string name, std::vector<double> xs, std::vector<double> ys,
                          std::string color) {
  if (xs.size() != ys.size()) throw InputError("svg: point coordinates differ in length");
  if (color.empty()) color = next_color();
  series_.push_back({Kind::Points, std::move(name), std::move(color), std::move(xs), std::move(ys), {}});
}

std::string SvgChart::render(int width, int height) const {
  const double left = 70, right = 160, top = 40, bottom = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series_) {
    for (double v : s.xs) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.ys) y0 = std::min(y0, v), y1 = std::max(y1, v);
    for (double v : s.upper) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(title_) << "</text>\n";
  svg << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\""
      << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";

  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0;
    const double yv = y0 + (y1 - y0) * i / 5.0;
    svg << "<line x1=\"" << num(px(xv)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(px(xv))
        << "\" y2=\"" << num(top + ph + 5) << "\" stroke=\"#444\"/>";
    svg << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(top + ph + 18)
        << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
    svg << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << num(left)
        << "\" y2=\"" << num(py(yv)) << "\" stroke=\"#444\"/>";
    svg << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">"
        << tick_label(yv) << "</text>\n";
  }
  svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
      << escape(x_label_) << "</text>\n";
  svg << "<text transform=\"translate(16," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(y_label_) << "</text>\n";

  for (const auto& s : series_) {
    if (s.kind == Kind::Band) {
      svg << "<polygon fill=\"" << s.color << "\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.xs.size(); ++i) svg << num(px(s.xs[i])) << ',' << num(py(s.upper[i])) << ' ';
      for (std::size_t i = s.xs.size(); i-- > 0;) svg << num(px(s.xs[i])) << ',' << num(py(s.ys[i])) << ' ';
      svg << "\"/>\n";
    } else if (s.kind == Kind::Points) {
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        svg << "<circle cx=\"" << num(px(s.xs[i])) << "\" cy=\"" << num(py(s.ys[i])) << "\" r=\"2.5\" fill=\""
            << s.color << "\"/>\n";
      }
    } else {
      svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\"";
      if (s.kind == Kind::DashedLine) svg << " stroke-dasharray=\"6,4\"";
      svg << " points=\"";
      for (std::size_t i = 0; i < s.xs.size(); ++i) svg << num(px(s.xs[i])) << ',' << num(py(s.ys[i])) << ' ';
      svg << "\"/>\n";
    }
  }

  double ly = top + 10;
  for (const auto& s : series_) {
    const double lx = left + pw + 12;
    if (s.kind == Kind::Band) {
      svg << "<rect x=\"" << num(lx) << "\" y=\"" << num(ly - 8) << "\" width=\"18\" height=\"10\" fill=\""
          << s.color << "\" fill-opacity=\"0.25\"/>";
    } else {
      svg << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 3) << "\" x2=\"" << num(lx + 18) << "\" y2=\""
          << num(ly - 3) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>";
    }
    svg << "<text x=\"" << num(lx + 24) << "\" y=\"" << num(ly) << "\">" << escape(s.name) << "</text>\n";
    ly += 18;
  }
  svg << "</svg>\n";
  return svg.str();
}

void SvgChart::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << render();
}

}  // namespace flowcast::evaluation
