#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace phenosim {

// Minimal static scatter plot with fitted-curve overlays and text
// annotations. Layout is fixed-size (640x480) with a 10% data margin.
class SvgScatter {
 public:
  SvgScatter(std::string title, std::string x_label, std::string y_label)
      : title_(std::move(title)),
        x_label_(std::move(x_label)),
        y_label_(std::move(y_label)) {}

  void add_points(const std::vector<double>& x, const std::vector<double>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) points_.push_back({x[i], y[i]});
  }

  // curve sampled on the data x-range; fn may throw past its domain edge,
  // in which case the curve stops there
  template <typename Fn>
  void add_curve(const std::string& label, const std::string& color, Fn&& fn,
                 double x_lo, double x_hi, int n = 128) {
    Curve c;
    c.label = label;
    c.color = color;
    for (int i = 0; i <= n; ++i) {
      double x = x_lo + (x_hi - x_lo) * double(i) / n;
      try {
        c.pts.push_back({x, fn(x)});
      } catch (const std::exception&) {
        break;
      }
    }
    curves_.push_back(std::move(c));
  }

  void add_annotation(const std::string& text) { notes_.push_back(text); }

  void write(const std::string& path) const {
    double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
    bool first = true;
    auto grow = [&](double x, double y) {
      if (first) {
        x_lo = x_hi = x;
        y_lo = y_hi = y;
        first = false;
        return;
      }
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    };
    for (const auto& p : points_) grow(p[0], p[1]);
    for (const auto& c : curves_)
      for (const auto& p : c.pts) grow(p[0], p[1]);
    if (x_hi - x_lo < 1e-12) x_hi = x_lo + 1.0;
    if (y_hi - y_lo < 1e-12) y_hi = y_lo + 1.0;
    double mx = 0.1 * (x_hi - x_lo), my = 0.1 * (y_hi - y_lo);
    x_lo -= mx;
    x_hi += mx;
    y_lo -= my;
    y_hi += my;

    const double w = 640, h = 480, pl = 70, pr = 20, pt = 40, pb = 50;
    auto sx = [&](double x) {
      return pl + (x - x_lo) / (x_hi - x_lo) * (w - pl - pr);
    };
    auto sy = [&](double y) {
      return h - pb - (y - y_lo) / (y_hi - y_lo) * (h - pt - pb);
    };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[512];
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
           "height=\"480\" viewBox=\"0 0 640 480\">\n"
        << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                  "fill=\"none\" stroke=\"black\"/>\n",
                  pl, pt, w - pl - pr, h - pt - pb);
    out << buf;
    out << "<text x=\"320\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">"
        << escape(title_) << "</text>\n";
    out << "<text x=\"320\" y=\"470\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"12\">"
        << escape(x_label_) << "</text>\n";
    out << "<text x=\"16\" y=\"240\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 16 240)\">"
        << escape(y_label_) << "</text>\n";

    // axis ticks, 5 per side
    for (int i = 0; i <= 4; ++i) {
      double xv = x_lo + (x_hi - x_lo) * i / 4.0;
      double yv = y_lo + (y_hi - y_lo) * i / 4.0;
      std::snprintf(buf, sizeof buf,
                    "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" "
                    "font-family=\"sans-serif\" font-size=\"10\">%.4g</text>\n",
                    sx(xv), h - pb + 16.0, xv);
      out << buf;
      std::snprintf(buf, sizeof buf,
                    "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" "
                    "font-family=\"sans-serif\" font-size=\"10\">%.4g</text>\n",
                    pl - 6.0, sy(yv) + 3.0, yv);
      out << buf;
    }

    for (const auto& c : curves_) {
      out << "<polyline fill=\"none\" stroke=\"" << c.color
          << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& p : c.pts) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", sx(p[0]), sy(p[1]));
        out << buf;
      }
      out << "\"/>\n";
    }
    for (const auto& p : points_) {
      std::snprintf(buf, sizeof buf,
                    "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"#1f77b4\" "
                    "fill-opacity=\"0.7\"/>\n",
                    sx(p[0]), sy(p[1]));
      out << buf;
    }

    double ty = pt + 16.0;
    for (const auto& c : curves_) {
      std::snprintf(buf, sizeof buf,
                    "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" "
                    "font-size=\"11\" fill=\"%s\">%s</text>\n",
                    pl + 8.0, ty, c.color.c_str(), escape(c.label).c_str());
      out << buf;
      ty += 14.0;
    }
    for (const auto& note : notes_) {
      std::snprintf(buf, sizeof buf,
                    "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" "
                    "font-size=\"11\">%s</text>\n",
                    pl + 8.0, ty, escape(note).c_str());
      out << buf;
      ty += 14.0;
    }
    out << "</svg>\n";
  }

 private:
  struct Curve {
    std::string label, color;
    std::vector<std::array<double, 2>> pts;
  };

  static std::string escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
      switch (ch) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += ch;
      }
    }
    return out;
  }

  std::string title_, x_label_, y_label_;
  std::vector<std::array<double, 2>> points_;
  std::vector<Curve> curves_;
  std::vector<std::string> notes_;
};

}  // namespace phenosim
