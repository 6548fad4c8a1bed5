#include "diagnostics/plots.hpp"

#include "core/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace funres {

namespace {

constexpr double kWidth = 640, kHeight = 480;
constexpr double kLeft = 68, kRight = 24, kTop = 40, kBottom = 58;

std::string fmt(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string exact(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<double> nice_ticks(double lo, double hi, int target = 5) {
  std::vector<double> ticks;
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  for (double t = std::ceil(lo / step - 1e-9) * step; t <= hi + 1e-9 * step; t += step)
    ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return ticks;
}

class Frame {
 public:
  Frame(double x0, double x1, double y0, double y1) : x0_(x0), x1_(x1), y0_(y0), y1_(y1) {
    if (!(x1_ > x0_)) x1_ = x0_ + 1;
    if (!(y1_ > y0_)) y1_ = y0_ + 1;
  }
  double px(double x) const { return kLeft + (x - x0_) / (x1_ - x0_) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0_) / (y1_ - y0_) * (kHeight - kTop - kBottom); }
  double x0() const { return x0_; }
  double x1() const { return x1_; }
  double y0() const { return y0_; }
  double y1() const { return y1_; }

  void open(std::ostringstream& o, const PlotLabels& labels) const {
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!labels.title.empty())
      o << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(labels.title) << "</text>\n";
  }

  void axes(std::ostringstream& o, const PlotLabels& labels, const std::string& y_label) const {
    const double left = px(x0_), right = px(x1_), bottom = py(y0_), top = py(y1_);
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << right - left << "\" height=\"" << bottom - top
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : nice_ticks(x0_, x1_)) {
      const double x = px(t);
      o << "<line x1=\"" << x << "\" y1=\"" << bottom << "\" x2=\"" << x << "\" y2=\"" << bottom + 5
        << "\" stroke=\"black\"/>\n";
      o << "<text x=\"" << x << "\" y=\"" << bottom + 18 << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
    }
    for (double t : nice_ticks(y0_, y1_)) {
      const double y = py(t);
      o << "<line x1=\"" << left - 5 << "\" y1=\"" << y << "\" x2=\"" << left << "\" y2=\"" << y
        << "\" stroke=\"black\"/>\n";
      o << "<text x=\"" << left - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fmt(t) << "</text>\n";
    }
    o << "<text x=\"" << (left + right) / 2 << "\" y=\"" << kHeight - 16 << "\" text-anchor=\"middle\">"
      << escape(labels.x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << (top + bottom) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(y_label) << "</text>\n";
  }

  void polyline(std::ostringstream& o, const std::vector<double>& xs, const std::vector<double>& ys,
                const std::string& style) const {
    o << "<polyline fill=\"none\" " << style << " points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double y = std::clamp(ys[i], y0_, y1_);
      o << fmt(px(xs[i]), 6) << ',' << fmt(py(y), 6) << (i + 1 < xs.size() ? " " : "");
    }
    o << "\"/>\n";
  }

  void hline(std::ostringstream& o, double y, const std::string& style) const {
    o << "<line x1=\"" << px(x0_) << "\" y1=\"" << py(y) << "\" x2=\"" << px(x1_) << "\" y2=\"" << py(y) << "\" "
      << style << "/>\n";
  }

 private:
  double x0_, x1_, y0_, y1_;
};

std::string ramp(double f) {
  // White to dark navy.
  f = std::clamp(f, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255 + (8 - 255) * f));
  const int g = static_cast<int>(std::lround(255 + (29 - 255) * f));
  const int b = static_cast<int>(std::lround(255 + (88 - 255) * f));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

const char* residual_axis(Scale s) { return s == Scale::Uniform ? "functional residual" : "functional residual (normal scale)"; }

}  // namespace

std::string heatmap_svg(const HeatmapGrid& grid, const PlotLabels& labels, const LowessFit* overlay) {
  const Frame f(grid.x_edges.front(), grid.x_edges.back(), grid.y_edges.front(), grid.y_edges.back());
  std::ostringstream o;
  f.open(o, labels);
  const double peak = grid.mass.size() ? grid.mass.maxCoeff() : 0.0;
  for (int i = 0; i < grid.x_bins(); ++i) {
    const double xa = f.px(grid.x_edges[static_cast<std::size_t>(i)]);
    const double xb = f.px(grid.x_edges[static_cast<std::size_t>(i) + 1]);
    for (int j = 0; j < grid.y_bins(); ++j) {
      const double m = grid.mass(i, j);
      if (m <= 0) continue;
      const double ya = f.py(grid.y_edges[static_cast<std::size_t>(j) + 1]);
      const double yb = f.py(grid.y_edges[static_cast<std::size_t>(j)]);
      o << "<rect x=\"" << fmt(xa, 6) << "\" y=\"" << fmt(ya, 6) << "\" width=\"" << fmt(xb - xa + 0.05, 6)
        << "\" height=\"" << fmt(yb - ya + 0.05, 6) << "\" fill=\"" << ramp(peak > 0 ? m / peak : 0) << "\"/>\n";
    }
  }
  if (overlay) {
    f.hline(o, grid.scale == Scale::Uniform ? 0.5 : 0.0, "stroke=\"gray\" stroke-dasharray=\"6,4\"");
    f.polyline(o, overlay->x, overlay->fitted, "stroke=\"#d7301f\" stroke-width=\"2\"");
  }
  f.axes(o, labels, residual_axis(grid.scale));
  o << "</svg>\n";
  return o.str();
}

std::string fnfn_svg(const FnFnCurve& curve, const PlotLabels& labels) {
  const Frame f(0, 1, 0, 1);
  std::ostringstream o;
  f.open(o, labels);
  f.polyline(o, {0.0, 1.0}, {0.0, 1.0}, "stroke=\"gray\" stroke-dasharray=\"6,4\"");
  // Thin out very dense knot sets; the curve is piecewise linear so a fine grid is faithful.
  std::vector<double> t, v;
  const auto& kn = curve.curve.knots();
  if (kn.size() <= 2048) {
    t = kn;
    v = curve.curve.values();
  } else {
    for (int k = 0; k <= 2048; ++k) {
      t.push_back(k / 2048.0);
      v.push_back(curve.curve(t.back()));
    }
  }
  f.polyline(o, t, v, "stroke=\"#08306b\" stroke-width=\"2\"");
  o << "<text x=\"" << f.px(0.02) << "\" y=\"" << f.py(0.95) << "\">sup |Res(t) - t| = " << fmt(curve.sup_dev)
    << ", n = " << curve.n << "</text>\n";
  f.axes(o, labels.x_label.empty() ? PlotLabels{labels.title, "t"} : labels, "averaged residual function");
  o << "</svg>\n";
  return o.str();
}

std::string lowess_svg(const LowessFit& fit, Scale scale, const PlotLabels& labels) {
  double lo = scale == Scale::Uniform ? 0.0 : -1.0, hi = scale == Scale::Uniform ? 1.0 : 1.0;
  if (!fit.fitted.empty()) {
    const auto [a, b] = std::minmax_element(fit.fitted.begin(), fit.fitted.end());
    lo = std::min(lo, *a);
    hi = std::max(hi, *b);
  }
  const Frame f(fit.x.empty() ? 0 : fit.x.front(), fit.x.empty() ? 1 : fit.x.back(), lo, hi);
  std::ostringstream o;
  f.open(o, labels);
  f.hline(o, scale == Scale::Uniform ? 0.5 : 0.0, "stroke=\"gray\" stroke-dasharray=\"6,4\"");
  f.polyline(o, fit.x, fit.fitted, "stroke=\"#d7301f\" stroke-width=\"2\"");
  f.axes(o, labels, std::string("LOWESS of point summaries (") + scale_name(scale) + ")");
  o << "</svg>\n";
  return o.str();
}

std::string heatmap_csv(const HeatmapGrid& grid) {
  std::ostringstream o;
  o << "x_lo,x_hi,y_lo,y_hi,mass\n";
  for (int i = 0; i < grid.x_bins(); ++i)
    for (int j = 0; j < grid.y_bins(); ++j)
      o << exact(grid.x_edges[static_cast<std::size_t>(i)]) << ',' << exact(grid.x_edges[static_cast<std::size_t>(i) + 1])
        << ',' << exact(grid.y_edges[static_cast<std::size_t>(j)]) << ','
        << exact(grid.y_edges[static_cast<std::size_t>(j) + 1]) << ',' << exact(grid.mass(i, j)) << '\n';
  return o.str();
}

std::string heatmap_bins_csv(const HeatmapGrid& grid) {
  std::ostringstream o;
  o << "x_lo,x_hi,count,mean_point\n";
  for (std::size_t i = 0; i < grid.counts.size(); ++i)
    o << exact(grid.x_edges[i]) << ',' << exact(grid.x_edges[i + 1]) << ',' << grid.counts[i] << ','
      << exact(grid.mean_point[i]) << '\n';
  return o.str();
}

std::string fnfn_csv(const FnFnCurve& curve) {
  std::ostringstream o;
  o << "t,resbar\n";
  const auto& t = curve.curve.knots();
  const auto& v = curve.curve.values();
  for (std::size_t k = 0; k < t.size(); ++k) o << exact(t[k]) << ',' << exact(v[k]) << '\n';
  return o.str();
}

std::string lowess_csv(const LowessFit& fit) {
  std::ostringstream o;
  o << "x,fitted\n";
  for (std::size_t k = 0; k < fit.x.size(); ++k) o << exact(fit.x[k]) << ',' << exact(fit.fitted[k]) << '\n';
  return o.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot write " + path);
  f << content;
  if (!f) fail(ErrorCode::Io, "write failed: " + path);
}

}  // namespace funres
