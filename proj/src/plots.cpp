#include "goodwin/plots.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include "goodwin/errors.hpp"

namespace goodwin {
namespace {

// Shortest decimal that round-trips; coordinates are pre-snapped to 1/100 px
// so the emitted attributes stay short.
std::string num(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double snap(double v) { return std::round(v * 100.0) / 100.0; }

std::string esc(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

// Tick spacing of 1, 2, or 5 times a power of ten, giving 4-7 ticks.
double nice_step(double range) {
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  double nice = 10.0;
  if (frac <= 1.5)
    nice = 1.0;
  else if (frac <= 3.5)
    nice = 2.0;
  else if (frac <= 7.5)
    nice = 5.0;
  return nice * mag;
}

// Strips the accumulated floating-point fuzz off k*step tick values so the
// labels read "0.3", not "0.30000000000000004".
double tidy(double v) { return std::round(v * 1e10) / 1e10; }

struct Box {
  double xlo, xhi, ylo, yhi;
};

void text(std::string& s, double x, double y, const std::string& body,
          const char* anchor, const std::string& extra = "") {
  s += "<text x=\"" + num(snap(x)) + "\" y=\"" + num(snap(y)) +
       "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"";
  s += anchor;
  s += "\"";
  s += extra;
  s += ">" + esc(body) + "</text>\n";
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  Box b{kInf, -kInf, kInf, -kInf};
  for (const PlotSeries& ser : spec.series)
    for (const auto& [x, y] : ser.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      b.xlo = std::min(b.xlo, x);
      b.xhi = std::max(b.xhi, x);
      b.ylo = std::min(b.ylo, y);
      b.yhi = std::max(b.yhi, y);
    }
  if (!(b.xlo <= b.xhi))
    throw ConfigError("plot \"" + spec.title + "\" has no finite data points");

  const auto widen = [](double& lo, double& hi) {
    if (lo == hi) {
      const double pad = std::max(std::abs(lo) * 1e-3, 1e-9);
      lo -= pad;
      hi += pad;
    } else {
      const double pad = (hi - lo) * 0.04;
      lo -= pad;
      hi += pad;
    }
  };
  widen(b.xlo, b.xhi);
  widen(b.ylo, b.yhi);

  const double kL = 64, kR = 16, kT = 28, kB = 44;
  const double pw = spec.width - kL - kR;
  const double ph = spec.height - kT - kB;
  const auto px = [&](double x) {
    return snap(kL + (x - b.xlo) / (b.xhi - b.xlo) * pw);
  };
  const auto py = [&](double y) {
    return snap(kT + (b.yhi - y) / (b.yhi - b.ylo) * ph);
  };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
       num(spec.width) + "\" height=\"" + num(spec.height) + "\" viewBox=\"0 0 " +
       num(spec.width) + " " + num(spec.height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    text(s, spec.width / 2.0, 17, spec.title, "middle",
         " font-weight=\"bold\"");

  // Grid and tick labels.
  const auto ticks = [](double lo, double hi) {
    std::vector<double> out;
    const double step = nice_step(hi - lo);
    double v = std::ceil(lo / step) * step;
    for (; v <= hi + step * 1e-9; v += step) out.push_back(tidy(v));
    return out;
  };
  for (double v : ticks(b.xlo, b.xhi)) {
    const double x = px(v);
    s += "<line x1=\"" + num(x) + "\" y1=\"" + num(kT) + "\" x2=\"" + num(x) +
         "\" y2=\"" + num(snap(kT + ph)) + "\" stroke=\"#dddddd\"/>\n";
    text(s, x, kT + ph + 14, num(v), "middle");
  }
  for (double v : ticks(b.ylo, b.yhi)) {
    const double y = py(v);
    s += "<line x1=\"" + num(kL) + "\" y1=\"" + num(y) + "\" x2=\"" +
         num(snap(kL + pw)) + "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\"/>\n";
    text(s, kL - 6, y + 4, num(v), "end");
  }
  s += "<rect x=\"" + num(kL) + "\" y=\"" + num(kT) + "\" width=\"" + num(pw) +
       "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  if (!spec.x_label.empty())
    text(s, kL + pw / 2, spec.height - 10, spec.x_label, "middle");
  if (!spec.y_label.empty())
    text(s, 14, kT + ph / 2, spec.y_label, "middle",
         " transform=\"rotate(-90 14 " + num(snap(kT + ph / 2)) + ")\"");

  // Series: split polylines at non-finite points; circles for marker series.
  for (const PlotSeries& ser : spec.series) {
    std::string run;
    int run_len = 0;
    double last_x = 0, last_y = 0;
    const auto flush = [&]() {
      if (run_len >= 2)
        s += "<polyline fill=\"none\" stroke=\"" + ser.color +
             "\" stroke-width=\"" + num(ser.width) + "\" points=\"" + run +
             "\"/>\n";
      else if (run_len == 1 && !ser.markers)
        s += "<circle cx=\"" + num(last_x) + "\" cy=\"" + num(last_y) +
             "\" r=\"1.5\" fill=\"" + ser.color + "\"/>\n";
      run.clear();
      run_len = 0;
    };
    for (const auto& [x, y] : ser.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) {
        flush();
        continue;
      }
      last_x = px(x);
      last_y = py(y);
      if (!run.empty()) run += " ";
      run += num(last_x) + "," + num(last_y);
      ++run_len;
      if (ser.markers)
        s += "<circle cx=\"" + num(last_x) + "\" cy=\"" + num(last_y) +
             "\" r=\"2.5\" fill=\"" + ser.color + "\"/>\n";
    }
    flush();
  }

  // Legend, top-right inside the frame.
  int row = 0;
  for (const PlotSeries& ser : spec.series) {
    if (ser.label.empty()) continue;
    const double y = kT + 14 + 14.0 * row++;
    const double x1 = kL + pw - 150, x2 = x1 + 22;
    s += "<line x1=\"" + num(snap(x1)) + "\" y1=\"" + num(snap(y - 4)) +
         "\" x2=\"" + num(snap(x2)) + "\" y2=\"" + num(snap(y - 4)) +
         "\" stroke=\"" + ser.color + "\" stroke-width=\"2\"/>\n";
    text(s, x2 + 5, y, ser.label, "start");
  }

  s += "</svg>\n";
  return s;
}

}  // namespace goodwin
