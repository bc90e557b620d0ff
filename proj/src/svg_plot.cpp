#include "mdslab/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mdslab/errors.hpp"

namespace mdslab {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string escape(const std::string &s) {
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

double fitted(const RateFit &fit, double n) {
  const double base = fit.C * std::pow(n, fit.b);
  return fit.form == RateForm::power_log ? base * std::log(n) : base;
}

} // namespace

std::string render_rate_plot(std::span<const GridPoint> points, const RateFit &fit,
                             const std::string &title) {
  if (points.empty())
    throw DomainError("render_rate_plot: no points");
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto &p : points) {
    if (!(p.n > 0 && p.delta > 0))
      throw DomainError("render_rate_plot: points must be positive");
    const double lx = std::log10(p.n), ly = std::log10(p.delta);
    x0 = std::min(x0, lx);
    x1 = std::max(x1, lx);
    y0 = std::min({y0, ly, std::log10(fitted(fit, p.n))});
    y1 = std::max({y1, ly, std::log10(fitted(fit, p.n))});
  }
  if (!std::isfinite(y0) || !std::isfinite(y1))
    throw DomainError("render_rate_plot: fitted line is not finite");
  if (x1 - x0 < 1e-9) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (y1 - y0 < 1e-9) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double padx = 0.05 * (x1 - x0), pady = 0.08 * (y1 - y0);
  x0 -= padx, x1 += padx, y0 -= pady, y1 += pady;
  const auto sx = [&](double lx) { return kLeft + (lx - x0) / (x1 - x0) * (kWidth - kLeft - kRight); };
  const auto sy = [&](double ly) { return kTop + (y1 - ly) / (y1 - y0) * (kHeight - kTop - kBottom); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"15\">"
     << escape(title) << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight
     << "\" height=\"" << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";

  // decade ticks where they fit, otherwise the interval ends
  const auto ticks = [](double lo, double hi) {
    std::vector<double> t;
    for (double v = std::ceil(lo * 2) / 2; v <= hi; v += 0.5)
      t.push_back(v);
    if (t.size() < 2)
      t = {lo, hi};
    return t;
  };
  for (double v : ticks(x0, x1))
    os << "<text x=\"" << num(sx(v)) << "\" y=\"" << kHeight - kBottom + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">1e" << num(v)
       << "</text>\n";
  for (double v : ticks(y0, y1))
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(sy(v) + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" << num(v)
       << "</text>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">n (log scale)</text>\n";
  os << "<text x=\"16\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 16 " << kHeight / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">Kolmogorov distance (log scale)</text>\n";

  os << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
  const double n_lo = std::pow(10.0, x0 + padx), n_hi = std::pow(10.0, x1 - padx);
  for (int i = 0; i <= 64; ++i) {
    const double n = n_lo * std::pow(n_hi / n_lo, i / 64.0);
    os << num(sx(std::log10(n))) << ',' << num(sy(std::log10(fitted(fit, n)))) << ' ';
  }
  os << "\"/>\n";
  for (const auto &p : points)
    os << "<circle cx=\"" << num(sx(std::log10(p.n))) << "\" cy=\"" << num(sy(std::log10(p.delta)))
       << "\" r=\"3.5\" fill=\"#2c3e50\"/>\n";
  char legend[160];
  if (fit.form == RateForm::power)
    std::snprintf(legend, sizeof legend, "fit: %.4g n^%.4f  (r2 = %.4f)", fit.C, fit.b, fit.r2);
  else
    std::snprintf(legend, sizeof legend, "fit: %.4g n^-1/2 ln n  (r2 = %.4f)", fit.C, fit.r2);
  os << "<text x=\"" << kWidth - kRight - 8 << "\" y=\"" << kTop + 18
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#c0392b\">"
     << escape(legend) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string try_write_rate_plot(const std::string &path, std::span<const GridPoint> points,
                                const RateFit &fit, const std::string &title) noexcept {
  try {
    const std::string svg = render_rate_plot(points, fit, title);
    std::ofstream os(path, std::ios::binary);
    if (!os)
      return "cannot open '" + path + "'";
    os << svg;
    if (!os)
      return "write to '" + path + "' failed";
    return {};
  } catch (const std::exception &e) {
    return e.what();
  } catch (...) {
    return "unknown plotting failure";
  }
}

} // namespace mdslab
