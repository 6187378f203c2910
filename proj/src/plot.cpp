#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "hlearner/harness.hpp"
#include "hlearner/text.hpp"

namespace hl {
namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string tick_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

const char* colour(LearnerKind k) {
  switch (k) {
    case LearnerKind::HLearner: return "#d62728";
    case LearnerKind::SLearner: return "#1f77b4";
    case LearnerKind::XSLearner: return "#2ca02c";
  }
  return "#000000";
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string render_plot(const std::vector<AggregateRow>& aggregates, SweepAxis axis,
                        const std::string& title) {
  if (aggregates.empty()) throw std::invalid_argument("cannot plot an empty aggregate table");

  std::map<LearnerKind, std::vector<AggregateRow>> series;
  for (const auto& a : aggregates) series[a.learner].push_back(a);
  for (auto& [k, pts] : series)
    std::sort(pts.begin(), pts.end(),
              [](const AggregateRow& a, const AggregateRow& b) { return a.axis_value < b.axis_value; });

  double x_lo = static_cast<double>(aggregates.front().axis_value), x_hi = x_lo;
  double y_hi = 0.0;
  for (const auto& a : aggregates) {
    x_lo = std::min(x_lo, static_cast<double>(a.axis_value));
    x_hi = std::max(x_hi, static_cast<double>(a.axis_value));
    y_hi = std::max(y_hi, a.mean_pehe + a.stderr_pehe);
  }
  if (x_hi == x_lo) {
    x_lo -= 1.0;
    x_hi += 1.0;
  }
  if (y_hi <= 0.0) y_hi = 1.0;
  y_hi *= 1.05;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto sy = [&](double y) { return kTop + (1.0 - y / y_hi) * plot_h; };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
      << "<text x=\"" << fixed(kLeft + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(title) << "</text>\n";

  // Axes and ticks.
  svg << "<line class=\"axis\" x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(kTop + plot_h) << "\" x2=\""
      << fixed(kLeft + plot_w) << "\" y2=\"" << fixed(kTop + plot_h) << "\" stroke=\"black\"/>\n"
      << "<line class=\"axis\" x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(kTop) << "\" x2=\""
      << fixed(kLeft) << "\" y2=\"" << fixed(kTop + plot_h) << "\" stroke=\"black\"/>\n";
  std::vector<Index> xs;
  for (const auto& a : aggregates) xs.push_back(a.axis_value);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  for (Index x : xs) {
    const double px = sx(static_cast<double>(x));
    svg << "<line class=\"tick\" x1=\"" << fixed(px) << "\" y1=\"" << fixed(kTop + plot_h) << "\" x2=\""
        << fixed(px) << "\" y2=\"" << fixed(kTop + plot_h + 5) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fixed(px) << "\" y=\"" << fixed(kTop + plot_h + 18)
        << "\" text-anchor=\"middle\">" << x << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double v = y_hi * i / 4.0;
    const double py = sy(v);
    svg << "<line class=\"tick\" x1=\"" << fixed(kLeft - 5) << "\" y1=\"" << fixed(py) << "\" x2=\""
        << fixed(kLeft) << "\" y2=\"" << fixed(py) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fixed(kLeft - 8) << "\" y=\"" << fixed(py + 4) << "\" text-anchor=\"end\">"
        << tick_label(v) << "</text>\n";
  }
  const std::string x_label = axis == SweepAxis::N   ? "Number of patients (N)"
                              : axis == SweepAxis::K ? "Number of treatments (K)"
                                                     : "Number of outcomes (M)";
  svg << "<text x=\"" << fixed(kLeft + plot_w / 2) << "\" y=\"" << fixed(kHeight - 18)
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n"
      << "<text x=\"18\" y=\"" << fixed(kTop + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << fixed(kTop + plot_h / 2) << ")\">PEHE (composite)</text>\n";

  // Series: band, line, markers.
  int legend_row = 0;
  for (const auto& [kind, pts] : series) {
    const char* c = colour(kind);
    const std::string name = to_string(kind);
    std::ostringstream upper, lower, line;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double px = sx(static_cast<double>(pts[i].axis_value));
      upper << fixed(px) << ',' << fixed(sy(pts[i].mean_pehe + pts[i].stderr_pehe)) << ' ';
      line << (i ? " " : "") << fixed(px) << ',' << fixed(sy(pts[i].mean_pehe));
    }
    for (std::size_t i = pts.size(); i-- > 0;) {
      const double px = sx(static_cast<double>(pts[i].axis_value));
      lower << fixed(px) << ',' << fixed(sy(std::max(0.0, pts[i].mean_pehe - pts[i].stderr_pehe)))
            << (i ? " " : "");
    }
    svg << "<polygon class=\"band\" data-learner=\"" << name << "\" points=\"" << upper.str()
        << lower.str() << "\" fill=\"" << c << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n"
        << "<polyline class=\"series\" data-learner=\"" << name << "\" points=\"" << line.str()
        << "\" fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
    for (const auto& p : pts)
      svg << "<circle class=\"point\" data-learner=\"" << name << "\" cx=\""
          << fixed(sx(static_cast<double>(p.axis_value))) << "\" cy=\"" << fixed(sy(p.mean_pehe))
          << "\" r=\"3\" fill=\"" << c << "\"/>\n";

    const double ly = kTop + 10 + 20 * legend_row++;
    svg << "<rect class=\"legend\" x=\"" << fixed(kLeft + plot_w + 15) << "\" y=\"" << fixed(ly - 8)
        << "\" width=\"14\" height=\"10\" fill=\"" << c << "\"/>\n"
        << "<text x=\"" << fixed(kLeft + plot_w + 35) << "\" y=\"" << fixed(ly + 1) << "\">" << name
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_plot(const std::vector<AggregateRow>& aggregates, SweepAxis axis, const std::string& title,
               const std::filesystem::path& path) {
  write_text_file(path, render_plot(aggregates, axis, title));
}

}  // namespace hl
