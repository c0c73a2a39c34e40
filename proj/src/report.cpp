#include "pgcr/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pgcr {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
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

// Tick positions at 1, 2 or 5 times a power of ten.
std::vector<double> nice_ticks(double lo, double hi, int target = 5) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {1.0, 2.0, 5.0, 10.0}) {
    step = f * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) ticks.push_back(v);
  return ticks;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

void write_csv(const Summary& summary, const std::string& path) {
  if (summary.mean.size() != summary.std.size()) throw std::invalid_argument("write_csv: mean/std length mismatch");
  auto out = open_out(path);
  out << "step,mean,std\n";
  for (std::size_t t = 0; t < summary.mean.size(); ++t)
    out << (t + 1) << ',' << num(summary.mean[t]) << ',' << num(summary.std[t]) << '\n';
  finish(out, path);
}

void write_trace_csv(const RunTrace& trace, const std::string& path) {
  auto out = open_out(path);
  out << "step,reward,best,chosen,regret,cumulative_regret\n";
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const auto& s = trace.steps[t];
    out << (t + 1) << ',' << num(s.reward) << ',' << num(s.best) << ',' << num(s.chosen) << ',' << num(s.regret)
        << ',' << num(s.cumulative_regret) << '\n';
  }
  finish(out, path);
}

Summary read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "step,mean,std") throw IoError("'" + path + "' lacks the step,mean,std header");
  Summary s;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string step, mean, sd;
    if (!std::getline(row, step, ',') || !std::getline(row, mean, ',') || !std::getline(row, sd))
      throw IoError(path + ":" + std::to_string(line_no) + ": malformed row");
    try {
      s.mean.push_back(std::stod(mean));
      s.std.push_back(std::stod(sd));
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  return s;
}

std::string render_plot(std::span<const Summary> summaries, const PlotLabels& labels) {
  if (summaries.empty()) throw std::invalid_argument("nothing to plot");
  constexpr double kW = 800, kH = 500, kLeft = 80, kRight = 20, kTop = 40, kBottom = 60;
  constexpr std::size_t kMaxPoints = 400;
  std::size_t horizon = 0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : summaries) {
    horizon = std::max(horizon, s.mean.size());
    for (std::size_t t = 0; t < s.mean.size(); ++t) {
      lo = std::min(lo, s.mean[t] - s.std[t]);
      hi = std::max(hi, s.mean[t] + s.std[t]);
    }
  }
  if (horizon == 0) throw std::invalid_argument("nothing to plot");
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto px = [&](double step) {
    return kLeft + (horizon > 1 ? (step - 1) / static_cast<double>(horizon - 1) : 0.5) * (kW - kLeft - kRight);
  };
  auto py = [&](double v) { return kTop + (hi - v) / (hi - lo) * (kH - kTop - kBottom); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
      << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!labels.title.empty())
    svg << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(labels.title)
        << "</text>\n";
  // Axes, grid and ticks.
  svg << "<g stroke=\"#999\" stroke-width=\"1\">\n";
  for (double v : nice_ticks(lo, hi)) {
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << py(v) << "\" x2=\"" << kW - kRight << "\" y2=\"" << py(v)
        << "\" stroke=\"#eee\"/>\n";
  }
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kH - kBottom << "\" x2=\"" << kW - kRight << "\" y2=\""
      << kH - kBottom << "\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kH - kBottom
      << "\"/>\n</g>\n";
  for (double v : nice_ticks(lo, hi))
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << short_num(v)
        << "</text>\n";
  for (double v : nice_ticks(1, static_cast<double>(horizon)))
    svg << "<text x=\"" << px(v) << "\" y=\"" << kH - kBottom + 18 << "\" text-anchor=\"middle\">" << short_num(v)
        << "</text>\n";
  svg << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 15 << "\" text-anchor=\"middle\">"
      << escape(labels.x_label) << "</text>\n";
  svg << "<text transform=\"translate(18," << (kTop + kH - kBottom) / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(labels.y_label) << "</text>\n";

  for (std::size_t k = 0; k < summaries.size(); ++k) {
    const auto& s = summaries[k];
    if (s.mean.empty()) continue;
    const char* color = kPalette[k % std::size(kPalette)];
    const std::size_t stride = std::max<std::size_t>(1, s.mean.size() / kMaxPoints);
    std::vector<std::size_t> idx;
    for (std::size_t t = 0; t < s.mean.size(); t += stride) idx.push_back(t);
    if (idx.back() != s.mean.size() - 1) idx.push_back(s.mean.size() - 1);
    std::ostringstream band, line;
    for (std::size_t t : idx) band << px(static_cast<double>(t + 1)) << ',' << py(s.mean[t] + s.std[t]) << ' ';
    for (auto it = idx.rbegin(); it != idx.rend(); ++it)
      band << px(static_cast<double>(*it + 1)) << ',' << py(s.mean[*it] - s.std[*it]) << ' ';
    for (std::size_t t : idx) line << px(static_cast<double>(t + 1)) << ',' << py(s.mean[t]) << ' ';
    svg << "<polygon points=\"" << band.str() << "\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    svg << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
  }
  // Legend.
  const double lx = kLeft + 12, ly = kTop + 10;
  svg << "<rect x=\"" << lx - 6 << "\" y=\"" << ly - 6 << "\" width=\"170\" height=\""
      << 18 * static_cast<double>(summaries.size()) + 6
      << "\" fill=\"white\" fill-opacity=\"0.8\" stroke=\"#ccc\"/>\n";
  for (std::size_t k = 0; k < summaries.size(); ++k) {
    const double y = ly + 18 * static_cast<double>(k);
    const char* color = kPalette[k % std::size(kPalette)];
    svg << "<rect x=\"" << lx << "\" y=\"" << y << "\" width=\"14\" height=\"8\" fill=\"" << color << "\"/>\n";
    const std::string name = summaries[k].label.empty() ? "series " + std::to_string(k + 1) : summaries[k].label;
    svg << "<text x=\"" << lx + 20 << "\" y=\"" << y + 8 << "\">" << escape(name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_plot(std::span<const Summary> summaries, const std::string& path, const PlotLabels& labels) {
  const std::string svg = render_plot(summaries, labels);
  auto out = open_out(path);
  out << svg;
  finish(out, path);
}

}  // namespace pgcr
