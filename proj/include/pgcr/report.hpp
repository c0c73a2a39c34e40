#pragma once

#include <span>
#include <string>

#include "pgcr/harness.hpp"

namespace pgcr {

// Header "step,mean,std"; steps are 1-based. Throws IoError naming the path.
void write_csv(const Summary& summary, const std::string& path);
// Header "step,reward,best,chosen,regret,cumulative_regret".
void write_trace_csv(const RunTrace& trace, const std::string& path);
Summary read_csv(const std::string& path);

struct PlotLabels {
  std::string title;
  std::string x_label = "step";
  std::string y_label;
};

// Self-contained SVG: one line per summary with a translucent +-1 std band,
// axes and a legend. Throws std::invalid_argument("nothing to plot") when
// `summaries` is empty, IoError when the file cannot be written.
void emit_plot(std::span<const Summary> summaries, const std::string& path, const PlotLabels& labels = {});
std::string render_plot(std::span<const Summary> summaries, const PlotLabels& labels = {});

}  // namespace pgcr
