#pragma once

#include <string>
#include <vector>

#include "lassl/config.hpp"
#include "lassl/eval.hpp"
#include "lassl/trainer.hpp"

namespace lassl {

// Writes via a sibling temp file and rename, so readers never see partial
// output.
void atomic_write(const std::string& path, const std::string& content);

std::string runlog_csv(const RunLog& log);
std::string subgroup_report_csv(const SubgroupReport& report);
std::string subgroup_report_json(const SubgroupReport& report);
std::string spectrum_csv(const SpectrumReport& report);
std::string spectrum_json(const SpectrumReport& report);

// Minimal standalone SVG line chart, one polyline per series.
struct SvgSeries {
  std::string label;
  std::vector<double> y;  // x is the index
};
std::string svg_line_chart(const std::vector<SvgSeries>& series, const std::string& title);

// Per-run summary consumed by `compare`.
std::string run_summary_json(const Trainer& trainer, const ExperimentConfig& config,
                             double wall_seconds);

// index,pi,s_ema dump for sampling diagnostics.
std::string sampler_state_csv(const SamplingState& state, const SpeedTracker& tracker);

// Pairs seed-matched artifacts from two run directories; throws ConfigError
// on a seed-list mismatch.
std::string compare_run_dirs(const std::string& dir_a, const std::string& dir_b);

}  // namespace lassl
