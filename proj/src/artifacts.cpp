#include "lassl/artifacts.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace lassl {

void atomic_write(const std::string& path, const std::string& content) {
  const fs::path target(path);
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw FormatError("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string runlog_csv(const RunLog& log) {
  std::ostringstream out;
  log.write_csv(out);
  return out.str();
}

namespace {

json subgroup_to_json(const SubgroupMetrics& m) {
  json j;
  j["name"] = m.name;
  j["count"] = m.count;
  j["prevalence"] = m.prevalence;
  j["accuracy"] = m.accuracy;
  j["auroc"] = m.auroc ? json(*m.auroc) : json();
  j["precision"] = m.precision ? json(*m.precision) : json();
  j["recall"] = m.recall ? json(*m.recall) : json();
  return j;
}

std::string opt_str(const std::optional<double>& v) {
  if (!v) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", *v);
  return buf;
}

}  // namespace

std::string subgroup_report_csv(const SubgroupReport& report) {
  std::ostringstream out;
  out << "subgroup,count,prevalence,accuracy,auroc,precision,recall\n";
  for (const auto& m : report.subgroups) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), ",%lld,%.10g,%.10g,", static_cast<long long>(m.count),
                  m.prevalence, m.accuracy);
    out << m.name << buf << opt_str(m.auroc) << ',' << opt_str(m.precision) << ','
        << opt_str(m.recall) << '\n';
  }
  return out.str();
}

std::string subgroup_report_json(const SubgroupReport& report) {
  json j;
  j["subgroups"] = json::array();
  for (const auto& m : report.subgroups) j["subgroups"].push_back(subgroup_to_json(m));
  return j.dump(2) + "\n";
}

std::string spectrum_csv(const SpectrumReport& report) {
  std::ostringstream out;
  out << "index,normalized_singular_value\n";
  for (std::size_t i = 0; i < report.normalized.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", i + 1, report.normalized[i]);
    out << buf;
  }
  return out.str();
}

std::string spectrum_json(const SpectrumReport& report) {
  json j;
  j["sigma1"] = report.sigma1;
  j["normalized"] = report.normalized;
  j["tail_mass"] = report.tail_mass;
  return j.dump(2) + "\n";
}

std::string svg_line_chart(const std::vector<SvgSeries>& series, const std::string& title) {
  constexpr double kW = 640, kH = 400, kPad = 50;
  double y_min = 0.0, y_max = 1.0;
  std::size_t n = 2;
  for (const auto& s : series) {
    for (double v : s.y) {
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
    n = std::max(n, s.y.size());
  }
  if (y_max == y_min) y_max = y_min + 1.0;
  const auto x_of = [&](std::size_t i) {
    return kPad + (kW - 2 * kPad) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  const auto y_of = [&](double v) { return kH - kPad - (kH - 2 * kPad) * (v - y_min) / (y_max - y_min); };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"};
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\">\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
  out << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad << "\" y2=\""
      << kH - kPad << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad << "\" y2=\""
      << kH - kPad << "\" stroke=\"black\"/>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill=\"none\" stroke=\"" << kColors[s % 5] << "\" points=\"";
    for (std::size_t i = 0; i < series[s].y.size(); ++i) {
      out << x_of(i) << ',' << y_of(series[s].y[i]) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << kW - kPad + 4 << "\" y=\"" << kPad + 16 * static_cast<double>(s)
        << "\" font-size=\"12\" fill=\"" << kColors[s % 5] << "\">" << series[s].label
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string run_summary_json(const Trainer& trainer, const ExperimentConfig& config,
                             double wall_seconds) {
  const auto& log = trainer.log().records;
  json j;
  j["seed"] = trainer.config().seed;
  j["mode"] = to_string(trainer.config().mode);
  j["epochs"] = trainer.completed_epochs();
  if (!log.empty()) {
    const auto& last = log.back();
    j["final_loss"] = last.loss;
    j["final_sim_aligned_mean"] = last.sim_aligned_mean;
    j["final_sim_conflicting_mean"] = last.sim_conflicting_mean;
    j["final_sim_gap"] = last.sim_aligned_mean - last.sim_conflicting_mean;
    j["final_pi_entropy"] = last.pi_entropy;
  }
  j["wall_seconds"] = wall_seconds;
  j["config"] = json::object();
  for (const auto& [k, v] : config.values()) j["config"][k] = v;
  return j.dump(2) + "\n";
}

std::string sampler_state_csv(const SamplingState& state, const SpeedTracker& tracker) {
  std::ostringstream out;
  out << "index,pi,s_ema\n";
  for (std::size_t i = 0; i < state.pi.size(); ++i) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g\n", i, state.pi[i],
                  tracker.values()[i]);
    out << buf;
  }
  return out.str();
}

namespace {

std::map<std::uint64_t, fs::path> find_seed_files(const std::string& dir, const std::string& stem) {
  const std::regex pattern(stem + R"(_seed(\d+)\.json)");
  std::map<std::uint64_t, fs::path> out;
  if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) out[std::stoull(m[1])] = entry.path();
  }
  return out;
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

std::string compare_run_dirs(const std::string& dir_a, const std::string& dir_b) {
  const auto summaries_a = find_seed_files(dir_a, "summary");
  const auto summaries_b = find_seed_files(dir_b, "summary");
  if (summaries_a.empty()) throw ConfigError("no summary files in " + dir_a);
  {
    std::vector<std::uint64_t> sa, sb;
    for (const auto& [s, p] : summaries_a) sa.push_back(s);
    for (const auto& [s, p] : summaries_b) sb.push_back(s);
    if (sa != sb) throw ConfigError("seed-list mismatch between " + dir_a + " and " + dir_b);
  }
  const auto probes_a = find_seed_files(dir_a, "probe");
  const auto probes_b = find_seed_files(dir_b, "probe");
  const auto spectra_a = find_seed_files(dir_a, "spectrum");
  const auto spectra_b = find_seed_files(dir_b, "spectrum");

  json out;
  out["dir_a"] = dir_a;
  out["dir_b"] = dir_b;
  out["per_seed"] = json::array();
  std::vector<double> gap_deltas, tail_deltas;
  std::map<std::string, std::vector<double>> acc_deltas;

  for (const auto& [seed, path_a] : summaries_a) {
    const json sum_a = load_json(path_a);
    const json sum_b = load_json(summaries_b.at(seed));
    json row;
    row["seed"] = seed;
    const double gap_delta =
        sum_a.value("final_sim_gap", 0.0) - sum_b.value("final_sim_gap", 0.0);
    row["sim_gap_delta"] = gap_delta;
    gap_deltas.push_back(gap_delta);

    if (probes_a.count(seed) && probes_b.count(seed)) {
      const json pa = load_json(probes_a.at(seed));
      const json pb = load_json(probes_b.at(seed));
      json deltas = json::object();
      for (const auto& ga : pa["subgroups"]) {
        for (const auto& gb : pb["subgroups"]) {
          if (ga["name"] == gb["name"]) {
            const double d = ga["accuracy"].get<double>() - gb["accuracy"].get<double>();
            const std::string name = ga["name"].get<std::string>();
            deltas[name] = d;
            acc_deltas[name].push_back(d);
          }
        }
      }
      row["accuracy_delta"] = deltas;
    }
    if (spectra_a.count(seed) && spectra_b.count(seed)) {
      const json sa = load_json(spectra_a.at(seed));
      const json sb = load_json(spectra_b.at(seed));
      const double d = sa["tail_mass"].get<double>() - sb["tail_mass"].get<double>();
      row["tail_mass_delta"] = d;
      tail_deltas.push_back(d);
    }
    out["per_seed"].push_back(row);
  }

  json means;
  means["sim_gap_delta"] = mean(gap_deltas);
  if (!tail_deltas.empty()) means["tail_mass_delta"] = mean(tail_deltas);
  if (!acc_deltas.empty()) {
    json acc = json::object();
    for (const auto& [name, deltas] : acc_deltas) acc[name] = mean(deltas);
    means["accuracy_delta"] = acc;
  }
  out["mean"] = means;
  return out.dump(2) + "\n";
}

}  // namespace lassl
