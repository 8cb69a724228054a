#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lassl/artifacts.hpp"
#include "lassl/config.hpp"
#include "lassl/eval.hpp"
#include "lassl/synthdata.hpp"
#include "lassl/trainer.hpp"

namespace fs = std::filesystem;
using namespace lassl;

namespace {

// LASSL_OUT_DIR overrides any --out-dir argument.
std::string resolve_out_dir(const std::string& flag_value) {
  if (const char* env = std::getenv("LASSL_OUT_DIR")) return env;
  return flag_value;
}

ExperimentConfig load_config(const std::string& path, const std::string& recipe) {
  ExperimentConfig cfg;
  if (!recipe.empty()) cfg.apply_recipe(recipe);
  if (!path.empty()) cfg.load_file(path);
  return cfg;
}

void write_checkpoint_atomic(const Trainer& trainer, const fs::path& path) {
  const fs::path tmp = path.parent_path() / (path.filename().string() + ".tmp");
  trainer.checkpoint(tmp.string());
  fs::rename(tmp, path);
}

SubgroupReport eval_subgroups(const Matrix& scores, const Dataset& eval_ds) {
  // one "overall" row plus aligned/conflicting rows per confound
  std::vector<std::uint8_t> assignment(static_cast<std::size_t>(eval_ds.size()), 0);
  std::vector<std::string> names{"overall"};
  SubgroupReport report = subgroup_metrics(scores, eval_ds.target, assignment, names);
  for (std::size_t j = 0; j < eval_ds.confounds.size(); ++j) {
    for (std::int64_t i = 0; i < eval_ds.size(); ++i) {
      assignment[static_cast<std::size_t>(i)] = eval_ds.aligned(i, j) ? 0 : 1;
    }
    const std::string prefix =
        eval_ds.confounds.size() == 1 ? "" : "confound" + std::to_string(j + 1) + "_";
    SubgroupReport part =
        subgroup_metrics(scores, eval_ds.target, assignment, {prefix + "aligned", prefix + "conflicting"});
    for (auto& g : part.subgroups) report.subgroups.push_back(std::move(g));
  }
  return report;
}

int run_gen_data(const ExperimentConfig& cfg, const std::string& out_path, bool test_split) {
  const Dataset ds = generate(cfg.generator_config(test_split));
  const fs::path target(out_path);
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  write_dataset(ds, tmp.string());
  fs::rename(tmp, target);
  std::cout << "wrote " << out_path << " (n=" << ds.size() << ", m=" << ds.config.input_dim
            << ")\n";
  return 0;
}

int run_pretrain(const ExperimentConfig& cfg, const std::string& data_path,
                 const std::string& out_dir, bool dump_sampler) {
  const Dataset ds = read_dataset(data_path);
  fs::create_directories(out_dir);
  for (const std::uint64_t seed : cfg.seeds()) {
    const auto t0 = std::chrono::steady_clock::now();
    Trainer trainer = pretrain(ds, cfg.train_config(seed));
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string tag = "_seed" + std::to_string(seed);
    write_checkpoint_atomic(trainer, fs::path(out_dir) / ("checkpoint" + tag + ".bin"));
    atomic_write((fs::path(out_dir) / ("runlog" + tag + ".csv")).string(),
                 runlog_csv(trainer.log()));
    atomic_write((fs::path(out_dir) / ("summary" + tag + ".json")).string(),
                 run_summary_json(trainer, cfg, wall));
    if (dump_sampler) {
      atomic_write((fs::path(out_dir) / ("sampler" + tag + ".csv")).string(),
                   sampler_state_csv(trainer.sampling_state(), trainer.tracker()));
    }
    std::cout << "seed " << seed << ": " << trainer.completed_epochs() << " epochs in " << wall
              << "s, final loss " << trainer.log().records.back().loss << "\n";
  }
  return 0;
}

int run_probe(const ExperimentConfig& cfg, const std::string& checkpoint_path,
              const std::string& data_path, const std::string& eval_data_path,
              const std::string& out_dir) {
  const auto [train_cfg, stack] = load_checkpoint_params(checkpoint_path);
  const Dataset train_ds = read_dataset(data_path);
  const Dataset eval_ds = eval_data_path.empty() ? train_ds : read_dataset(eval_data_path);
  fs::create_directories(out_dir);

  const Matrix phi_train = extract_representations(stack, train_ds);
  const ProbeParams params =
      probe(phi_train, train_ds.target, train_ds.config.target.cardinality, cfg.probe_config());
  const Matrix scores = probe_scores(params, extract_representations(stack, eval_ds));
  const SubgroupReport report = eval_subgroups(scores, eval_ds);

  const std::string tag = "_seed" + std::to_string(train_cfg.seed);
  atomic_write((fs::path(out_dir) / ("probe" + tag + ".csv")).string(),
               subgroup_report_csv(report));
  atomic_write((fs::path(out_dir) / ("probe" + tag + ".json")).string(),
               subgroup_report_json(report));
  std::cout << "probe" << tag << (params.converged ? " converged" : " hit max iters") << " after "
            << params.iters_run << " iters, train loss " << params.final_loss << "\n";
  return 0;
}

int run_spectra(const std::string& checkpoint_path, const std::string& data_path,
                const std::string& out_dir, bool svg) {
  const auto [train_cfg, stack] = load_checkpoint_params(checkpoint_path);
  const Dataset ds = read_dataset(data_path);
  fs::create_directories(out_dir);
  const SpectrumReport report = spectrum(extract_representations(stack, ds));
  const std::string tag = "_seed" + std::to_string(train_cfg.seed);
  atomic_write((fs::path(out_dir) / ("spectrum" + tag + ".csv")).string(), spectrum_csv(report));
  atomic_write((fs::path(out_dir) / ("spectrum" + tag + ".json")).string(), spectrum_json(report));
  if (svg) {
    atomic_write((fs::path(out_dir) / ("spectrum" + tag + ".svg")).string(),
                 svg_line_chart({{"normalized singular values", report.normalized}},
                                "Representation spectrum"));
  }
  std::cout << "spectrum" << tag << ": tail mass " << report.tail_mass << "\n";
  return 0;
}

int run_compare(const std::string& dir_a, const std::string& dir_b, const std::string& out_dir) {
  fs::create_directories(out_dir);
  atomic_write((fs::path(out_dir) / "compare.json").string(), compare_run_dirs(dir_a, dir_b));
  std::cout << "wrote " << (fs::path(out_dir) / "compare.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LA-SSL: learning-speed aware self-supervised pretraining"};
  app.require_subcommand(1);

  std::string config_path, recipe, out_path, out_dir, data_path, eval_data_path, checkpoint_path;
  std::string dir_a, dir_b;
  bool test_split = false, dump_sampler = false, svg = false;
  int threads = 0;
  std::string seeds_override;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset file");
  gen->add_option("--config", config_path, "experiment config file");
  gen->add_option("--recipe", recipe, "hyperparameter bundle: cifar-like | celeba-like");
  gen->add_option("--out", out_path, "output dataset path")->required();
  gen->add_flag("--test", test_split, "emit the balanced correlation-free test split");

  auto* pre = app.add_subcommand("pretrain", "run SSL pretraining");
  pre->add_option("--config", config_path, "experiment config file");
  pre->add_option("--recipe", recipe, "hyperparameter bundle: cifar-like | celeba-like");
  pre->add_option("--data", data_path, "dataset file")->required();
  pre->add_option("--out-dir", out_dir, "run output directory")->required();
  pre->add_option("--seeds", seeds_override, "comma-separated seed list override");
  pre->add_option("--threads", threads, "similarity-sweep threads (reproducible only at 1)");
  pre->add_flag("--dump-sampler", dump_sampler, "dump per-example pi and s_ema to CSV");

  auto* prb = app.add_subcommand("probe", "linear probing with subgroup metrics");
  prb->add_option("--config", config_path, "experiment config file");
  prb->add_option("--recipe", recipe, "hyperparameter bundle");
  prb->add_option("--checkpoint", checkpoint_path, "pretraining checkpoint")->required();
  prb->add_option("--data", data_path, "probe training dataset")->required();
  prb->add_option("--eval-data", eval_data_path, "evaluation dataset (defaults to --data)");
  prb->add_option("--out-dir", out_dir, "output directory")->required();

  auto* spc = app.add_subcommand("spectra", "singular spectrum of frozen representations");
  spc->add_option("--checkpoint", checkpoint_path, "pretraining checkpoint")->required();
  spc->add_option("--data", data_path, "dataset file")->required();
  spc->add_option("--out-dir", out_dir, "output directory")->required();
  spc->add_flag("--svg", svg, "also render an SVG line chart");

  auto* cmp = app.add_subcommand("compare", "paired comparison of two run directories");
  cmp->add_option("--run-a", dir_a, "first run directory")->required();
  cmp->add_option("--run-b", dir_b, "second run directory")->required();
  cmp->add_option("--out-dir", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = load_config(config_path, recipe);
    if (!seeds_override.empty()) cfg.set("seeds", seeds_override);
    if (threads > 0) cfg.set("train.threads", std::to_string(threads));
    out_dir = resolve_out_dir(out_dir);

    if (gen->parsed()) return run_gen_data(cfg, out_path, test_split);
    if (pre->parsed()) return run_pretrain(cfg, data_path, out_dir, dump_sampler);
    if (prb->parsed()) return run_probe(cfg, checkpoint_path, data_path, eval_data_path, out_dir);
    if (spc->parsed()) return run_spectra(checkpoint_path, data_path, out_dir, svg);
    if (cmp->parsed()) return run_compare(dir_a, dir_b, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
