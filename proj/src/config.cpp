#include "lassl/config.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

namespace lassl {

namespace {

const std::map<std::string, std::string> kDefaults = {
    // generator
    {"data.n", "10000"},
    {"data.test_n", "5000"},
    {"data.input_dim", "64"},
    {"data.cardinality", "10"},
    {"data.target_signal_scale", "1.0"},
    {"data.noise_sigma", "1.0"},
    {"data.num_confounds", "1"},
    {"data.confound1.k", "0.95"},
    {"data.confound1.scale", "2.0"},
    {"data.confound2.k", "0.95"},
    {"data.confound2.scale", "2.0"},
    {"data.confound3.k", "0.95"},
    {"data.confound3.scale", "2.0"},
    // augmentation
    {"augment.jitter_sigma", "0.5"},
    {"augment.mask_fraction", "0.2"},
    {"augment.scale_low", "0.8"},
    {"augment.scale_high", "1.25"},
    // contrastive loss
    {"ssl.temperature", "0.5"},
    {"ssl.batch_size", "128"},
    {"ssl.representation_dim", "32"},
    {"ssl.projection_dim", "16"},
    {"ssl.symmetrize", "false"},
    // learning-speed sampler
    {"sampler.gamma", "10"},
    {"sampler.r", "0.01"},
    {"sampler.epsilon", "0"},
    {"sampler.eta", "0.1"},
    {"sampler.warmup_epochs", "50"},
    {"sampler.update_every", "20"},
    // training loop
    {"train.epochs", "300"},
    {"train.batches_per_epoch", "0"},
    {"train.lr_max", "0.5"},
    {"train.weight_decay", "1e-4"},
    {"train.lr_warmup_epochs", "10"},
    {"train.mode", "uniform"},
    {"train.encoder_hidden", "64"},
    {"train.threads", "1"},
    // linear probe
    {"probe.max_iters", "10000"},
    {"probe.tolerance", "1e-6"},
    // seeds
    {"seed", "0"},
    {"seeds", ""},
};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

ExperimentConfig::ExperimentConfig() : values_(kDefaults) {}

void ExperimentConfig::check_key(const std::string& key) const {
  if (kDefaults.find(key) == kDefaults.end()) {
    throw ConfigError("unknown config key: '" + key + "'");
  }
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  check_key(key);
  values_[key] = value;
}

void ExperimentConfig::apply_recipe(const std::string& recipe) {
  if (recipe == "cifar-like") {
    values_["sampler.gamma"] = "10";
    values_["sampler.r"] = "0.01";
    values_["sampler.update_every"] = "20";
    values_["sampler.warmup_epochs"] = "50";
  } else if (recipe == "celeba-like") {
    values_["sampler.gamma"] = "10";
    values_["sampler.r"] = "0.1";
    values_["sampler.update_every"] = "2";
    values_["sampler.warmup_epochs"] = "10";
  } else {
    throw ConfigError("unknown recipe: '" + recipe + "' (expected cifar-like or celeba-like)");
  }
}

void ExperimentConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

double ExperimentConfig::get_double(const std::string& key) const {
  check_key(key);
  const std::string& v = values_.at(key);
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as number");
  }
}

std::int64_t ExperimentConfig::get_int(const std::string& key) const {
  check_key(key);
  const std::string& v = values_.at(key);
  try {
    std::size_t pos = 0;
    const std::int64_t i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as integer");
  }
}

bool ExperimentConfig::get_bool(const std::string& key) const {
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as boolean");
}

std::string ExperimentConfig::get_string(const std::string& key) const {
  check_key(key);
  return values_.at(key);
}

GeneratorConfig ExperimentConfig::generator_config(bool balanced_test_split) const {
  GeneratorConfig g;
  g.n = balanced_test_split ? get_int("data.test_n") : get_int("data.n");
  g.input_dim = static_cast<int>(get_int("data.input_dim"));
  g.target = {"target", static_cast<int>(get_int("data.cardinality"))};
  g.target_signal_scale = get_double("data.target_signal_scale");
  g.noise_sigma = get_double("data.noise_sigma");
  g.seed = static_cast<std::uint64_t>(get_int("seed"));
  const auto num = get_int("data.num_confounds");
  if (num < 0 || num > 3) throw ConfigError("data.num_confounds must lie in [0, 3]");
  for (std::int64_t j = 1; j <= num; ++j) {
    ConfoundSpec cf;
    cf.attr = {"confound" + std::to_string(j), g.target.cardinality};
    cf.aligned_ratio = get_double("data.confound" + std::to_string(j) + ".k");
    cf.signal_scale = get_double("data.confound" + std::to_string(j) + ".scale");
    g.confounds.push_back(std::move(cf));
  }
  if (balanced_test_split) {
    // correlation-free split over the same prototypes: aligned fraction at
    // chance level, fresh assignment/noise stream
    for (auto& cf : g.confounds) cf.aligned_ratio = 1.0 / g.target.cardinality;
    g.assignment_seed = g.seed + 1000003;
  }
  g.validate();
  return g;
}

TrainConfig ExperimentConfig::train_config(std::uint64_t seed) const {
  TrainConfig t;
  t.epochs = static_cast<int>(get_int("train.epochs"));
  t.batches_per_epoch = static_cast<int>(get_int("train.batches_per_epoch"));
  t.lr_max = get_double("train.lr_max");
  t.weight_decay = get_double("train.weight_decay");
  t.lr_warmup_epochs = static_cast<int>(get_int("train.lr_warmup_epochs"));
  t.ssl.temperature = get_double("ssl.temperature");
  t.ssl.batch_size = static_cast<int>(get_int("ssl.batch_size"));
  t.ssl.representation_dim = static_cast<int>(get_int("ssl.representation_dim"));
  t.ssl.projection_dim = static_cast<int>(get_int("ssl.projection_dim"));
  t.ssl.symmetrize = get_bool("ssl.symmetrize");
  t.augment.jitter_sigma = get_double("augment.jitter_sigma");
  t.augment.mask_fraction = get_double("augment.mask_fraction");
  t.augment.scale_low = get_double("augment.scale_low");
  t.augment.scale_high = get_double("augment.scale_high");
  t.augment.global_seed = seed;
  t.scaling.gamma = get_double("sampler.gamma");
  t.scaling.percentile_r = get_double("sampler.r");
  t.scaling.floor_epsilon = get_double("sampler.epsilon");
  t.schedule.warmup_epochs = static_cast<int>(get_int("sampler.warmup_epochs"));
  t.schedule.update_every = static_cast<int>(get_int("sampler.update_every"));
  t.ema_eta = get_double("sampler.eta");
  t.mode = sampler_mode_from_string(get_string("train.mode"));
  t.threads = static_cast<int>(get_int("train.threads"));
  t.seed = seed;

  t.encoder_hidden.clear();
  std::stringstream widths(get_string("train.encoder_hidden"));
  std::string tok;
  while (std::getline(widths, tok, ',')) {
    tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
    if (!tok.empty()) t.encoder_hidden.push_back(std::stoi(tok));
  }
  t.validate();
  return t;
}

ProbeConfig ExperimentConfig::probe_config() const {
  ProbeConfig p;
  p.max_iters = static_cast<int>(get_int("probe.max_iters"));
  p.grad_tolerance = get_double("probe.tolerance");
  return p;
}

std::vector<std::uint64_t> ExperimentConfig::seeds() const {
  const std::string list = get_string("seeds");
  if (list.empty()) return {static_cast<std::uint64_t>(get_int("seed"))};
  std::vector<std::uint64_t> out;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
    if (!tok.empty()) out.push_back(std::stoull(tok));
  }
  if (out.empty()) throw ConfigError("seeds: empty list");
  return out;
}

}  // namespace lassl
