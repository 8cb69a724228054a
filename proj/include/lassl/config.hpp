#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lassl/eval.hpp"
#include "lassl/synthdata.hpp"
#include "lassl/trainer.hpp"

namespace lassl {

// Flat `key = value` experiment configuration with `#` comments. Unknown keys
// are rejected by name; every key has a default, so a minimal file is valid.
class ExperimentConfig {
 public:
  ExperimentConfig();

  // "cifar-like" or "celeba-like" hyperparameter bundles.
  void apply_recipe(const std::string& recipe);
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);

  GeneratorConfig generator_config(bool balanced_test_split = false) const;
  TrainConfig train_config(std::uint64_t seed) const;
  ProbeConfig probe_config() const;
  std::vector<std::uint64_t> seeds() const;

  const std::map<std::string, std::string>& values() const { return values_; }

  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::string get_string(const std::string& key) const;

 private:
  void check_key(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

}  // namespace lassl
