#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lassl/matrix.hpp"

namespace lassl {

struct AttributeSpec {
  std::string name;
  int cardinality = 2;
};

struct ConfoundSpec {
  AttributeSpec attr;
  double aligned_ratio = 0.95;  // k: per-class fraction whose value matches the target
  double signal_scale = 2.0;
};

struct GeneratorConfig {
  std::int64_t n = 10000;
  int input_dim = 64;  // m
  AttributeSpec target{"target", 10};
  std::vector<ConfoundSpec> confounds;
  double target_signal_scale = 1.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;
  // Assignment/noise stream; 0 derives seed + 1. A held-out split from the
  // same task keeps `seed` (hence the prototypes) and changes only this.
  std::uint64_t assignment_seed = 0;

  void validate() const;
};

// Columnar dataset: features are float32-quantized at generation time so the
// in-memory values and the on-disk format agree exactly.
struct Dataset {
  Matrix features;                                   // n x m
  std::vector<std::uint16_t> target;                 // n
  std::vector<std::vector<std::uint16_t>> confounds;  // [confound][example]
  GeneratorConfig config;

  std::int64_t size() const { return static_cast<std::int64_t>(target.size()); }
  bool aligned(std::int64_t i, std::size_t confound_index) const;
};

Dataset generate(const GeneratorConfig& config);

// (aligned indices, conflicting indices) with respect to one confound.
std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> partition_by_alignment(
    const Dataset& ds, std::size_t confound_index);

// "LASD" binary format; round trips are bit-exact including config and seed.
void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

// The orthonormal prototype directions implied by a config: column block 0 is
// the target's K prototypes, block j+1 is confound j's. Exposed for tests.
Matrix prototype_directions(const GeneratorConfig& config);

}  // namespace lassl
