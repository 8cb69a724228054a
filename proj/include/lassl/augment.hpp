#pragma once

#include <cstdint>
#include <utility>

#include "lassl/matrix.hpp"

namespace lassl {

// Vector-data view augmentation: scale * (x + jitter) with a fixed fraction of
// coordinates zeroed. Seeds derive from (global_seed, epoch, example, view),
// so each example's augmentation stream is independent of how often it is
// sampled.
struct AugmentPolicy {
  double jitter_sigma = 0.5;
  double mask_fraction = 0.2;
  double scale_low = 0.8;
  double scale_high = 1.25;
  std::uint64_t global_seed = 0;

  void validate() const {
    if (scale_low <= 0.0 || scale_high <= 0.0 || scale_low > scale_high) {
      throw ConfigError("augment: scale_range must satisfy 0 < low <= high");
    }
    if (mask_fraction < 0.0 || mask_fraction >= 1.0) {
      throw ConfigError("augment: mask_fraction must lie in [0, 1)");
    }
    if (jitter_sigma < 0.0) throw ConfigError("augment: jitter_sigma must be >= 0");
  }

  bool is_identity() const {
    return jitter_sigma == 0.0 && mask_fraction == 0.0 && scale_low == 1.0 && scale_high == 1.0;
  }
};

// splitmix64-based counter hash used for all derived seeds.
std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t epoch, std::uint64_t index,
                          std::uint64_t slot);

Vector augment_view(const Vector& x, const AugmentPolicy& policy, int epoch, std::int64_t index,
                    int view_slot);

std::pair<Vector, Vector> two_views(const Vector& x, const AugmentPolicy& policy, int epoch,
                                    std::int64_t index);

}  // namespace lassl
