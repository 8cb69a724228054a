#include "lassl/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace lassl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t epoch, std::uint64_t index,
                          std::uint64_t slot) {
  std::uint64_t h = splitmix64(global_seed);
  h = splitmix64(h ^ epoch);
  h = splitmix64(h ^ index);
  h = splitmix64(h ^ slot);
  return h;
}

Vector augment_view(const Vector& x, const AugmentPolicy& policy, int epoch, std::int64_t index,
                    int view_slot) {
  policy.validate();
  if (!x.allFinite()) throw NumericError("augment: non-finite input");
  if (policy.is_identity()) return x;

  std::mt19937_64 rng(derive_seed(policy.global_seed, static_cast<std::uint64_t>(epoch),
                                  static_cast<std::uint64_t>(index),
                                  static_cast<std::uint64_t>(view_slot)));
  std::uniform_real_distribution<double> scale_dist(policy.scale_low, policy.scale_high);
  const double scale = scale_dist(rng);

  Vector v = x;
  if (policy.jitter_sigma > 0.0) {
    std::normal_distribution<double> jitter(0.0, policy.jitter_sigma);
    for (Eigen::Index d = 0; d < v.size(); ++d) v[d] += jitter(rng);
  }
  v *= scale;

  const auto m = v.size();
  const auto n_mask = static_cast<Eigen::Index>(std::floor(policy.mask_fraction * static_cast<double>(m)));
  if (n_mask > 0) {
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(m));
    std::iota(coords.begin(), coords.end(), 0);
    // partial Fisher-Yates: the first n_mask entries are the masked coordinates
    for (Eigen::Index i = 0; i < n_mask; ++i) {
      std::uniform_int_distribution<Eigen::Index> pick(i, m - 1);
      std::swap(coords[static_cast<std::size_t>(i)], coords[static_cast<std::size_t>(pick(rng))]);
      v[coords[static_cast<std::size_t>(i)]] = 0.0;
    }
  }
  return v;
}

std::pair<Vector, Vector> two_views(const Vector& x, const AugmentPolicy& policy, int epoch,
                                    std::int64_t index) {
  return {augment_view(x, policy, epoch, index, 0), augment_view(x, policy, epoch, index, 1)};
}

}  // namespace lassl
