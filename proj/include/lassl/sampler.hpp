#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lassl/matrix.hpp"

namespace lassl {

// Per-example EMA of two-view cosine similarity. The first observation
// initializes the EMA directly.
class SpeedTracker {
 public:
  SpeedTracker() = default;
  SpeedTracker(std::int64_t n, double eta);

  void record(std::int64_t i, double s_raw);
  bool all_seen() const;
  double value(std::int64_t i) const;
  const std::vector<double>& values() const { return s_ema_; }
  const std::vector<std::uint8_t>& seen() const { return seen_; }
  std::int64_t size() const { return static_cast<std::int64_t>(s_ema_.size()); }
  double eta() const { return eta_; }

  // checkpoint support
  void restore(std::vector<double> s_ema, std::vector<std::uint8_t> seen, double eta);

 private:
  std::vector<double> s_ema_;
  std::vector<std::uint8_t> seen_;
  double eta_ = 0.1;
};

struct ScalingParams {
  double gamma = 10.0;        // margin multiplier
  double percentile_r = 0.01;  // threshold percentile for s*
  double floor_epsilon = 0.0;  // uniform mixing floor

  void validate() const {
    if (gamma < 0.0) throw ConfigError("sampler: gamma must be >= 0");
    if (percentile_r <= 0.0 || percentile_r >= 1.0)
      throw ConfigError("sampler: percentile_r must lie in (0, 1)");
    if (floor_epsilon < 0.0 || floor_epsilon >= 1.0)
      throw ConfigError("sampler: floor_epsilon must lie in [0, 1)");
  }
};

// Lower nearest-rank percentile: sorted ascending, index ceil(r * len) - 1.
double percentile(std::vector<double> values, double r);

// h(s_i) = max(s* - gamma * (s_i - s*), 0)
double scale_weight(double s_i, double s_star, double gamma);

struct SamplingSchedule {
  int warmup_epochs = 50;  // T_warmup
  int update_every = 20;
};

// Categorical sampling state over the n training examples.
struct SamplingState {
  std::vector<double> pi;
  SamplingSchedule schedule;
  int last_update_epoch = 0;

  static SamplingState uniform(std::int64_t n, SamplingSchedule schedule);
  void validate() const;  // nonnegative, sums to 1 within 1e-9
};

// Algorithm: skip during warmup and off-schedule epochs; otherwise
// s* = percentile(s_ema, r), w_i = h(s_ema_i), pi_i = (1-eps) w_i/sum(w) + eps/n.
// All-zero weights fall back to uniform. Requires a full similarity sweep.
void update_probabilities(SamplingState& state, const SpeedTracker& tracker,
                          const ScalingParams& params, int epoch);

// b i.i.d. draws (with replacement) by inverse CDF on the cumulative weights.
std::vector<std::int64_t> sample_batch(const SamplingState& state, int b, std::mt19937_64& rng);

double pi_entropy(const std::vector<double>& pi);

}  // namespace lassl
