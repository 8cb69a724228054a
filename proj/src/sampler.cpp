#include "lassl/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lassl {

SpeedTracker::SpeedTracker(std::int64_t n, double eta) : eta_(eta) {
  if (n <= 0) throw ConfigError("tracker: n must be positive");
  if (eta <= 0.0 || eta > 1.0) throw ConfigError("tracker: eta must lie in (0, 1]");
  s_ema_.assign(static_cast<std::size_t>(n), 0.0);
  seen_.assign(static_cast<std::size_t>(n), 0);
}

void SpeedTracker::record(std::int64_t i, double s_raw) {
  if (i < 0 || i >= size()) throw std::out_of_range("tracker: index " + std::to_string(i));
  if (!std::isfinite(s_raw)) throw NumericError("tracker: non-finite similarity");
  auto idx = static_cast<std::size_t>(i);
  if (!seen_[idx]) {
    s_ema_[idx] = s_raw;
    seen_[idx] = 1;
  } else {
    s_ema_[idx] = (1.0 - eta_) * s_ema_[idx] + eta_ * s_raw;
  }
}

bool SpeedTracker::all_seen() const {
  return std::all_of(seen_.begin(), seen_.end(), [](std::uint8_t s) { return s != 0; });
}

double SpeedTracker::value(std::int64_t i) const {
  if (i < 0 || i >= size()) throw std::out_of_range("tracker: index " + std::to_string(i));
  if (!seen_[static_cast<std::size_t>(i)]) throw StateError("tracker: example never observed");
  return s_ema_[static_cast<std::size_t>(i)];
}

void SpeedTracker::restore(std::vector<double> s_ema, std::vector<std::uint8_t> seen, double eta) {
  if (s_ema.size() != seen.size()) throw DimensionError("tracker restore: size mismatch");
  s_ema_ = std::move(s_ema);
  seen_ = std::move(seen);
  eta_ = eta;
}

double percentile(std::vector<double> values, double r) {
  if (values.empty()) throw DimensionError("percentile: empty input");
  if (r <= 0.0 || r >= 1.0) throw ConfigError("percentile: r must lie in (0, 1)");
  std::sort(values.begin(), values.end());
  const auto len = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(r * len));
  if (rank == 0) rank = 1;
  return values[rank - 1];
}

double scale_weight(double s_i, double s_star, double gamma) {
  if (!std::isfinite(s_i) || !std::isfinite(s_star)) {
    throw NumericError("scale_weight: non-finite input");
  }
  return std::max(s_star - gamma * (s_i - s_star), 0.0);
}

SamplingState SamplingState::uniform(std::int64_t n, SamplingSchedule schedule) {
  SamplingState state;
  state.pi.assign(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
  state.schedule = schedule;
  return state;
}

void SamplingState::validate() const {
  double sum = 0.0;
  for (double p : pi) {
    if (!(p >= 0.0)) throw NumericError("sampling state: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw NumericError("sampling state: probabilities sum to " + std::to_string(sum));
  }
}

void update_probabilities(SamplingState& state, const SpeedTracker& tracker,
                          const ScalingParams& params, int epoch) {
  params.validate();
  if (static_cast<std::int64_t>(state.pi.size()) != tracker.size()) {
    throw DimensionError("update_probabilities: state/tracker size mismatch");
  }
  if (epoch <= state.schedule.warmup_epochs) return;
  if (state.schedule.update_every > 1 &&
      (epoch - state.schedule.warmup_epochs) % state.schedule.update_every != 0) {
    return;
  }
  if (!tracker.all_seen()) {
    throw StateError("update_probabilities: similarity sweep incomplete");
  }

  const double s_star = percentile(tracker.values(), params.percentile_r);
  const auto n = static_cast<std::size_t>(tracker.size());
  std::vector<double> w(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = scale_weight(tracker.values()[i], s_star, params.gamma);
    sum += w[i];
  }
  const double eps = params.floor_epsilon;
  if (sum == 0.0) {
    std::fill(state.pi.begin(), state.pi.end(), 1.0 / static_cast<double>(n));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      state.pi[i] = (1.0 - eps) * w[i] / sum + eps / static_cast<double>(n);
    }
  }
  state.last_update_epoch = epoch;
  state.validate();
}

std::vector<std::int64_t> sample_batch(const SamplingState& state, int b, std::mt19937_64& rng) {
  state.validate();
  std::vector<double> cum(state.pi.size());
  std::partial_sum(state.pi.begin(), state.pi.end(), cum.begin());
  cum.back() = 1.0;  // guard against accumulated rounding
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::int64_t> out(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) {
    const double u = unif(rng);
    // first index with cumulative mass strictly above u; zero-mass entries
    // have empty intervals and are never selected
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    if (it == cum.end()) --it;
    out[static_cast<std::size_t>(i)] = std::distance(cum.begin(), it);
  }
  return out;
}

double pi_entropy(const std::vector<double>& pi) {
  double h = 0.0;
  for (double p : pi) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace lassl
