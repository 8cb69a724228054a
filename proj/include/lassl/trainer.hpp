#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "lassl/augment.hpp"
#include "lassl/network.hpp"
#include "lassl/sampler.hpp"
#include "lassl/ssl.hpp"
#include "lassl/synthdata.hpp"

namespace lassl {

enum class SamplerMode : std::uint8_t { kUniform = 0, kLearningSpeed = 1, kConditionalOracle = 2 };

std::string to_string(SamplerMode mode);
SamplerMode sampler_mode_from_string(const std::string& s);

struct TrainConfig {
  int epochs = 300;             // T
  int batches_per_epoch = 0;    // 0 -> ceil(n / batch_size)
  double lr_max = 0.5;
  double weight_decay = 1e-4;
  int lr_warmup_epochs = 10;
  SslConfig ssl;
  AugmentPolicy augment;
  ScalingParams scaling;
  SamplingSchedule schedule;    // T_warmup, update_every
  double ema_eta = 0.1;
  SamplerMode mode = SamplerMode::kUniform;
  std::vector<int> encoder_hidden = {64};  // widths between input and representation
  std::uint64_t seed = 0;
  int threads = 1;              // similarity sweep fan-out (disjoint writes)

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double sim_aligned_mean = 0.0;
  double sim_conflicting_mean = 0.0;
  double lr = 0.0;
  double pi_entropy = 0.0;
  double pi_min = 0.0;
  double pi_max = 0.0;
};

struct RunLog {
  std::vector<EpochRecord> records;
  void write_csv(std::ostream& out) const;
};

// One pretraining session over a fixed dataset. Epochs are 1-based; each
// epoch draws batches from the active sampler, optimizes the contrastive
// loss, then runs a full two-view similarity sweep for logging and for the
// learning-speed tracker.
class Trainer {
 public:
  Trainer(const Dataset& dataset, TrainConfig config);

  void run_epoch();
  void run_to_end();
  bool done() const { return completed_epochs_ >= config_.epochs; }
  int completed_epochs() const { return completed_epochs_; }

  // Similarity sweep for an arbitrary epoch tag; does not touch the tracker.
  std::vector<double> similarity_sweep(int epoch) const;

  void checkpoint(const std::string& path) const;
  static Trainer resume(const Dataset& dataset, const std::string& path);

  const EncoderStack& stack() const { return stack_; }
  const RunLog& log() const { return log_; }
  const SamplingState& sampling_state() const { return state_; }
  const SpeedTracker& tracker() const { return tracker_; }
  const TrainConfig& config() const { return config_; }

 private:
  std::vector<std::int64_t> draw_batch_indices();
  double train_batch(const std::vector<std::int64_t>& indices, int epoch, int batch_index);
  Matrix gather_views(const std::vector<std::int64_t>& indices, int epoch, int slot) const;

  const Dataset* dataset_;
  TrainConfig config_;
  int batches_per_epoch_;
  EncoderStack stack_;
  SpeedTracker tracker_;
  SamplingState state_;
  RunLog log_;
  std::mt19937_64 rng_;
  int completed_epochs_ = 0;
  std::vector<std::int64_t> aligned_idx_, conflicting_idx_;    // confound 0
  std::vector<std::vector<std::int64_t>> oracle_groups_;       // confound 0 value -> indices
};

// pretrain in one call; returns the finished trainer.
Trainer pretrain(const Dataset& dataset, const TrainConfig& config);

void write_train_config(std::ostream& out, const TrainConfig& c);
TrainConfig read_train_config(std::istream& in);

// Reads just the config and parameters from a checkpoint (for probing and
// spectral analysis, which do not need optimizer or sampler state).
std::pair<TrainConfig, EncoderStack> load_checkpoint_params(const std::string& path);

}  // namespace lassl
