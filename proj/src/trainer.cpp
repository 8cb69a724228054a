#include "lassl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "lassl/binio.hpp"

namespace lassl {

std::string to_string(SamplerMode mode) {
  switch (mode) {
    case SamplerMode::kUniform: return "uniform";
    case SamplerMode::kLearningSpeed: return "learning_speed";
    case SamplerMode::kConditionalOracle: return "conditional_oracle";
  }
  throw ConfigError("unknown sampler mode");
}

SamplerMode sampler_mode_from_string(const std::string& s) {
  if (s == "uniform") return SamplerMode::kUniform;
  if (s == "learning_speed") return SamplerMode::kLearningSpeed;
  if (s == "conditional_oracle") return SamplerMode::kConditionalOracle;
  throw ConfigError("unknown sampler mode: " + s);
}

void TrainConfig::validate() const {
  ssl.validate();
  augment.validate();
  scaling.validate();
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batches_per_epoch < 0) throw ConfigError("train: batches_per_epoch must be >= 0");
  if (lr_max <= 0.0) throw ConfigError("train: lr_max must be > 0");
  if (lr_warmup_epochs < 1) throw ConfigError("train: lr_warmup_epochs must be >= 1");
  if (ema_eta <= 0.0 || ema_eta > 1.0) throw ConfigError("train: ema_eta must lie in (0, 1]");
  if (mode == SamplerMode::kLearningSpeed && epochs <= schedule.warmup_epochs) {
    throw ConfigError("train: learning_speed mode needs epochs > warmup_epochs");
  }
  if (encoder_hidden.empty()) throw ConfigError("train: encoder needs at least one hidden width");
  if (threads < 1) throw ConfigError("train: threads must be >= 1");
}

void RunLog::write_csv(std::ostream& out) const {
  out << "epoch,loss,sim_aligned_mean,sim_conflicting_mean,lr,pi_entropy,pi_min,pi_max\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch,
                  r.loss, r.sim_aligned_mean, r.sim_conflicting_mean, r.lr, r.pi_entropy, r.pi_min,
                  r.pi_max);
    out << buf;
  }
}

namespace {

EncoderStack build_stack(const Dataset& ds, const TrainConfig& cfg) {
  std::vector<int> enc_widths;
  enc_widths.push_back(ds.config.input_dim);
  for (int w : cfg.encoder_hidden) enc_widths.push_back(w);
  enc_widths.push_back(cfg.ssl.representation_dim);
  EncoderStack stack;
  stack.encoder = init_params(enc_widths, derive_seed(cfg.seed, 0, 0, 100));
  stack.projector = init_params({cfg.ssl.representation_dim, cfg.ssl.projection_dim},
                                derive_seed(cfg.seed, 0, 0, 101));
  return stack;
}

}  // namespace

Trainer::Trainer(const Dataset& dataset, TrainConfig config)
    : dataset_(&dataset),
      config_(std::move(config)),
      stack_(build_stack(dataset, config_)),
      tracker_(dataset.size(), config_.ema_eta),
      state_(SamplingState::uniform(dataset.size(), config_.schedule)),
      rng_(derive_seed(config_.seed, 0, 0, 1)) {
  config_.validate();
  if (dataset.size() == 0) throw ConfigError("trainer: empty dataset");
  batches_per_epoch_ = config_.batches_per_epoch > 0
                           ? config_.batches_per_epoch
                           : static_cast<int>((dataset.size() + config_.ssl.batch_size - 1) /
                                              config_.ssl.batch_size);
  if (!dataset.confounds.empty()) {
    std::tie(aligned_idx_, conflicting_idx_) = partition_by_alignment(dataset, 0);
    if (config_.mode == SamplerMode::kConditionalOracle) {
      oracle_groups_.assign(static_cast<std::size_t>(dataset.config.target.cardinality), {});
      for (std::int64_t i = 0; i < dataset.size(); ++i) {
        oracle_groups_[dataset.confounds[0][static_cast<std::size_t>(i)]].push_back(i);
      }
      for (std::size_t v = 0; v < oracle_groups_.size(); ++v) {
        require_group_size(oracle_groups_[v].size(), config_.ssl.batch_size, static_cast<int>(v));
      }
    }
  } else if (config_.mode == SamplerMode::kConditionalOracle) {
    throw ConfigError("trainer: conditional_oracle mode needs at least one confound");
  }
}

Matrix Trainer::gather_views(const std::vector<std::int64_t>& indices, int epoch, int slot) const {
  Matrix views(static_cast<Eigen::Index>(indices.size()), dataset_->features.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Vector x = dataset_->features.row(indices[i]).transpose();
    views.row(static_cast<Eigen::Index>(i)) =
        augment_view(x, config_.augment, epoch, indices[i], slot).transpose();
  }
  return views;
}

std::vector<std::int64_t> Trainer::draw_batch_indices() {
  const int b = config_.ssl.batch_size;
  if (config_.mode == SamplerMode::kConditionalOracle) {
    std::uniform_int_distribution<std::size_t> pick_value(0, oracle_groups_.size() - 1);
    const auto& group = oracle_groups_[pick_value(rng_)];
    std::uniform_int_distribution<std::size_t> pick_member(0, group.size() - 1);
    std::vector<std::int64_t> out(static_cast<std::size_t>(b));
    for (auto& idx : out) idx = group[pick_member(rng_)];
    return out;
  }
  return sample_batch(state_, b, rng_);
}

double Trainer::train_batch(const std::vector<std::int64_t>& indices, int epoch, int batch_index) {
  const Matrix v1 = gather_views(indices, epoch, 0);
  const Matrix v2 = gather_views(indices, epoch, 1);

  Tape tape;
  const StackBinding binding = bind_params(tape, stack_);
  const auto b1 = tape.leaf(v1);
  const auto b2 = tape.leaf(v2);
  Tape::NodeId loss_node;
  try {
    const auto p1 = forward_on_tape(tape, binding, b1).second;
    const auto p2 = forward_on_tape(tape, binding, b2).second;
    loss_node = infonce_on_tape(tape, p1, p2, config_.ssl.temperature, config_.ssl.symmetrize);
  } catch (const NumericError& e) {
    // overflowing parameters surface as degenerate/non-finite activations
    throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                              " batch " + std::to_string(batch_index),
                          epoch, batch_index);
  }
  const double loss = tape.value(loss_node)(0, 0);
  if (!std::isfinite(loss)) {
    throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                              std::to_string(batch_index),
                          epoch, batch_index);
  }
  tape.backward(loss_node);
  const StackGradients grads = collect_gradients(tape, binding);

  SgdSchedule sched{config_.lr_max, config_.weight_decay, config_.lr_warmup_epochs,
                    config_.epochs};
  sgd_step(stack_.encoder, grads.encoder, epoch, sched);
  sgd_step(stack_.projector, grads.projector, epoch, sched);
  return loss;
}

std::vector<double> Trainer::similarity_sweep(int epoch) const {
  const auto n = dataset_->size();
  std::vector<double> sims(static_cast<std::size_t>(n));
  // Fixed global chunk boundaries keep the per-chunk arithmetic identical for
  // any thread count; workers stride over whole chunks (disjoint writes).
  constexpr std::int64_t kChunk = 512;
  const std::int64_t num_chunks = (n + kChunk - 1) / kChunk;
  const auto run_chunk = [&](std::int64_t chunk) {
    const std::int64_t start = chunk * kChunk;
    const std::int64_t stop = std::min(start + kChunk, n);
    std::vector<std::int64_t> idx(static_cast<std::size_t>(stop - start));
    std::iota(idx.begin(), idx.end(), start);
    const Matrix p1 = stack_.forward(gather_views(idx, epoch, 0)).second;
    const Matrix p2 = stack_.forward(gather_views(idx, epoch, 1)).second;
    for (std::int64_t i = start; i < stop; ++i) {
      sims[static_cast<std::size_t>(i)] = p1.row(i - start).dot(p2.row(i - start));
    }
  };
  if (config_.threads <= 1 || num_chunks <= 1) {
    for (std::int64_t c = 0; c < num_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> workers;
    const int pool = std::min<std::int64_t>(config_.threads, num_chunks);
    for (int t = 0; t < pool; ++t) {
      workers.emplace_back([&, t] {
        for (std::int64_t c = t; c < num_chunks; c += pool) run_chunk(c);
      });
    }
    for (auto& w : workers) w.join();
  }
  return sims;
}

void Trainer::run_epoch() {
  if (done()) throw StateError("trainer: all epochs already completed");
  const int epoch = completed_epochs_ + 1;

  double loss_sum = 0.0;
  for (int b = 0; b < batches_per_epoch_; ++b) {
    loss_sum += train_batch(draw_batch_indices(), epoch, b);
  }

  const std::vector<double> sims = similarity_sweep(epoch);
  for (std::int64_t i = 0; i < dataset_->size(); ++i) {
    tracker_.record(i, sims[static_cast<std::size_t>(i)]);
  }
  if (config_.mode == SamplerMode::kLearningSpeed) {
    update_probabilities(state_, tracker_, config_.scaling, epoch);
  }

  const auto mean_over = [&](const std::vector<std::int64_t>& idx) {
    if (idx.empty()) return 0.0;
    double s = 0.0;
    for (auto i : idx) s += sims[static_cast<std::size_t>(i)];
    return s / static_cast<double>(idx.size());
  };

  EpochRecord rec;
  rec.epoch = epoch;
  rec.loss = loss_sum / static_cast<double>(batches_per_epoch_);
  rec.sim_aligned_mean = mean_over(aligned_idx_);
  rec.sim_conflicting_mean = mean_over(conflicting_idx_);
  rec.lr = SgdSchedule{config_.lr_max, config_.weight_decay, config_.lr_warmup_epochs,
                       config_.epochs}
               .lr(epoch);
  rec.pi_entropy = pi_entropy(state_.pi);
  rec.pi_min = *std::min_element(state_.pi.begin(), state_.pi.end());
  rec.pi_max = *std::max_element(state_.pi.begin(), state_.pi.end());
  log_.records.push_back(rec);
  ++completed_epochs_;
}

void Trainer::run_to_end() {
  while (!done()) run_epoch();
}

Trainer pretrain(const Dataset& dataset, const TrainConfig& config) {
  Trainer trainer(dataset, config);
  trainer.run_to_end();
  return trainer;
}

void write_train_config(std::ostream& out, const TrainConfig& c) {
  binio::write_pod<std::int32_t>(out, c.epochs);
  binio::write_pod<std::int32_t>(out, c.batches_per_epoch);
  binio::write_pod<double>(out, c.lr_max);
  binio::write_pod<double>(out, c.weight_decay);
  binio::write_pod<std::int32_t>(out, c.lr_warmup_epochs);
  binio::write_pod<double>(out, c.ssl.temperature);
  binio::write_pod<std::int32_t>(out, c.ssl.representation_dim);
  binio::write_pod<std::int32_t>(out, c.ssl.projection_dim);
  binio::write_pod<std::int32_t>(out, c.ssl.batch_size);
  binio::write_pod<std::uint8_t>(out, c.ssl.symmetrize ? 1 : 0);
  binio::write_pod<double>(out, c.augment.jitter_sigma);
  binio::write_pod<double>(out, c.augment.mask_fraction);
  binio::write_pod<double>(out, c.augment.scale_low);
  binio::write_pod<double>(out, c.augment.scale_high);
  binio::write_pod<std::uint64_t>(out, c.augment.global_seed);
  binio::write_pod<double>(out, c.scaling.gamma);
  binio::write_pod<double>(out, c.scaling.percentile_r);
  binio::write_pod<double>(out, c.scaling.floor_epsilon);
  binio::write_pod<std::int32_t>(out, c.schedule.warmup_epochs);
  binio::write_pod<std::int32_t>(out, c.schedule.update_every);
  binio::write_pod<double>(out, c.ema_eta);
  binio::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(c.mode));
  binio::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.encoder_hidden.size()));
  for (int w : c.encoder_hidden) binio::write_pod<std::int32_t>(out, w);
  binio::write_pod<std::uint64_t>(out, c.seed);
  binio::write_pod<std::int32_t>(out, c.threads);
}

TrainConfig read_train_config(std::istream& in) {
  TrainConfig c;
  c.epochs = binio::read_pod<std::int32_t>(in, "epochs");
  c.batches_per_epoch = binio::read_pod<std::int32_t>(in, "batches_per_epoch");
  c.lr_max = binio::read_pod<double>(in, "lr_max");
  c.weight_decay = binio::read_pod<double>(in, "weight_decay");
  c.lr_warmup_epochs = binio::read_pod<std::int32_t>(in, "lr_warmup_epochs");
  c.ssl.temperature = binio::read_pod<double>(in, "temperature");
  c.ssl.representation_dim = binio::read_pod<std::int32_t>(in, "representation_dim");
  c.ssl.projection_dim = binio::read_pod<std::int32_t>(in, "projection_dim");
  c.ssl.batch_size = binio::read_pod<std::int32_t>(in, "batch_size");
  c.ssl.symmetrize = binio::read_pod<std::uint8_t>(in, "symmetrize") != 0;
  c.augment.jitter_sigma = binio::read_pod<double>(in, "jitter_sigma");
  c.augment.mask_fraction = binio::read_pod<double>(in, "mask_fraction");
  c.augment.scale_low = binio::read_pod<double>(in, "scale_low");
  c.augment.scale_high = binio::read_pod<double>(in, "scale_high");
  c.augment.global_seed = binio::read_pod<std::uint64_t>(in, "augment seed");
  c.scaling.gamma = binio::read_pod<double>(in, "gamma");
  c.scaling.percentile_r = binio::read_pod<double>(in, "percentile_r");
  c.scaling.floor_epsilon = binio::read_pod<double>(in, "floor_epsilon");
  c.schedule.warmup_epochs = binio::read_pod<std::int32_t>(in, "warmup_epochs");
  c.schedule.update_every = binio::read_pod<std::int32_t>(in, "update_every");
  c.ema_eta = binio::read_pod<double>(in, "ema_eta");
  c.mode = static_cast<SamplerMode>(binio::read_pod<std::uint8_t>(in, "mode"));
  const auto hidden = binio::read_pod<std::uint32_t>(in, "hidden count");
  c.encoder_hidden.clear();
  for (std::uint32_t i = 0; i < hidden; ++i) {
    c.encoder_hidden.push_back(binio::read_pod<std::int32_t>(in, "hidden width"));
  }
  c.seed = binio::read_pod<std::uint64_t>(in, "seed");
  c.threads = binio::read_pod<std::int32_t>(in, "threads");
  return c;
}

namespace {
constexpr char kCheckpointMagic[4] = {'L', 'A', 'S', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

void Trainer::checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open checkpoint for writing: " + path);
  binio::write_magic(out, kCheckpointMagic);
  binio::write_pod<std::uint32_t>(out, kCheckpointVersion);
  write_train_config(out, config_);
  binio::write_pod<std::int64_t>(out, dataset_->size());
  binio::write_pod<std::int32_t>(out, dataset_->config.input_dim);
  binio::write_pod<std::int32_t>(out, completed_epochs_);
  write_stack(out, stack_);
  binio::write_array(out, tracker_.values().data(), tracker_.values().size());
  binio::write_array(out, tracker_.seen().data(), tracker_.seen().size());
  binio::write_array(out, state_.pi.data(), state_.pi.size());
  binio::write_pod<std::int32_t>(out, state_.last_update_epoch);
  std::ostringstream rng_state;
  rng_state << rng_;
  binio::write_string(out, rng_state.str());
  binio::write_pod<std::uint64_t>(out, log_.records.size());
  for (const auto& r : log_.records) binio::write_pod<EpochRecord>(out, r);
  if (!out) throw FormatError("checkpoint write failed: " + path);
}

std::pair<TrainConfig, EncoderStack> load_checkpoint_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path);
  binio::expect_magic(in, kCheckpointMagic, "checkpoint");
  binio::expect_version(in, kCheckpointVersion, "checkpoint");
  TrainConfig config = read_train_config(in);
  binio::read_pod<std::int64_t>(in, "dataset size");
  binio::read_pod<std::int32_t>(in, "input dim");
  binio::read_pod<std::int32_t>(in, "epoch counter");
  EncoderStack stack = read_stack(in);
  return {std::move(config), std::move(stack)};
}

Trainer Trainer::resume(const Dataset& dataset, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path);
  binio::expect_magic(in, kCheckpointMagic, "checkpoint");
  binio::expect_version(in, kCheckpointVersion, "checkpoint");
  TrainConfig config = read_train_config(in);
  const auto n = binio::read_pod<std::int64_t>(in, "dataset size");
  const auto m = binio::read_pod<std::int32_t>(in, "input dim");
  if (n != dataset.size() || m != dataset.config.input_dim) {
    throw FormatError("checkpoint: dataset shape mismatch (checkpoint has n=" + std::to_string(n) +
                      ", m=" + std::to_string(m) + ")");
  }
  Trainer t(dataset, config);
  t.completed_epochs_ = binio::read_pod<std::int32_t>(in, "epoch counter");
  t.stack_ = read_stack(in);
  std::vector<double> s_ema(static_cast<std::size_t>(n));
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(n));
  binio::read_array(in, s_ema.data(), s_ema.size(), "tracker ema");
  binio::read_array(in, seen.data(), seen.size(), "tracker seen");
  t.tracker_.restore(std::move(s_ema), std::move(seen), config.ema_eta);
  binio::read_array(in, t.state_.pi.data(), t.state_.pi.size(), "pi");
  t.state_.last_update_epoch = binio::read_pod<std::int32_t>(in, "last update epoch");
  std::istringstream rng_state(binio::read_string(in, "rng state"));
  rng_state >> t.rng_;
  const auto rows = binio::read_pod<std::uint64_t>(in, "log rows");
  t.log_.records.resize(rows);
  for (auto& r : t.log_.records) r = binio::read_pod<EpochRecord>(in, "log row");
  return t;
}

}  // namespace lassl
