#include "lassl/network.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "lassl/binio.hpp"

namespace lassl {

bool ParamSet::shape_matches(const ParamSet& other) const {
  if (weights.size() != other.weights.size()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != other.weights[l].rows() ||
        weights[l].cols() != other.weights[l].cols() ||
        biases[l].size() != other.biases[l].size()) {
      return false;
    }
  }
  return true;
}

ParamSet zeros_like(const ParamSet& p) {
  ParamSet z;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    z.weights.push_back(Matrix::Zero(p.weights[l].rows(), p.weights[l].cols()));
    z.biases.push_back(Vector::Zero(p.biases[l].size()));
  }
  return z;
}

ParamSet init_params(const std::vector<int>& widths, std::uint64_t seed) {
  if (widths.size() < 2) throw DimensionError("init_params: need at least two widths");
  std::mt19937_64 rng(seed);
  ParamSet p;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Vector::Zero(fan_out));
  }
  return p;
}

Matrix mlp_forward(const ParamSet& p, const Matrix& batch) {
  if (p.weights.empty()) throw StateError("mlp_forward: empty ParamSet");
  if (batch.cols() != p.weights.front().rows()) {
    throw DimensionError("mlp_forward: batch width " + std::to_string(batch.cols()) +
                         " vs input width " + std::to_string(p.weights.front().rows()));
  }
  Matrix h = batch;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    h = (h * p.weights[l]).rowwise() + p.biases[l].transpose();
    if (l + 1 < p.weights.size()) h = h.cwiseMax(0.0);
  }
  return h;
}

std::pair<Matrix, Matrix> EncoderStack::forward(const Matrix& batch) const {
  Matrix repr = mlp_forward(encoder, batch);
  Matrix proj = l2_normalize_rows(mlp_forward(projector, repr));
  return {std::move(repr), std::move(proj)};
}

namespace {

std::vector<Tape::NodeId> bind_mlp(Tape& tape, const ParamSet& p, std::vector<Tape::NodeId>& bias_ids) {
  std::vector<Tape::NodeId> weight_ids;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    weight_ids.push_back(tape.leaf(p.weights[l]));
    bias_ids.push_back(tape.leaf(p.biases[l].transpose()));  // stored as 1xC rows on tape
  }
  return weight_ids;
}

Tape::NodeId mlp_on_tape(Tape& tape, const std::vector<Tape::NodeId>& w,
                         const std::vector<Tape::NodeId>& b, Tape::NodeId x) {
  Tape::NodeId h = x;
  for (std::size_t l = 0; l < w.size(); ++l) {
    h = tape.add_row_broadcast(tape.matmul(h, w[l]), b[l]);
    if (l + 1 < w.size()) h = tape.relu(h);
  }
  return h;
}

}  // namespace

StackBinding bind_params(Tape& tape, const EncoderStack& stack) {
  StackBinding binding;
  binding.enc_w = bind_mlp(tape, stack.encoder, binding.enc_b);
  binding.proj_w = bind_mlp(tape, stack.projector, binding.proj_b);
  return binding;
}

std::pair<Tape::NodeId, Tape::NodeId> forward_on_tape(Tape& tape, const StackBinding& binding,
                                                      Tape::NodeId batch) {
  const Tape::NodeId repr = mlp_on_tape(tape, binding.enc_w, binding.enc_b, batch);
  const Tape::NodeId proj =
      tape.l2_normalize_rows(mlp_on_tape(tape, binding.proj_w, binding.proj_b, repr));
  return {repr, proj};
}

namespace {

GradientRecord collect_mlp(const Tape& tape, const std::vector<Tape::NodeId>& w,
                           const std::vector<Tape::NodeId>& b) {
  GradientRecord g;
  for (std::size_t l = 0; l < w.size(); ++l) {
    g.weights.push_back(tape.grad(w[l]));
    g.biases.push_back(tape.grad(b[l]).row(0).transpose());
  }
  return g;
}

}  // namespace

StackGradients collect_gradients(const Tape& tape, const StackBinding& binding) {
  if (!tape.has_run_backward()) throw StateError("collect_gradients: backward has not run");
  return {collect_mlp(tape, binding.enc_w, binding.enc_b),
          collect_mlp(tape, binding.proj_w, binding.proj_b)};
}

double SgdSchedule::lr(int epoch) const {
  if (epoch <= warmup_epochs) {
    return lr_max * static_cast<double>(epoch) / static_cast<double>(warmup_epochs);
  }
  const double t = static_cast<double>(epoch - warmup_epochs) /
                   static_cast<double>(total_epochs - warmup_epochs);
  return lr_max * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

void sgd_step(ParamSet& params, const GradientRecord& grads, int epoch, const SgdSchedule& sched) {
  if (!params.shape_matches(grads)) throw DimensionError("sgd_step: gradient shapes mismatch");
  const double lr = sched.lr(epoch);
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    params.weights[l] -= lr * (grads.weights[l] + sched.weight_decay * params.weights[l]);
    params.biases[l] -= lr * (grads.biases[l] + sched.weight_decay * params.biases[l]);
  }
}

namespace {

constexpr char kParamMagic[4] = {'L', 'A', 'S', 'P'};
constexpr std::uint32_t kParamVersion = 1;

void write_mlp(std::ostream& out, const ParamSet& p) {
  binio::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(p.weights.size()));
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    binio::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(p.weights[l].rows()));
    binio::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(p.weights[l].cols()));
    // row-major payload
    for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i)
      for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j)
        binio::write_pod<double>(out, p.weights[l](i, j));
    binio::write_array(out, p.biases[l].data(), static_cast<std::size_t>(p.biases[l].size()));
  }
}

ParamSet read_mlp(std::istream& in) {
  const auto layers = binio::read_pod<std::uint32_t>(in, "layer count");
  ParamSet p;
  for (std::uint32_t l = 0; l < layers; ++l) {
    const auto rows = binio::read_pod<std::uint32_t>(in, "weight rows");
    const auto cols = binio::read_pod<std::uint32_t>(in, "weight cols");
    Matrix w(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t j = 0; j < cols; ++j) w(i, j) = binio::read_pod<double>(in, "weight");
    Vector b(cols);
    binio::read_array(in, b.data(), cols, "bias");
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

}  // namespace

void write_stack(std::ostream& out, const EncoderStack& stack) {
  binio::write_magic(out, kParamMagic);
  binio::write_pod<std::uint32_t>(out, kParamVersion);
  write_mlp(out, stack.encoder);
  write_mlp(out, stack.projector);
}

EncoderStack read_stack(std::istream& in) {
  binio::expect_magic(in, kParamMagic, "parameter block");
  binio::expect_version(in, kParamVersion, "parameter block");
  EncoderStack stack;
  stack.encoder = read_mlp(in);
  stack.projector = read_mlp(in);
  return stack;
}

}  // namespace lassl
