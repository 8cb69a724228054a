#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lassl/autodiff.hpp"
#include "lassl/matrix.hpp"

namespace lassl {

// Parameters of one fully connected stack: weights[l] is in_width x out_width,
// biases[l] is out_width. ReLU between layers, final layer linear.
struct ParamSet {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  std::size_t num_layers() const { return weights.size(); }
  bool shape_matches(const ParamSet& other) const;
};

// Gradients shaped exactly like their ParamSet.
using GradientRecord = ParamSet;

ParamSet zeros_like(const ParamSet& p);

// Glorot-uniform initialization over the given widths, e.g. {64, 64, 32}.
ParamSet init_params(const std::vector<int>& widths, std::uint64_t seed);

// Plain forward pass (no tape). ReLU on hidden layers, last layer linear.
Matrix mlp_forward(const ParamSet& p, const Matrix& batch);

// Feature extractor plus projection head with l2-normalized output rows.
struct EncoderStack {
  ParamSet encoder;    // input -> representation (width d)
  ParamSet projector;  // representation -> projection (width d'), linear

  // representation (n x d) and unit-row projection (n x d').
  std::pair<Matrix, Matrix> forward(const Matrix& batch) const;
};

// Tape node ids for one EncoderStack so gradients can be read back per layer.
struct StackBinding {
  std::vector<Tape::NodeId> enc_w, enc_b, proj_w, proj_b;
};

StackBinding bind_params(Tape& tape, const EncoderStack& stack);

// Forward through the bound stack; returns (representation, projection) nodes.
std::pair<Tape::NodeId, Tape::NodeId> forward_on_tape(Tape& tape, const StackBinding& binding,
                                                      Tape::NodeId batch);

// Gradients for both sub-stacks after tape.backward(); StateError if absent.
struct StackGradients {
  GradientRecord encoder;
  GradientRecord projector;
};
StackGradients collect_gradients(const Tape& tape, const StackBinding& binding);

// Linear warmup to lr_max over warmup_epochs, then cosine decay to 0 at
// total_epochs. Epochs are 1-based; lr(total_epochs) == 0.
struct SgdSchedule {
  double lr_max = 0.5;
  double weight_decay = 1e-4;
  int warmup_epochs = 10;
  int total_epochs = 300;

  double lr(int epoch) const;
};

// params <- params - lr(epoch) * (grads + weight_decay * params)
void sgd_step(ParamSet& params, const GradientRecord& grads, int epoch, const SgdSchedule& sched);

// Versioned little-endian parameter blocks ("LASP", u32 version, widths,
// row-major float64 payload).
void write_stack(std::ostream& out, const EncoderStack& stack);
EncoderStack read_stack(std::istream& in);

}  // namespace lassl
