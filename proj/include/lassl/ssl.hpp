#pragma once

#include <vector>

#include "lassl/autodiff.hpp"
#include "lassl/matrix.hpp"

namespace lassl {

struct SslConfig {
  double temperature = 0.5;  // tau
  int representation_dim = 32;
  int projection_dim = 16;
  int batch_size = 128;
  bool symmetrize = false;

  void validate() const {
    if (temperature <= 0.0) throw ConfigError("ssl: temperature must be > 0");
    if (batch_size < 2) throw ConfigError("ssl: batch_size must be >= 2");
  }
};

// Two unit-row projection matrices for one sampled batch.
struct BatchViews {
  std::vector<std::int64_t> indices;
  Matrix view1;  // b x d'
  Matrix view2;  // b x d'
};

// exp(dot(u, v) / tau) for unit vectors; throws if a norm is off by > 1e-6.
double similarity(const Vector& u, const Vector& v, double tau);

// Mean over anchor positions a of
//   -log( sim(v1_a, v2_a) / sum_i sim(v1_a, v2_i) ),
// computed max-shifted in logit space. With symmetrize the two view roles are
// averaged.
double infonce(const Matrix& view1, const Matrix& view2, double tau, bool symmetrize = false);

// Same loss built on the tape (view nodes must hold unit rows).
Tape::NodeId infonce_on_tape(Tape& tape, Tape::NodeId view1, Tape::NodeId view2, double tau,
                             bool symmetrize = false);

// InfoNCE within attribute-conditioned groups, averaged over the given
// batches; each batch must be drawn from a single attribute value.
struct ConditionedBatch {
  int attribute_value;
  Matrix view1;
  Matrix view2;
};
double conditional_infonce(const std::vector<ConditionedBatch>& batches, double tau,
                           bool symmetrize = false);

// Guards an insufficient attribute group before batch formation.
void require_group_size(std::size_t group_size, int batch_size, int attribute_value);

}  // namespace lassl
