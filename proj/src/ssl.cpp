#include "lassl/ssl.hpp"

#include <cmath>

namespace lassl {

namespace {

void require_unit_rows(const Matrix& m, const char* what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (std::abs(m.row(r).norm() - 1.0) > 1e-6) {
      throw NumericError(std::string(what) + ": row " + std::to_string(r) + " is not unit norm");
    }
  }
}

double infonce_one_sided(const Matrix& anchors, const Matrix& others, double tau) {
  const Matrix logits = (anchors * others.transpose()) / tau;
  double total = 0.0;
  for (Eigen::Index a = 0; a < logits.rows(); ++a) {
    const double m = logits.row(a).maxCoeff();
    const double lse = m + std::log((logits.row(a).array() - m).exp().sum());
    total += lse - logits(a, a);
  }
  return total / static_cast<double>(logits.rows());
}

}  // namespace

double similarity(const Vector& u, const Vector& v, double tau) {
  if (tau <= 0.0) throw ConfigError("similarity: tau must be > 0");
  if (u.size() != v.size()) throw DimensionError("similarity: vector sizes differ");
  if (std::abs(u.norm() - 1.0) > 1e-6 || std::abs(v.norm() - 1.0) > 1e-6) {
    throw NumericError("similarity: inputs must be unit norm");
  }
  return std::exp(u.dot(v) / tau);
}

double infonce(const Matrix& view1, const Matrix& view2, double tau, bool symmetrize) {
  check_same_shape(view1, view2, "infonce");
  if (view1.rows() < 2) throw DimensionError("infonce: batch size must be >= 2");
  if (tau <= 0.0) throw ConfigError("infonce: tau must be > 0");
  require_unit_rows(view1, "infonce view1");
  require_unit_rows(view2, "infonce view2");
  const double loss = infonce_one_sided(view1, view2, tau);
  if (!symmetrize) return loss;
  return 0.5 * (loss + infonce_one_sided(view2, view1, tau));
}

namespace {

Tape::NodeId infonce_one_sided_on_tape(Tape& tape, Tape::NodeId anchors, Tape::NodeId others,
                                       double tau) {
  const auto logits = tape.scale(tape.matmul_nt(anchors, others), 1.0 / tau);
  const auto per_anchor = tape.sub(tape.logsumexp_rows(logits), tape.diag_as_column(logits));
  return tape.mean_all(per_anchor);
}

}  // namespace

Tape::NodeId infonce_on_tape(Tape& tape, Tape::NodeId view1, Tape::NodeId view2, double tau,
                             bool symmetrize) {
  if (tape.value(view1).rows() < 2) throw DimensionError("infonce: batch size must be >= 2");
  if (tau <= 0.0) throw ConfigError("infonce: tau must be > 0");
  const auto loss = infonce_one_sided_on_tape(tape, view1, view2, tau);
  if (!symmetrize) return loss;
  return tape.scale(tape.add(loss, infonce_one_sided_on_tape(tape, view2, view1, tau)), 0.5);
}

void require_group_size(std::size_t group_size, int batch_size, int attribute_value) {
  if (group_size < static_cast<std::size_t>(batch_size)) {
    throw StateError("conditional sampling: attribute value " + std::to_string(attribute_value) +
                     " has " + std::to_string(group_size) + " examples, need " +
                     std::to_string(batch_size));
  }
}

double conditional_infonce(const std::vector<ConditionedBatch>& batches, double tau,
                           bool symmetrize) {
  if (batches.empty()) throw DimensionError("conditional_infonce: no batches");
  double total = 0.0;
  for (const auto& b : batches) {
    require_group_size(static_cast<std::size_t>(b.view1.rows()), 2, b.attribute_value);
    total += infonce(b.view1, b.view2, tau, symmetrize);
  }
  return total / static_cast<double>(batches.size());
}

}  // namespace lassl
