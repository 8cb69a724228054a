#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lassl/matrix.hpp"
#include "lassl/network.hpp"
#include "lassl/synthdata.hpp"

namespace lassl {

// Frozen pre-projection representations of clean inputs: n x d.
Matrix extract_representations(const EncoderStack& stack, const Dataset& ds);

struct ProbeConfig {
  int max_iters = 10000;
  double grad_tolerance = 1e-6;  // on the gradient infinity norm
  bool add_bias = true;
};

// Linear probe trained by full-batch gradient descent with a fixed step of
// 1 / (0.25 * lambda_max(Phi^T Phi) / n). Binary targets use the sigmoid
// cross-entropy of the mean form with gradient Phi^T (yhat - y) / n;
// multiclass targets use softmax cross-entropy.
struct ProbeParams {
  Matrix coef;  // d x K (K=1 for binary)
  Vector bias;  // K (zero when add_bias is off)
  int classes = 2;
  bool converged = false;
  int iters_run = 0;
  double final_loss = 0.0;
};

ProbeParams probe(const Matrix& phi, const std::vector<std::uint16_t>& labels, int num_classes,
                  const ProbeConfig& config = {});

// Scores: binary -> sigmoid probability column, multiclass -> softmax rows.
Matrix probe_scores(const ProbeParams& p, const Matrix& phi);

double mean_bce_loss(const Matrix& phi, const ProbeParams& p, const std::vector<std::uint16_t>& y);

struct SubgroupMetrics {
  std::string name;
  double prevalence = 0.0;  // subgroup fraction of the evaluated set
  double accuracy = 0.0;
  std::optional<double> auroc;  // undefined when a class is absent
  std::optional<double> precision;
  std::optional<double> recall;
  std::int64_t count = 0;
};

struct SubgroupReport {
  std::vector<SubgroupMetrics> subgroups;
};

// Binary targets: AUROC by Mann-Whitney pair counting (ties count 1/2),
// precision/recall at threshold 0.5. Multiclass targets: argmax accuracy plus
// macro one-vs-rest AUROC/precision/recall.
SubgroupReport subgroup_metrics(const Matrix& scores, const std::vector<std::uint16_t>& labels,
                                const std::vector<std::uint8_t>& subgroup,
                                const std::vector<std::string>& subgroup_names);

double auroc_binary(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

struct SpectrumReport {
  std::vector<double> normalized;  // sigma_i / sigma_1, non-increasing
  double sigma1 = 0.0;             // unnormalized leading singular value
  double tail_mass = 0.0;          // sum of normalized values past the top 10% of indices
};

SpectrumReport spectrum(const Matrix& phi);

// Sum of normalized singular values past the top 10% of indices.
double tail_mass(const std::vector<double>& normalized);

// tail_mass(a) - tail_mass(b); both reports must have the same length.
double compare_spectra(const SpectrumReport& a, const SpectrumReport& b);

// || Phi^T r - V S U^T r || / || Phi^T r || with r = yhat - y (Eq. identity
// between the probe gradient and its SVD form).
double gradient_identity_residual(const Matrix& phi, const Vector& theta, const Vector& y);

}  // namespace lassl
