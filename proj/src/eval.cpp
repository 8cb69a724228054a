#include "lassl/eval.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace lassl {

Matrix extract_representations(const EncoderStack& stack, const Dataset& ds) {
  return mlp_forward(stack.encoder, ds.features);
}

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

Matrix augment_with_bias(const Matrix& phi, bool add_bias) {
  if (!add_bias) return phi;
  Matrix x(phi.rows(), phi.cols() + 1);
  x.leftCols(phi.cols()) = phi;
  x.col(phi.cols()).setOnes();
  return x;
}

double lambda_max(const Matrix& x) {
  const Matrix gram = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Matrix softmax_rows(const Matrix& z) {
  Matrix p(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    Eigen::RowVectorXd e = (z.row(r).array() - m).exp();
    p.row(r) = e / e.sum();
  }
  return p;
}

}  // namespace

ProbeParams probe(const Matrix& phi, const std::vector<std::uint16_t>& labels, int num_classes,
                  const ProbeConfig& config) {
  if (static_cast<std::int64_t>(labels.size()) != phi.rows()) {
    throw DimensionError("probe: label count does not match representation rows");
  }
  if (num_classes < 2) throw ConfigError("probe: num_classes must be >= 2");
  const auto n = static_cast<double>(phi.rows());
  const Matrix x = augment_with_bias(phi, config.add_bias);
  const int cols = num_classes == 2 ? 1 : num_classes;
  // 1/L step: the logistic Hessian is bounded by 0.25 X^T X / n (binary)
  // and 0.5 X^T X / n (softmax).
  const double curvature = (num_classes == 2 ? 0.25 : 0.5) * lambda_max(x) / n;
  const double step = 1.0 / curvature;

  Matrix w = Matrix::Zero(x.cols(), cols);
  ProbeParams out;
  out.classes = num_classes;

  Matrix y;
  if (num_classes == 2) {
    y.resize(phi.rows(), 1);
    for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, 0) = labels[static_cast<std::size_t>(i)];
  } else {
    y = Matrix::Zero(phi.rows(), num_classes);
    for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  }

  double loss = 0.0;
  for (out.iters_run = 0; out.iters_run < config.max_iters; ++out.iters_run) {
    Matrix z = x * w;
    Matrix yhat;
    loss = 0.0;
    if (num_classes == 2) {
      yhat = (1.0 / (1.0 + (-z.array()).exp())).matrix();
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        loss += softplus(z(i, 0)) - y(i, 0) * z(i, 0);
      }
    } else {
      yhat = softmax_rows(z);
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double m = z.row(i).maxCoeff();
        const double lse = m + std::log((z.row(i).array() - m).exp().sum());
        loss += lse - z.row(i).dot(y.row(i));
      }
    }
    loss /= n;
    const Matrix grad = x.transpose() * (yhat - y) / n;
    if (grad.cwiseAbs().maxCoeff() < config.grad_tolerance) {
      out.converged = true;
      break;
    }
    w -= step * grad;
  }

  out.final_loss = loss;
  if (config.add_bias) {
    out.coef = w.topRows(w.rows() - 1);
    out.bias = w.row(w.rows() - 1).transpose();
  } else {
    out.coef = w;
    out.bias = Vector::Zero(cols);
  }
  return out;
}

Matrix probe_scores(const ProbeParams& p, const Matrix& phi) {
  if (phi.cols() != p.coef.rows()) throw DimensionError("probe_scores: width mismatch");
  Matrix z = (phi * p.coef).rowwise() + p.bias.transpose();
  if (p.classes == 2) return (1.0 / (1.0 + (-z.array()).exp())).matrix();
  return softmax_rows(z);
}

double mean_bce_loss(const Matrix& phi, const ProbeParams& p, const std::vector<std::uint16_t>& y) {
  if (p.classes != 2) throw ConfigError("mean_bce_loss: binary probes only");
  const Matrix z = (phi * p.coef).rowwise() + p.bias.transpose();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    loss += softplus(z(i, 0)) - static_cast<double>(y[static_cast<std::size_t>(i)]) * z(i, 0);
  }
  return loss / static_cast<double>(z.rows());
}

double auroc_binary(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size()) throw DimensionError("auroc: length mismatch");
  // Mann-Whitney via ranks; ties get the average rank (pairs count 1/2).
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(scores.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg;
    i = j + 1;
  }
  double rank_sum_pos = 0.0;
  std::int64_t n_pos = 0, n_neg = 0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t]) {
      rank_sum_pos += rank[t];
      ++n_pos;
    } else {
      ++n_neg;
    }
  }
  if (n_pos == 0 || n_neg == 0) throw StateError("auroc: needs both classes");
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

SubgroupMetrics metrics_for_subset(const Matrix& scores, const std::vector<std::uint16_t>& labels,
                                   const std::vector<std::int64_t>& idx, std::int64_t total) {
  SubgroupMetrics m;
  m.count = static_cast<std::int64_t>(idx.size());
  m.prevalence = static_cast<double>(idx.size()) / static_cast<double>(total);
  if (idx.empty()) return m;

  const bool binary = scores.cols() == 1;
  std::int64_t correct = 0;
  if (binary) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    std::vector<double> s;
    std::vector<std::uint8_t> yb;
    for (auto i : idx) {
      const double score = scores(i, 0);
      const int pred = score >= 0.5 ? 1 : 0;
      const int y = labels[static_cast<std::size_t>(i)];
      correct += pred == y;
      tp += pred == 1 && y == 1;
      fp += pred == 1 && y == 0;
      fn += pred == 0 && y == 1;
      s.push_back(score);
      yb.push_back(static_cast<std::uint8_t>(y));
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(idx.size());
    if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    const bool has_both = tp + fn > 0 && static_cast<std::int64_t>(idx.size()) > tp + fn;
    if (has_both) m.auroc = auroc_binary(s, yb);
    return m;
  }

  // multiclass: argmax accuracy plus macro one-vs-rest rates
  const int k = static_cast<int>(scores.cols());
  std::vector<std::int64_t> tp(k, 0), fp(k, 0), fn(k, 0), support(k, 0);
  for (auto i : idx) {
    Eigen::Index pred;
    scores.row(i).maxCoeff(&pred);
    const int y = labels[static_cast<std::size_t>(i)];
    correct += pred == y;
    ++support[static_cast<std::size_t>(y)];
    if (pred == y) {
      ++tp[static_cast<std::size_t>(y)];
    } else {
      ++fp[static_cast<std::size_t>(pred)];
      ++fn[static_cast<std::size_t>(y)];
    }
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(idx.size());
  double prec_sum = 0.0, rec_sum = 0.0, auc_sum = 0.0;
  int prec_n = 0, rec_n = 0, auc_n = 0;
  for (int c = 0; c < k; ++c) {
    if (tp[c] + fp[c] > 0) {
      prec_sum += static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c]);
      ++prec_n;
    }
    if (support[c] > 0) {
      rec_sum += static_cast<double>(tp[c]) / static_cast<double>(support[c]);
      ++rec_n;
    }
    if (support[c] > 0 && support[c] < static_cast<std::int64_t>(idx.size())) {
      std::vector<double> s;
      std::vector<std::uint8_t> yb;
      for (auto i : idx) {
        s.push_back(scores(i, c));
        yb.push_back(labels[static_cast<std::size_t>(i)] == c ? 1 : 0);
      }
      auc_sum += auroc_binary(s, yb);
      ++auc_n;
    }
  }
  if (prec_n > 0) m.precision = prec_sum / prec_n;
  if (rec_n > 0) m.recall = rec_sum / rec_n;
  if (auc_n > 0) m.auroc = auc_sum / auc_n;
  return m;
}

}  // namespace

SubgroupReport subgroup_metrics(const Matrix& scores, const std::vector<std::uint16_t>& labels,
                                const std::vector<std::uint8_t>& subgroup,
                                const std::vector<std::string>& subgroup_names) {
  if (static_cast<std::int64_t>(labels.size()) != scores.rows() ||
      labels.size() != subgroup.size()) {
    throw DimensionError("subgroup_metrics: input lengths differ");
  }
  SubgroupReport report;
  for (std::size_t g = 0; g < subgroup_names.size(); ++g) {
    std::vector<std::int64_t> idx;
    for (std::size_t i = 0; i < subgroup.size(); ++i) {
      if (subgroup[i] == g) idx.push_back(static_cast<std::int64_t>(i));
    }
    SubgroupMetrics m = metrics_for_subset(scores, labels, idx, scores.rows());
    m.name = subgroup_names[g];
    report.subgroups.push_back(std::move(m));
  }
  return report;
}

SpectrumReport spectrum(const Matrix& phi) {
  if (phi.size() == 0 || phi.norm() == 0.0) throw NumericError("spectrum: zero matrix");
  Eigen::BDCSVD<Matrix> svd(phi);
  const Vector sv = svd.singularValues();
  SpectrumReport report;
  report.sigma1 = sv[0];
  report.normalized.resize(static_cast<std::size_t>(sv.size()));
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    report.normalized[static_cast<std::size_t>(i)] = sv[i] / sv[0];
  }
  report.tail_mass = tail_mass(report.normalized);
  return report;
}

double tail_mass(const std::vector<double>& normalized) {
  const auto len = normalized.size();
  const auto cut = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(len)));
  double mass = 0.0;
  for (std::size_t i = cut; i < len; ++i) mass += normalized[i];
  return mass;
}

double compare_spectra(const SpectrumReport& a, const SpectrumReport& b) {
  if (a.normalized.size() != b.normalized.size()) {
    throw DimensionError("compare_spectra: spectra have different lengths");
  }
  return tail_mass(a.normalized) - tail_mass(b.normalized);
}

double gradient_identity_residual(const Matrix& phi, const Vector& theta, const Vector& y) {
  if (phi.cols() != theta.size() || phi.rows() != y.size()) {
    throw DimensionError("gradient_identity_residual: shape mismatch");
  }
  const Vector z = phi * theta;
  const Vector yhat = (1.0 / (1.0 + (-z.array()).exp())).matrix();
  const Vector r = yhat - y;
  const Vector lhs = phi.transpose() * r;
  Eigen::BDCSVD<Matrix> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector rhs =
      svd.matrixV() * (svd.singularValues().asDiagonal() * (svd.matrixU().transpose() * r));
  const double denom = lhs.norm();
  if (denom == 0.0) return 0.0;
  return (lhs - rhs).norm() / denom;
}

}  // namespace lassl
