#include "lassl/autodiff.hpp"

#include <cmath>
#include <utility>

namespace lassl {

int Tape::check(NodeId id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size())) {
    throw StateError("tape: invalid node id " + std::to_string(id));
  }
  return id;
}

Tape::NodeId Tape::push(Matrix value, std::function<void(Tape&, const Node&)> backprop) {
  Node n;
  n.grad = Matrix::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

Tape::NodeId Tape::leaf(const Matrix& value) { return push(value, nullptr); }

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  Matrix v = lassl::matmul(value(a), value(b));
  return push(std::move(v), [a, b](Tape& t, const Node& n) {
    t.accumulate(a, n.grad * t.value(b).transpose());
    t.accumulate(b, t.value(a).transpose() * n.grad);
  });
}

Tape::NodeId Tape::matmul_nt(NodeId a, NodeId b) {
  if (value(a).cols() != value(b).cols()) {
    throw DimensionError("matmul_nt: column counts differ");
  }
  Matrix v = value(a) * value(b).transpose();
  return push(std::move(v), [a, b](Tape& t, const Node& n) {
    t.accumulate(a, n.grad * t.value(b));
    t.accumulate(b, n.grad.transpose() * t.value(a));
  });
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  check_same_shape(value(a), value(b), "tape add");
  Matrix v = value(a) + value(b);
  return push(std::move(v), [a, b](Tape& t, const Node& n) {
    t.accumulate(a, n.grad);
    t.accumulate(b, n.grad);
  });
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  check_same_shape(value(a), value(b), "tape sub");
  Matrix v = value(a) - value(b);
  return push(std::move(v), [a, b](Tape& t, const Node& n) {
    t.accumulate(a, n.grad);
    t.accumulate(b, -n.grad);
  });
}

Tape::NodeId Tape::add_row_broadcast(NodeId a, NodeId row) {
  if (value(row).rows() != 1 || value(row).cols() != value(a).cols()) {
    throw DimensionError("add_row_broadcast: row must be 1x" + std::to_string(value(a).cols()));
  }
  Matrix v = value(a).rowwise() + value(row).row(0);
  return push(std::move(v), [a, row](Tape& t, const Node& n) {
    t.accumulate(a, n.grad);
    t.accumulate(row, n.grad.colwise().sum());
  });
}

Tape::NodeId Tape::cmul(NodeId a, NodeId b) {
  check_same_shape(value(a), value(b), "tape cmul");
  Matrix v = value(a).cwiseProduct(value(b));
  return push(std::move(v), [a, b](Tape& t, const Node& n) {
    t.accumulate(a, n.grad.cwiseProduct(t.value(b)));
    t.accumulate(b, n.grad.cwiseProduct(t.value(a)));
  });
}

Tape::NodeId Tape::scale(NodeId a, double c) {
  Matrix v = value(a) * c;
  return push(std::move(v), [a, c](Tape& t, const Node& n) { t.accumulate(a, n.grad * c); });
}

Tape::NodeId Tape::relu(NodeId a) {
  Matrix v = value(a).cwiseMax(0.0);
  return push(std::move(v), [a](Tape& t, const Node& n) {
    const Matrix mask = (t.value(a).array() > 0.0).cast<double>();
    t.accumulate(a, n.grad.cwiseProduct(mask));
  });
}

Tape::NodeId Tape::l2_normalize_rows(NodeId a) {
  Matrix v = lassl::l2_normalize_rows(value(a));
  // d/dx_r of x_r/|x_r|: (g - (g.y) y)/|x_r| with y the normalized row.
  return push(std::move(v), [a](Tape& t, const Node& n) {
    const Matrix& x = t.value(a);
    const Matrix& y = n.value;
    Matrix gx(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double norm = x.row(r).norm();
      const double gy = n.grad.row(r).dot(y.row(r));
      gx.row(r) = (n.grad.row(r) - gy * y.row(r)) / norm;
    }
    t.accumulate(a, gx);
  });
}

Tape::NodeId Tape::diag_as_column(NodeId a) {
  if (value(a).rows() != value(a).cols()) {
    throw DimensionError("diag_as_column: node is not square");
  }
  Matrix v = value(a).diagonal();
  return push(std::move(v), [a](Tape& t, const Node& n) {
    Matrix g = Matrix::Zero(t.value(a).rows(), t.value(a).cols());
    g.diagonal() = n.grad.col(0);
    t.accumulate(a, g);
  });
}

Tape::NodeId Tape::logsumexp_rows(NodeId a) {
  const Matrix& x = value(a);
  Matrix v(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    v(r, 0) = m + std::log((x.row(r).array() - m).exp().sum());
  }
  return push(std::move(v), [a](Tape& t, const Node& n) {
    const Matrix& x = t.value(a);
    Matrix gx(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      gx.row(r) = n.grad(r, 0) * (x.row(r).array() - n.value(r, 0)).exp().matrix();
    }
    t.accumulate(a, gx);
  });
}

Tape::NodeId Tape::sum_all(NodeId a) {
  Matrix v(1, 1);
  v(0, 0) = value(a).sum();
  return push(std::move(v), [a](Tape& t, const Node& n) {
    t.accumulate(a, Matrix::Constant(t.value(a).rows(), t.value(a).cols(), n.grad(0, 0)));
  });
}

Tape::NodeId Tape::mean_all(NodeId a) {
  const double inv = 1.0 / static_cast<double>(value(a).size());
  Matrix v(1, 1);
  v(0, 0) = value(a).sum() * inv;
  return push(std::move(v), [a, inv](Tape& t, const Node& n) {
    t.accumulate(a, Matrix::Constant(t.value(a).rows(), t.value(a).cols(), n.grad(0, 0) * inv));
  });
}

void Tape::backward(NodeId loss) {
  check(loss);
  if (nodes_.empty()) throw StateError("tape backward: empty tape");
  if (value(loss).size() != 1) throw StateError("tape backward: loss node is not scalar");
  nodes_[loss].grad(0, 0) = 1.0;
  for (int i = loss; i >= 0; --i) {
    if (nodes_[i].backprop) nodes_[i].backprop(*this, nodes_[i]);
  }
  ran_backward_ = true;
}

const Matrix& Tape::grad(NodeId id) const {
  check(id);
  if (!ran_backward_) throw StateError("tape grad: backward has not run");
  return nodes_[id].grad;
}

}  // namespace lassl
