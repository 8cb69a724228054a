#pragma once

#include <functional>
#include <vector>

#include "lassl/matrix.hpp"

namespace lassl {

// Reverse-mode tape over dense matrix nodes. Nodes are appended during the
// forward pass; backward() walks them in reverse and accumulates gradients.
// Scalars are represented as 1x1 matrices.
class Tape {
 public:
  using NodeId = int;

  NodeId leaf(const Matrix& value);

  NodeId matmul(NodeId a, NodeId b);
  // a * b^T without materializing the transpose as a node.
  NodeId matmul_nt(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  // Adds a 1xC row vector to every row of a (bias broadcast).
  NodeId add_row_broadcast(NodeId a, NodeId row);
  NodeId cmul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  NodeId relu(NodeId a);
  NodeId l2_normalize_rows(NodeId a);
  // Column vector of the main diagonal of a square node.
  NodeId diag_as_column(NodeId a);
  // Row-wise log(sum(exp(x))), max-shifted; result is Nx1.
  NodeId logsumexp_rows(NodeId a);
  NodeId sum_all(NodeId a);
  NodeId mean_all(NodeId a);

  // Seeds d(loss)/d(loss) = 1 at a scalar node and propagates to all leaves.
  void backward(NodeId loss);

  const Matrix& value(NodeId id) const { return nodes_[check(id)].value; }
  const Matrix& grad(NodeId id) const;
  bool has_run_backward() const { return ran_backward_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&, const Node&)> backprop;  // null for leaves
  };

  NodeId push(Matrix value, std::function<void(Tape&, const Node&)> backprop);
  void accumulate(NodeId id, const Matrix& g) { nodes_[id].grad += g; }
  int check(NodeId id) const;

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

}  // namespace lassl
