#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace iceberg::nn {

using Matrix = Eigen::MatrixXd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Reverse-mode autograd over 2-D matrices. A tape is built per forward pass
// and discarded (or cleared) afterwards; it is single-threaded by design.
class Tape {
 public:
  struct VarId {
    int idx = -1;
    bool valid() const { return idx >= 0; }
  };

  VarId constant(Matrix v) { return push(std::move(v), false); }
  VarId leaf(Matrix v) { return push(std::move(v), true); }

  const Matrix& val(VarId id) const { return nodes_[static_cast<std::size_t>(id.idx)].value; }
  const Matrix& grad(VarId id) const;
  bool needs_grad(VarId id) const { return nodes_[static_cast<std::size_t>(id.idx)].needs_grad; }

  // ---- arithmetic ----
  VarId matmul(VarId a, VarId b);             // A * B
  VarId matmul_nt(VarId a, VarId b);          // A * B^T
  VarId add(VarId a, VarId b);
  VarId sub(VarId a, VarId b);
  VarId cmul(VarId a, VarId b);               // elementwise
  VarId scale(VarId a, double s);
  VarId add_rowvec(VarId a, VarId row);       // row is 1 x C, broadcast over rows
  VarId mul_rowvec_const(VarId a, const Eigen::RowVectorXd& row);
  VarId dropout_mask(VarId a, std::shared_ptr<const Matrix> scaled_mask);

  // ---- nonlinearities / normalization ----
  VarId gelu(VarId a);
  VarId layer_norm(VarId x, VarId gamma, VarId beta, double eps = 1e-5);
  // Row softmax with a boolean allow-mask; disallowed entries get weight 0.
  VarId softmax_rows(VarId scores, std::shared_ptr<const BoolArray> allow);

  // ---- shape ops ----
  VarId slice_cols(VarId a, int start, int n);
  VarId slice_rows(VarId a, int start, int n);
  VarId select_rows(VarId a, std::shared_ptr<const std::vector<int>> rows);
  VarId hconcat(const std::vector<VarId>& parts);
  VarId vconcat(const std::vector<VarId>& parts);

  // ---- graph ops (rows are node-major blocks of `block` consecutive rows) ----
  // out.rows(dst*block..) += in.rows(src*block..) for each (src, dst) edge.
  VarId edge_gather_add(VarId x, std::shared_ptr<const std::vector<std::pair<int, int>>> edges,
                        int block, int n_nodes);
  // out is (block x F): out(c, :) = mean over nodes s of x(s*block + c, :).
  VarId mean_node_blocks(VarId x, int n_nodes, int block);

  // ---- reductions ----
  VarId mean_all(VarId a);  // 1x1
  VarId sum_all(VarId a);   // 1x1

  void backward(VarId root);
  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    bool grad_ready = false;
    std::function<void(Tape&, const Node&)> back;
  };

  VarId push(Matrix v, bool needs_grad, std::function<void(Tape&, const Node&)> back = {});
  void accumulate(VarId id, const Matrix& g);
  template <class Expr>
  void accumulate_expr(VarId id, const Expr& g);

  std::vector<Node> nodes_;
};

double gelu_scalar(double x);

}  // namespace iceberg::nn
