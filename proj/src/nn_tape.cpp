#include "iceberg/nn/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace iceberg::nn {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865476;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
}  // namespace

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

Tape::VarId Tape::push(Matrix v, bool needs_grad, std::function<void(Tape&, const Node&)> back) {
  Node n;
  n.value = std::move(v);
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return VarId{static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Tape::grad(VarId id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id.idx)];
  if (!n.grad_ready) {
    static const Matrix empty;
    return empty;
  }
  return n.grad;
}

void Tape::accumulate(VarId id, const Matrix& g) { accumulate_expr(id, g); }

template <class Expr>
void Tape::accumulate_expr(VarId id, const Expr& g) {
  Node& n = nodes_[static_cast<std::size_t>(id.idx)];
  if (!n.needs_grad) return;
  if (!n.grad_ready) {
    n.grad = g;
    n.grad_ready = true;
  } else {
    n.grad += g;
  }
}

Tape::VarId Tape::matmul(VarId a, VarId b) {
  const bool ng = needs_grad(a) || needs_grad(b);
  Matrix v = val(a) * val(b);
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [a, b](Tape& t, const Node& self) {
    if (t.needs_grad(a)) t.accumulate_expr(a, (self.grad * t.val(b).transpose()).eval());
    if (t.needs_grad(b)) t.accumulate_expr(b, (t.val(a).transpose() * self.grad).eval());
  });
}

Tape::VarId Tape::matmul_nt(VarId a, VarId b) {
  const bool ng = needs_grad(a) || needs_grad(b);
  Matrix v = val(a) * val(b).transpose();
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [a, b](Tape& t, const Node& self) {
    if (t.needs_grad(a)) t.accumulate_expr(a, (self.grad * t.val(b)).eval());
    if (t.needs_grad(b)) t.accumulate_expr(b, (self.grad.transpose() * t.val(a)).eval());
  });
}

Tape::VarId Tape::add(VarId a, VarId b) {
  const bool ng = needs_grad(a) || needs_grad(b);
  Matrix v = val(a) + val(b);
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [a, b](Tape& t, const Node& self) {
    t.accumulate(a, self.grad);
    t.accumulate(b, self.grad);
  });
}

Tape::VarId Tape::sub(VarId a, VarId b) {
  const bool ng = needs_grad(a) || needs_grad(b);
  Matrix v = val(a) - val(b);
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [a, b](Tape& t, const Node& self) {
    t.accumulate(a, self.grad);
    t.accumulate_expr(b, (-self.grad).eval());
  });
}

Tape::VarId Tape::cmul(VarId a, VarId b) {
  const bool ng = needs_grad(a) || needs_grad(b);
  Matrix v = val(a).cwiseProduct(val(b));
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [a, b](Tape& t, const Node& self) {
    if (t.needs_grad(a)) t.accumulate_expr(a, self.grad.cwiseProduct(t.val(b)));
    if (t.needs_grad(b)) t.accumulate_expr(b, self.grad.cwiseProduct(t.val(a)));
  });
}

Tape::VarId Tape::scale(VarId a, double s) {
  const bool ng = needs_grad(a);
  Matrix v = val(a) * s;
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [a, s](Tape& t, const Node& self) {
    t.accumulate_expr(a, (self.grad * s).eval());
  });
}

Tape::VarId Tape::add_rowvec(VarId a, VarId row) {
  const bool ng = needs_grad(a) || needs_grad(row);
  Matrix v = val(a);
  v.rowwise() += val(row).row(0);
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [a, row](Tape& t, const Node& self) {
    t.accumulate(a, self.grad);
    if (t.needs_grad(row)) t.accumulate_expr(row, self.grad.colwise().sum().eval());
  });
}

Tape::VarId Tape::mul_rowvec_const(VarId a, const Eigen::RowVectorXd& row) {
  const bool ng = needs_grad(a);
  Matrix v = val(a).array().rowwise() * row.array();
  if (!ng) return push(std::move(v), false);
  const Eigen::RowVectorXd r = row;
  return push(std::move(v), true, [a, r](Tape& t, const Node& self) {
    t.accumulate_expr(a, (self.grad.array().rowwise() * r.array()).matrix().eval());
  });
}

Tape::VarId Tape::dropout_mask(VarId a, std::shared_ptr<const Matrix> scaled_mask) {
  const bool ng = needs_grad(a);
  Matrix v = val(a).cwiseProduct(*scaled_mask);
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [a, scaled_mask](Tape& t, const Node& self) {
    t.accumulate_expr(a, self.grad.cwiseProduct(*scaled_mask));
  });
}

Tape::VarId Tape::gelu(VarId a) {
  const bool ng = needs_grad(a);
  Matrix v = val(a).unaryExpr([](double x) { return gelu_scalar(x); });
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [a](Tape& t, const Node& self) {
    const Matrix& x = t.val(a);
    Matrix dx = x.unaryExpr([](double v_) {
      const double phi = 0.5 * (1.0 + std::erf(v_ * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v_ * v_);
      return phi + v_ * pdf;
    });
    t.accumulate_expr(a, self.grad.cwiseProduct(dx));
  });
}

Tape::VarId Tape::layer_norm(VarId x, VarId gamma, VarId beta, double eps) {
  const Matrix& xv = val(x);
  const Eigen::Index rows = xv.rows(), cols = xv.cols();
  auto xhat = std::make_shared<Matrix>(rows, cols);
  auto inv_std = std::make_shared<Eigen::VectorXd>(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)(r) = is;
    xhat->row(r) = (xv.row(r).array() - mu) * is;
  }
  Matrix v = (xhat->array().rowwise() * val(gamma).row(0).array()).matrix();
  v.rowwise() += val(beta).row(0);
  const bool ng = needs_grad(x) || needs_grad(gamma) || needs_grad(beta);
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [x, gamma, beta, xhat, inv_std](Tape& t, const Node& self) {
    const Matrix& g = self.grad;
    if (t.needs_grad(gamma))
      t.accumulate_expr(gamma, (g.cwiseProduct(*xhat)).colwise().sum().eval());
    if (t.needs_grad(beta)) t.accumulate_expr(beta, g.colwise().sum().eval());
    if (t.needs_grad(x)) {
      const Eigen::RowVectorXd& gam = t.val(gamma).row(0);
      const Eigen::Index rows_ = g.rows(), cols_ = g.cols();
      Matrix dx(rows_, cols_);
      const double inv_c = 1.0 / static_cast<double>(cols_);
      for (Eigen::Index r = 0; r < rows_; ++r) {
        const Eigen::RowVectorXd dxhat = g.row(r).cwiseProduct(gam);
        const double s1 = dxhat.sum();
        const double s2 = dxhat.cwiseProduct(xhat->row(r)).sum();
        dx.row(r) =
            ((*inv_std)(r)) * (dxhat.array() - inv_c * s1 - xhat->row(r).array() * (inv_c * s2));
      }
      t.accumulate(x, dx);
    }
  });
}

Tape::VarId Tape::softmax_rows(VarId scores, std::shared_ptr<const BoolArray> allow) {
  const Matrix& s = val(scores);
  if (allow->rows() != s.rows() || allow->cols() != s.cols())
    throw std::invalid_argument("softmax_rows: mask shape mismatch");
  Matrix y(s.rows(), s.cols());
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < s.cols(); ++c)
      if ((*allow)(r, c)) m = std::max(m, s(r, c));
    if (!std::isfinite(m)) throw std::invalid_argument("softmax_rows: row with no allowed entries");
    double denom = 0.0;
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      const double e = (*allow)(r, c) ? std::exp(s(r, c) - m) : 0.0;
      y(r, c) = e;
      denom += e;
    }
    y.row(r) /= denom;
  }
  const bool ng = needs_grad(scores);
  if (!ng) return push(std::move(y), false);
  return push(std::move(y), true, [scores](Tape& t, const Node& self) {
    const Matrix& y_ = self.value;
    const Matrix& g = self.grad;
    Matrix ds(y_.rows(), y_.cols());
    for (Eigen::Index r = 0; r < y_.rows(); ++r) {
      const double dot = g.row(r).cwiseProduct(y_.row(r)).sum();
      ds.row(r) = y_.row(r).cwiseProduct(
          (g.row(r).array() - dot).matrix());
    }
    t.accumulate(scores, ds);
  });
}

Tape::VarId Tape::slice_cols(VarId a, int start, int n) {
  const bool ng = needs_grad(a);
  Matrix v = val(a).middleCols(start, n);
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [a, start, n](Tape& t, const Node& self) {
    Node& pa = t.nodes_[static_cast<std::size_t>(a.idx)];
    if (!pa.needs_grad) return;
    if (!pa.grad_ready) {
      pa.grad = Matrix::Zero(pa.value.rows(), pa.value.cols());
      pa.grad_ready = true;
    }
    pa.grad.middleCols(start, n) += self.grad;
  });
}

Tape::VarId Tape::slice_rows(VarId a, int start, int n) {
  const bool ng = needs_grad(a);
  Matrix v = val(a).middleRows(start, n);
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [a, start, n](Tape& t, const Node& self) {
    Node& pa = t.nodes_[static_cast<std::size_t>(a.idx)];
    if (!pa.needs_grad) return;
    if (!pa.grad_ready) {
      pa.grad = Matrix::Zero(pa.value.rows(), pa.value.cols());
      pa.grad_ready = true;
    }
    pa.grad.middleRows(start, n) += self.grad;
  });
}

Tape::VarId Tape::select_rows(VarId a, std::shared_ptr<const std::vector<int>> rows) {
  const Matrix& av = val(a);
  Matrix v(static_cast<Eigen::Index>(rows->size()), av.cols());
  for (std::size_t i = 0; i < rows->size(); ++i) v.row(static_cast<Eigen::Index>(i)) = av.row((*rows)[i]);
  const bool ng = needs_grad(a);
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [a, rows](Tape& t, const Node& self) {
    Node& pa = t.nodes_[static_cast<std::size_t>(a.idx)];
    if (!pa.needs_grad) return;
    if (!pa.grad_ready) {
      pa.grad = Matrix::Zero(pa.value.rows(), pa.value.cols());
      pa.grad_ready = true;
    }
    for (std::size_t i = 0; i < rows->size(); ++i)
      pa.grad.row((*rows)[i]) += self.grad.row(static_cast<Eigen::Index>(i));
  });
}

Tape::VarId Tape::hconcat(const std::vector<VarId>& parts) {
  if (parts.empty()) throw std::invalid_argument("hconcat: empty");
  Eigen::Index rows = val(parts[0]).rows(), cols = 0;
  bool ng = false;
  for (auto p : parts) {
    cols += val(p).cols();
    ng = ng || needs_grad(p);
  }
  Matrix v(rows, cols);
  Eigen::Index at = 0;
  for (auto p : parts) {
    v.middleCols(at, val(p).cols()) = val(p);
    at += val(p).cols();
  }
  if (!ng) return push(std::move(v), false);
  const std::vector<VarId> parts_copy = parts;
  return push(std::move(v), true, [parts_copy](Tape& t, const Node& self) {
    Eigen::Index at_ = 0;
    for (auto p : parts_copy) {
      const Eigen::Index w = t.val(p).cols();
      t.accumulate_expr(p, self.grad.middleCols(at_, w).eval());
      at_ += w;
    }
  });
}

Tape::VarId Tape::vconcat(const std::vector<VarId>& parts) {
  if (parts.empty()) throw std::invalid_argument("vconcat: empty");
  Eigen::Index cols = val(parts[0]).cols(), rows = 0;
  bool ng = false;
  for (auto p : parts) {
    rows += val(p).rows();
    ng = ng || needs_grad(p);
  }
  Matrix v(rows, cols);
  Eigen::Index at = 0;
  for (auto p : parts) {
    v.middleRows(at, val(p).rows()) = val(p);
    at += val(p).rows();
  }
  if (!ng) return push(std::move(v), false);
  const std::vector<VarId> parts_copy = parts;
  return push(std::move(v), true, [parts_copy](Tape& t, const Node& self) {
    Eigen::Index at_ = 0;
    for (auto p : parts_copy) {
      const Eigen::Index h = t.val(p).rows();
      t.accumulate_expr(p, self.grad.middleRows(at_, h).eval());
      at_ += h;
    }
  });
}

Tape::VarId Tape::edge_gather_add(VarId x,
                                  std::shared_ptr<const std::vector<std::pair<int, int>>> edges,
                                  int block, int n_nodes) {
  const Matrix& xv = val(x);
  if (xv.rows() != static_cast<Eigen::Index>(block) * n_nodes)
    throw std::invalid_argument("edge_gather_add: row count != block * n_nodes");
  Matrix v = Matrix::Zero(xv.rows(), xv.cols());
  for (const auto& [src, dst] : *edges)
    v.middleRows(static_cast<Eigen::Index>(dst) * block, block) +=
        xv.middleRows(static_cast<Eigen::Index>(src) * block, block);
  const bool ng = needs_grad(x);
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [x, edges, block](Tape& t, const Node& self) {
    Node& px = t.nodes_[static_cast<std::size_t>(x.idx)];
    if (!px.needs_grad) return;
    if (!px.grad_ready) {
      px.grad = Matrix::Zero(px.value.rows(), px.value.cols());
      px.grad_ready = true;
    }
    for (const auto& [src, dst] : *edges)
      px.grad.middleRows(static_cast<Eigen::Index>(src) * block, block) +=
          self.grad.middleRows(static_cast<Eigen::Index>(dst) * block, block);
  });
}

Tape::VarId Tape::mean_node_blocks(VarId x, int n_nodes, int block) {
  const Matrix& xv = val(x);
  if (xv.rows() != static_cast<Eigen::Index>(block) * n_nodes)
    throw std::invalid_argument("mean_node_blocks: row count != block * n_nodes");
  Matrix v = Matrix::Zero(block, xv.cols());
  for (int s = 0; s < n_nodes; ++s) v += xv.middleRows(static_cast<Eigen::Index>(s) * block, block);
  v /= static_cast<double>(n_nodes);
  const bool ng = needs_grad(x);
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [x, n_nodes, block](Tape& t, const Node& self) {
    Node& px = t.nodes_[static_cast<std::size_t>(x.idx)];
    if (!px.needs_grad) return;
    if (!px.grad_ready) {
      px.grad = Matrix::Zero(px.value.rows(), px.value.cols());
      px.grad_ready = true;
    }
    const Matrix contrib = self.grad / static_cast<double>(n_nodes);
    for (int s = 0; s < n_nodes; ++s)
      px.grad.middleRows(static_cast<Eigen::Index>(s) * block, block) += contrib;
  });
}

Tape::VarId Tape::mean_all(VarId a) {
  const Matrix& av = val(a);
  Matrix v(1, 1);
  v(0, 0) = av.mean();
  const bool ng = needs_grad(a);
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [a](Tape& t, const Node& self) {
    const Matrix& av_ = t.val(a);
    const double g = self.grad(0, 0) / static_cast<double>(av_.size());
    t.accumulate_expr(a, Matrix::Constant(av_.rows(), av_.cols(), g));
  });
}

Tape::VarId Tape::sum_all(VarId a) {
  const Matrix& av = val(a);
  Matrix v(1, 1);
  v(0, 0) = av.sum();
  const bool ng = needs_grad(a);
  if (!ng) return push(std::move(v), false);
  return push(std::move(v), true, [a](Tape& t, const Node& self) {
    const Matrix& av_ = t.val(a);
    t.accumulate_expr(a, Matrix::Constant(av_.rows(), av_.cols(), self.grad(0, 0)));
  });
}

void Tape::backward(VarId root) {
  Node& r = nodes_[static_cast<std::size_t>(root.idx)];
  if (r.value.rows() != 1 || r.value.cols() != 1)
    throw std::invalid_argument("backward: root must be a 1x1 scalar");
  if (!r.needs_grad) return;
  r.grad = Matrix::Ones(1, 1);
  r.grad_ready = true;
  for (int i = root.idx; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.needs_grad && n.grad_ready && n.back) n.back(*this, n);
  }
}

void Tape::clear() { nodes_.clear(); }

}  // namespace iceberg::nn
