#pragma once

#include <string>
#include <vector>

#include "iceberg/nn/tape.hpp"
#include "iceberg/util/io.hpp"
#include "iceberg/util/rng.hpp"

namespace iceberg::nn {

// Named parameter tensors; registration order fixes checkpoint and gradient
// ordering.
class ParamStore {
 public:
  struct Handle {
    int idx = -1;
  };

  Handle add(std::string name, int rows, int cols) {
    names_.push_back(std::move(name));
    tensors_.emplace_back(Matrix::Zero(rows, cols));
    return Handle{static_cast<int>(tensors_.size()) - 1};
  }

  Handle add_gaussian(std::string name, int rows, int cols, double std_dev, Rng& rng) {
    Handle h = add(std::move(name), rows, cols);
    Matrix& m = tensors_[static_cast<std::size_t>(h.idx)];
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = std_dev * rng.gaussian();
    return h;
  }

  // Glorot-scaled weight plus zero bias row in one call.
  Handle add_linear_weight(std::string name, int in_dim, int out_dim, Rng& rng) {
    const double std_dev = std::sqrt(2.0 / static_cast<double>(in_dim + out_dim));
    return add_gaussian(std::move(name), in_dim, out_dim, std_dev, rng);
  }

  Matrix& tensor(Handle h) { return tensors_[static_cast<std::size_t>(h.idx)]; }
  const Matrix& tensor(Handle h) const { return tensors_[static_cast<std::size_t>(h.idx)]; }
  const std::string& name(Handle h) const { return names_[static_cast<std::size_t>(h.idx)]; }

  int count() const { return static_cast<int>(tensors_.size()); }
  std::int64_t total_params() const {
    std::int64_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
  }

  std::vector<Matrix> zero_grads() const {
    std::vector<Matrix> g;
    g.reserve(tensors_.size());
    for (const auto& t : tensors_) g.emplace_back(Matrix::Zero(t.rows(), t.cols()));
    return g;
  }

  std::vector<NamedTensor> to_tensors() const {
    std::vector<NamedTensor> out;
    out.reserve(tensors_.size());
    for (std::size_t i = 0; i < tensors_.size(); ++i) out.push_back({names_[i], tensors_[i]});
    return out;
  }

  // Strict by-name load; shapes must match.
  void load_tensors(const std::vector<NamedTensor>& archive);

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> tensors_;
};

// Parameters bound into one tape; vars[i] corresponds to ParamStore tensor i.
struct TapeBinding {
  std::vector<Tape::VarId> vars;
};

TapeBinding bind_params(Tape& tape, const ParamStore& params, bool trainable);

// grads[i] += tape gradient of bound tensor i (no-op for untouched tensors).
void collect_grads(const Tape& tape, const TapeBinding& binding, std::vector<Matrix>& grads);

class AdamW {
 public:
  AdamW(double lr, double beta1, double beta2, double weight_decay, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), weight_decay_(weight_decay), eps_(eps) {}

  void step(ParamStore& params, const std::vector<Matrix>& grads);
  void reset() {
    m_.clear();
    v_.clear();
    t_ = 0;
  }

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, weight_decay_, eps_;
  std::vector<Matrix> m_, v_;
  long t_ = 0;
};

}  // namespace iceberg::nn
