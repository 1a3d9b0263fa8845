#include "iceberg/nn/params.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace iceberg::nn {

void ParamStore::load_tensors(const std::vector<NamedTensor>& archive) {
  std::unordered_map<std::string, const NamedTensor*> by_name;
  for (const auto& t : archive) by_name[t.name] = &t;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    auto it = by_name.find(names_[i]);
    if (it == by_name.end())
      throw std::runtime_error("checkpoint is missing tensor \"" + names_[i] + "\"");
    const Matrix& src = it->second->value;
    if (src.rows() != tensors_[i].rows() || src.cols() != tensors_[i].cols())
      throw std::runtime_error("checkpoint tensor \"" + names_[i] + "\" has shape " +
                               std::to_string(src.rows()) + "x" + std::to_string(src.cols()) +
                               ", expected " + std::to_string(tensors_[i].rows()) + "x" +
                               std::to_string(tensors_[i].cols()));
    tensors_[i] = src;
  }
}

TapeBinding bind_params(Tape& tape, const ParamStore& params, bool trainable) {
  TapeBinding binding;
  binding.vars.reserve(static_cast<std::size_t>(params.count()));
  for (int i = 0; i < params.count(); ++i) {
    const Matrix& t = params.tensor(ParamStore::Handle{i});
    binding.vars.push_back(trainable ? tape.leaf(t) : tape.constant(t));
  }
  return binding;
}

void collect_grads(const Tape& tape, const TapeBinding& binding, std::vector<Matrix>& grads) {
  for (std::size_t i = 0; i < binding.vars.size(); ++i) {
    const Matrix& g = tape.grad(binding.vars[i]);
    if (g.size() > 0) grads[i] += g;
  }
}

void AdamW::step(ParamStore& params, const std::vector<Matrix>& grads) {
  if (m_.empty()) {
    for (int i = 0; i < params.count(); ++i) {
      const Matrix& t = params.tensor(ParamStore::Handle{i});
      m_.emplace_back(Matrix::Zero(t.rows(), t.cols()));
      v_.emplace_back(Matrix::Zero(t.rows(), t.cols()));
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (int i = 0; i < params.count(); ++i) {
    Matrix& p = params.tensor(ParamStore::Handle{i});
    const Matrix& g = grads[static_cast<std::size_t>(i)];
    Matrix& m = m_[static_cast<std::size_t>(i)];
    Matrix& v = v_[static_cast<std::size_t>(i)];
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    const Matrix mhat = m / bc1;
    const Matrix vhat = v / bc2;
    p -= lr_ * (mhat.array() / (vhat.array().sqrt() + eps_) + weight_decay_ * p.array()).matrix();
  }
}

}  // namespace iceberg::nn
