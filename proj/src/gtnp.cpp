#include "iceberg/gtnp.hpp"

#include <cmath>
#include <stdexcept>

namespace iceberg::gtnp {

using nn::BoolArray;
using nn::Matrix;
using nn::Tape;

void Sequence::validate() const {
  if (!kernel) throw std::invalid_argument("sequence: missing kernel");
  const int n = size();
  if (n < 2) throw std::invalid_argument("sequence: needs at least 2 points");
  if (m < 1 || m >= n)
    throw std::invalid_argument("sequence: context count m must satisfy 1 <= m < N");
  if (y.size() != configs.size())
    throw std::invalid_argument("sequence: labels and configs differ in length");
  for (const auto& c : configs)
    if (c.kernel_id != kernel->id)
      throw std::invalid_argument("sequence: config for kernel \"" + c.kernel_id +
                                  "\" mixed into sequence of \"" + kernel->id + "\"");
}

BoolArray attention_mask(int n, int m) {
  BoolArray allow(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) allow(i, j) = (j < m) || (j == i);
  return allow;
}

GtnpModel::GtnpModel(const GtnpConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {
  if (cfg_.d_model % cfg_.heads != 0)
    throw std::invalid_argument("GtnpModel: d_model must divide evenly into heads");
  Rng init(Rng::mix(seed, 0x67746e70));
  encoder_ = std::make_unique<encoder::GnnEncoder>(params_, cfg_.gnn, init);

  // token = concat(h(x), y-or-0, is_target flag)
  const int token_dim = cfg_.gnn.width + 2;
  embed_w_ = params_.add_linear_weight("embed/w", token_dim, cfg_.d_model, init);
  embed_b_ = params_.add("embed/b", 1, cfg_.d_model);

  for (int l = 0; l < cfg_.layers; ++l) {
    Block b;
    const std::string p = "tnp/layer" + std::to_string(l);
    b.ln1_g = params_.add(p + "/ln1/g", 1, cfg_.d_model);
    params_.tensor(b.ln1_g).setOnes();
    b.ln1_b = params_.add(p + "/ln1/b", 1, cfg_.d_model);
    b.wq = params_.add_linear_weight(p + "/attn/wq", cfg_.d_model, cfg_.d_model, init);
    b.bq = params_.add(p + "/attn/bq", 1, cfg_.d_model);
    b.wk = params_.add_linear_weight(p + "/attn/wk", cfg_.d_model, cfg_.d_model, init);
    b.bk = params_.add(p + "/attn/bk", 1, cfg_.d_model);
    b.wv = params_.add_linear_weight(p + "/attn/wv", cfg_.d_model, cfg_.d_model, init);
    b.bv = params_.add(p + "/attn/bv", 1, cfg_.d_model);
    b.wo = params_.add_linear_weight(p + "/attn/wo", cfg_.d_model, cfg_.d_model, init);
    b.bo = params_.add(p + "/attn/bo", 1, cfg_.d_model);
    b.ln2_g = params_.add(p + "/ln2/g", 1, cfg_.d_model);
    params_.tensor(b.ln2_g).setOnes();
    b.ln2_b = params_.add(p + "/ln2/b", 1, cfg_.d_model);
    b.ff_w1 = params_.add_linear_weight(p + "/ff/w1", cfg_.d_model, cfg_.d_ff, init);
    b.ff_b1 = params_.add(p + "/ff/b1", 1, cfg_.d_ff);
    b.ff_w2 = params_.add_linear_weight(p + "/ff/w2", cfg_.d_ff, cfg_.d_model, init);
    b.ff_b2 = params_.add(p + "/ff/b2", 1, cfg_.d_model);
    blocks_.push_back(b);
  }
  final_ln_g_ = params_.add("tnp/final_ln/g", 1, cfg_.d_model);
  params_.tensor(final_ln_g_).setOnes();
  final_ln_b_ = params_.add("tnp/final_ln/b", 1, cfg_.d_model);
  head_w_ = params_.add_linear_weight("head/w", cfg_.d_model, 1, init);
  head_b_ = params_.add("head/b", 1, 1);
}

std::int64_t GtnpModel::transformer_param_count() const {
  std::int64_t n = 0;
  for (int i = 0; i < params_.count(); ++i) {
    const nn::ParamStore::Handle h{i};
    if (params_.name(h).rfind("tnp/", 0) == 0) n += params_.tensor(h).size();
  }
  return n;
}

nn::Tape::VarId GtnpModel::embed_tokens(Tape& tape, const nn::TapeBinding& binding,
                                        const Sequence& seq, Rng* dropout_rng) const {
  const int n = seq.size();
  auto p = [&](nn::ParamStore::Handle h) { return binding.vars[static_cast<std::size_t>(h.idx)]; };

  const encoder::BatchedGraph graph = encoder::batch_graphs(*seq.kernel, seq.configs);
  encoder::DropoutPlan plan;
  plan.stochastic = dropout_rng;
  Tape::VarId h = encoder_->encode(tape, binding, graph, plan);

  Matrix y_col = Matrix::Zero(n, 1);
  Matrix flag_col = Matrix::Zero(n, 1);
  for (int i = 0; i < n; ++i) {
    if (i < seq.m)
      y_col(i, 0) = (seq.y[static_cast<std::size_t>(i)] - label_loc_) / label_scale_;
    else
      flag_col(i, 0) = 1.0;  // target slot: y stays 0
  }
  Tape::VarId tokens =
      tape.hconcat({h, tape.constant(std::move(y_col)), tape.constant(std::move(flag_col))});
  return tape.add_rowvec(tape.matmul(tokens, p(embed_w_)), p(embed_b_));
}

namespace {

std::shared_ptr<Matrix> sample_dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate,
                                            Rng& rng) {
  const double keep = 1.0 - rate;
  auto mask = std::make_shared<Matrix>(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r)
      (*mask)(r, c) = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return mask;
}

}  // namespace

nn::Tape::VarId GtnpModel::build_predictions(Tape& tape, const nn::TapeBinding& binding,
                                             const Sequence& seq, Rng* dropout_rng) const {
  seq.validate();
  const int n = seq.size();
  if (n > cfg_.max_seq_len)
    throw std::invalid_argument("sequence length " + std::to_string(n) +
                                " exceeds the configured maximum " +
                                std::to_string(cfg_.max_seq_len));
  auto p = [&](nn::ParamStore::Handle h) { return binding.vars[static_cast<std::size_t>(h.idx)]; };

  Tape::VarId x = embed_tokens(tape, binding, seq, dropout_rng);
  auto allow = std::make_shared<const BoolArray>(attention_mask(n, seq.m));
  const int head_dim = cfg_.d_model / cfg_.heads;
  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  auto maybe_dropout = [&](Tape::VarId v) {
    if (dropout_rng && cfg_.dropout > 0.0)
      return tape.dropout_mask(
          v, sample_dropout_mask(tape.val(v).rows(), tape.val(v).cols(), cfg_.dropout, *dropout_rng));
    return v;
  };

  for (const Block& b : blocks_) {
    Tape::VarId h1 = tape.layer_norm(x, p(b.ln1_g), p(b.ln1_b));
    Tape::VarId q = tape.add_rowvec(tape.matmul(h1, p(b.wq)), p(b.bq));
    Tape::VarId k = tape.add_rowvec(tape.matmul(h1, p(b.wk)), p(b.bk));
    Tape::VarId v = tape.add_rowvec(tape.matmul(h1, p(b.wv)), p(b.bv));
    std::vector<Tape::VarId> heads;
    heads.reserve(static_cast<std::size_t>(cfg_.heads));
    for (int hI = 0; hI < cfg_.heads; ++hI) {
      Tape::VarId qh = tape.slice_cols(q, hI * head_dim, head_dim);
      Tape::VarId kh = tape.slice_cols(k, hI * head_dim, head_dim);
      Tape::VarId vh = tape.slice_cols(v, hI * head_dim, head_dim);
      Tape::VarId scores = tape.scale(tape.matmul_nt(qh, kh), attn_scale);
      Tape::VarId attn = tape.softmax_rows(scores, allow);
      attn = maybe_dropout(attn);
      heads.push_back(tape.matmul(attn, vh));
    }
    Tape::VarId ctx = tape.hconcat(heads);
    Tape::VarId attn_out = tape.add_rowvec(tape.matmul(ctx, p(b.wo)), p(b.bo));
    x = tape.add(x, maybe_dropout(attn_out));

    Tape::VarId h2 = tape.layer_norm(x, p(b.ln2_g), p(b.ln2_b));
    Tape::VarId ff = tape.gelu(tape.add_rowvec(tape.matmul(h2, p(b.ff_w1)), p(b.ff_b1)));
    ff = tape.add_rowvec(tape.matmul(ff, p(b.ff_w2)), p(b.ff_b2));
    x = tape.add(x, maybe_dropout(ff));
  }

  Tape::VarId out = tape.layer_norm(x, p(final_ln_g_), p(final_ln_b_));
  auto target_rows = std::make_shared<std::vector<int>>();
  for (int i = seq.m; i < n; ++i) target_rows->push_back(i);
  Tape::VarId targets = tape.select_rows(out, std::move(target_rows));
  return tape.add_rowvec(tape.matmul(targets, p(head_w_)), p(head_b_));
}

nn::Matrix GtnpModel::tokenize(const Sequence& seq) const {
  seq.validate();
  Tape tape;
  const nn::TapeBinding binding = bind_params(tape, params_, false);
  return tape.val(embed_tokens(tape, binding, seq, nullptr));
}

std::vector<double> GtnpModel::forward(const Sequence& seq) const {
  Tape tape;
  const nn::TapeBinding binding = bind_params(tape, params_, false);
  Tape::VarId preds = build_predictions(tape, binding, seq, nullptr);
  const Matrix& v = tape.val(preds);
  std::vector<double> out(static_cast<std::size_t>(v.rows()));
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    out[static_cast<std::size_t>(i)] = label_loc_ + label_scale_ * v(i, 0);
  return out;
}

double GtnpModel::loss_eval(const Sequence& seq) const {
  const std::vector<double> preds = forward(seq);
  double se = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double err = preds[i] - seq.y[static_cast<std::size_t>(seq.m) + i];
    se += err * err;
  }
  return se / static_cast<double>(preds.size());
}

nn::Tape::VarId GtnpModel::build_loss(Tape& tape, const nn::TapeBinding& binding,
                                      const Sequence& seq, Rng* dropout_rng) const {
  Tape::VarId preds = build_predictions(tape, binding, seq, dropout_rng);
  Matrix target(seq.targets(), 1);
  for (int i = 0; i < seq.targets(); ++i)
    target(i, 0) = (seq.y[static_cast<std::size_t>(seq.m + i)] - label_loc_) / label_scale_;
  Tape::VarId diff = tape.sub(preds, tape.constant(std::move(target)));
  return tape.mean_all(tape.cmul(diff, diff));
}

std::vector<double> GtnpModel::predict_in_context(const std::vector<oracle::LabeledDesign>& context,
                                                  const std::vector<kernel::PragmaConfig>& queries,
                                                  const kernel::Kernel& k) const {
  if (context.empty())
    throw std::invalid_argument("predict_in_context: at least one context point is required");
  const int m = static_cast<int>(context.size());
  if (m + 1 > cfg_.max_seq_len)
    throw std::invalid_argument("predict_in_context: context alone exceeds max sequence length");

  auto kernel_ptr = std::make_shared<const kernel::Kernel>(k);
  std::vector<double> out;
  out.reserve(queries.size());
  const int chunk = cfg_.max_seq_len - m;
  for (std::size_t at = 0; at < queries.size(); at += static_cast<std::size_t>(chunk)) {
    const std::size_t end = std::min(queries.size(), at + static_cast<std::size_t>(chunk));
    Sequence seq;
    seq.kernel = kernel_ptr;
    seq.m = m;
    for (const auto& d : context) {
      seq.configs.push_back(d.config);
      seq.y.push_back(d.y);
    }
    for (std::size_t i = at; i < end; ++i) {
      seq.configs.push_back(queries[i]);
      seq.y.push_back(0.0);  // placeholder, unused by forward
    }
    const std::vector<double> preds = forward(seq);
    out.insert(out.end(), preds.begin(), preds.end());
  }
  return out;
}

}  // namespace iceberg::gtnp
