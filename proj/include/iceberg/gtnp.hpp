#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "iceberg/encoder.hpp"
#include "iceberg/oracle.hpp"

namespace iceberg::gtnp {

// One in-context task: N labeled points of a single program evaluated under a
// single source function; the first m are context, the rest targets.
struct Sequence {
  std::shared_ptr<const kernel::Kernel> kernel;
  std::optional<std::string> source_function;
  std::vector<kernel::PragmaConfig> configs;
  std::vector<double> y;  // labels for all N points (target labels feed the loss only)
  int m = 1;

  int size() const { return static_cast<int>(configs.size()); }
  int targets() const { return size() - m; }
  void validate() const;  // throws std::invalid_argument
};

struct GtnpConfig {
  encoder::GnnConfig gnn{128, 3, 0.1};
  int d_model = 128;
  int layers = 6;
  int heads = 8;
  int d_ff = 128;
  double dropout = 0.1;
  int max_seq_len = 128;
};

// Context tokens attend to all context tokens; each target attends to the
// context and itself only.
nn::BoolArray attention_mask(int n, int m);

class GtnpModel {
 public:
  GtnpModel(const GtnpConfig& cfg, std::uint64_t seed);

  const GtnpConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // affine label transform fitted on the pretraining corpus; tokens and the
  // training objective use standardized labels, predictions map back
  void set_label_stats(double loc, double scale) {
    label_loc_ = loc;
    label_scale_ = scale > 0.0 ? scale : 1.0;
  }
  double label_loc() const { return label_loc_; }
  double label_scale() const { return label_scale_; }
  // size of the attention stack only (layers + final norm)
  std::int64_t transformer_param_count() const;

  // Embedded token matrix (N x d_model), eval mode; row order = point order.
  nn::Matrix tokenize(const Sequence& seq) const;

  // Deterministic eval-mode predictions for targets m..N-1.
  std::vector<double> forward(const Sequence& seq) const;

  // Mean squared error over targets, eval mode.
  double loss_eval(const Sequence& seq) const;

  // Training-mode loss with gradients to both the encoder and the backbone.
  nn::Tape::VarId build_loss(nn::Tape& tape, const nn::TapeBinding& binding, const Sequence& seq,
                             Rng* dropout_rng) const;

  std::vector<double> predict_in_context(const std::vector<oracle::LabeledDesign>& context,
                                         const std::vector<kernel::PragmaConfig>& queries,
                                         const kernel::Kernel& k) const;

 private:
  nn::Tape::VarId build_predictions(nn::Tape& tape, const nn::TapeBinding& binding,
                                    const Sequence& seq, Rng* dropout_rng) const;
  nn::Tape::VarId embed_tokens(nn::Tape& tape, const nn::TapeBinding& binding, const Sequence& seq,
                               Rng* dropout_rng) const;

  GtnpConfig cfg_;
  std::uint64_t seed_;
  double label_loc_ = 0.0;
  double label_scale_ = 1.0;
  nn::ParamStore params_;
  std::unique_ptr<encoder::GnnEncoder> encoder_;

  nn::ParamStore::Handle embed_w_, embed_b_;
  struct Block {
    nn::ParamStore::Handle ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
    nn::ParamStore::Handle ln2_g, ln2_b, ff_w1, ff_b1, ff_w2, ff_b2;
  };
  std::vector<Block> blocks_;
  nn::ParamStore::Handle final_ln_g_, final_ln_b_;
  nn::ParamStore::Handle head_w_, head_b_;
};

}  // namespace iceberg::gtnp
