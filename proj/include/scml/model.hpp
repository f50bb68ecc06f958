#ifndef SCML_MODEL_HPP
#define SCML_MODEL_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "scml/autodiff.hpp"
#include "scml/synthdata.hpp"

namespace scml {

struct ModelConfig {
  int descriptor_dim = 16;
  int vocab_size = 64;
  int embed_dim = 32;    // d
  int hidden_dim = 64;   // h
  int num_answers = 12;  // |A|
  std::uint64_t seed = 0;
};

/// Toy cross-modal model: linear visual projection, token embeddings, a two-layer ReLU fusion
/// MLP over mean-pooled features and a linear answer head.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }

  Tensor visual_proj;  // descriptor_dim x d
  Tensor token_embed;  // vocab x d
  Tensor fuse_w1;      // 2d x h
  Tensor fuse_b1;      // h
  Tensor fuse_w2;      // h x h
  Tensor fuse_b2;      // h
  Tensor head_w;       // h x |A|
  Tensor head_b;       // |A|

  /// Parameters in a fixed order; names are the checkpoint keys.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;

 private:
  ModelConfig cfg_;
};

/// Parameters bound as leaves of one graph. Every forward path built from the same ParamVars
/// shares weights.
struct ParamVars {
  Var visual_proj, token_embed, fuse_w1, fuse_b1, fuse_w2, fuse_b2, head_w, head_b;
  const ModelParams* source = nullptr;

  std::vector<Var> all() const {
    return {visual_proj, token_embed, fuse_w1, fuse_b1, fuse_w2, fuse_b2, head_w, head_b};
  }
};

ParamVars bind(Graph& g, const ModelParams& params, bool requires_grad = true);

struct Encoded {
  Var visual;    // n x d
  Var question;  // m x d
};

Encoded encode(const ParamVars& p, const VQAInstance& inst);

/// Answer logits from masked visual rows and question rows. The visual pool is
/// sum(rows) / max(sum(row_weights), 1): the mean over selected rows for a 0/1 mask, the weighted
/// mean for a soft mask with total weight >= 1, and the zero vector when every row is masked.
Var fuse_and_predict(const ParamVars& p, Var visual_masked, Var row_weights, Var question);

}  // namespace scml

#endif  // SCML_MODEL_HPP
