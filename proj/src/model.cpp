#include "scml/model.hpp"

#include <cmath>
#include <stdexcept>

#include "scml/ops.hpp"
#include "scml/rng.hpp"

namespace scml {

namespace {

Tensor glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(Shape{fan_in, fan_out});
  for (double& x : t.data()) x = rng.uniform(-limit, limit);
  return t;
}

}  // namespace

ModelParams::ModelParams(const ModelConfig& cfg) : cfg_(cfg) {
  if (cfg.descriptor_dim < 1 || cfg.vocab_size < 1 || cfg.embed_dim < 1 || cfg.hidden_dim < 1 ||
      cfg.num_answers < 1) {
    throw std::invalid_argument("model config: all sizes must be positive");
  }
  const auto D = static_cast<std::size_t>(cfg.descriptor_dim);
  const auto V = static_cast<std::size_t>(cfg.vocab_size);
  const auto d = static_cast<std::size_t>(cfg.embed_dim);
  const auto h = static_cast<std::size_t>(cfg.hidden_dim);
  const auto A = static_cast<std::size_t>(cfg.num_answers);

  Rng rng(derive_seed(cfg.seed, 0x6d6f64656cULL));
  visual_proj = glorot(rng, D, d);
  token_embed = Tensor(Shape{V, d});
  for (double& x : token_embed.data()) x = rng.normal() / std::sqrt(static_cast<double>(d));
  fuse_w1 = glorot(rng, 2 * d, h);
  fuse_b1 = Tensor(Shape{h});
  fuse_w2 = glorot(rng, h, h);
  fuse_b2 = Tensor(Shape{h});
  head_w = glorot(rng, h, A);
  head_b = Tensor(Shape{A});
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named() {
  return {{"visual_proj", &visual_proj}, {"token_embed", &token_embed}, {"fuse_w1", &fuse_w1},
          {"fuse_b1", &fuse_b1},         {"fuse_w2", &fuse_w2},         {"fuse_b2", &fuse_b2},
          {"head_w", &head_w},           {"head_b", &head_b}};
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named() const {
  return {{"visual_proj", &visual_proj}, {"token_embed", &token_embed}, {"fuse_w1", &fuse_w1},
          {"fuse_b1", &fuse_b1},         {"fuse_w2", &fuse_w2},         {"fuse_b2", &fuse_b2},
          {"head_w", &head_w},           {"head_b", &head_b}};
}

ParamVars bind(Graph& g, const ModelParams& params, bool requires_grad) {
  ParamVars p;
  p.visual_proj = g.leaf(params.visual_proj, requires_grad);
  p.token_embed = g.leaf(params.token_embed, requires_grad);
  p.fuse_w1 = g.leaf(params.fuse_w1, requires_grad);
  p.fuse_b1 = g.leaf(params.fuse_b1, requires_grad);
  p.fuse_w2 = g.leaf(params.fuse_w2, requires_grad);
  p.fuse_b2 = g.leaf(params.fuse_b2, requires_grad);
  p.head_w = g.leaf(params.head_w, requires_grad);
  p.head_b = g.leaf(params.head_b, requires_grad);
  p.source = &params;
  return p;
}

Encoded encode(const ParamVars& p, const VQAInstance& inst) {
  const Tensor& proj = p.visual_proj.value();
  if (inst.n_objects() == 0) throw ShapeError("encode: instance has no objects");
  if (inst.question.empty()) throw ShapeError("encode: instance has no question tokens");
  if (inst.objects.dim(1) != proj.dim(0)) {
    throw ShapeError("encode: descriptor shape " + shape_str(inst.objects.shape()) + " vs projection " +
                     shape_str(proj.shape()));
  }
  const std::size_t vocab = p.token_embed.value().dim(0);
  std::vector<std::size_t> ids;
  ids.reserve(inst.question.size());
  for (int tok : inst.question) {
    if (tok < 0 || static_cast<std::size_t>(tok) >= vocab) {
      throw std::out_of_range("encode: token id " + std::to_string(tok) + " outside vocabulary of " +
                              std::to_string(vocab));
    }
    ids.push_back(static_cast<std::size_t>(tok));
  }
  Graph& g = p.visual_proj.graph();
  Var raw = g.constant(inst.objects);
  return {ops::matmul(raw, p.visual_proj), ops::gather(p.token_embed, ids)};
}

Var fuse_and_predict(const ParamVars& p, Var visual_masked, Var row_weights, Var question) {
  const std::size_t d = p.visual_proj.value().dim(1);
  const Tensor& vm = visual_masked.value();
  const Tensor& q = question.value();
  if (vm.rank() != 2 || vm.dim(1) != d || q.rank() != 2 || q.dim(1) != d) {
    throw ShapeError("fuse_and_predict: shape mismatch " + shape_str(vm.shape()) + " vs " + shape_str(q.shape()) +
                     " for embed dim " + std::to_string(d));
  }
  if (row_weights.value().rank() != 1 || row_weights.value().dim(0) != vm.dim(0)) {
    throw ShapeError("fuse_and_predict: row weights " + shape_str(row_weights.shape()) + " vs visual " +
                     shape_str(vm.shape()));
  }
  Var denom = ops::clamp_min(ops::sum(row_weights), 1.0);
  Var pooled_v = ops::scale(ops::sum(visual_masked, 0), ops::reciprocal(denom));
  Var pooled_q = ops::mean(question, 0);
  Var joint = ops::concat(pooled_v, pooled_q);
  Var h1 = ops::relu(ops::add(ops::matmul(joint, p.fuse_w1), p.fuse_b1));
  Var h2 = ops::relu(ops::add(ops::matmul(h1, p.fuse_w2), p.fuse_b2));
  return ops::add(ops::matmul(h2, p.head_w), p.head_b);
}

}  // namespace scml
