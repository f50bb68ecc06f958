#include "scml/losses.hpp"

#include <stdexcept>

#include "scml/ops.hpp"

namespace scml {

void LossConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("loss config: alpha must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("loss config: beta must be > 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("loss config: gamma must be >= 0");
  if (top_n < 1) throw std::invalid_argument("loss config: top_n must be >= 1");
}

namespace {

// (1/scale) * log(1 + sum_k e^{sign * scale * (S_k - margin)})
Var pair_term(Var sims, double scale, double sign, double margin) {
  Var shifted = ops::mul_scalar(ops::add_scalar(sims, -margin), sign * scale);
  return ops::mul_scalar(ops::log1p_sum_exp(shifted), 1.0 / scale);
}

Var zero_scalar(Graph& g) { return g.constant(Tensor::scalar(0.0)); }

}  // namespace

Var ms_loss(Var anchors, const std::vector<Var>& positives, const std::vector<Var>& negatives,
            const LossConfig& cfg) {
  cfg.validate();
  const Tensor& av = anchors.value();
  if (av.rank() != 2 || av.dim(0) == 0) throw ShapeError("ms_loss: empty anchor set " + shape_str(av.shape()));
  const std::size_t a = av.dim(0);
  const std::size_t d = av.dim(1);
  if (positives.size() != a || negatives.size() != a) {
    throw ShapeError("ms_loss: " + std::to_string(a) + " anchors but " + std::to_string(positives.size()) +
                     " positive and " + std::to_string(negatives.size()) + " negative sets");
  }
  for (const auto* sets : {&positives, &negatives})
    for (const Var& s : *sets)
      if (s.value().rank() != 2 || s.value().dim(1) != d) {
        throw ShapeError("ms_loss: sample set " + shape_str(s.shape()) + " vs anchors " + shape_str(av.shape()));
      }

  Var an = ops::l2_normalize(anchors, 1);
  Graph& g = anchors.graph();
  Var acc = zero_scalar(g);
  for (std::size_t i = 0; i < a; ++i) {
    Var anchor_col = ops::transpose(ops::gather(an, {i}));  // d x 1
    if (positives[i].value().dim(0) > 0) {
      Var s = ops::matmul(ops::l2_normalize(positives[i], 1), anchor_col);
      acc = ops::add(acc, pair_term(s, cfg.alpha, -1.0, cfg.lambda_margin));
    }
    if (negatives[i].value().dim(0) > 0) {
      Var s = ops::matmul(ops::l2_normalize(negatives[i], 1), anchor_col);
      acc = ops::add(acc, pair_term(s, cfg.beta, 1.0, cfg.lambda_margin));
    }
  }
  return ops::mul_scalar(acc, 1.0 / static_cast<double>(a));
}

Var vqa_bce(Var logits, const Tensor& targets) {
  if (!logits.value().same_shape(targets)) {
    throw ShapeError("vqa_bce: shape mismatch " + shape_str(logits.shape()) + " vs " + shape_str(targets.shape()));
  }
  for (double t : targets.data()) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("vqa_bce: target " + std::to_string(t) + " outside [0, 1]");
  }
  return ops::mean(ops::bce_with_logits(logits, logits.graph().constant(targets)));
}

std::vector<std::size_t> top_n_indices(const Tensor& logits, int n) {
  if (n < 1 || static_cast<std::size_t>(n) > logits.size()) {
    throw std::out_of_range("top_n: n = " + std::to_string(n) + " outside [1, " + std::to_string(logits.size()) + "]");
  }
  auto order = argsort_descending(logits);
  order.resize(static_cast<std::size_t>(n));
  return order;
}

Tensor pseudo_labels(const Tensor& pred_pos_logits, const Tensor& answers, int top_n) {
  if (!pred_pos_logits.same_shape(answers)) {
    throw ShapeError("pseudo_labels: shape mismatch " + shape_str(pred_pos_logits.shape()) + " vs " +
                     shape_str(answers.shape()));
  }
  Tensor out = answers;
  for (std::size_t i : top_n_indices(pred_pos_logits, top_n)) out[i] = 0.0;
  return out;
}

Var question_anchor(Var question) {
  const std::size_t m = question.value().rows();
  if (question.value().rank() != 2 || m == 0) throw ShapeError("question_anchor: bad question " + shape_str(question.shape()));
  Var avg = question.graph().constant(Tensor(Shape{1, m}, 1.0 / static_cast<double>(m)));
  return ops::matmul(avg, question);
}

LossTerms total_loss(Var pred_pos, Var pred_neg, const Tensor& answers, const SelectionResult& sel, Var visual,
                     Var question, const LossConfig& cfg, LossComponents components,
                     const std::optional<Tensor>& frozen_pseudo) {
  cfg.validate();
  Graph& g = pred_pos.graph();
  LossTerms t;
  t.loss_pos = vqa_bce(pred_pos, answers);
  if (components.neg) {
    const Tensor pseudo = frozen_pseudo ? *frozen_pseudo : pseudo_labels(pred_pos.value(), answers, cfg.top_n);
    t.loss_neg = vqa_bce(pred_neg, pseudo);
  } else {
    t.loss_neg = zero_scalar(g);
  }
  if (components.ms) {
    Var pos_rows = ops::gather(visual, sel.selected());
    Var neg_rows = ops::gather(visual, sel.rejected());
    t.loss_ms = ms_loss(question_anchor(question), {pos_rows}, {neg_rows}, cfg);
  } else {
    t.loss_ms = zero_scalar(g);
  }
  t.total = ops::add(t.loss_pos, ops::mul_scalar(ops::add(t.loss_neg, t.loss_ms), cfg.gamma));
  return t;
}

}  // namespace scml
