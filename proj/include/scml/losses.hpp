#ifndef SCML_LOSSES_HPP
#define SCML_LOSSES_HPP

#include <optional>
#include <vector>

#include "scml/autodiff.hpp"
#include "scml/selection.hpp"

namespace scml {

struct LossConfig {
  double alpha = 2.0;
  double beta = 50.0;
  double lambda_margin = 0.5;
  double gamma = 1.0;
  int top_n = 1;

  void validate() const;
};

/// Scalar loss components as graph nodes, so the total can be differentiated.
struct LossTerms {
  Var loss_pos, loss_neg, loss_ms, total;
};

struct LossBreakdown {
  double loss_pos = 0.0;
  double loss_neg = 0.0;
  double loss_ms = 0.0;
  double total = 0.0;

  static LossBreakdown of(const LossTerms& t) {
    return {t.loss_pos.value()[0], t.loss_neg.value()[0], t.loss_ms.value()[0], t.total.value()[0]};
  }
};

/// Multi-similarity loss averaged over anchors:
///   (1/a) sum_i [ (1/alpha) log(1 + sum_{k in P_i} e^{-alpha (S_ik - lambda)})
///               + (1/beta)  log(1 + sum_{k in N_i} e^{ beta (S_ik - lambda)}) ]
/// with S_ik the cosine similarity between anchor row i and sample row k. positives[i] and
/// negatives[i] are (p x d) matrices; zero-row matrices are empty sets.
Var ms_loss(Var anchors, const std::vector<Var>& positives, const std::vector<Var>& negatives,
            const LossConfig& cfg);

/// Mean over entries of the logit-form binary cross-entropy. Targets must lie in [0, 1].
Var vqa_bce(Var logits, const Tensor& targets);

/// Indices of the n largest logits; ties go to the lower index.
std::vector<std::size_t> top_n_indices(const Tensor& logits, int n);

/// Labeled answers with the top-n positive-path predictions removed. Detached (plain tensor).
Tensor pseudo_labels(const Tensor& pred_pos_logits, const Tensor& answers, int top_n);

/// Which optional components contribute. Disabled components are constant zeros.
struct LossComponents {
  bool neg = true;
  bool ms = true;
};

/// loss_pos = bce(pred_pos, ans); loss_neg = bce(pred_neg, pseudo); loss_ms over one anchor
/// (the mean question row) with P = hard-selected rows of `visual`, N = the rest;
/// total = loss_pos + gamma (loss_neg + loss_ms). `frozen_pseudo` overrides the pseudo labels.
LossTerms total_loss(Var pred_pos, Var pred_neg, const Tensor& answers, const SelectionResult& sel, Var visual,
                     Var question, const LossConfig& cfg, LossComponents components = {},
                     const std::optional<Tensor>& frozen_pseudo = std::nullopt);

/// One-anchor ms_loss inputs for an instance: anchor = mean question row (1 x d).
Var question_anchor(Var question);

}  // namespace scml

#endif  // SCML_LOSSES_HPP
