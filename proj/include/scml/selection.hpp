#ifndef SCML_SELECTION_HPP
#define SCML_SELECTION_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "scml/autodiff.hpp"

namespace scml {

/// What the adaptive cut samples over, per position j of the descending-sorted similarity s.
enum class CutScoring {
  /// logit_j = s_j, the sorted similarity itself.
  kSortedSim,
  /// logit_j = s_j - s_{j+1} (last position 0): the drop in similarity right after position j.
  kSimGap,
};

std::string to_string(CutScoring s);
CutScoring cut_scoring_from_string(const std::string& s);

struct SelectionResult {
  Var sim;       // n
  Var mask;      // n, 1 = question-relevant
  Var positive;  // n x d, V rows scaled by mask
  Var negative;  // n x d, V rows scaled by 1 - mask
  int k_chosen = 0;
  /// order[j] = original index of the feature at sorted position j (descending sim).
  std::vector<std::size_t> order;

  /// Original indices of the hard-selected features: order[0 .. k_chosen).
  std::vector<std::size_t> selected() const;
  /// Original indices of the rest, in sorted order.
  std::vector<std::size_t> rejected() const;
};

/// sim[k] = sum_s cos(V_k, Q_s). Zero rows raise a DomainError naming the row.
Var similarity_scores(Var visual, Var question);

/// Indices sorted by descending value; equal values keep the lower index first.
std::vector<std::size_t> argsort_descending(const Tensor& values);

/// Mask of ones at the k largest sims. The mask is a constant: no gradient reaches sim.
SelectionResult fixed_topk_split(Var visual, Var sim, int k);

/// Cut-point selection over the sorted similarity vector. A (near) one-hot y over sorted
/// positions is drawn with Gumbel-Softmax; the sorted mask is reversed_cumsum(y), i.e. ones up
/// to and including the cut; it is then mapped back to original positions.
/// `noise` holds standard Gumbel draws per sorted position.
SelectionResult adaptive_split(Var visual, Var sim, double temperature, const Tensor& noise, bool hard,
                               CutScoring scoring = CutScoring::kSortedSim);

/// positive/negative from an arbitrary mask Var; used by both splits and by gradient checks.
SelectionResult split_with_mask(Var visual, Var sim, Var mask, std::vector<std::size_t> order, int k_chosen);

}  // namespace scml

#endif  // SCML_SELECTION_HPP
