#include "scml/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "scml/ops.hpp"

namespace scml {

namespace {

void require_nonzero_rows(const Tensor& t, const char* which) {
  for (std::size_t r = 0; r < t.rows(); ++r) {
    double sq = 0.0;
    for (double x : t.row(r)) sq += x * x;
    if (!(sq > 0.0)) {
      throw DomainError(std::string("similarity_scores: ") + which + " row " + std::to_string(r) +
                        " has zero norm; cosine is undefined");
    }
  }
}

}  // namespace

std::string to_string(CutScoring s) { return s == CutScoring::kSortedSim ? "sorted_sim" : "sim_gap"; }

CutScoring cut_scoring_from_string(const std::string& s) {
  if (s == "sorted_sim") return CutScoring::kSortedSim;
  if (s == "sim_gap") return CutScoring::kSimGap;
  throw std::invalid_argument("unknown cut scoring \"" + s + "\" (expected sorted_sim or sim_gap)");
}

std::vector<std::size_t> SelectionResult::selected() const {
  return {order.begin(), order.begin() + k_chosen};
}

std::vector<std::size_t> SelectionResult::rejected() const {
  return {order.begin() + k_chosen, order.end()};
}

Var similarity_scores(Var visual, Var question) {
  const Tensor& v = visual.value();
  const Tensor& q = question.value();
  if (v.rank() != 2 || q.rank() != 2 || v.dim(1) != q.dim(1)) {
    throw ShapeError("similarity_scores: shape mismatch " + shape_str(v.shape()) + " vs " + shape_str(q.shape()));
  }
  require_nonzero_rows(v, "visual");
  require_nonzero_rows(q, "question");
  Var vn = ops::l2_normalize(visual, 1);
  Var qn = ops::l2_normalize(question, 1);
  return ops::sum(ops::matmul(vn, ops::transpose(qn)), 1);
}

std::vector<std::size_t> argsort_descending(const Tensor& values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return idx;
}

SelectionResult split_with_mask(Var visual, Var sim, Var mask, std::vector<std::size_t> order, int k_chosen) {
  SelectionResult res;
  res.sim = sim;
  res.mask = mask;
  res.positive = ops::mask_rows(visual, mask);
  res.negative = ops::mask_rows(visual, ops::add_scalar(ops::mul_scalar(mask, -1.0), 1.0));
  res.k_chosen = k_chosen;
  res.order = std::move(order);
  return res;
}

SelectionResult fixed_topk_split(Var visual, Var sim, int k) {
  const Tensor& s = sim.value();
  const std::size_t n = s.size();
  if (s.rank() != 1 || visual.value().rank() != 2 || visual.value().dim(0) != n) {
    throw ShapeError("fixed_topk_split: shape mismatch " + shape_str(visual.shape()) + " vs " + shape_str(s.shape()));
  }
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw std::out_of_range("fixed_topk_split: k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  auto order = argsort_descending(s);
  Tensor mask(Shape{n});
  for (int j = 0; j < k; ++j) mask[order[static_cast<std::size_t>(j)]] = 1.0;
  return split_with_mask(visual, sim, visual.graph().constant(std::move(mask)), std::move(order), k);
}

SelectionResult adaptive_split(Var visual, Var sim, double temperature, const Tensor& noise, bool hard,
                               CutScoring scoring) {
  const Tensor& s = sim.value();
  const std::size_t n = s.size();
  if (s.rank() != 1 || visual.value().rank() != 2 || visual.value().dim(0) != n) {
    throw ShapeError("adaptive_split: shape mismatch " + shape_str(visual.shape()) + " vs " + shape_str(s.shape()));
  }
  if (!(temperature > 0.0)) {
    throw DomainError("adaptive_split: temperature must be > 0, got " + std::to_string(temperature));
  }
  if (noise.rank() != 1 || noise.size() != n) {
    throw ShapeError("adaptive_split: noise shape " + shape_str(noise.shape()) + " vs sim " + shape_str(s.shape()));
  }
  Graph& g = sim.graph();
  auto order = argsort_descending(s);
  Var sorted = ops::gather(sim, order);

  Var logits = sorted;
  if (scoring == CutScoring::kSimGap) {
    if (n == 1) {
      logits = g.constant(Tensor(Shape{1}));
    } else {
      std::vector<std::size_t> head(n - 1), tail(n - 1);
      std::iota(head.begin(), head.end(), 0);
      std::iota(tail.begin(), tail.end(), 1);
      Var gaps = ops::sub(ops::gather(sorted, head), ops::gather(sorted, tail));
      logits = ops::concat(gaps, g.constant(Tensor(Shape{1})));
    }
  }

  Var cut = ops::gumbel_softmax(logits, temperature, hard, noise);
  Var sorted_mask = ops::reversed_cumsum(cut);

  std::vector<std::size_t> inverse(n);
  for (std::size_t j = 0; j < n; ++j) inverse[order[j]] = j;
  Var mask = ops::gather(sorted_mask, inverse);

  const Tensor& y = cut.value();
  const auto c = static_cast<int>(std::max_element(y.raw().begin(), y.raw().end()) - y.raw().begin());
  return split_with_mask(visual, sim, mask, std::move(order), c + 1);
}

}  // namespace scml
