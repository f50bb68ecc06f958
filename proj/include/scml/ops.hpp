#ifndef SCML_OPS_HPP
#define SCML_OPS_HPP

#include <cstddef>
#include <vector>

#include "scml/autodiff.hpp"

// Primitive differentiable ops. Every op records a backward rule on the graph of its inputs.
// Tensors are rank 0-2; there is no general broadcasting.
namespace scml::ops {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_scalar(Var a, double c);
Var mul_scalar(Var a, double c);
/// a * s for a scalar-valued Var s.
Var scale(Var a, Var s);

/// 2-D x 2-D, 1-D (row vector) x 2-D, or 2-D x 1-D (matrix-vector).
Var matmul(Var a, Var b);
Var transpose(Var a);

Var sum(Var a);
/// For a matrix: axis 0 reduces rows (result has `cols` entries), axis 1 reduces columns.
Var sum(Var a, std::size_t axis);
Var mean(Var a);
Var mean(Var a, std::size_t axis);

Var exp(Var a);
/// Natural log; every entry must be > 0.
Var log(Var a);
Var sigmoid(Var a);
Var relu(Var a);
/// log(1 + e^a), evaluated without overflow.
Var softplus(Var a);
/// 1 / a; every entry must be nonzero.
Var reciprocal(Var a);
Var clamp_min(Var a, double lo);

Var softmax(Var a, std::size_t axis = 0);
/// Divides each slice along `axis` by its Euclidean norm. Zero-norm slices are a DomainError.
Var l2_normalize(Var a, std::size_t axis = 0);

Var concat(Var a, Var b, std::size_t axis = 0);
/// Rows of a (n x d) scaled by mask (n): out[r, :] = a[r, :] * mask[r].
Var mask_rows(Var a, Var mask);
/// out[j] = sum_{i >= j} a[i] along axis.
Var reversed_cumsum(Var a, std::size_t axis = 0);
/// Entries (1-D) or rows (2-D) of a at the given indices, in order. Repeats allowed.
Var gather(Var a, const std::vector<std::size_t>& indices);

/// log(1 + sum_i e^{a_i}) as a scalar, shifted by the max so large exponents do not overflow.
/// An empty input yields 0.
Var log1p_sum_exp(Var a);
/// Elementwise max(z,0) - z t + log1p(e^{-|z|}); no gradient flows into the targets t.
Var bce_with_logits(Var z, Var targets);
/// Forward: one-hot at the argmax of a (lowest index on ties). Backward: identity.
Var straight_through_onehot(Var a);

/// softmax((logits + noise) / temperature). `noise` carries pre-sampled standard Gumbel
/// values so the op is deterministic. In hard mode the forward value is one-hot at the
/// argmax and the gradient is that of the soft sample.
Var gumbel_softmax(Var logits, double temperature, bool hard, const Tensor& noise);

}  // namespace scml::ops

#endif  // SCML_OPS_HPP
