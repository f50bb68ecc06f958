#include "scml/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace scml::ops {

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

void require_rank(const char* op, const Tensor& a, std::size_t lo, std::size_t hi) {
  if (a.rank() < lo || a.rank() > hi) {
    throw ShapeError(std::string(op) + ": unsupported shape " + shape_str(a.shape()));
  }
}

void require_axis(const char* op, const Tensor& a, std::size_t axis) {
  if (axis >= std::max<std::size_t>(a.rank(), 1) || (a.rank() == 0 && axis != 0)) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " invalid for " + shape_str(a.shape()));
  }
}

Graph& graph_of(Var a, Var b) {
  Graph& g = a.graph();
  if (&b.graph() != &g) throw std::logic_error("ops: operands live on different graphs");
  return g;
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out = Tensor::zeros_like(a);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

/// Unary elementwise op whose derivative is expressed through (x, y).
template <class Fwd, class Deriv>
Var unary(const char* name, Var a, Fwd fwd, Deriv deriv) {
  Tensor out = map(a.value(), fwd);
  return a.graph().record(name, std::move(out), {a}, [deriv](const BackwardContext& ctx) {
    if (!ctx.in_grad[0]) return;
    const Tensor& x = *ctx.in[0];
    Tensor& gx = *ctx.in_grad[0];
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += ctx.out_grad[i] * deriv(x[i], ctx.out[i]);
  });
}

// Views a rank-0/1/2 tensor as (outer, len, stride) slices along `axis`: slice s, element j lives at
// base(s) + j * stride.
struct AxisLayout {
  std::size_t slices;
  std::size_t len;
  std::size_t stride;
  bool contiguous;
  std::size_t base(std::size_t s) const { return contiguous ? s * len : s; }
};

AxisLayout layout(const Tensor& a, std::size_t axis) {
  if (a.rank() <= 1) return {1, a.size(), 1, true};
  if (axis == 0) return {a.dim(1), a.dim(0), a.dim(1), false};
  return {a.dim(0), a.dim(1), 1, true};
}

Shape reduced_shape(const Tensor& a, std::size_t axis) {
  if (a.rank() <= 1) return Shape{};
  return Shape{axis == 0 ? a.dim(1) : a.dim(0)};
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  out += b.value();
  return graph_of(a, b).record("add", std::move(out), {a, b}, [](const BackwardContext& ctx) {
    for (auto* g : ctx.in_grad)
      if (g) *g += ctx.out_grad;
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return graph_of(a, b).record("sub", std::move(out), {a, b}, [](const BackwardContext& ctx) {
    if (ctx.in_grad[0]) *ctx.in_grad[0] += ctx.out_grad;
    if (ctx.in_grad[1]) {
      Tensor& g = *ctx.in_grad[1];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= ctx.out_grad[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return graph_of(a, b).record("mul", std::move(out), {a, b}, [](const BackwardContext& ctx) {
    for (int k = 0; k < 2; ++k) {
      if (!ctx.in_grad[k]) continue;
      const Tensor& other = *ctx.in[1 - k];
      Tensor& g = *ctx.in_grad[k];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += ctx.out_grad[i] * other[i];
    }
  });
}

Var add_scalar(Var a, double c) {
  return unary("add_scalar", a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var mul_scalar(Var a, double c) {
  return unary("mul_scalar", a, [c](double x) { return x * c; }, [c](double, double) { return c; });
}

Var scale(Var a, Var s) {
  if (s.value().size() != 1) {
    throw ShapeError("scale: factor must be scalar, got " + shape_str(s.shape()) + " for operand " +
                     shape_str(a.shape()));
  }
  const double f = s.value()[0];
  Tensor out = map(a.value(), [f](double x) { return x * f; });
  return graph_of(a, s).record("scale", std::move(out), {a, s}, [](const BackwardContext& ctx) {
    const Tensor& x = *ctx.in[0];
    const double f = (*ctx.in[1])[0];
    if (ctx.in_grad[0]) {
      Tensor& g = *ctx.in_grad[0];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += ctx.out_grad[i] * f;
    }
    if (ctx.in_grad[1]) {
      double acc = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) acc += ctx.out_grad[i] * x[i];
      (*ctx.in_grad[1])[0] += acc;
    }
  });
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool a_vec = av.rank() == 1;
  const bool b_vec = bv.rank() == 1;
  if (av.rank() == 0 || bv.rank() == 0 || (a_vec && b_vec)) {
    throw ShapeError("matmul: unsupported shapes " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  }
  const std::size_t n = a_vec ? 1 : av.dim(0);
  const std::size_t k = a_vec ? av.dim(0) : av.dim(1);
  const std::size_t kb = bv.dim(0);
  const std::size_t m = b_vec ? 1 : bv.dim(1);
  if (k != kb) {
    throw ShapeError("matmul: shape mismatch " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  }
  Shape out_shape = a_vec ? Shape{m} : (b_vec ? Shape{n} : Shape{n, m});
  Tensor out(out_shape);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double x = av[i * k + p];
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) out[i * m + j] += x * bv[p * m + j];
    }
  return graph_of(a, b).record("matmul", std::move(out), {a, b}, [n, k, m](const BackwardContext& ctx) {
    const Tensor& A = *ctx.in[0];
    const Tensor& B = *ctx.in[1];
    const Tensor& G = ctx.out_grad;
    if (ctx.in_grad[0]) {  // dA = G B^T
      Tensor& gA = *ctx.in_grad[0];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += G[i * m + j] * B[p * m + j];
          gA[i * k + p] += acc;
        }
    }
    if (ctx.in_grad[1]) {  // dB = A^T G
      Tensor& gB = *ctx.in_grad[1];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double x = A[i * k + p];
          if (x == 0.0) continue;
          for (std::size_t j = 0; j < m; ++j) gB[p * m + j] += x * G[i * m + j];
        }
    }
  });
}

Var transpose(Var a) {
  const Tensor& av = a.value();
  require_rank("transpose", av, 2, 2);
  const std::size_t r = av.dim(0), c = av.dim(1);
  Tensor out(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  return a.graph().record("transpose", std::move(out), {a}, [r, c](const BackwardContext& ctx) {
    if (!ctx.in_grad[0]) return;
    Tensor& g = *ctx.in_grad[0];
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += ctx.out_grad[j * r + i];
  });
}

Var sum(Var a) {
  double acc = 0.0;
  for (double x : a.value().data()) acc += x;
  return a.graph().record("sum", Tensor::scalar(acc), {a}, [](const BackwardContext& ctx) {
    if (!ctx.in_grad[0]) return;
    const double g = ctx.out_grad[0];
    for (double& v : ctx.in_grad[0]->data()) v += g;
  });
}

Var sum(Var a, std::size_t axis) {
  const Tensor& av = a.value();
  require_axis("sum", av, axis);
  const AxisLayout lay = layout(av, axis);
  Tensor out(reduced_shape(av, axis));
  for (std::size_t s = 0; s < lay.slices; ++s) {
    double acc = 0.0;
    for (std::size_t j = 0; j < lay.len; ++j) acc += av[lay.base(s) + j * lay.stride];
    out[s] = acc;
  }
  return a.graph().record("sum_axis", std::move(out), {a}, [lay](const BackwardContext& ctx) {
    if (!ctx.in_grad[0]) return;
    Tensor& g = *ctx.in_grad[0];
    for (std::size_t s = 0; s < lay.slices; ++s)
      for (std::size_t j = 0; j < lay.len; ++j) g[lay.base(s) + j * lay.stride] += ctx.out_grad[s];
  });
}

Var mean(Var a) {
  if (a.value().size() == 0) throw ShapeError("mean: empty tensor " + shape_str(a.shape()));
  return mul_scalar(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var mean(Var a, std::size_t axis) {
  const std::size_t len = layout(a.value(), axis).len;
  if (len == 0) throw ShapeError("mean: empty axis in " + shape_str(a.shape()));
  return mul_scalar(sum(a, axis), 1.0 / static_cast<double>(len));
}

Var exp(Var a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  for (std::size_t i = 0; i < a.value().size(); ++i) {
    if (!(a.value()[i] > 0.0)) {
      throw DomainError("log: entry " + std::to_string(i) + " = " + std::to_string(a.value()[i]) +
                        " is outside (0, inf)");
    }
  }
  return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var sigmoid(Var a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var softplus(Var a) {
  return unary(
      "softplus", a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); });
}

Var reciprocal(Var a) {
  for (std::size_t i = 0; i < a.value().size(); ++i) {
    if (a.value()[i] == 0.0) throw DomainError("reciprocal: entry " + std::to_string(i) + " is zero");
  }
  return unary("reciprocal", a, [](double x) { return 1.0 / x; }, [](double, double y) { return -y * y; });
}

Var clamp_min(Var a, double lo) {
  return unary("clamp_min", a, [lo](double x) { return x < lo ? lo : x; },
               [lo](double x, double) { return x < lo ? 0.0 : 1.0; });
}

Var softmax(Var a, std::size_t axis) {
  const Tensor& av = a.value();
  require_axis("softmax", av, axis);
  const AxisLayout lay = layout(av, axis);
  Tensor out = Tensor::zeros_like(av);
  for (std::size_t s = 0; s < lay.slices; ++s) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < lay.len; ++j) mx = std::max(mx, av[lay.base(s) + j * lay.stride]);
    double z = 0.0;
    for (std::size_t j = 0; j < lay.len; ++j) {
      const std::size_t i = lay.base(s) + j * lay.stride;
      out[i] = std::exp(av[i] - mx);
      z += out[i];
    }
    for (std::size_t j = 0; j < lay.len; ++j) out[lay.base(s) + j * lay.stride] /= z;
  }
  return a.graph().record("softmax", std::move(out), {a}, [lay](const BackwardContext& ctx) {
    if (!ctx.in_grad[0]) return;
    Tensor& g = *ctx.in_grad[0];
    const Tensor& y = ctx.out;
    for (std::size_t s = 0; s < lay.slices; ++s) {
      double dot = 0.0;
      for (std::size_t j = 0; j < lay.len; ++j) {
        const std::size_t i = lay.base(s) + j * lay.stride;
        dot += ctx.out_grad[i] * y[i];
      }
      for (std::size_t j = 0; j < lay.len; ++j) {
        const std::size_t i = lay.base(s) + j * lay.stride;
        g[i] += y[i] * (ctx.out_grad[i] - dot);
      }
    }
  });
}

Var l2_normalize(Var a, std::size_t axis) {
  const Tensor& av = a.value();
  require_axis("l2_normalize", av, axis);
  const AxisLayout lay = layout(av, axis);
  std::vector<double> norms(lay.slices);
  Tensor out = Tensor::zeros_like(av);
  for (std::size_t s = 0; s < lay.slices; ++s) {
    double sq = 0.0;
    for (std::size_t j = 0; j < lay.len; ++j) {
      const double x = av[lay.base(s) + j * lay.stride];
      sq += x * x;
    }
    const double nrm = std::sqrt(sq);
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
      throw DomainError("l2_normalize: slice " + std::to_string(s) + " of " + shape_str(av.shape()) +
                        " has zero or non-finite norm");
    }
    norms[s] = nrm;
    for (std::size_t j = 0; j < lay.len; ++j) {
      const std::size_t i = lay.base(s) + j * lay.stride;
      out[i] = av[i] / nrm;
    }
  }
  return a.graph().record("l2_normalize", std::move(out), {a}, [lay, norms](const BackwardContext& ctx) {
    if (!ctx.in_grad[0]) return;
    Tensor& g = *ctx.in_grad[0];
    const Tensor& y = ctx.out;
    for (std::size_t s = 0; s < lay.slices; ++s) {
      double dot = 0.0;
      for (std::size_t j = 0; j < lay.len; ++j) {
        const std::size_t i = lay.base(s) + j * lay.stride;
        dot += ctx.out_grad[i] * y[i];
      }
      for (std::size_t j = 0; j < lay.len; ++j) {
        const std::size_t i = lay.base(s) + j * lay.stride;
        g[i] += (ctx.out_grad[i] - y[i] * dot) / norms[s];
      }
    }
  });
}

Var concat(Var a, Var b, std::size_t axis) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != bv.rank() || av.rank() == 0) {
    throw ShapeError("concat: shape mismatch " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  }
  require_axis("concat", av, axis);
  if (av.rank() == 1) {
    std::vector<double> data(av.raw());
    data.insert(data.end(), bv.raw().begin(), bv.raw().end());
    const std::size_t na = av.size();
    return graph_of(a, b).record("concat", Tensor::vector(std::move(data)), {a, b}, [na](const BackwardContext& ctx) {
      for (std::size_t i = 0; i < ctx.out_grad.size(); ++i) {
        if (i < na) {
          if (ctx.in_grad[0]) (*ctx.in_grad[0])[i] += ctx.out_grad[i];
        } else if (ctx.in_grad[1]) {
          (*ctx.in_grad[1])[i - na] += ctx.out_grad[i];
        }
      }
    });
  }
  const std::size_t other = 1 - axis;
  if (av.dim(other) != bv.dim(other)) {
    throw ShapeError("concat: shape mismatch " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  }
  const std::size_t ra = av.dim(0), ca = av.dim(1), rb = bv.dim(0), cb = bv.dim(1);
  const Shape shape = axis == 0 ? Shape{ra + rb, ca} : Shape{ra, ca + cb};
  Tensor out(shape);
  const std::size_t oc = shape[1];
  // Each input entry (r, c) maps to output (r + roff, c + coff).
  const std::size_t roff = axis == 0 ? ra : 0;
  const std::size_t coff = axis == 1 ? ca : 0;
  for (std::size_t r = 0; r < ra; ++r)
    for (std::size_t c = 0; c < ca; ++c) out[r * oc + c] = av[r * ca + c];
  for (std::size_t r = 0; r < rb; ++r)
    for (std::size_t c = 0; c < cb; ++c) out[(r + roff) * oc + c + coff] = bv[r * cb + c];
  return graph_of(a, b).record(
      "concat", std::move(out), {a, b}, [ra, ca, rb, cb, oc, roff, coff](const BackwardContext& ctx) {
        if (ctx.in_grad[0])
          for (std::size_t r = 0; r < ra; ++r)
            for (std::size_t c = 0; c < ca; ++c) (*ctx.in_grad[0])[r * ca + c] += ctx.out_grad[r * oc + c];
        if (ctx.in_grad[1])
          for (std::size_t r = 0; r < rb; ++r)
            for (std::size_t c = 0; c < cb; ++c)
              (*ctx.in_grad[1])[r * cb + c] += ctx.out_grad[(r + roff) * oc + c + coff];
      });
}

Var mask_rows(Var a, Var mask) {
  const Tensor& av = a.value();
  const Tensor& mv = mask.value();
  if (av.rank() != 2 || mv.rank() != 1 || mv.dim(0) != av.dim(0)) {
    throw ShapeError("mask_rows: shape mismatch " + shape_str(av.shape()) + " vs " + shape_str(mv.shape()));
  }
  const std::size_t n = av.dim(0), d = av.dim(1);
  Tensor out = av;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] *= mv[r];
  return graph_of(a, mask).record("mask_rows", std::move(out), {a, mask}, [n, d](const BackwardContext& ctx) {
    const Tensor& A = *ctx.in[0];
    const Tensor& M = *ctx.in[1];
    for (std::size_t r = 0; r < n; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double g = ctx.out_grad[r * d + c];
        if (ctx.in_grad[0]) (*ctx.in_grad[0])[r * d + c] += g * M[r];
        acc += g * A[r * d + c];
      }
      if (ctx.in_grad[1]) (*ctx.in_grad[1])[r] += acc;
    }
  });
}

Var reversed_cumsum(Var a, std::size_t axis) {
  const Tensor& av = a.value();
  require_axis("reversed_cumsum", av, axis);
  const AxisLayout lay = layout(av, axis);
  Tensor out = Tensor::zeros_like(av);
  for (std::size_t s = 0; s < lay.slices; ++s) {
    double acc = 0.0;
    for (std::size_t j = lay.len; j-- > 0;) {
      const std::size_t i = lay.base(s) + j * lay.stride;
      acc += av[i];
      out[i] = acc;
    }
  }
  return a.graph().record("reversed_cumsum", std::move(out), {a}, [lay](const BackwardContext& ctx) {
    if (!ctx.in_grad[0]) return;
    // d out[j] / d a[i] = 1 for j <= i, so the input gradient is a forward cumulative sum.
    Tensor& g = *ctx.in_grad[0];
    for (std::size_t s = 0; s < lay.slices; ++s) {
      double acc = 0.0;
      for (std::size_t j = 0; j < lay.len; ++j) {
        const std::size_t i = lay.base(s) + j * lay.stride;
        acc += ctx.out_grad[i];
        g[i] += acc;
      }
    }
  });
}

Var gather(Var a, const std::vector<std::size_t>& indices) {
  const Tensor& av = a.value();
  require_rank("gather", av, 1, 2);
  const std::size_t n = av.dim(0);
  const std::size_t width = av.rank() == 2 ? av.dim(1) : 1;
  for (std::size_t idx : indices) {
    if (idx >= n) {
      throw ShapeError("gather: index " + std::to_string(idx) + " out of range for " + shape_str(av.shape()));
    }
  }
  const Shape shape = av.rank() == 2 ? Shape{indices.size(), width} : Shape{indices.size()};
  Tensor out(shape);
  for (std::size_t r = 0; r < indices.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) out[r * width + c] = av[indices[r] * width + c];
  return a.graph().record("gather", std::move(out), {a}, [indices, width](const BackwardContext& ctx) {
    if (!ctx.in_grad[0]) return;
    Tensor& g = *ctx.in_grad[0];
    for (std::size_t r = 0; r < indices.size(); ++r)
      for (std::size_t c = 0; c < width; ++c) g[indices[r] * width + c] += ctx.out_grad[r * width + c];
  });
}

Var log1p_sum_exp(Var a) {
  const Tensor& av = a.value();
  // log(e^0 + sum e^{x_i}) with the implicit zero term included in the max shift.
  double mx = 0.0;
  for (double x : av.data()) mx = std::max(mx, x);
  double z = std::exp(-mx);
  for (double x : av.data()) z += std::exp(x - mx);
  const double value = mx + std::log(z);
  return a.graph().record("log1p_sum_exp", Tensor::scalar(value), {a}, [](const BackwardContext& ctx) {
    if (!ctx.in_grad[0]) return;
    const double lse = ctx.out[0];
    const Tensor& x = *ctx.in[0];
    Tensor& g = *ctx.in_grad[0];
    for (std::size_t i = 0; i < x.size(); ++i) g[i] += ctx.out_grad[0] * std::exp(x[i] - lse);
  });
}

Var bce_with_logits(Var z, Var targets) {
  require_same_shape("bce_with_logits", z.value(), targets.value());
  const Tensor& zv = z.value();
  const Tensor& tv = targets.value();
  Tensor out = Tensor::zeros_like(zv);
  for (std::size_t i = 0; i < zv.size(); ++i) {
    const double x = zv[i];
    out[i] = std::max(x, 0.0) - x * tv[i] + std::log1p(std::exp(-std::abs(x)));
  }
  return graph_of(z, targets).record("bce_with_logits", std::move(out), {z, targets}, [](const BackwardContext& ctx) {
    if (!ctx.in_grad[0]) return;
    const Tensor& x = *ctx.in[0];
    const Tensor& t = *ctx.in[1];
    Tensor& g = *ctx.in_grad[0];
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double s = x[i] >= 0 ? 1.0 / (1.0 + std::exp(-x[i])) : std::exp(x[i]) / (1.0 + std::exp(x[i]));
      g[i] += ctx.out_grad[i] * (s - t[i]);
    }
  });
}

Var straight_through_onehot(Var a) {
  const Tensor& av = a.value();
  require_rank("straight_through_onehot", av, 1, 1);
  if (av.size() == 0) throw ShapeError("straight_through_onehot: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < av.size(); ++i)
    if (av[i] > av[best]) best = i;
  Tensor out = Tensor::zeros_like(av);
  out[best] = 1.0;
  return a.graph().record("straight_through_onehot", std::move(out), {a}, [](const BackwardContext& ctx) {
    if (ctx.in_grad[0]) *ctx.in_grad[0] += ctx.out_grad;
  });
}

Var gumbel_softmax(Var logits, double temperature, bool hard, const Tensor& noise) {
  if (!(temperature > 0.0)) {
    throw DomainError("gumbel_softmax: temperature must be > 0, got " + std::to_string(temperature));
  }
  if (!noise.same_shape(logits.value())) {
    throw ShapeError("gumbel_softmax: noise shape " + shape_str(noise.shape()) + " vs logits " +
                     shape_str(logits.shape()));
  }
  Var perturbed = add(logits, logits.graph().constant(noise));
  Var soft = softmax(mul_scalar(perturbed, 1.0 / temperature), 0);
  return hard ? straight_through_onehot(soft) : soft;
}

}  // namespace scml::ops
