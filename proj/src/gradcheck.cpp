#include <algorithm>
#include <cmath>
#include <functional>

#include "scml/harness.hpp"
#include "scml/ops.hpp"

namespace scml {

namespace {

using Builder = std::function<Var(Var)>;

constexpr double kEps = 1e-6;

/// Contracts a tensor-valued output against fixed pseudo-random weights so every output entry
/// influences the scalar being differentiated.
Var contract(Var out, std::uint64_t seed) {
  if (out.value().size() == 1) return ops::sum(out);
  Rng rng(seed);
  Tensor w = Tensor::zeros_like(out.value());
  for (double& x : w.data()) x = rng.uniform(-1.0, 1.0);
  return ops::sum(ops::mul(out, out.graph().constant(std::move(w))));
}

double check_point(const Builder& build, const Tensor& x0, std::uint64_t weight_seed) {
  Graph g;
  Var x = g.leaf(x0);
  Var loss = contract(build(x), weight_seed);
  g.backward(loss);
  const Tensor analytic = x.grad();
  const Tensor numeric = finite_diff_grad(
      [&](const Tensor& at) {
        Graph h;
        return Tensor::scalar(contract(build(h.constant(at)), weight_seed).value()[0]);
      },
      x0, kEps);
  return max_relative_error(analytic, numeric);
}

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& x : t.data()) x = rng.uniform(lo, hi);
  return t;
}

/// Keeps entries at least `gap` away from `kink` so piecewise ops are differentiable at the probe.
Tensor away_from(Tensor t, double kink, double gap) {
  for (double& x : t.data())
    if (std::abs(x - kink) < gap) x = kink + (x < kink ? -gap : gap);
  return t;
}

Tensor gumbel_tensor(Rng& rng, std::size_t n) {
  Tensor t(Shape{n});
  for (double& x : t.data()) x = rng.gumbel();
  return t;
}

struct Suite {
  int points;
  Rng rng;
  std::vector<GradCheckRecord> records;

  /// `make` draws (builder, probe point) for one random point.
  void run(const std::string& name, const std::function<std::pair<Builder, Tensor>(Rng&)>& make) {
    GradCheckRecord rec{name, points, 0.0, false};
    for (int p = 0; p < points; ++p) {
      auto [build, x0] = make(rng);
      rec.max_rel_error = std::max(rec.max_rel_error, check_point(build, x0, rng.next()));
    }
    rec.passed = rec.max_rel_error < kGradCheckTolerance;
    records.push_back(rec);
  }

  /// Same op, differentiated with respect to one argument while the other is held fixed.
  void binary(const std::string& name, Shape sa, Shape sb, const std::function<Var(Var, Var)>& op) {
    run(name + "[lhs]", [=](Rng& r) {
      Tensor b = random_tensor(r, sb);
      return std::pair<Builder, Tensor>{[=](Var x) { return op(x, x.graph().constant(b)); }, random_tensor(r, sa)};
    });
    run(name + "[rhs]", [=](Rng& r) {
      Tensor a = random_tensor(r, sa);
      return std::pair<Builder, Tensor>{[=](Var x) { return op(x.graph().constant(a), x); }, random_tensor(r, sb)};
    });
  }

  void unary(const std::string& name, Shape s, const std::function<Var(Var)>& op,
             const std::function<Tensor(Tensor)>& shape_point = [](Tensor t) { return t; }) {
    run(name, [=](Rng& r) { return std::pair<Builder, Tensor>{op, shape_point(random_tensor(r, s))}; });
  }
};

/// Small instance + model for the composite checks.
struct CompositeFixture {
  DatasetSpec spec;
  TrainConfig cfg;
  VQAInstance inst;
  ModelParams params;

  explicit CompositeFixture(Rng& rng) {
    spec.num_question_types = 2;
    spec.answers_per_type = 3;
    spec.n_objects = 5;
    spec.descriptor_dim = 6;
    spec.question_len = 3;
    spec.vocab_size = 8;
    spec.relevant_min = 1;
    spec.relevant_max = 3;
    spec.noise_std = 0.3;
    spec.seed = rng.next();
    inst = generate_instance(spec, Split::kTrain, 0);
    cfg.embed_dim = 5;
    cfg.hidden_dim = 6;
    cfg.num_answers = spec.num_answers();
    cfg.vocab_size = spec.vocab_size;
    cfg.seed = rng.next();
    cfg.loss.gamma = 0.7;
    params = init_model(cfg, {inst});
    // Nonzero biases so ReLU units sit away from their kinks.
    for (auto* b : {&params.fuse_b1, &params.fuse_b2, &params.head_b})
      for (double& x : b->data()) x = rng.uniform(-0.3, 0.3);
  }
};

/// Parameter slot i of a bound model, in ModelParams::named() order.
Var& slot(ParamVars& p, std::size_t i) {
  Var* slots[] = {&p.visual_proj, &p.token_embed, &p.fuse_w1, &p.fuse_b1,
                  &p.fuse_w2,     &p.fuse_b2,     &p.head_w,  &p.head_b};
  return *slots[i];
}

}  // namespace

std::vector<GradCheckRecord> run_gradcheck_suite(int points, std::uint64_t seed) {
  Suite s{points, Rng(seed), {}};
  using namespace ops;

  s.binary("add", {3, 4}, {3, 4}, [](Var a, Var b) { return add(a, b); });
  s.binary("sub", {3, 4}, {3, 4}, [](Var a, Var b) { return sub(a, b); });
  s.binary("mul", {3, 4}, {3, 4}, [](Var a, Var b) { return mul(a, b); });
  s.binary("scale", {3, 4}, {}, [](Var a, Var b) { return scale(a, b); });
  s.binary("matmul", {3, 4}, {4, 2}, [](Var a, Var b) { return matmul(a, b); });
  s.binary("matmul_vec_mat", {4}, {4, 3}, [](Var a, Var b) { return matmul(a, b); });
  s.binary("matmul_mat_vec", {3, 4}, {4}, [](Var a, Var b) { return matmul(a, b); });
  s.binary("concat_rows", {2, 3}, {4, 3}, [](Var a, Var b) { return concat(a, b, 0); });
  s.binary("concat_cols", {3, 2}, {3, 4}, [](Var a, Var b) { return concat(a, b, 1); });
  s.binary("concat_vec", {3}, {5}, [](Var a, Var b) { return concat(a, b); });
  s.binary("mask_rows", {4, 3}, {4}, [](Var a, Var b) { return mask_rows(a, b); });

  s.unary("add_scalar", {5}, [](Var x) { return add_scalar(x, 0.3); });
  s.unary("mul_scalar", {5}, [](Var x) { return mul_scalar(x, -1.7); });
  s.unary("transpose", {3, 4}, [](Var x) { return transpose(x); });
  s.unary("sum", {3, 4}, [](Var x) { return sum(x); });
  s.unary("sum_axis0", {3, 4}, [](Var x) { return sum(x, 0); });
  s.unary("sum_axis1", {3, 4}, [](Var x) { return sum(x, 1); });
  s.unary("mean", {3, 4}, [](Var x) { return mean(x); });
  s.unary("mean_axis0", {3, 4}, [](Var x) { return mean(x, 0); });
  s.unary("exp", {6}, [](Var x) { return exp(x); });
  s.unary("log", {6}, [](Var x) { return log(x); }, [](Tensor t) {
    for (double& x : t.data()) x = std::abs(x) + 0.2;
    return t;
  });
  s.unary("sigmoid", {6}, [](Var x) { return sigmoid(mul_scalar(x, 4.0)); });
  s.unary("relu", {6}, [](Var x) { return relu(x); }, [](Tensor t) { return away_from(std::move(t), 0.0, 0.05); });
  s.unary("softplus", {6}, [](Var x) { return softplus(mul_scalar(x, 5.0)); });
  s.unary("reciprocal", {6}, [](Var x) { return reciprocal(x); }, [](Tensor t) { return away_from(std::move(t), 0.0, 0.3); });
  s.unary("clamp_min", {6}, [](Var x) { return clamp_min(x, 0.1); }, [](Tensor t) { return away_from(std::move(t), 0.1, 0.05); });
  s.unary("softmax_vec", {6}, [](Var x) { return softmax(mul_scalar(x, 3.0)); });
  s.unary("softmax_axis0", {3, 4}, [](Var x) { return softmax(x, 0); });
  s.unary("softmax_axis1", {3, 4}, [](Var x) { return softmax(x, 1); });
  s.unary("l2_normalize_vec", {5}, [](Var x) { return l2_normalize(x); });
  s.unary("l2_normalize_rows", {3, 4}, [](Var x) { return l2_normalize(x, 1); });
  s.unary("l2_normalize_cols", {3, 4}, [](Var x) { return l2_normalize(x, 0); });
  s.unary("reversed_cumsum", {7}, [](Var x) { return reversed_cumsum(x); });
  s.unary("reversed_cumsum_rows", {3, 4}, [](Var x) { return reversed_cumsum(x, 1); });
  s.unary("gather", {5, 3}, [](Var x) { return gather(x, {4, 0, 0, 2}); });
  s.unary("log1p_sum_exp", {6}, [](Var x) { return log1p_sum_exp(mul_scalar(x, 50.0)); });
  s.run("bce_with_logits", [](Rng& r) {
    Tensor t = random_tensor(r, {6}, 0.0, 1.0);
    return std::pair<Builder, Tensor>{[=](Var z) { return bce_with_logits(z, z.graph().constant(t)); },
                                      random_tensor(r, {6}, -6.0, 6.0)};
  });

  s.run("gumbel_softmax_soft", [](Rng& r) {
    Tensor noise = gumbel_tensor(r, 5);
    const double tau = r.uniform(0.5, 2.0);
    return std::pair<Builder, Tensor>{[=](Var x) { return gumbel_softmax(x, tau, false, noise); },
                                      random_tensor(r, {5}, -2.0, 2.0)};
  });
  // Straight-through contract: the analytic pass (leaf input) differentiates the hard sample, the
  // finite-difference pass (constant input) evaluates the soft one, so agreement means the hard
  // sample carries exactly the soft gradient.
  s.run("gumbel_softmax_hard_straight_through", [](Rng& r) {
    Tensor noise = gumbel_tensor(r, 5);
    return std::pair<Builder, Tensor>{[=](Var v) { return gumbel_softmax(v, 0.8, v.requires_grad(), noise); },
                                      random_tensor(r, {5}, -2.0, 2.0)};
  });

  s.run("similarity_scores[visual]", [](Rng& r) {
    Tensor q = random_tensor(r, {3, 5});
    return std::pair<Builder, Tensor>{[=](Var v) { return similarity_scores(v, v.graph().constant(q)); },
                                      random_tensor(r, {4, 5})};
  });
  s.run("similarity_scores[question]", [](Rng& r) {
    Tensor v = random_tensor(r, {4, 5});
    return std::pair<Builder, Tensor>{[=](Var q) { return similarity_scores(q.graph().constant(v), q); },
                                      random_tensor(r, {3, 5})};
  });

  s.run("ms_loss[anchors]", [](Rng& r) {
    const std::size_t a = 2;
    std::vector<Tensor> pos, neg;
    for (std::size_t i = 0; i < a; ++i) {
      pos.push_back(random_tensor(r, {3, 4}));
      neg.push_back(random_tensor(r, {3, 4}));
    }
    return std::pair<Builder, Tensor>{[=](Var x) {
                                        std::vector<Var> P, N;
                                        for (std::size_t i = 0; i < a; ++i) {
                                          P.push_back(x.graph().constant(pos[i]));
                                          N.push_back(x.graph().constant(neg[i]));
                                        }
                                        return ms_loss(x, P, N, LossConfig{});
                                      },
                                      random_tensor(r, {a, 4})};
  });
  s.run("ms_loss[samples]", [](Rng& r) {
    Tensor anchors = random_tensor(r, {2, 4});
    // Rows 0-2 are anchor 0's positives, 3-5 its negatives, 6-8 anchor 1's positives, 9-11 its negatives.
    return std::pair<Builder, Tensor>{[=](Var x) {
                                        std::vector<Var> P, N;
                                        for (std::size_t i = 0; i < 2; ++i) {
                                          P.push_back(gather(x, {6 * i, 6 * i + 1, 6 * i + 2}));
                                          N.push_back(gather(x, {6 * i + 3, 6 * i + 4, 6 * i + 5}));
                                        }
                                        return ms_loss(x.graph().constant(anchors), P, N, LossConfig{});
                                      },
                                      random_tensor(r, {12, 4})};
  });
  s.run("vqa_bce", [](Rng& r) {
    Tensor t(Shape{12});
    for (double& v : t.data()) v = r.uniform() < 0.3 ? 1.0 : 0.0;
    return std::pair<Builder, Tensor>{[=](Var z) { return vqa_bce(z, t); }, random_tensor(r, {12}, -5.0, 5.0)};
  });

  for (auto scoring : {CutScoring::kSortedSim, CutScoring::kSimGap}) {
    s.run("adaptive_split_soft[" + to_string(scoring) + "]", [scoring](Rng& r) {
      Tensor v = random_tensor(r, {5, 3});
      Tensor noise = gumbel_tensor(r, 5);
      return std::pair<Builder, Tensor>{[=](Var sim) {
                                          auto sel = adaptive_split(sim.graph().constant(v), sim, 0.7, noise, false,
                                                                    scoring);
                                          return concat(sum(sel.positive, 0), sum(sel.negative, 0));
                                        },
                                        random_tensor(r, {5}, -2.0, 2.0)};
    });
  }

  // total_loss through the whole model, per parameter tensor, with a soft adaptive mask.
  for (std::size_t which = 0; which < 8; ++which) {
    s.run("total_loss[" + ModelParams().named()[which].first + "]", [which](Rng& r) {
      auto fx = std::make_shared<CompositeFixture>(r);
      Tensor noise = gumbel_tensor(r, fx->inst.n_objects());
      auto forward = [fx, noise, which](Var x, std::optional<Tensor> pseudo, Tensor* pseudo_out) {
        ParamVars pv = bind(x.graph(), fx->params, false);
        slot(pv, which) = x;
        const Encoded enc = encode(pv, fx->inst);
        Var sim = similarity_scores(enc.visual, enc.question);
        auto sel = adaptive_split(enc.visual, sim, 0.9, noise, false, CutScoring::kSimGap);
        Var pos = fuse_and_predict(pv, sel.positive, sel.mask, enc.question);
        Var neg = fuse_and_predict(pv, sel.negative, add_scalar(mul_scalar(sel.mask, -1.0), 1.0), enc.question);
        const Tensor ans = fx->inst.answer_targets(fx->cfg.num_answers);
        if (pseudo_out) *pseudo_out = pseudo_labels(pos.value(), ans, fx->cfg.loss.top_n);
        return total_loss(pos, neg, ans, sel, enc.visual, enc.question, fx->cfg.loss, {}, pseudo).total;
      };
      const Tensor x0 = *fx->params.named()[which].second;
      Tensor pseudo;
      {
        Graph g;
        forward(g.constant(x0), std::nullopt, &pseudo);
      }
      return std::pair<Builder, Tensor>{[=](Var x) { return forward(x, pseudo, nullptr); }, x0};
    });
  }

  s.run("total_loss[soft_mask]", [](Rng& r) {
    auto fx = std::make_shared<CompositeFixture>(r);
    const std::size_t n = fx->inst.n_objects();
    Tensor mask0 = random_tensor(r, {n}, 0.05, 0.95);
    auto forward = [fx](Var m, std::optional<Tensor> pseudo, Tensor* pseudo_out) {
      ParamVars pv = bind(m.graph(), fx->params, false);
      const Encoded enc = encode(pv, fx->inst);
      Var sim = similarity_scores(enc.visual, enc.question);
      auto order = argsort_descending(sim.value());
      auto sel = split_with_mask(enc.visual, sim, m, order, 2);
      Var pos = fuse_and_predict(pv, sel.positive, sel.mask, enc.question);
      Var neg = fuse_and_predict(pv, sel.negative, add_scalar(mul_scalar(sel.mask, -1.0), 1.0), enc.question);
      const Tensor ans = fx->inst.answer_targets(fx->cfg.num_answers);
      if (pseudo_out) *pseudo_out = pseudo_labels(pos.value(), ans, fx->cfg.loss.top_n);
      return total_loss(pos, neg, ans, sel, enc.visual, enc.question, fx->cfg.loss, {}, pseudo).total;
    };
    Tensor pseudo;
    {
      Graph g;
      forward(g.constant(mask0), std::nullopt, &pseudo);
    }
    return std::pair<Builder, Tensor>{[=](Var m) { return forward(m, pseudo, nullptr); }, mask0};
  });

  return s.records;
}

}  // namespace scml
