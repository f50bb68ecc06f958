#include <doctest.h>

#include <algorithm>
#include <set>

#include "scml/ops.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace scml;
using testing::bce_oracle;
using testing::ms_oracle;
using testing::pseudo_oracle;
using testing::random_tensor;

namespace {

double ms_value(const Tensor& anchors, const std::vector<Tensor>& pos, const std::vector<Tensor>& neg,
                const LossConfig& cfg = {}) {
  Graph g;
  std::vector<Var> p, n;
  for (const auto& t : pos) p.push_back(g.constant(t));
  for (const auto& t : neg) n.push_back(g.constant(t));
  return ms_loss(g.constant(anchors), p, n, cfg).value().item();
}

double bce_value(const Tensor& z, const Tensor& t) {
  Graph g;
  return vqa_bce(g.constant(z), t).value().item();
}

}  // namespace

TEST_CASE("ms_loss examples") {
  const Tensor anchor = Tensor::matrix({{1, 0}});
  CHECK(ms_value(anchor, {Tensor(Shape{0, 2})}, {Tensor(Shape{0, 2})}) == 0.0);
  // cos = 0.5 puts the single positive exactly on the margin.
  const Tensor at_margin = Tensor::matrix({{0.5, std::sqrt(0.75)}});
  CHECK(ms_value(anchor, {at_margin}, {Tensor(Shape{0, 2})}) == doctest::Approx(std::log(2.0) / 2.0).epsilon(1e-14));
  CHECK(std::log(2.0) / 2.0 == doctest::Approx(0.34657).epsilon(1e-5));

  Graph g;
  CHECK_THROWS_AS(ms_loss(g.constant(Tensor(Shape{0, 2})), {}, {}, LossConfig{}), ShapeError);
  CHECK_THROWS_AS(ms_value(anchor, {Tensor::matrix({{0, 0}})}, {Tensor(Shape{0, 2})}), DomainError);
}

TEST_CASE("ms_loss matches the scalar-loop oracle") {
  Rng rng(31);
  const LossConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t a = 1 + rng.below(4);
    const std::size_t d = 2 + rng.below(5);
    const Tensor anchors = random_tensor(rng, Shape{a, d});
    std::vector<Tensor> pos, neg;
    for (std::size_t i = 0; i < a; ++i) {
      pos.push_back(random_tensor(rng, Shape{rng.below(7), d}));
      neg.push_back(random_tensor(rng, Shape{rng.below(7), d}));
    }
    const double got = ms_value(anchors, pos, neg, cfg);
    const double want = ms_oracle(anchors, pos, neg, cfg.alpha, cfg.beta, cfg.lambda_margin);
    REQUIRE(std::abs(got - want) <= 1e-9);
    REQUIRE(got >= 0.0);
  }
}

TEST_CASE("ms_loss is monotone in positive and negative similarities") {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    // Unit vectors in the plane at angle theta from the anchor have cosine cos(theta).
    auto at = [](double theta) { return std::vector<double>{std::cos(theta), std::sin(theta)}; };
    const double tp = rng.uniform(0.2, 2.8), tn = rng.uniform(0.2, 1.4);
    const double dt = 1e-3;
    auto loss = [&](double p_angle, double n_angle) {
      auto pv = at(p_angle);
      auto nv = at(n_angle);
      return ms_value(Tensor::matrix({{1, 0}}), {Tensor::matrix(1, 2, pv)}, {Tensor::matrix(1, 2, nv)});
    };
    const double base = loss(tp, tn);
    REQUIRE(loss(tp - dt, tn) < base);  // more similar positive, lower loss
    REQUIRE(loss(tp, tn - dt) > base);  // more similar negative, higher loss
  }
}

TEST_CASE("vqa_bce") {
  SUBCASE("zero logits") {
    Rng rng(2);
    const Tensor t = random_tensor(rng, Shape{12}, 0.0, 1.0);
    CHECK(bce_value(Tensor(Shape{12}), t) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  }
  SUBCASE("saturated correct logits") {
    const double v = bce_value(Tensor(Shape{12}, 40.0), Tensor(Shape{12}, 1.0));
    CHECK(v < 1e-12);
    CHECK(std::isfinite(v));
  }
  SUBCASE("scalar oracle") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      const Tensor z = random_tensor(rng, Shape{12}, -8.0, 8.0);
      const Tensor t = random_tensor(rng, Shape{12}, 0.0, 1.0);
      REQUIRE(std::abs(bce_value(z, t) - bce_oracle(z, t)) <= 1e-12);
    }
  }
  SUBCASE("finite for large logits") {
    Rng rng(6);
    for (int trial = 0; trial < 100; ++trial) {
      const Tensor z = random_tensor(rng, Shape{12}, -1000.0, 1000.0);
      const Tensor t = random_tensor(rng, Shape{12}, 0.0, 1.0);
      REQUIRE(std::isfinite(bce_value(z, t)));
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(bce_value(Tensor(Shape{3}), Tensor(Shape{4})), ShapeError);
    CHECK_THROWS_AS(bce_value(Tensor(Shape{2}), Tensor::vector({0.5, 1.5})), DomainError);
  }
}

TEST_CASE("pseudo_labels examples") {
  Tensor ans(Shape{12});
  ans[4] = 1.0;
  Tensor pred(Shape{12});
  pred[4] = 3.0;
  CHECK(pseudo_labels(pred, ans, 1) == Tensor(Shape{12}));

  Tensor ans2(Shape{12});
  ans2[2] = ans2[5] = 1.0;
  Tensor pred2(Shape{12});
  pred2[1] = 5.0;
  pred2[3] = 4.0;
  CHECK(pseudo_labels(pred2, ans2, 2) == ans2);

  CHECK_THROWS_AS(pseudo_labels(pred, ans, 0), std::out_of_range);
  CHECK_THROWS_AS(pseudo_labels(pred, ans, 13), std::out_of_range);
  // Ties resolve to the lower index.
  CHECK(top_n_indices(Tensor::vector({1, 2, 2, 0}), 1) == std::vector<std::size_t>{1});
}

TEST_CASE("pseudo_labels equals the set-difference oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const Tensor pred = random_tensor(rng, Shape{12}, -3.0, 3.0);
    Tensor ans(Shape{12});
    std::set<std::size_t> ans_set;
    for (std::size_t i = 0; i < 12; ++i)
      if (rng.uniform() < 0.3) {
        ans[i] = 1.0;
        ans_set.insert(i);
      }
    const int top_n = 1 + static_cast<int>(rng.below(12));
    REQUIRE(pseudo_labels(pred, ans, top_n) == pseudo_oracle(pred, ans_set, top_n));
  }
}

namespace {

struct Fixture {
  Graph g;
  Rng rng{9};
  Var visual = g.leaf(random_tensor(rng, Shape{6, 4}));
  Var question = g.leaf(random_tensor(rng, Shape{3, 4}));
  Var pred_pos = g.leaf(random_tensor(rng, Shape{12}, -2, 2));
  Var pred_neg = g.leaf(random_tensor(rng, Shape{12}, -2, 2));
  Tensor answers = [] {
    Tensor t(Shape{12});
    t[7] = 1.0;
    return t;
  }();
  SelectionResult sel = fixed_topk_split(visual, similarity_scores(visual, question), 3);
};

}  // namespace

TEST_CASE("total_loss composition") {
  Fixture f;
  LossConfig cfg;
  cfg.gamma = 0.0;
  LossTerms t = total_loss(f.pred_pos, f.pred_neg, f.answers, f.sel, f.visual, f.question, cfg);
  CHECK(t.total.value().item() == t.loss_pos.value().item());

  cfg.gamma = 0.7;
  t = total_loss(f.pred_pos, f.pred_neg, f.answers, f.sel, f.visual, f.question, cfg);
  const LossBreakdown b = LossBreakdown::of(t);
  CHECK(std::abs(b.total - (b.loss_pos + 0.7 * (b.loss_neg + b.loss_ms))) <= 1e-12);
  CHECK(b.loss_pos >= 0.0);
  CHECK(b.loss_neg >= 0.0);
  CHECK(b.loss_ms >= 0.0);

  // Recompute every component independently.
  const double pos = bce_value(f.pred_pos.value(), f.answers);
  const double neg = bce_value(f.pred_neg.value(), pseudo_labels(f.pred_pos.value(), f.answers, 1));
  Tensor anchor(Shape{1, 4});
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) anchor.at(0, c) += f.question.value().at(r, c) / 3.0;
  Tensor prow(Shape{3, 4}), nrow(Shape{3, 4});
  const auto selected = f.sel.selected(), rejected = f.sel.rejected();
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      prow.at(r, c) = f.visual.value().at(selected[r], c);
      nrow.at(r, c) = f.visual.value().at(rejected[r], c);
    }
  const double ms = ms_oracle(anchor, {prow}, {nrow}, 2.0, 50.0, 0.5);
  CHECK(std::abs(b.loss_pos - pos) <= 1e-12);
  CHECK(std::abs(b.loss_neg - neg) <= 1e-12);
  CHECK(std::abs(b.loss_ms - ms) <= 1e-12);
  CHECK(std::abs(b.total - (pos + 0.7 * (neg + ms))) <= 1e-12);

  Graph g;
  LossTerms handmade{g.constant(Tensor::scalar(0.5)), g.constant(Tensor::scalar(0.2)), g.constant(Tensor::scalar(0.3)),
                     ops::add(g.constant(Tensor::scalar(0.5)),
                              ops::mul_scalar(ops::add(g.constant(Tensor::scalar(0.2)), g.constant(Tensor::scalar(0.3))), 1.0))};
  CHECK(LossBreakdown::of(handmade).total == doctest::Approx(1.0));
}

TEST_CASE("disabled components are exact zeros") {
  Fixture f;
  LossConfig cfg;
  const LossTerms t = total_loss(f.pred_pos, f.pred_neg, f.answers, f.sel, f.visual, f.question, cfg, {false, false});
  CHECK(t.loss_neg.value().item() == 0.0);
  CHECK(t.loss_ms.value().item() == 0.0);
  CHECK(t.total.value().item() == t.loss_pos.value().item());
}

TEST_CASE("pseudo-labels are detached from the graph") {
  Fixture f;
  LossConfig cfg;
  const LossTerms t = total_loss(f.pred_pos, f.pred_neg, f.answers, f.sel, f.visual, f.question, cfg, {true, false});
  f.g.backward(t.loss_neg);
  for (double v : f.pred_pos.grad().data()) CHECK(v == 0.0);
}

TEST_CASE("loss config validation") {
  LossConfig cfg;
  cfg.alpha = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.gamma = -1;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.top_n = 0;
  CHECK_THROWS(cfg.validate());
}
