#include <doctest.h>

#include "scml/ops.hpp"
#include "test_util.hpp"

using namespace scml;

namespace {

VQAInstance first_instance() { return generate(testing::small_spec(1, 0)).train.front(); }

}  // namespace

TEST_CASE("encode shape contract and determinism") {
  const VQAInstance inst = first_instance();
  ModelParams params(ModelConfig{});
  Graph g;
  const ParamVars pv = bind(g, params);
  const Encoded a = encode(pv, inst);
  CHECK(a.visual.shape() == Shape{8, 32});
  CHECK(a.question.shape() == Shape{inst.question.size(), 32});
  const Encoded b = encode(pv, inst);
  CHECK(a.visual.value() == b.visual.value());
  CHECK(a.question.value() == b.question.value());
}

TEST_CASE("identical descriptors encode to identical rows") {
  VQAInstance inst = first_instance();
  for (std::size_t c = 0; c < inst.objects.cols(); ++c) inst.objects.at(3, c) = inst.objects.at(5, c);
  ModelParams params(ModelConfig{});
  Graph g;
  const Tensor v = encode(bind(g, params), inst).visual.value();
  for (std::size_t c = 0; c < v.cols(); ++c) CHECK(v.at(3, c) == v.at(5, c));
}

TEST_CASE("encode errors") {
  ModelParams params(ModelConfig{});
  Graph g;
  const ParamVars pv = bind(g, params);
  VQAInstance inst = first_instance();
  inst.question.push_back(64);
  CHECK_THROWS_AS(encode(pv, inst), std::out_of_range);
  inst = first_instance();
  inst.question.clear();
  CHECK_THROWS_AS(encode(pv, inst), ShapeError);
  inst = first_instance();
  inst.objects = Tensor(Shape{0, 16});
  CHECK_THROWS_AS(encode(pv, inst), ShapeError);
}

TEST_CASE("parameter initialization is seeded") {
  ModelConfig c;
  c.seed = 4;
  ModelParams a(c), b(c);
  c.seed = 5;
  ModelParams other(c);
  for (std::size_t i = 0; i < a.named().size(); ++i) {
    CHECK(*a.named()[i].second == *b.named()[i].second);
  }
  CHECK_FALSE(a.visual_proj == other.visual_proj);
  CHECK(a.visual_proj.shape() == Shape{16, 32});
  CHECK(a.token_embed.shape() == Shape{64, 32});
  CHECK(a.fuse_w1.shape() == Shape{64, 64});
  CHECK(a.head_w.shape() == Shape{64, 12});
}

TEST_CASE("fuse_and_predict") {
  const VQAInstance inst = first_instance();
  ModelParams params(ModelConfig{});
  Graph g;
  const ParamVars pv = bind(g, params);
  const Encoded enc = encode(pv, inst);
  const std::size_t n = inst.n_objects();

  SUBCASE("fully masked input still yields finite logits") {
    Var zeros = g.constant(Tensor(Shape{n, 32}));
    Var pred = fuse_and_predict(pv, zeros, g.constant(Tensor(Shape{n})), enc.question);
    CHECK(pred.shape() == Shape{12});
    CHECK(pred.value().all_finite());
  }
  SUBCASE("positive and counterfactual paths share weights and differ only through the mask") {
    Tensor m(Shape{n});
    m[0] = m[2] = 1.0;
    Var mask = g.constant(m);
    Var inv = ops::add_scalar(ops::mul_scalar(mask, -1.0), 1.0);
    Var pos = fuse_and_predict(pv, ops::mask_rows(enc.visual, mask), mask, enc.question);
    Var neg = fuse_and_predict(pv, ops::mask_rows(enc.visual, inv), inv, enc.question);
    CHECK_FALSE(pos.value() == neg.value());
    Var again = fuse_and_predict(pv, ops::mask_rows(enc.visual, mask), mask, enc.question);
    CHECK(pos.value() == again.value());
    CHECK(pv.source == &params);
  }
  SUBCASE("permuting objects together with the mask leaves the prediction unchanged") {
    Tensor m(Shape{n});
    m[1] = m[4] = m[6] = 1.0;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = (i * 3 + 1) % n;
    Tensor pm(Shape{n});
    for (std::size_t i = 0; i < n; ++i) pm[i] = m[perm[i]];
    Var a = fuse_and_predict(pv, ops::mask_rows(enc.visual, g.constant(m)), g.constant(m), enc.question);
    Var pv_rows = ops::gather(enc.visual, perm);
    Var b = fuse_and_predict(pv, ops::mask_rows(pv_rows, g.constant(pm)), g.constant(pm), enc.question);
    CHECK(testing::max_abs_diff(a.value(), b.value()) < 1e-12);
  }
  SUBCASE("soft masks pass gradient to the visual projection") {
    Rng rng(8);
    Var soft = g.constant(testing::random_tensor(rng, Shape{n}, 0.1, 0.9));
    Var pred = fuse_and_predict(pv, ops::mask_rows(enc.visual, soft), soft, enc.question);
    g.backward(ops::sum(pred));
    double norm = 0.0;
    for (double v : pv.visual_proj.grad().data()) norm += v * v;
    CHECK(norm > 0.0);
  }
  SUBCASE("shape mismatch") {
    Var wrong = g.constant(Tensor(Shape{n, 7}));
    CHECK_THROWS_AS(fuse_and_predict(pv, wrong, g.constant(Tensor(Shape{n}, 1.0)), enc.question), ShapeError);
  }
}
