#include <algorithm>
#include <cmath>
#include <numeric>

#include "scml/harness.hpp"
#include "scml/ops.hpp"

namespace scml {

using nlohmann::json;

namespace {

constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kTrainNoiseStream = 2;
constexpr std::uint64_t kEvalNoiseStream = 3;
constexpr std::size_t kEvalChunk = 256;
constexpr double kDivergenceLimit = 1e6;

Tensor gumbel_noise(Rng* rng, std::size_t n) {
  Tensor t(Shape{n});
  if (rng)
    for (double& x : t.data()) x = rng->gumbel();
  return t;
}

Var complement(Var mask) { return ops::add_scalar(ops::mul_scalar(mask, -1.0), 1.0); }

LossComponents components_of(Variant v) {
  switch (v) {
    case Variant::kBaselineAllFeatures:
    case Variant::kPos:
      return {false, false};
    case Variant::kPosMs:
      return {false, true};
    case Variant::kPosNegMs:
    case Variant::kPosNegMsAdaptive:
      return {true, true};
  }
  return {false, false};
}

void accumulate(LossBreakdown& acc, const LossBreakdown& b, double w) {
  acc.loss_pos += w * b.loss_pos;
  acc.loss_neg += w * b.loss_neg;
  acc.loss_ms += w * b.loss_ms;
  acc.total += w * b.total;
}

}  // namespace

InstanceForward forward_instance(const ParamVars& p, const VQAInstance& inst, const TrainConfig& cfg,
                                 Rng* noise_rng) {
  Graph& g = p.visual_proj.graph();
  InstanceForward fw;
  fw.enc = encode(p, inst);
  const std::size_t n = inst.n_objects();

  if (!uses_selection(cfg.variant)) {
    Var ones = g.constant(Tensor(Shape{n}, 1.0));
    fw.pred_pos = fuse_and_predict(p, fw.enc.visual, ones, fw.enc.question);
    return fw;
  }

  Var sim = similarity_scores(fw.enc.visual, fw.enc.question);
  if (cfg.variant == Variant::kPosNegMsAdaptive) {
    fw.sel = adaptive_split(fw.enc.visual, sim, cfg.temperature, gumbel_noise(noise_rng, n), true, cfg.cut_scoring);
  } else {
    fw.sel = fixed_topk_split(fw.enc.visual, sim, cfg.resolved_k(n));
  }
  fw.pred_pos = fuse_and_predict(p, fw.sel->positive, fw.sel->mask, fw.enc.question);
  if (components_of(cfg.variant).neg) {
    fw.pred_neg = fuse_and_predict(p, fw.sel->negative, complement(fw.sel->mask), fw.enc.question);
  }
  return fw;
}

LossTerms instance_loss(const InstanceForward& fw, const VQAInstance& inst, const TrainConfig& cfg) {
  const Tensor targets = inst.answer_targets(cfg.num_answers);
  const LossComponents comp = components_of(cfg.variant);
  if (!fw.sel) {
    Graph& g = fw.pred_pos.graph();
    LossTerms t;
    t.loss_pos = vqa_bce(fw.pred_pos, targets);
    t.loss_neg = g.constant(Tensor::scalar(0.0));
    t.loss_ms = g.constant(Tensor::scalar(0.0));
    t.total = ops::add(t.loss_pos, ops::mul_scalar(ops::add(t.loss_neg, t.loss_ms), cfg.loss.gamma));
    return t;
  }
  Var pred_neg = fw.pred_neg.valid() ? fw.pred_neg : fw.pred_pos;
  return total_loss(fw.pred_pos, pred_neg, targets, *fw.sel, fw.enc.visual, fw.enc.question, cfg.loss, comp);
}

ModelParams init_model(const TrainConfig& cfg, const std::vector<VQAInstance>& data) {
  if (data.empty()) throw std::invalid_argument("init_model: empty dataset");
  ModelConfig mc;
  mc.descriptor_dim = static_cast<int>(data.front().objects.dim(1));
  mc.vocab_size = cfg.vocab_size;
  mc.embed_dim = cfg.embed_dim;
  mc.hidden_dim = cfg.hidden_dim;
  mc.num_answers = cfg.num_answers;
  mc.seed = cfg.seed;
  return ModelParams(mc);
}

MetricsReport evaluate(const Checkpoint& ck, const std::vector<VQAInstance>& split, EvalMode mode) {
  const TrainConfig& cfg = ck.config;
  MetricsReport rep;
  rep.count = split.size();
  rep.has_selection = uses_selection(cfg.variant);
  if (split.empty()) return rep;

  Rng noise(derive_seed(cfg.seed, kEvalNoiseStream));
  Rng* noise_rng = (mode == EvalMode::kSampled) ? &noise : nullptr;

  std::map<int, std::pair<std::size_t, std::size_t>> per_type;  // qtype -> (correct, total)
  std::size_t correct = 0;
  double prec = 0.0, rec = 0.0, kerr = 0.0;
  std::size_t within = 0;

  for (std::size_t start = 0; start < split.size(); start += kEvalChunk) {
    Graph g;
    const ParamVars pv = bind(g, ck.params, false);
    const std::size_t end = std::min(split.size(), start + kEvalChunk);
    for (std::size_t i = start; i < end; ++i) {
      const VQAInstance& inst = split[i];
      const InstanceForward fw = forward_instance(pv, inst, cfg, noise_rng);
      const Tensor& logits = fw.pred_pos.value();
      const auto best = static_cast<int>(argsort_descending(logits).front());
      const bool hit = std::find(inst.answers.begin(), inst.answers.end(), best) != inst.answers.end();
      correct += hit;
      auto& [c, t] = per_type[inst.qtype];
      c += hit;
      ++t;
      if (fw.sel) {
        const auto chosen = fw.sel->selected();
        const auto relevant = inst.relevant_mask();
        std::size_t inter = 0;
        for (std::size_t idx : chosen) inter += relevant[idx];
        prec += chosen.empty() ? 0.0 : static_cast<double>(inter) / static_cast<double>(chosen.size());
        rec += inst.relevant.empty() ? 1.0 : static_cast<double>(inter) / static_cast<double>(inst.relevant.size());
        const long diff = std::labs(static_cast<long>(chosen.size()) - static_cast<long>(inst.relevant.size()));
        kerr += static_cast<double>(diff);
        within += diff <= 1;
      }
    }
  }
  const auto n = static_cast<double>(split.size());
  rep.overall_accuracy = static_cast<double>(correct) / n;
  for (const auto& [type, ct] : per_type) {
    rep.per_type_accuracy[type] = static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }
  if (rep.has_selection) {
    rep.selection_precision = prec / n;
    rep.selection_recall = rec / n;
    rep.mean_k_abs_error = kerr / n;
    rep.k_within_one = static_cast<double>(within) / n;
  }
  return rep;
}

TrainResult train(const TrainConfig& cfg, const std::vector<VQAInstance>& train_split,
                  const std::vector<VQAInstance>& test_split) {
  cfg.validate();
  TrainResult res;
  res.checkpoint.config = cfg;
  res.checkpoint.seed = cfg.seed;
  res.checkpoint.params = init_model(cfg, train_split);
  ModelParams& params = res.checkpoint.params;

  Rng shuffle_rng(derive_seed(cfg.seed, kShuffleStream));
  Rng noise_rng(derive_seed(cfg.seed, kTrainNoiseStream));
  AdamaxState opt;
  std::vector<std::size_t> order(train_split.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    LossBreakdown epoch_sum;
    std::size_t step = 0;
    for (std::size_t start = 0; start < order.size(); start += batch, ++step) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double inv = 1.0 / static_cast<double>(end - start);
      Graph g;
      const ParamVars pv = bind(g, params);
      Var loss = g.constant(Tensor::scalar(0.0));
      LossBreakdown batch_mean;
      for (std::size_t i = start; i < end; ++i) {
        const VQAInstance& inst = train_split[order[i]];
        const LossTerms terms = instance_loss(forward_instance(pv, inst, cfg, &noise_rng), inst, cfg);
        loss = ops::add(loss, terms.total);
        accumulate(batch_mean, LossBreakdown::of(terms), inv);
      }
      loss = ops::mul_scalar(loss, inv);
      const double lv = loss.value()[0];
      if (!std::isfinite(lv) || lv > kDivergenceLimit) {
        throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) + ", step " +
                               std::to_string(step) + ": loss = " + std::to_string(lv));
      }
      g.backward(loss);
      std::vector<Tensor> grads;
      for (const Var& v : pv.all()) grads.push_back(v.grad());
      adamax_step(params, grads, cfg.learning_rate, opt);
      accumulate(epoch_sum, batch_mean, static_cast<double>(end - start));
    }
    LossBreakdown epoch_mean;
    accumulate(epoch_mean, epoch_sum, 1.0 / static_cast<double>(std::max<std::size_t>(order.size(), 1)));
    res.loss_curve.push_back({epoch, epoch_mean});
    res.checkpoint.epoch = epoch;
  }

  res.train_metrics = evaluate(res.checkpoint, train_split, cfg.eval_mode);
  res.test_metrics = evaluate(res.checkpoint, test_split, cfg.eval_mode);
  return res;
}

json to_json(const MetricsReport& r) {
  json per_type = json::object();
  for (const auto& [t, acc] : r.per_type_accuracy) per_type[std::to_string(t)] = acc;
  json j = {{"count", r.count}, {"overall_accuracy", r.overall_accuracy}, {"per_type_accuracy", per_type}};
  if (r.has_selection) {
    j["selection_precision"] = r.selection_precision;
    j["selection_recall"] = r.selection_recall;
    j["mean_k_abs_error"] = r.mean_k_abs_error;
    j["k_within_one"] = r.k_within_one;
  }
  return j;
}

json metrics_json(const TrainResult& r) {
  json curve = json::array();
  for (const auto& e : r.loss_curve) {
    curve.push_back({{"epoch", e.epoch},
                     {"loss_pos", e.mean.loss_pos},
                     {"loss_neg", e.mean.loss_neg},
                     {"loss_ms", e.mean.loss_ms},
                     {"total", e.mean.total}});
  }
  return json{{"config", to_json(r.checkpoint.config)},
              {"seed", r.checkpoint.seed},
              {"epochs_run", r.checkpoint.epoch},
              {"loss_curve", std::move(curve)},
              {"train", to_json(r.train_metrics)},
              {"test", to_json(r.test_metrics)}};
}

}  // namespace scml
