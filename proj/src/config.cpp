#include <stdexcept>

#include "scml/harness.hpp"

namespace scml {

using nlohmann::json;

namespace {

constexpr std::pair<Variant, const char*> kVariantNames[] = {
    {Variant::kBaselineAllFeatures, "baseline_all_features"},
    {Variant::kPos, "pos"},
    {Variant::kPosMs, "pos_ms"},
    {Variant::kPosNegMs, "pos_neg_ms"},
    {Variant::kPosNegMsAdaptive, "pos_neg_ms_adaptive"},
};

template <class T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: bad value for \"") + key + "\": " + e.what());
  }
}

}  // namespace

std::string to_string(Variant v) {
  for (const auto& [var, name] : kVariantNames)
    if (var == v) return name;
  throw std::invalid_argument("unknown variant");
}

Variant variant_from_string(const std::string& s) {
  for (const auto& [var, name] : kVariantNames)
    if (s == name) return var;
  throw std::invalid_argument("unknown variant \"" + s + "\"");
}

std::vector<Variant> all_variants() {
  std::vector<Variant> out;
  for (const auto& [var, name] : kVariantNames) out.push_back(var);
  return out;
}

bool uses_selection(Variant v) { return v != Variant::kBaselineAllFeatures; }

std::string to_string(EvalMode m) { return m == EvalMode::kArgmaxCut ? "argmax_cut" : "sampled"; }

EvalMode eval_mode_from_string(const std::string& s) {
  if (s == "argmax_cut") return EvalMode::kArgmaxCut;
  if (s == "sampled") return EvalMode::kSampled;
  throw std::invalid_argument("unknown eval mode \"" + s + "\" (expected argmax_cut or sampled)");
}

void TrainConfig::validate() const {
  loss.validate();
  if (fixed_k < 0) throw std::invalid_argument("config: fixed_k must be >= 0");
  if (!(temperature > 0.0)) throw std::invalid_argument("config: temperature must be > 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("config: learning_rate must be > 0");
  if (epochs < 0) throw std::invalid_argument("config: epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (embed_dim < 1 || hidden_dim < 1 || num_answers < 1 || vocab_size < 1) {
    throw std::invalid_argument("config: model sizes must be positive");
  }
}

int TrainConfig::resolved_k(std::size_t n_objects) const {
  const int k = fixed_k > 0 ? fixed_k : static_cast<int>(n_objects / 2);
  return std::max(1, std::min(k, static_cast<int>(n_objects)));
}

json to_json(const TrainConfig& c) {
  return json{{"alpha", c.loss.alpha},
              {"beta", c.loss.beta},
              {"lambda_margin", c.loss.lambda_margin},
              {"gamma", c.loss.gamma},
              {"top_n", c.loss.top_n},
              {"variant", to_string(c.variant)},
              {"fixed_k", c.fixed_k},
              {"temperature", c.temperature},
              {"cut_scoring", to_string(c.cut_scoring)},
              {"learning_rate", c.learning_rate},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"seed", c.seed},
              {"eval_mode", to_string(c.eval_mode)},
              {"embed_dim", c.embed_dim},
              {"hidden_dim", c.hidden_dim},
              {"num_answers", c.num_answers},
              {"vocab_size", c.vocab_size}};
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  const json known = to_json(TrainConfig{});
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("config: unknown key \"" + key + "\"");
  }
  TrainConfig c;
  read_field(j, "alpha", c.loss.alpha);
  read_field(j, "beta", c.loss.beta);
  read_field(j, "lambda_margin", c.loss.lambda_margin);
  read_field(j, "gamma", c.loss.gamma);
  read_field(j, "top_n", c.loss.top_n);
  std::string variant = to_string(c.variant);
  read_field(j, "variant", variant);
  c.variant = variant_from_string(variant);
  read_field(j, "fixed_k", c.fixed_k);
  read_field(j, "temperature", c.temperature);
  std::string scoring = to_string(c.cut_scoring);
  read_field(j, "cut_scoring", scoring);
  c.cut_scoring = cut_scoring_from_string(scoring);
  read_field(j, "learning_rate", c.learning_rate);
  read_field(j, "epochs", c.epochs);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "seed", c.seed);
  std::string mode = to_string(c.eval_mode);
  read_field(j, "eval_mode", mode);
  c.eval_mode = eval_mode_from_string(mode);
  read_field(j, "embed_dim", c.embed_dim);
  read_field(j, "hidden_dim", c.hidden_dim);
  read_field(j, "num_answers", c.num_answers);
  read_field(j, "vocab_size", c.vocab_size);
  c.validate();
  return c;
}

}  // namespace scml
