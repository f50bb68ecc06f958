#include <stdexcept>

#include "scml/harness.hpp"

namespace scml {

using nlohmann::json;

namespace {

json tensor_to_json(const Tensor& t) {
  if (t.rank() == 1) return json(t.raw());
  json rows = json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto row = t.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

void tensor_from_json(const json& j, const std::string& name, Tensor& into) {
  std::vector<double> flat;
  if (into.rank() == 1) {
    flat = j.get<std::vector<double>>();
  } else {
    for (const auto& row : j) {
      const auto r = row.get<std::vector<double>>();
      if (r.size() != into.cols()) throw std::invalid_argument("checkpoint: ragged rows in \"" + name + "\"");
      flat.insert(flat.end(), r.begin(), r.end());
    }
  }
  if (flat.size() != into.size()) {
    throw ShapeError("checkpoint: parameter \"" + name + "\" has " + std::to_string(flat.size()) +
                     " values, expected " + shape_str(into.shape()));
  }
  into = Tensor(into.shape(), std::move(flat));
}

}  // namespace

json to_json(const Checkpoint& ck) {
  const ModelConfig& mc = ck.params.config();
  json params = json::object();
  for (const auto& [name, t] : ck.params.named()) params[name] = tensor_to_json(*t);
  return json{{"config", to_json(ck.config)},
              {"model",
               {{"descriptor_dim", mc.descriptor_dim},
                {"vocab_size", mc.vocab_size},
                {"embed_dim", mc.embed_dim},
                {"hidden_dim", mc.hidden_dim},
                {"num_answers", mc.num_answers}}},
              {"params", std::move(params)},
              {"seed", ck.seed},
              {"epoch", ck.epoch}};
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    Checkpoint ck;
    ck.config = train_config_from_json(j.at("config"));
    const json& m = j.at("model");
    ModelConfig mc;
    mc.descriptor_dim = m.at("descriptor_dim").get<int>();
    mc.vocab_size = m.at("vocab_size").get<int>();
    mc.embed_dim = m.at("embed_dim").get<int>();
    mc.hidden_dim = m.at("hidden_dim").get<int>();
    mc.num_answers = m.at("num_answers").get<int>();
    ck.seed = j.at("seed").get<std::uint64_t>();
    mc.seed = ck.seed;
    ck.epoch = j.at("epoch").get<int>();
    ck.params = ModelParams(mc);
    const json& params = j.at("params");
    for (auto& [name, t] : ck.params.named()) {
      if (!params.contains(name)) throw std::invalid_argument("checkpoint: missing parameter \"" + name + "\"");
      tensor_from_json(params.at(name), name, *t);
    }
    return ck;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace scml
