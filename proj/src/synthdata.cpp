#include "scml/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "scml/rng.hpp"

namespace scml {

namespace {

using nlohmann::json;

constexpr std::uint64_t kWorldStream = 0x5eedULL;
constexpr std::uint64_t kCoreStream = 1;
constexpr std::uint64_t kDistractorStream = 11;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("dataset spec: " + what);
}

/// Fixed prototypes shared by both splits: a key per question type living in the first half of
/// the descriptor, an appearance per answer living in the second half.
struct World {
  std::vector<std::vector<double>> type_keys;
  std::vector<std::vector<double>> answer_protos;
  std::vector<int> majority;
  std::size_t key_dims = 0;
};

std::vector<double> unit_gaussian(Rng& rng, std::size_t dims) {
  std::vector<double> v(dims);
  double sq = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    sq += x * x;
  }
  const double nrm = std::sqrt(sq);
  for (auto& x : v) x /= nrm;
  return v;
}

World make_world(const DatasetSpec& spec) {
  Rng rng(derive_seed(spec.seed, kWorldStream));
  World w;
  const auto dims = static_cast<std::size_t>(spec.descriptor_dim);
  w.key_dims = dims / 2;
  for (int t = 0; t < spec.num_question_types; ++t) w.type_keys.push_back(unit_gaussian(rng, w.key_dims));
  for (int a = 0; a < spec.num_answers(); ++a) w.answer_protos.push_back(unit_gaussian(rng, dims - w.key_dims));
  for (int t = 0; t < spec.num_question_types; ++t) {
    w.majority.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.answers_per_type))));
  }
  return w;
}

void write_object(const World& w, const DatasetSpec& spec, Rng& rng, std::span<double> row, int key_type,
                  int answer) {
  for (std::size_t j = 0; j < w.key_dims; ++j) row[j] = w.type_keys[key_type][j];
  const auto& proto = w.answer_protos[answer];
  for (std::size_t j = 0; j < proto.size(); ++j) row[w.key_dims + j] = proto[j];
  for (auto& x : row) x += spec.noise_std * rng.normal();
}

std::vector<double> prior_for(const DatasetSpec& spec, int major, Split split) {
  const int apt = spec.answers_per_type;
  const double top = split == Split::kTrain ? spec.train_prior_skew : 1.0 - spec.train_prior_skew;
  std::vector<double> p(static_cast<std::size_t>(apt), (1.0 - top) / (apt - 1));
  p[static_cast<std::size_t>(major)] = top;
  return p;
}

int sample_categorical(Rng& rng, const std::vector<double>& probs) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

void fill_irrelevant(const World& w, const DatasetSpec& spec, Rng& rng, VQAInstance& inst) {
  const auto mask = inst.relevant_mask();
  const int types = spec.num_question_types;
  for (std::size_t r = 0; r < mask.size(); ++r) {
    if (mask[r]) continue;
    // Objects of some other category, showing an appearance from this question's answer set
    // drawn independently of the label.
    int key_type = inst.qtype;
    if (types > 1) {
      key_type = static_cast<int>(rng.below(static_cast<std::uint64_t>(types - 1)));
      if (key_type >= inst.qtype) ++key_type;
    }
    const int local = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.answers_per_type)));
    write_object(w, spec, rng, inst.objects.row(r), key_type, inst.qtype * spec.answers_per_type + local);
  }
}

VQAInstance make_instance(const World& w, const DatasetSpec& spec, Split split, std::size_t index) {
  const auto split_id = static_cast<std::uint64_t>(split);
  Rng core(derive_seed(derive_seed(spec.seed, kCoreStream + split_id), index));
  Rng distract(derive_seed(derive_seed(spec.seed, kDistractorStream + split_id), index));

  VQAInstance inst;
  const auto n = static_cast<std::size_t>(spec.n_objects);
  inst.qtype = static_cast<int>(core.below(static_cast<std::uint64_t>(spec.num_question_types)));
  const int local = sample_categorical(core, prior_for(spec, w.majority[inst.qtype], split));
  const int answer = inst.qtype * spec.answers_per_type + local;
  inst.answers = {answer};

  const auto k = static_cast<std::size_t>(core.between(spec.relevant_min, spec.relevant_max));
  std::vector<int> slots(n);
  for (std::size_t i = 0; i < n; ++i) slots[i] = static_cast<int>(i);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + core.below(n - i);
    std::swap(slots[i], slots[j]);
  }
  inst.relevant.assign(slots.begin(), slots.begin() + static_cast<long>(k));
  std::sort(inst.relevant.begin(), inst.relevant.end());

  inst.question.push_back(inst.qtype);
  const int distractor_vocab = spec.vocab_size - spec.num_question_types;
  for (int s = 1; s < spec.question_len; ++s) {
    inst.question.push_back(spec.num_question_types +
                            static_cast<int>(core.below(static_cast<std::uint64_t>(distractor_vocab))));
  }

  inst.objects = Tensor(Shape{n, static_cast<std::size_t>(spec.descriptor_dim)});
  for (int r : inst.relevant) write_object(w, spec, core, inst.objects.row(static_cast<std::size_t>(r)), inst.qtype, answer);
  fill_irrelevant(w, spec, distract, inst);
  return inst;
}

}  // namespace

void DatasetSpec::validate() const {
  require(num_question_types >= 1, "num_question_types must be >= 1");
  require(answers_per_type >= 2, "answers_per_type must be >= 2");
  require(n_objects >= 1, "n_objects must be >= 1");
  require(descriptor_dim >= 2, "descriptor_dim must be >= 2");
  require(question_len >= 1, "question_len must be >= 1");
  require(question_len == 1 || vocab_size > num_question_types,
          "vocab_size must exceed num_question_types to leave room for distractor tokens");
  require(train_size >= 0 && test_size >= 0, "split sizes must be non-negative");
  require(train_prior_skew >= 0.5 && train_prior_skew <= 1.0, "train_prior_skew must lie in [0.5, 1]");
  require(relevant_min >= 1 && relevant_max <= n_objects && relevant_min <= relevant_max,
          "relevant count range must satisfy 1 <= min <= max <= n_objects");
  require(noise_std >= 0.0, "noise_std must be non-negative");
}

Tensor VQAInstance::answer_targets(int num_answers) const {
  Tensor t(Shape{static_cast<std::size_t>(num_answers)});
  for (int a : answers) {
    if (a < 0 || a >= num_answers) throw ShapeError("answer id " + std::to_string(a) + " outside answer space");
    t[static_cast<std::size_t>(a)] = 1.0;
  }
  return t;
}

std::vector<bool> VQAInstance::relevant_mask() const {
  std::vector<bool> mask(n_objects(), false);
  for (int r : relevant) mask.at(static_cast<std::size_t>(r)) = true;
  return mask;
}

int majority_answer(const DatasetSpec& spec, int qtype) { return make_world(spec).majority.at(qtype); }

std::vector<double> answer_prior(const DatasetSpec& spec, int qtype, Split split) {
  return prior_for(spec, majority_answer(spec, qtype), split);
}

VQAInstance generate_instance(const DatasetSpec& spec, Split split, std::size_t index) {
  spec.validate();
  return make_instance(make_world(spec), spec, split, index);
}

Dataset generate(const DatasetSpec& spec) {
  spec.validate();
  const World w = make_world(spec);
  Dataset ds;
  ds.train.reserve(static_cast<std::size_t>(spec.train_size));
  ds.test.reserve(static_cast<std::size_t>(spec.test_size));
  for (int i = 0; i < spec.train_size; ++i) ds.train.push_back(make_instance(w, spec, Split::kTrain, i));
  for (int i = 0; i < spec.test_size; ++i) ds.test.push_back(make_instance(w, spec, Split::kTest, i));
  return ds;
}

VQAInstance redraw_irrelevant(const DatasetSpec& spec, const VQAInstance& inst, std::uint64_t seed) {
  spec.validate();
  VQAInstance out = inst;
  Rng rng(seed);
  fill_irrelevant(make_world(spec), spec, rng, out);
  return out;
}

void write_jsonl(const std::vector<VQAInstance>& instances, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_jsonl: cannot open " + path.string());
  for (const auto& inst : instances) {
    json objects = json::array();
    for (std::size_t r = 0; r < inst.n_objects(); ++r) {
      const auto row = inst.objects.row(r);
      objects.push_back(std::vector<double>(row.begin(), row.end()));
    }
    json line = {{"objects", std::move(objects)},
                 {"question", inst.question},
                 {"answers", inst.answers},
                 {"relevant", inst.relevant},
                 {"qtype", inst.qtype}};
    out << line.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write_jsonl: write failed for " + path.string());
}

std::vector<VQAInstance> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_jsonl: cannot open " + path.string());
  std::vector<VQAInstance> out;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line_no, "expected a JSON object");
    for (const char* key : {"objects", "question", "answers", "relevant", "qtype"}) {
      if (!j.contains(key)) throw ParseError(line_no, std::string("missing key \"") + key + "\"");
    }
    try {
      VQAInstance inst;
      const auto rows = j.at("objects").get<std::vector<std::vector<double>>>();
      const std::size_t cols = rows.empty() ? 0 : rows.front().size();
      std::vector<double> flat;
      flat.reserve(rows.size() * cols);
      for (const auto& row : rows) {
        if (row.size() != cols) throw ParseError(line_no, "key \"objects\": ragged rows");
        flat.insert(flat.end(), row.begin(), row.end());
      }
      inst.objects = Tensor::matrix(rows.size(), cols, std::move(flat));
      inst.question = j.at("question").get<std::vector<int>>();
      inst.answers = j.at("answers").get<std::vector<int>>();
      inst.relevant = j.at("relevant").get<std::vector<int>>();
      inst.qtype = j.at("qtype").get<int>();
      for (int r : inst.relevant) {
        if (r < 0 || static_cast<std::size_t>(r) >= rows.size()) {
          throw ParseError(line_no, "key \"relevant\": index " + std::to_string(r) + " out of range");
        }
      }
      out.push_back(std::move(inst));
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("bad field type: ") + e.what());
    }
  }
  return out;
}

}  // namespace scml
