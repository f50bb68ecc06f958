#ifndef SCML_SYNTHDATA_HPP
#define SCML_SYNTHDATA_HPP

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "scml/tensor.hpp"

namespace scml {

/// Knobs of the prior-shift generator. Answers are partitioned by question type: type t owns
/// global answer ids [t * answers_per_type, (t + 1) * answers_per_type).
struct DatasetSpec {
  int num_question_types = 4;
  int answers_per_type = 3;
  int n_objects = 8;
  int descriptor_dim = 16;
  int question_len = 2;
  int vocab_size = 64;
  int train_size = 5000;
  int test_size = 2000;
  /// Train mass of each type's majority answer. In test that answer gets 1 - skew.
  double train_prior_skew = 0.9;
  int relevant_min = 1;
  int relevant_max = 4;
  double noise_std = 0.1;
  std::uint64_t seed = 0;

  int num_answers() const { return num_question_types * answers_per_type; }
  void validate() const;
};

struct VQAInstance {
  Tensor objects;               // n x descriptor_dim
  std::vector<int> question;    // token ids; question[0] is the type token
  std::vector<int> answers;     // labeled global answer ids
  std::vector<int> relevant;    // indices of the planted relevant objects, ascending
  int qtype = 0;

  std::size_t n_objects() const { return objects.rank() == 2 ? objects.dim(0) : 0; }
  /// Multi-hot answer vector over `num_answers` classes.
  Tensor answer_targets(int num_answers) const;
  std::vector<bool> relevant_mask() const;

  friend bool operator==(const VQAInstance&, const VQAInstance&) = default;
};

struct Dataset {
  std::vector<VQAInstance> train;
  std::vector<VQAInstance> test;
};

enum class Split { kTrain = 0, kTest = 1 };

/// Answer prior of question type `qtype` on a split (length answers_per_type).
std::vector<double> answer_prior(const DatasetSpec& spec, int qtype, Split split);
/// Local index of the majority (train) answer of each type.
int majority_answer(const DatasetSpec& spec, int qtype);

Dataset generate(const DatasetSpec& spec);

/// Instance `index` of a split. Deterministic in (spec, split, index).
VQAInstance generate_instance(const DatasetSpec& spec, Split split, std::size_t index);

/// Redraws every irrelevant object of `inst` from a fresh stream. Answer, relevant objects and
/// question are untouched.
VQAInstance redraw_irrelevant(const DatasetSpec& spec, const VQAInstance& inst, std::uint64_t seed);

/// Error reading a JSONL dataset; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

void write_jsonl(const std::vector<VQAInstance>& instances, const std::filesystem::path& path);
std::vector<VQAInstance> read_jsonl(const std::filesystem::path& path);

}  // namespace scml

#endif  // SCML_SYNTHDATA_HPP
