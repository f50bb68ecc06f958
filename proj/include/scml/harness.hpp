#ifndef SCML_HARNESS_HPP
#define SCML_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scml/losses.hpp"
#include "scml/model.hpp"
#include "scml/rng.hpp"
#include "scml/selection.hpp"
#include "scml/synthdata.hpp"

namespace scml {

/// Ablation rows, cumulative left to right.
enum class Variant { kBaselineAllFeatures, kPos, kPosMs, kPosNegMs, kPosNegMsAdaptive };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
std::vector<Variant> all_variants();
bool uses_selection(Variant v);

enum class EvalMode {
  kArgmaxCut,  // zero Gumbel noise: deterministic cut
  kSampled,    // Gumbel noise drawn from the config seed
};

std::string to_string(EvalMode m);
EvalMode eval_mode_from_string(const std::string& s);

struct TrainConfig {
  LossConfig loss;
  Variant variant = Variant::kPosNegMsAdaptive;
  int fixed_k = 0;  // 0 selects n_objects / 2
  double temperature = 1.0;
  CutScoring cut_scoring = CutScoring::kSimGap;
  double learning_rate = 5e-5;
  int epochs = 20;
  int batch_size = 128;
  std::uint64_t seed = 0;
  EvalMode eval_mode = EvalMode::kArgmaxCut;
  int embed_dim = 32;
  int hidden_dim = 64;
  int num_answers = 12;
  int vocab_size = 64;

  void validate() const;
  int resolved_k(std::size_t n_objects) const;
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Adamax with beta1 = 0.9, beta2 = 0.999, eps = 1e-8:
///   m <- b1 m + (1 - b1) g;  u <- max(b2 u, |g| + eps);  p <- p - lr / (1 - b1^t) * m / u
struct AdamaxState {
  std::vector<Tensor> m;
  std::vector<Tensor> u;
  long step = 0;
};

void adamax_step(std::span<Tensor* const> params, std::span<const Tensor> grads, double lr, AdamaxState& state);
void adamax_step(ModelParams& params, std::span<const Tensor> grads, double lr, AdamaxState& state);

struct Checkpoint {
  TrainConfig config;
  ModelParams params;
  std::uint64_t seed = 0;
  int epoch = 0;
};

nlohmann::json to_json(const Checkpoint& ck);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

struct MetricsReport {
  std::size_t count = 0;
  double overall_accuracy = 0.0;
  std::map<int, double> per_type_accuracy;
  /// Selection metrics exist only for variants that select.
  bool has_selection = false;
  double selection_precision = 0.0;
  double selection_recall = 0.0;
  double mean_k_abs_error = 0.0;
  /// Fraction of instances with |k_chosen - k*| <= 1.
  double k_within_one = 0.0;
};

nlohmann::json to_json(const MetricsReport& r);

struct EpochLog {
  int epoch = 0;
  LossBreakdown mean;
};

struct TrainResult {
  Checkpoint checkpoint;
  MetricsReport train_metrics;
  MetricsReport test_metrics;
  std::vector<EpochLog> loss_curve;
};

nlohmann::json metrics_json(const TrainResult& r);

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Forward graph of one instance under a config; shared by training and evaluation.
struct InstanceForward {
  Encoded enc;
  Var pred_pos;
  Var pred_neg;  // invalid when the variant has no counterfactual path
  std::optional<SelectionResult> sel;
};

/// `noise_rng` supplies Gumbel noise for the adaptive cut; nullptr means zero noise.
InstanceForward forward_instance(const ParamVars& p, const VQAInstance& inst, const TrainConfig& cfg,
                                 Rng* noise_rng);

/// Loss terms for one instance with the variant's wiring: components the variant does not list
/// are identically zero.
LossTerms instance_loss(const InstanceForward& fw, const VQAInstance& inst, const TrainConfig& cfg);

ModelParams init_model(const TrainConfig& cfg, const std::vector<VQAInstance>& data);

TrainResult train(const TrainConfig& cfg, const std::vector<VQAInstance>& train_split,
                  const std::vector<VQAInstance>& test_split);

MetricsReport evaluate(const Checkpoint& ck, const std::vector<VQAInstance>& split, EvalMode mode);

struct AblationRow {
  Variant variant{};
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricsReport test;
};

struct AblationAggregate {
  Variant variant{};
  std::size_t runs = 0;
  double mean_overall = 0.0;
  double std_overall = 0.0;
  MetricsReport mean;  // per-column means over successful runs
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::vector<AblationAggregate> aggregates;
};

/// Trains and evaluates every (variant, seed) cell. A failing cell is recorded, not rethrown.
AblationTable ablate(const TrainConfig& base, const std::vector<Variant>& variants,
                     const std::vector<std::uint64_t>& seeds, const std::vector<VQAInstance>& train_split,
                     const std::vector<VQAInstance>& test_split);

void write_csv(const AblationTable& table, int num_types, std::ostream& out);

struct GradCheckRecord {
  std::string name;
  int points = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

constexpr double kGradCheckTolerance = 1e-5;

/// Analytic vs central-difference gradients for every primitive and composite loss.
std::vector<GradCheckRecord> run_gradcheck_suite(int points = 10, std::uint64_t seed = 7);

}  // namespace scml

#endif  // SCML_HARNESS_HPP
