// scml: dataset generation, training, evaluation, ablation and gradient checks.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "scml/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scml;

namespace {

json spec_json(const DatasetSpec& s) {
  return json{{"num_question_types", s.num_question_types},
              {"answers_per_type", s.answers_per_type},
              {"n_objects", s.n_objects},
              {"descriptor_dim", s.descriptor_dim},
              {"question_len", s.question_len},
              {"vocab_size", s.vocab_size},
              {"train_size", s.train_size},
              {"test_size", s.test_size},
              {"train_prior_skew", s.train_prior_skew},
              {"relevant_count_range", {s.relevant_min, s.relevant_max}},
              {"noise_std", s.noise_std},
              {"seed", s.seed}};
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::vector<VQAInstance> load_split(const std::string& path) {
  if (!fs::exists(path)) throw std::runtime_error("dataset not found: " + path);
  return read_jsonl(path);
}

TrainConfig load_config(const std::string& path, std::uint64_t seed) {
  TrainConfig cfg = path.empty() ? TrainConfig{} : train_config_from_json(read_json_file(path));
  cfg.seed = seed;
  return cfg;
}

int run_gradcheck(int points, std::uint64_t seed) {
  const auto records = run_gradcheck_suite(points, seed);
  bool ok = true;
  std::printf("%-44s %6s %14s  %s\n", "check", "points", "max_rel_error", "status");
  for (const auto& r : records) {
    std::printf("%-44s %6d %14.3e  %s\n", r.name.c_str(), r.points, r.max_rel_error, r.passed ? "ok" : "FAIL");
    ok = ok && r.passed;
  }
  std::printf("%zu checks, tolerance %.0e: %s\n", records.size(), kGradCheckTolerance, ok ? "all passed" : "FAILED");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scml: question-conditioned feature selection with counterfactual metric learning"};
  app.require_subcommand(1);

  DatasetSpec spec;
  std::string out_dir = ".";
  auto* gen = app.add_subcommand("gen-data", "Generate train/test JSONL splits with a controlled answer prior shift");
  gen->add_option("--num-question-types", spec.num_question_types);
  gen->add_option("--answers-per-type", spec.answers_per_type);
  gen->add_option("--n-objects", spec.n_objects);
  gen->add_option("--descriptor-dim", spec.descriptor_dim);
  gen->add_option("--question-len", spec.question_len);
  gen->add_option("--vocab-size", spec.vocab_size);
  gen->add_option("--train-size", spec.train_size);
  gen->add_option("--test-size", spec.test_size);
  gen->add_option("--train-prior-skew", spec.train_prior_skew);
  gen->add_option("--relevant-min", spec.relevant_min);
  gen->add_option("--relevant-max", spec.relevant_max);
  gen->add_option("--noise-std", spec.noise_std);
  gen->add_option("--seed", spec.seed);
  gen->add_option("--out-dir", out_dir, "Directory receiving train.jsonl and test.jsonl");

  std::string train_path, test_path, config_path, checkpoint_out = "checkpoint.json", metrics_out = "metrics.json";
  std::uint64_t seed = 0;
  auto* tr = app.add_subcommand("train", "Train one variant and write checkpoint + metrics JSON");
  tr->add_option("--train", train_path, "Train split (JSONL)")->required();
  tr->add_option("--test", test_path, "Test split (JSONL)")->required();
  tr->add_option("--config", config_path, "TrainConfig JSON");
  tr->add_option("--seed", seed)->required();
  tr->add_option("--out-checkpoint", checkpoint_out);
  tr->add_option("--out-metrics", metrics_out);

  std::string checkpoint_in, data_path, eval_mode, eval_out;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  ev->add_option("--checkpoint", checkpoint_in)->required();
  ev->add_option("--data", data_path)->required();
  ev->add_option("--eval-mode", eval_mode, "argmax_cut or sampled (default: checkpoint config)");
  ev->add_option("--out", eval_out, "Metrics JSON path (default: stdout only)");

  int num_seeds = 5;
  std::vector<std::string> variant_names;
  std::string csv_out = "ablation.csv";
  std::vector<double> gammas;
  auto* ab = app.add_subcommand("ablate", "Train every variant for several seeds and write a CSV table");
  ab->add_option("--train", train_path)->required();
  ab->add_option("--test", test_path)->required();
  ab->add_option("--config", config_path);
  ab->add_option("--seed", seed, "First seed; cells use seed, seed+1, ...")->required();
  ab->add_option("--seeds", num_seeds, "Number of seeds")->check(CLI::PositiveNumber);
  ab->add_option("--variants", variant_names, "Subset of variants (default: all)")->delimiter(',');
  ab->add_option("--out", csv_out, "CSV path; with --gammas, one file per value named <stem>_gamma<value><ext>");
  ab->add_option("--gammas", gammas, "Repeat the table for each loss weight, e.g. 0.1,0.5,1.0")
      ->delimiter(',')
      ->check(CLI::NonNegativeNumber);

  int points = 10;
  std::uint64_t gc_seed = 7;
  auto* gc = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients for every op and loss");
  gc->add_option("--points", points)->check(CLI::PositiveNumber);
  gc->add_option("--seed", gc_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << '\n' << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  try {
    if (*gen) {
      spec.validate();
      std::cout << "resolved spec: " << spec_json(spec).dump() << "\nseed: " << spec.seed << '\n';
      const Dataset ds = generate(spec);
      fs::create_directories(out_dir);
      write_jsonl(ds.train, fs::path(out_dir) / "train.jsonl");
      write_jsonl(ds.test, fs::path(out_dir) / "test.jsonl");
      json meta = spec_json(spec);
      write_text((fs::path(out_dir) / "spec.json").string(), meta.dump(2) + "\n");
      std::cout << "wrote " << ds.train.size() << " train / " << ds.test.size() << " test instances to " << out_dir
                << '\n';
      return 0;
    }
    if (*tr) {
      const TrainConfig cfg = load_config(config_path, seed);
      std::cout << "resolved config: " << to_json(cfg).dump() << "\nseed: " << cfg.seed << '\n';
      const auto train_split = load_split(train_path);
      const auto test_split = load_split(test_path);
      const TrainResult res = train(cfg, train_split, test_split);
      write_text(checkpoint_out, to_json(res.checkpoint).dump() + "\n");
      const json metrics = metrics_json(res);
      write_text(metrics_out, metrics.dump(2) + "\n");
      std::cout << "test overall accuracy: " << res.test_metrics.overall_accuracy << '\n';
      return 0;
    }
    if (*ev) {
      const Checkpoint ck = checkpoint_from_json(read_json_file(checkpoint_in));
      const EvalMode mode = eval_mode.empty() ? ck.config.eval_mode : eval_mode_from_string(eval_mode);
      std::cout << "resolved config: " << to_json(ck.config).dump() << "\nseed: " << ck.seed << '\n';
      const MetricsReport rep = evaluate(ck, load_split(data_path), mode);
      const std::string text = to_json(rep).dump(2) + "\n";
      std::cout << text;
      if (!eval_out.empty()) write_text(eval_out, text);
      return 0;
    }
    if (*ab) {
      const TrainConfig cfg = load_config(config_path, seed);
      std::vector<Variant> variants;
      for (const auto& v : variant_names) variants.push_back(variant_from_string(v));
      if (variants.empty()) variants = all_variants();
      std::vector<std::uint64_t> seeds;
      for (int i = 0; i < num_seeds; ++i) seeds.push_back(seed + static_cast<std::uint64_t>(i));
      std::cout << "resolved config: " << to_json(cfg).dump() << "\nseeds: " << seed << ".." << seeds.back() << '\n';
      const auto train_split = load_split(train_path);
      const auto test_split = load_split(test_path);
      int num_types = 0;
      for (const auto& inst : train_split) num_types = std::max(num_types, inst.qtype + 1);
      auto run = [&](const TrainConfig& c, const std::string& path) {
        const AblationTable table = ablate(c, variants, seeds, train_split, test_split);
        std::ostringstream csv;
        write_csv(table, num_types, csv);
        write_text(path, csv.str());
        for (const auto& row : table.rows)
          if (!row.ok) std::cerr << "cell " << to_string(row.variant) << "/" << row.seed << " failed: " << row.error << '\n';
        for (const auto& agg : table.aggregates)
          std::printf("%-24s overall %.4f +- %.4f (%zu runs)\n", to_string(agg.variant).c_str(), agg.mean_overall,
                      agg.std_overall, agg.runs);
      };
      if (gammas.empty()) {
        run(cfg, csv_out);
      } else {
        const fs::path out(csv_out);
        for (double g : gammas) {
          TrainConfig c = cfg;
          c.loss.gamma = g;
          std::ostringstream tag;
          tag << g;
          const fs::path path = out.parent_path() / (out.stem().string() + "_gamma" + tag.str() + out.extension().string());
          std::cout << "gamma " << tag.str() << " -> " << path.string() << '\n';
          run(c, path.string());
        }
      }
      return 0;
    }
    if (*gc) {
      std::cout << "seed: " << gc_seed << '\n';
      return run_gradcheck(points, gc_seed);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
