#include <cmath>
#include <cstdio>
#include <ostream>

#include "scml/harness.hpp"

namespace scml {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Per-type and selection columns; empty cells where a metric does not apply.
void write_tail(std::ostream& out, const MetricsReport& m, int num_types) {
  for (int t = 0; t < num_types; ++t) {
    out << ',';
    if (auto it = m.per_type_accuracy.find(t); it != m.per_type_accuracy.end()) out << fmt(it->second);
  }
  if (m.has_selection) {
    out << ',' << fmt(m.selection_precision) << ',' << fmt(m.selection_recall) << ',' << fmt(m.mean_k_abs_error)
        << ',' << fmt(m.k_within_one);
  } else {
    out << ",,,,";
  }
}

void write_empty(std::ostream& out, int num_types) {
  out << ",,";
  for (int t = 0; t < num_types + 4; ++t) out << ',';
}

}  // namespace

AblationTable ablate(const TrainConfig& base, const std::vector<Variant>& variants,
                     const std::vector<std::uint64_t>& seeds, const std::vector<VQAInstance>& train_split,
                     const std::vector<VQAInstance>& test_split) {
  if (variants.empty()) throw std::invalid_argument("ablate: at least one variant required");
  if (seeds.empty()) throw std::invalid_argument("ablate: at least one seed required");
  AblationTable table;
  for (Variant v : variants) {
    AblationAggregate agg;
    agg.variant = v;
    std::vector<MetricsReport> ok_runs;
    for (std::uint64_t seed : seeds) {
      AblationRow row;
      row.variant = v;
      row.seed = seed;
      TrainConfig cfg = base;
      cfg.variant = v;
      cfg.seed = seed;
      try {
        row.test = train(cfg, train_split, test_split).test_metrics;
        row.ok = true;
        ok_runs.push_back(row.test);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      table.rows.push_back(std::move(row));
    }
    agg.runs = ok_runs.size();
    if (!ok_runs.empty()) {
      const double n = static_cast<double>(ok_runs.size());
      MetricsReport& m = agg.mean;
      m.has_selection = ok_runs.front().has_selection;
      for (const auto& r : ok_runs) {
        m.count += r.count;
        m.overall_accuracy += r.overall_accuracy / n;
        for (const auto& [t, acc] : r.per_type_accuracy) m.per_type_accuracy[t] += acc / n;
        m.selection_precision += r.selection_precision / n;
        m.selection_recall += r.selection_recall / n;
        m.mean_k_abs_error += r.mean_k_abs_error / n;
        m.k_within_one += r.k_within_one / n;
      }
      agg.mean_overall = m.overall_accuracy;
      double var = 0.0;
      for (const auto& r : ok_runs) var += (r.overall_accuracy - agg.mean_overall) * (r.overall_accuracy - agg.mean_overall);
      agg.std_overall = ok_runs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    }
    table.aggregates.push_back(std::move(agg));
  }
  return table;
}

void write_csv(const AblationTable& table, int num_types, std::ostream& out) {
  out << "variant,seed,status,overall,overall_std";
  for (int t = 0; t < num_types; ++t) out << ",qtype_" << t;
  out << ",selection_precision,selection_recall,mean_k_abs_error,k_within_one\n";
  for (const auto& row : table.rows) {
    out << to_string(row.variant) << ',' << row.seed << ',' << (row.ok ? "ok" : "failed");
    if (row.ok) {
      out << ',' << fmt(row.test.overall_accuracy) << ',';
      write_tail(out, row.test, num_types);
    } else {
      write_empty(out, num_types);
    }
    out << '\n';
  }
  for (const auto& agg : table.aggregates) {
    out << to_string(agg.variant) << ",aggregate," << agg.runs << "_runs";
    if (agg.runs > 0) {
      out << ',' << fmt(agg.mean_overall) << ',' << fmt(agg.std_overall);
      write_tail(out, agg.mean, num_types);
    } else {
      write_empty(out, num_types);
    }
    out << '\n';
  }
}

}  // namespace scml
