#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "scml/harness.hpp"
#include "scml/ops.hpp"

namespace py = pybind11;
using namespace scml;
using nlohmann::json;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  const py::buffer_info info = a.request();
  const auto* p = static_cast<const double*>(info.ptr);
  if (info.ndim == 0) return Tensor::scalar(p[0]);
  if (info.ndim == 1) {
    const auto n = static_cast<std::size_t>(info.shape[0]);
    return Tensor(Shape{n}, std::vector<double>(p, p + n));
  }
  if (info.ndim == 2) {
    const auto r = static_cast<std::size_t>(info.shape[0]);
    const auto c = static_cast<std::size_t>(info.shape[1]);
    return Tensor::matrix(r, c, std::vector<double>(p, p + r * c));
  }
  throw ShapeError("expected an array of rank 0, 1 or 2, got rank " + std::to_string(info.ndim));
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.raw().begin(), t.raw().end(), out.mutable_data());
  return out;
}

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::object& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::dict selection_dict(const SelectionResult& s) {
  py::dict d;
  d["sim"] = to_array(s.sim.value());
  d["mask"] = to_array(s.mask.value());
  d["positive"] = to_array(s.positive.value());
  d["negative"] = to_array(s.negative.value());
  d["k_chosen"] = s.k_chosen;
  d["order"] = s.order;
  return d;
}

py::dict train_py(const py::dict& config, const std::vector<VQAInstance>& tr, const std::vector<VQAInstance>& te) {
  const TrainResult res = train(train_config_from_json(from_py(config)), tr, te);
  py::dict out;
  out["metrics"] = to_py(metrics_json(res));
  out["checkpoint"] = to_py(to_json(res.checkpoint));
  return out;
}

py::list predict_py(const py::dict& checkpoint, const std::vector<VQAInstance>& split, const std::string& mode) {
  const Checkpoint ck = checkpoint_from_json(from_py(checkpoint));
  const EvalMode em = eval_mode_from_string(mode);
  Rng noise(derive_seed(ck.config.seed, 3));
  Graph g;
  const ParamVars pv = bind(g, ck.params, false);
  py::list out;
  for (const auto& inst : split) {
    const InstanceForward fw = forward_instance(pv, inst, ck.config, em == EvalMode::kSampled ? &noise : nullptr);
    py::dict row;
    row["logits"] = to_array(fw.pred_pos.value());
    row["answer"] = static_cast<int>(argsort_descending(fw.pred_pos.value()).front());
    if (fw.sel) {
      row["k_chosen"] = fw.sel->k_chosen;
      row["selected"] = fw.sel->selected();
      row["sim"] = to_array(fw.sel->sim.value());
    }
    out.append(row);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Question-conditioned feature selection with counterfactual metric learning";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<TrainingDiverged>(m, "TrainingDiverged", PyExc_RuntimeError);

  py::class_<DatasetSpec>(m, "DatasetSpec")
      .def(py::init<>())
      .def_readwrite("num_question_types", &DatasetSpec::num_question_types)
      .def_readwrite("answers_per_type", &DatasetSpec::answers_per_type)
      .def_readwrite("n_objects", &DatasetSpec::n_objects)
      .def_readwrite("descriptor_dim", &DatasetSpec::descriptor_dim)
      .def_readwrite("question_len", &DatasetSpec::question_len)
      .def_readwrite("vocab_size", &DatasetSpec::vocab_size)
      .def_readwrite("train_size", &DatasetSpec::train_size)
      .def_readwrite("test_size", &DatasetSpec::test_size)
      .def_readwrite("train_prior_skew", &DatasetSpec::train_prior_skew)
      .def_readwrite("relevant_min", &DatasetSpec::relevant_min)
      .def_readwrite("relevant_max", &DatasetSpec::relevant_max)
      .def_readwrite("noise_std", &DatasetSpec::noise_std)
      .def_readwrite("seed", &DatasetSpec::seed)
      .def("num_answers", &DatasetSpec::num_answers)
      .def("validate", &DatasetSpec::validate);

  py::class_<VQAInstance>(m, "VQAInstance")
      .def(py::init<>())
      .def_property(
          "objects", [](const VQAInstance& i) { return to_array(i.objects); },
          [](VQAInstance& i, const Array& a) { i.objects = to_tensor(a); })
      .def_readwrite("question", &VQAInstance::question)
      .def_readwrite("answers", &VQAInstance::answers)
      .def_readwrite("relevant", &VQAInstance::relevant)
      .def_readwrite("qtype", &VQAInstance::qtype)
      .def("__eq__", [](const VQAInstance& a, const VQAInstance& b) { return a == b; });

  m.def("generate", [](const DatasetSpec& s) {
    Dataset ds = generate(s);
    return py::make_tuple(std::move(ds.train), std::move(ds.test));
  });
  m.def("redraw_irrelevant", &redraw_irrelevant, py::arg("spec"), py::arg("instance"), py::arg("seed"));
  m.def("write_jsonl", &write_jsonl, py::arg("instances"), py::arg("path"));
  m.def("read_jsonl", &read_jsonl, py::arg("path"));

  m.def(
      "similarity_scores",
      [](const Array& v, const Array& q) {
        Graph g;
        return to_array(similarity_scores(g.constant(to_tensor(v)), g.constant(to_tensor(q))).value());
      },
      py::arg("visual"), py::arg("question"));
  m.def(
      "fixed_topk_split",
      [](const Array& v, const Array& sim, int k) {
        Graph g;
        return selection_dict(fixed_topk_split(g.constant(to_tensor(v)), g.constant(to_tensor(sim)), k));
      },
      py::arg("visual"), py::arg("sim"), py::arg("k"));
  m.def(
      "adaptive_split",
      [](const Array& v, const Array& sim, double temperature, const Array& noise, bool hard,
         const std::string& scoring) {
        Graph g;
        return selection_dict(adaptive_split(g.constant(to_tensor(v)), g.constant(to_tensor(sim)), temperature,
                                             to_tensor(noise), hard, cut_scoring_from_string(scoring)));
      },
      py::arg("visual"), py::arg("sim"), py::arg("temperature"), py::arg("noise"), py::arg("hard") = true,
      py::arg("scoring") = "sorted_sim");
  m.def(
      "gumbel_softmax",
      [](const Array& logits, double temperature, bool hard, const Array& noise) {
        Graph g;
        return to_array(ops::gumbel_softmax(g.constant(to_tensor(logits)), temperature, hard, to_tensor(noise)).value());
      },
      py::arg("logits"), py::arg("temperature"), py::arg("hard"), py::arg("noise"));

  m.def(
      "ms_loss",
      [](const Array& anchors, const std::vector<Array>& pos, const std::vector<Array>& neg, double alpha,
         double beta, double lambda_margin) {
        Graph g;
        std::vector<Var> p, n;
        for (const auto& a : pos) p.push_back(g.constant(to_tensor(a)));
        for (const auto& a : neg) n.push_back(g.constant(to_tensor(a)));
        LossConfig cfg;
        cfg.alpha = alpha;
        cfg.beta = beta;
        cfg.lambda_margin = lambda_margin;
        return ms_loss(g.constant(to_tensor(anchors)), p, n, cfg).value().item();
      },
      py::arg("anchors"), py::arg("positives"), py::arg("negatives"), py::arg("alpha") = 2.0, py::arg("beta") = 50.0,
      py::arg("lambda_margin") = 0.5);
  m.def(
      "vqa_bce",
      [](const Array& logits, const Array& targets) {
        Graph g;
        return vqa_bce(g.constant(to_tensor(logits)), to_tensor(targets)).value().item();
      },
      py::arg("logits"), py::arg("targets"));
  m.def(
      "pseudo_labels",
      [](const Array& pred, const Array& answers, int top_n) {
        return to_array(pseudo_labels(to_tensor(pred), to_tensor(answers), top_n));
      },
      py::arg("pred_pos_logits"), py::arg("answers"), py::arg("top_n") = 1);

  m.def(
      "default_config", [] { return to_py(to_json(TrainConfig{})); }, "Default training config as a dict.");
  m.def("train", &train_py, py::arg("config"), py::arg("train_split"), py::arg("test_split"),
        "Train one run; returns {'metrics': ..., 'checkpoint': ...}.");
  m.def(
      "evaluate",
      [](const py::dict& checkpoint, const std::vector<VQAInstance>& split, const std::string& mode) {
        return to_py(to_json(evaluate(checkpoint_from_json(from_py(checkpoint)), split, eval_mode_from_string(mode))));
      },
      py::arg("checkpoint"), py::arg("split"), py::arg("eval_mode") = "argmax_cut");
  m.def("predict", &predict_py, py::arg("checkpoint"), py::arg("split"), py::arg("eval_mode") = "argmax_cut",
        "Per-instance logits, predicted answer and (for selecting variants) the chosen cut.");
  m.def(
      "ablate",
      [](const py::dict& config, const std::vector<std::string>& variants, const std::vector<std::uint64_t>& seeds,
         const std::vector<VQAInstance>& tr, const std::vector<VQAInstance>& te, int num_types) {
        std::vector<Variant> vs;
        for (const auto& v : variants) vs.push_back(variant_from_string(v));
        std::ostringstream csv;
        write_csv(ablate(train_config_from_json(from_py(config)), vs, seeds, tr, te), num_types, csv);
        return csv.str();
      },
      py::arg("config"), py::arg("variants"), py::arg("seeds"), py::arg("train_split"), py::arg("test_split"),
      py::arg("num_types"), "Returns the ablation table as CSV text.");
  m.def(
      "gradcheck",
      [](int points, std::uint64_t seed) {
        py::list out;
        for (const auto& r : run_gradcheck_suite(points, seed)) {
          py::dict d;
          d["name"] = r.name;
          d["points"] = r.points;
          d["max_rel_error"] = r.max_rel_error;
          d["passed"] = r.passed;
          out.append(d);
        }
        return out;
      },
      py::arg("points") = 10, py::arg("seed") = 7);
}
