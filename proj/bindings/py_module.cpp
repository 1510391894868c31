#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>
#include <string>
#include <vector>

#include "numgraph/harness.hpp"

namespace py = pybind11;
using namespace numgraph;

PYBIND11_MODULE(_core, m) {
  m.doc() = "numgraph core: annotation, reasoning graphs, training, scoring";

  m.def("tokenize", [](const std::string& text) {
    std::vector<std::string> out;
    for (const Token& t : tokenize(text)) out.push_back(t.text);
    return out;
  });

  m.def("annotate_json", [](const std::string& question, const std::string& passage) {
    return serialize_annotations(annotate(question, passage));
  });

  m.def(
      "graph_json",
      [](const std::string& question, const std::string& passage,
         const std::string& mode) {
        GraphMode gmode = mode == "NH" ? GraphMode::NH : GraphMode::FULL;
        return graph_to_json(build_graph(annotate(question, passage), gmode));
      },
      py::arg("question"), py::arg("passage"), py::arg("mode") = "full");

  m.def("normalize_tokens", &normalize_tokens);

  m.def("score_answer", [](const std::vector<std::string>& predicted,
                           const std::vector<std::string>& gold) {
    ScoredPair s = score_answer(predicted, gold);
    return py::make_tuple(s.em, s.f1);
  });

  m.def(
      "gen_synthetic",
      [](const std::string& path, std::size_t n, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.n_examples = n;
        spec.seed = seed;
        std::vector<DropExample> data = generate_synthetic(spec);
        save_drop(data, path);
        return data.size();
      },
      py::arg("path"), py::arg("n") = 20, py::arg("seed") = 7);

  m.def("default_config_json", [] { return run_config_json(RunConfig{}); });

  m.def(
      "train_json",
      [](const std::string& config_json, const std::string& data_path,
         const std::string& out_prefix) {
        RunConfig cfg = parse_run_config(config_json);
        std::vector<DropExample> data = load_drop_file(data_path, nullptr);
        ParamStore params;
        TrainResult r = train(cfg, data, params, out_prefix);
        nlohmann::ordered_json doc;
        doc["epoch_loss"] = r.epoch_loss;
        doc["n_train"] = r.n_train;
        doc["n_skipped"] = r.n_skipped;
        doc["checkpoints"] = r.checkpoints;
        return doc.dump();
      },
      py::arg("config_json"), py::arg("data_path"), py::arg("out_prefix"),
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "evaluate_json",
      [](const std::string& ckpt_path, const std::string& data_path) {
        ParamStore params;
        RunConfig cfg = load_checkpoint(ckpt_path, params);
        std::vector<DropExample> data = load_drop_file(data_path, nullptr);
        return report_json(evaluate(cfg, params, data));
      },
      py::arg("ckpt_path"), py::arg("data_path"),
      py::call_guard<py::gil_scoped_release>());
}
