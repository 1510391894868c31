#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "numgraph/harness.hpp"

using namespace numgraph;

namespace {

int cmd_annotate(const std::string& question, const std::string& passage) {
  AnnotatedPassage ann = annotate(question, passage);
  std::cout << serialize_annotations(ann) << "\n";
  for (const std::string& w : ann.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

int cmd_build_graph(const std::string& question, const std::string& passage,
                    const std::string& mode) {
  AnnotatedPassage ann = annotate(question, passage);
  GraphMode gmode = mode == "NH" ? GraphMode::NH : GraphMode::FULL;
  ReasoningGraph g = build_graph(ann, gmode);
  std::cout << graph_to_json(g) << "\n";
  GraphStats stats = graph_stats(g);
  std::cerr << stats.n_number_nodes << " number nodes, " << stats.n_entity_nodes
            << " entity nodes, " << stats.total_pairs << " edge pairs\n";
  return 0;
}

int cmd_gen_synthetic(const SyntheticSpec& spec, const std::string& out) {
  std::vector<DropExample> data = generate_synthetic(spec);
  save_drop(data, out);
  std::cout << "wrote " << data.size() << " examples to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_prefix) {
  RunConfig cfg = load_run_config(config_path);
  LoadStats stats;
  std::vector<DropExample> data = load_drop_file(data_path, &stats);
  std::cerr << "loaded " << stats.n_loaded << " examples (" << stats.n_skipped
            << " skipped)\n";
  ParamStore params;
  TrainResult result = train(cfg, data, params, out_prefix);
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
    std::cout << "epoch " << (e + 1) << " loss " << result.epoch_loss[e] << "\n";
  std::cout << "trained on " << result.n_train << " examples ("
            << result.n_skipped << " without usable supervision)\n";
  if (!result.checkpoints.empty())
    std::cout << "final checkpoint: " << result.checkpoints.back() << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path,
             const std::string& report_path, const std::string& preds_path,
             const std::string& attention_path) {
  ParamStore params;
  RunConfig cfg = load_checkpoint(ckpt_path, params);
  LoadStats stats;
  std::vector<DropExample> data = load_drop_file(data_path, &stats);
  std::cerr << "loaded " << stats.n_loaded << " examples (" << stats.n_skipped
            << " skipped)\n";
  std::vector<Prediction> preds;
  EvalReport report = evaluate(cfg, params, data, &preds);
  if (!report_path.empty()) write_report(report, report_path);
  if (!preds_path.empty()) write_predictions(preds, preds_path);
  if (!attention_path.empty()) {
    std::ofstream out(attention_path);
    if (!out) throw HarnessError("cannot write " + attention_path);
    auto prepared = prepare_examples(cfg, data, false, nullptr);
    for (const PreparedExample& ex : prepared) {
      ModelOutputs mo = run_model(cfg, params, ex);
      nlohmann::ordered_json rec;
      rec["query_id"] = ex.raw.query_id;
      rec["attention"] = nlohmann::ordered_json::parse(attention_to_json(mo.qdgat.attention));
      out << rec.dump() << "\n";
    }
  }
  std::printf("EM %.2f  F1 %.2f  over %zu examples (%zu skipped)\n", report.em,
              report.f1, report.n_examples, report.n_skipped);
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& data_path) {
  RunConfig cfg = load_run_config(config_path);
  std::vector<DropExample> data = load_drop_file(data_path, nullptr);
  std::vector<AblationResult> rows = ablate(cfg, data);
  std::cout << ablation_table(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numgraph: question-directed graph reasoning over text"};
  app.require_subcommand(1);

  std::string question, passage, mode = "full";
  auto* ann_cmd = app.add_subcommand("annotate", "Annotate numbers and entities");
  ann_cmd->add_option("--question", question)->required();
  ann_cmd->add_option("--passage", passage)->required();

  auto* graph_cmd = app.add_subcommand("build-graph", "Build the reasoning graph");
  graph_cmd->add_option("--question", question)->required();
  graph_cmd->add_option("--passage", passage)->required();
  graph_cmd->add_option("--mode", mode)->check(CLI::IsMember({"full", "NH"}));

  SyntheticSpec spec;
  std::string out_path = "synthetic.json";
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Generate a synthetic dataset");
  gen_cmd->add_option("--n", spec.n_examples);
  gen_cmd->add_option("--seed", spec.seed);
  gen_cmd->add_option("--out", out_path);
  gen_cmd->add_option("--w-addition", spec.w_addition);
  gen_cmd->add_option("--w-subtraction", spec.w_subtraction);
  gen_cmd->add_option("--w-count", spec.w_count);
  gen_cmd->add_option("--w-span", spec.w_span);
  gen_cmd->add_option("--w-ordinal-span", spec.w_ordinal_span);

  std::string config_path, data_path, ckpt_prefix = "model";
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", config_path)->required();
  train_cmd->add_option("--data", data_path)->required();
  train_cmd->add_option("--out", ckpt_prefix, "checkpoint path prefix");

  std::string ckpt_path, report_path, preds_path, attention_path;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--ckpt", ckpt_path)->required();
  eval_cmd->add_option("--data", data_path)->required();
  eval_cmd->add_option("--report", report_path);
  eval_cmd->add_option("--preds", preds_path);
  eval_cmd->add_option("--dump-attention", attention_path);

  auto* ablate_cmd = app.add_subcommand("ablate", "Train and score all ablations");
  ablate_cmd->add_option("--config", config_path)->required();
  ablate_cmd->add_option("--data", data_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ann_cmd) return cmd_annotate(question, passage);
    if (*graph_cmd) return cmd_build_graph(question, passage, mode);
    if (*gen_cmd) return cmd_gen_synthetic(spec, out_path);
    if (*train_cmd) return cmd_train(config_path, data_path, ckpt_prefix);
    if (*eval_cmd)
      return cmd_eval(ckpt_path, data_path, report_path, preds_path, attention_path);
    if (*ablate_cmd) return cmd_ablate(config_path, data_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
