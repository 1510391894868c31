#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "numgraph/data.hpp"
#include "numgraph/encoder.hpp"
#include "numgraph/graph.hpp"
#include "numgraph/metrics.hpp"
#include "numgraph/qdgat.hpp"

namespace numgraph {

class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::size_t d_h = 64;
  std::size_t T = 2;
  std::size_t batch_size = 16;
  std::size_t epochs = 5;
  double lr_encoder = 1e-3;
  double lr_other = 1e-3;
  double weight_decay_encoder = 1e-6;
  double weight_decay_other = 1e-6;
  std::uint64_t seed = 7;
  AblationMode ablation = AblationMode::FULL;
  std::size_t vocab_size = 1024;
  std::size_t n_mix_layers = 1;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);
std::string run_config_json(const RunConfig& cfg);
AblationMode ablation_from_string(const std::string& s);

// Worker cap from NUMGRAPH_THREADS (default 1, minimum 1).
std::size_t worker_count();

void init_model_params(const RunConfig& cfg, ParamStore& params);

struct PreparedExample {
  DropExample raw;
  AnnotatedPassage ann;
  ReasoningGraph graph;
  GoldAnnotation supervision;
};

// Annotates and builds graphs; with require_supervision, examples without any
// derivation are dropped and counted.
std::vector<PreparedExample> prepare_examples(const RunConfig& cfg,
                                              const std::vector<DropExample>& data,
                                              bool require_supervision,
                                              std::size_t* n_skipped);

struct ModelOutputs {
  EncoderOutput enc;
  QdgatResult qdgat;
  Tensor U;
  HeadsOutput heads;
};

ModelOutputs run_model(const RunConfig& cfg, const ParamStore& params,
                       const PreparedExample& ex);

struct TrainResult {
  std::vector<double> epoch_loss;  // average per-example loss
  std::size_t n_train = 0;
  std::size_t n_skipped = 0;
  std::vector<std::string> checkpoints;  // one per epoch when a prefix is given
};

TrainResult train(const RunConfig& cfg, const std::vector<DropExample>& data,
                  ParamStore& params, const std::string& ckpt_prefix = "");

void save_checkpoint(const ParamStore& params, const RunConfig& cfg,
                     const std::string& path);
RunConfig load_checkpoint(const std::string& path, ParamStore& params);

struct TypeMetrics {
  double em = 0.0;
  double f1 = 0.0;
  std::size_t n = 0;
};

struct EvalReport {
  double em = 0.0;
  double f1 = 0.0;
  std::map<std::string, TypeMetrics> per_type;  // number / span / date
  std::size_t n_examples = 0;
  std::size_t n_skipped = 0;
};

struct Prediction {
  std::string query_id;
  std::vector<std::string> answer;
  std::string answer_type;
  double log_prob = 0.0;
};

EvalReport evaluate(const RunConfig& cfg, const ParamStore& params,
                    const std::vector<DropExample>& data,
                    std::vector<Prediction>* predictions = nullptr);

std::string report_json(const EvalReport& report);
void write_report(const EvalReport& report, const std::string& path);
// JSON-lines predictions with a leading header record documenting the scoring
// conventions.
void write_predictions(const std::vector<Prediction>& preds, const std::string& path);

struct AblationResult {
  AblationMode mode = AblationMode::FULL;
  TrainResult train_result;
  EvalReport report;
};

// Trains and evaluates full / NH / NQ on the same data under identical seeds.
std::vector<AblationResult> ablate(const RunConfig& cfg,
                                   const std::vector<DropExample>& data);
std::string ablation_table(const std::vector<AblationResult>& rows);

}  // namespace numgraph
