#include "numgraph/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <random>
#include <thread>

#include "numgraph/heads.hpp"

namespace numgraph {
namespace {

using ordered = nlohmann::ordered_json;

void require(bool ok, const std::string& msg) {
  if (!ok) throw HarnessError(msg);
}

EncoderConfig encoder_config(const RunConfig& cfg) {
  EncoderConfig e;
  e.vocab_size = cfg.vocab_size;
  e.d_h = cfg.d_h;
  e.n_mix_layers = cfg.n_mix_layers;
  return e;
}

double example_loss(const RunConfig& cfg, const ParamStore& params,
                    const PreparedExample& ex, double grad_scale) {
  Tape tape;
  ModelOutputs out = run_model(cfg, params, ex);
  Tensor loss = marginal_loss(out.heads, ex.supervision);
  double value = loss.scalar_value();
  tape.backward(scale(loss, grad_scale));
  return value;
}

}  // namespace

AblationMode ablation_from_string(const std::string& s) {
  if (s == "full" || s == "FULL") return AblationMode::FULL;
  if (s == "NH" || s == "nh") return AblationMode::NH;
  if (s == "NQ" || s == "nq") return AblationMode::NQ;
  throw HarnessError("unknown ablation mode: " + s);
}

RunConfig parse_run_config(const std::string& json_text) {
  ordered doc;
  try {
    doc = ordered::parse(json_text);
  } catch (const ordered::exception& e) {
    throw HarnessError(std::string("config is not valid JSON: ") + e.what());
  }
  require(doc.is_object(), "config must be a JSON object");
  RunConfig cfg;
  for (const auto& [key, val] : doc.items()) {
    try {
      if (key == "d_h") cfg.d_h = val.get<std::size_t>();
      else if (key == "T") cfg.T = val.get<std::size_t>();
      else if (key == "batch_size") cfg.batch_size = val.get<std::size_t>();
      else if (key == "epochs") cfg.epochs = val.get<std::size_t>();
      else if (key == "lr_encoder") cfg.lr_encoder = val.get<double>();
      else if (key == "lr_other") cfg.lr_other = val.get<double>();
      else if (key == "weight_decay_encoder") cfg.weight_decay_encoder = val.get<double>();
      else if (key == "weight_decay_other") cfg.weight_decay_other = val.get<double>();
      else if (key == "seed") cfg.seed = val.get<std::uint64_t>();
      else if (key == "ablation") cfg.ablation = ablation_from_string(val.get<std::string>());
      else if (key == "vocab_size") cfg.vocab_size = val.get<std::size_t>();
      else if (key == "n_mix_layers") cfg.n_mix_layers = val.get<std::size_t>();
      else throw HarnessError("unknown config key: " + key);
    } catch (const ordered::exception&) {
      throw HarnessError("bad value for config key: " + key);
    }
  }
  require(cfg.T >= 1, "T must be >= 1");
  require(cfg.batch_size >= 1, "batch_size must be >= 1");
  require(cfg.epochs >= 1, "epochs must be >= 1");
  require(cfg.d_h >= 8 && cfg.d_h % 2 == 0, "d_h must be even and >= 8");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw HarnessError("cannot open config " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

std::string run_config_json(const RunConfig& cfg) {
  ordered doc;
  doc["d_h"] = cfg.d_h;
  doc["T"] = cfg.T;
  doc["batch_size"] = cfg.batch_size;
  doc["epochs"] = cfg.epochs;
  doc["lr_encoder"] = cfg.lr_encoder;
  doc["lr_other"] = cfg.lr_other;
  doc["weight_decay_encoder"] = cfg.weight_decay_encoder;
  doc["weight_decay_other"] = cfg.weight_decay_other;
  doc["seed"] = cfg.seed;
  doc["ablation"] = to_string(cfg.ablation);
  doc["vocab_size"] = cfg.vocab_size;
  doc["n_mix_layers"] = cfg.n_mix_layers;
  return doc.dump();
}

std::size_t worker_count() {
  const char* env = std::getenv("NUMGRAPH_THREADS");
  if (!env) return 1;
  long n = std::strtol(env, nullptr, 10);
  return n < 1 ? 1 : std::size_t(n);
}

void init_model_params(const RunConfig& cfg, ParamStore& params) {
  require(params.size() == 0, "parameter store must start empty");
  std::mt19937_64 rng(cfg.seed);
  init_encoder_params(encoder_config(cfg), params, rng);
  init_qdgat_params(cfg.d_h, cfg.T, params, rng);
  init_heads_params(cfg.d_h, params, rng);
}

std::vector<PreparedExample> prepare_examples(const RunConfig& cfg,
                                              const std::vector<DropExample>& data,
                                              bool require_supervision,
                                              std::size_t* n_skipped) {
  std::vector<PreparedExample> out;
  std::size_t skipped = 0;
  GraphMode gmode =
      cfg.ablation == AblationMode::NH ? GraphMode::NH : GraphMode::FULL;
  for (const DropExample& raw : data) {
    try {
      PreparedExample ex;
      ex.raw = raw;
      ex.ann = annotate(raw.question, raw.passage);
      if (ex.ann.question.tokens.empty() || ex.ann.passage.tokens.empty())
        throw HarnessError("empty question or passage");
      ex.graph = build_graph(ex.ann, gmode);
      if (require_supervision) {
        ex.supervision = find_supervision(raw.gold, ex.ann);
        if (!ex.supervision.trainable()) {
          ++skipped;
          continue;
        }
      }
      out.push_back(std::move(ex));
    } catch (const std::exception&) {
      ++skipped;
    }
  }
  if (n_skipped) *n_skipped = skipped;
  return out;
}

ModelOutputs run_model(const RunConfig& cfg, const ParamStore& params,
                       const PreparedExample& ex) {
  ModelOutputs out;
  out.enc = encode(ex.ann.question.tokens, ex.ann.passage.tokens,
                   encoder_config(cfg), params);
  out.qdgat = qdgat_run(ex.graph, out.enc, params, cfg.T, cfg.ablation);
  out.U = merge_output(out.enc, ex.graph, out.qdgat.v_T);
  out.heads = heads_forward(out.U, out.enc.c, ex.ann, params);
  return out;
}

TrainResult train(const RunConfig& cfg, const std::vector<DropExample>& data,
                  ParamStore& params, const std::string& ckpt_prefix) {
  TrainResult result;
  std::vector<PreparedExample> examples =
      prepare_examples(cfg, data, true, &result.n_skipped);
  require(!examples.empty(), "no trainable examples after supervision filtering");
  result.n_train = examples.size();

  if (params.size() == 0) init_model_params(cfg, params);
  AdamConfig other{cfg.lr_other, 0.9, 0.999, 1e-8, cfg.weight_decay_other};
  AdamConfig enc{cfg.lr_encoder, 0.9, 0.999, 1e-8, cfg.weight_decay_encoder};
  Adam opt(params, other, enc);

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t n_workers = worker_count();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::size_t batch_n = stop - start;
      double grad_scale = 1.0 / double(batch_n);
      params.zero_grad();
      std::size_t nw = std::min(n_workers, batch_n);
      if (nw <= 1) {
        for (std::size_t k = start; k < stop; ++k)
          loss_sum += example_loss(cfg, params, examples[order[k]], grad_scale);
      } else {
        std::vector<ParamStore> replicas;
        replicas.reserve(nw);
        for (std::size_t w = 0; w < nw; ++w) replicas.push_back(params.clone());
        std::vector<double> worker_loss(nw, 0.0);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < nw; ++w)
          pool.emplace_back([&, w] {
            for (std::size_t k = start + w; k < stop; k += nw)
              worker_loss[w] +=
                  example_loss(cfg, replicas[w], examples[order[k]], grad_scale);
          });
        for (auto& th : pool) th.join();
        for (std::size_t w = 0; w < nw; ++w) {
          params.accumulate_grads_from(replicas[w]);
          loss_sum += worker_loss[w];
        }
      }
      opt.step();
    }
    result.epoch_loss.push_back(loss_sum / double(examples.size()));
    if (!ckpt_prefix.empty()) {
      std::string path = ckpt_prefix + ".epoch" + std::to_string(epoch + 1) + ".bin";
      save_checkpoint(params, cfg, path);
      result.checkpoints.push_back(path);
    }
  }
  if (!ckpt_prefix.empty()) {
    std::string final_path = ckpt_prefix + ".bin";
    save_checkpoint(params, cfg, final_path);
    result.checkpoints.push_back(final_path);
  }
  return result;
}

void save_checkpoint(const ParamStore& params, const RunConfig& cfg,
                     const std::string& path) {
  params.save(path, run_config_json(cfg));
}

RunConfig load_checkpoint(const std::string& path, ParamStore& params) {
  std::string meta;
  params = ParamStore::load(path, &meta);
  ordered doc = ordered::parse(meta);
  doc.erase("params");  // manifest added by ParamStore::save
  return parse_run_config(doc.dump());
}

EvalReport evaluate(const RunConfig& cfg, const ParamStore& params,
                    const std::vector<DropExample>& data,
                    std::vector<Prediction>* predictions) {
  require(!data.empty(), "nothing to evaluate");
  EvalReport report;
  std::vector<PreparedExample> examples =
      prepare_examples(cfg, data, false, &report.n_skipped);

  std::vector<Prediction> preds(examples.size());
  std::vector<ScoredPair> scores(examples.size());
  std::vector<char> failed(examples.size(), 0);
  auto score_one = [&](std::size_t i) {
    try {
      ModelOutputs out = run_model(cfg, params, examples[i]);
      DecodedAnswer ans = decode_answer(out.heads, examples[i].ann);
      preds[i] = {examples[i].raw.query_id, ans.texts, to_string(ans.atype),
                  ans.log_prob};
      scores[i] = score_answer(ans.texts, gold_answer_texts(examples[i].raw.gold));
    } catch (const std::exception&) {
      failed[i] = 1;
    }
  };
  std::size_t nw = std::min(worker_count(), examples.size());
  if (nw <= 1) {
    for (std::size_t i = 0; i < examples.size(); ++i) score_one(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < nw; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < examples.size(); i += nw) score_one(i);
      });
    for (auto& th : pool) th.join();
  }

  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (failed[i]) {
      ++report.n_skipped;
      continue;
    }
    const ScoredPair& s = scores[i];
    require(s.em <= s.f1 + 1e-9, "per-example EM exceeded F1");
    report.em += s.em;
    report.f1 += s.f1;
    TypeMetrics& bucket = report.per_type[gold_answer_kind(examples[i].raw.gold)];
    bucket.em += s.em;
    bucket.f1 += s.f1;
    ++bucket.n;
    ++report.n_examples;
    if (predictions) predictions->push_back(preds[i]);
  }
  if (report.n_examples > 0) {
    report.em /= double(report.n_examples);
    report.f1 /= double(report.n_examples);
  }
  for (auto& [kind, bucket] : report.per_type)
    if (bucket.n > 0) {
      bucket.em /= double(bucket.n);
      bucket.f1 /= double(bucket.n);
    }
  return report;
}

std::string report_json(const EvalReport& report) {
  ordered doc;
  doc["em"] = report.em;
  doc["f1"] = report.f1;
  doc["n_examples"] = report.n_examples;
  doc["n_skipped"] = report.n_skipped;
  doc["per_type"] = ordered::object();
  for (const auto& [kind, bucket] : report.per_type) {
    ordered b;
    b["em"] = bucket.em;
    b["f1"] = bucket.f1;
    b["n"] = bucket.n;
    doc["per_type"][kind] = b;
  }
  return doc.dump(1);
}

void write_report(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw HarnessError("cannot write report " + path);
  out << report_json(report) << "\n";
}

void write_predictions(const std::vector<Prediction>& preds,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw HarnessError("cannot write predictions " + path);
  ordered header;
  header["note"] =
      "scoring: DROP-style normalization; multi-span F1 aligns distinct "
      "normalized spans one-to-one and takes the harmonic mean of aligned "
      "precision/recall, so duplicate spans collapse";
  out << header.dump() << "\n";
  for (const Prediction& p : preds) {
    ordered rec;
    rec["query_id"] = p.query_id;
    rec["answer"] = p.answer;
    rec["answer_type"] = p.answer_type;
    rec["log_prob"] = p.log_prob;
    out << rec.dump() << "\n";
  }
}

std::vector<AblationResult> ablate(const RunConfig& cfg,
                                   const std::vector<DropExample>& data) {
  std::vector<AblationResult> rows;
  for (AblationMode mode :
       {AblationMode::FULL, AblationMode::NH, AblationMode::NQ}) {
    RunConfig mode_cfg = cfg;
    mode_cfg.ablation = mode;
    AblationResult row;
    row.mode = mode;
    ParamStore params;
    row.train_result = train(mode_cfg, data, params);
    row.report = evaluate(mode_cfg, params, data);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_table(const std::vector<AblationResult>& rows) {
  std::string out = "mode      EM       F1       examples\n";
  char buf[96];
  for (const AblationResult& row : rows) {
    std::snprintf(buf, sizeof buf, "%-8s %8.2f %8.2f %8zu\n",
                  to_string(row.mode), row.report.em, row.report.f1,
                  row.report.n_examples);
    out += buf;
  }
  return out;
}

}  // namespace numgraph
