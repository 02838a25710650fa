// Batch command line for the sentence-labelling toolkit: synthetic data
// generation, embedding pretraining, training, evaluation, labelling and
// attention dumps. Exit codes: 0 success, 1 flag/configuration problems,
// 2 data problems, 3 numerical aborts.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relabel/checkpoint.hpp"
#include "relabel/corpus.hpp"
#include "relabel/embed_pretrain.hpp"
#include "relabel/encoders.hpp"
#include "relabel/errors.hpp"
#include "relabel/manifest.hpp"
#include "relabel/metrics.hpp"
#include "relabel/model.hpp"
#include "relabel/schema.hpp"
#include "relabel/synth.hpp"
#include "relabel/training.hpp"

namespace fs = std::filesystem;
using namespace relabel;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw data_error("cannot create output directory " + dir + ": " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// "7", "1..5" or "1,4,9".
std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> out;
  const auto range_pos = spec.find("..");
  if (range_pos != std::string::npos) {
    const std::uint64_t lo = std::stoull(spec.substr(0, range_pos));
    const std::uint64_t hi = std::stoull(spec.substr(range_pos + 2));
    if (hi < lo) throw error("seed range is empty: " + spec);
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::istringstream is(spec);
  std::string part;
  while (std::getline(is, part, ',')) {
    if (!part.empty()) out.push_back(std::stoull(part));
  }
  if (out.empty()) throw error("no seeds in: " + spec);
  return out;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string schema_path, out_dir;
  std::uint64_t seed = 1;
};

int run_synth(const SynthArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  const auto sch = schema::load_schema(a.schema_path);
  const auto data = synth::generate_synthetic(sch);
  ensure_dir(a.out_dir);
  const std::string out_file = join_path(a.out_dir, "synthetic.jsonl");
  corpus::save_dataset(data, out_file);

  cli::RunManifest m;
  m.command = "synth";
  m.seed = a.seed;
  m.config = {{"schema", a.schema_path}};
  m.input_hashes[a.schema_path] = cli::fnv1a64_file(a.schema_path);
  m.outputs = {out_file};
  m.timings_sec["total"] = seconds_since(start);
  cli::save_manifest(m, join_path(a.out_dir, "manifest.json"));
  std::cout << "wrote " << data.size() << " synthetic sentences to " << out_file << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// pretrain
// ---------------------------------------------------------------------------

struct PretrainArgs {
  std::string corpus_path, out_dir;
  pretrain::PretrainConfig cfg;
};

int run_pretrain(const PretrainArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  const auto table = pretrain::skipgram_train_file(a.corpus_path, a.cfg);
  ensure_dir(a.out_dir);
  const std::string out_file = join_path(a.out_dir, "embeddings.txt");
  encoders::save_embedding_text(table, out_file);

  cli::RunManifest m;
  m.command = "pretrain";
  m.seed = a.cfg.seed;
  m.config = {{"corpus", a.corpus_path},
              {"embed_dim", std::to_string(a.cfg.dim)},
              {"epochs", std::to_string(a.cfg.epochs)},
              {"window", std::to_string(a.cfg.window)},
              {"negatives", std::to_string(a.cfg.negatives)},
              {"lr", num(a.cfg.lr)},
              {"min_count", std::to_string(a.cfg.min_count)}};
  m.input_hashes[a.corpus_path] = cli::fnv1a64_file(a.corpus_path);
  m.outputs = {out_file};
  m.timings_sec["total"] = seconds_since(start);
  cli::save_manifest(m, join_path(a.out_dir, "manifest.json"));
  std::cout << "wrote " << table.tokens.size() << " vectors of size " << a.cfg.dim << " to "
            << out_file << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string schema_path, data_path, val_path, out_dir, embeddings_path;
  std::string model_kind = "bigru";
  std::string head_kind = "per-label";
  std::string synth_mode = "off";
  bool deep = false, strict = false;
  double lr = -1.0;  // resolved per model kind when unset
  int batch = 16;
  double beta = 1.0;
  int epochs = 200, patience = 25, ntok = 50, hidden = 1024, embed_dim = 200, min_count = 1;
  double split = 0.9;
  std::string seed_spec = "1";
};

training::TrainConfig resolve_train_config(const TrainArgs& a, std::uint64_t seed) {
  training::TrainConfig tc;
  tc.model.encoder = encoders::encoder_kind_from_string(a.model_kind);
  tc.model.head = heads::head_kind_from_string(a.head_kind);
  tc.model.deep_classifier = a.deep;
  tc.model.strict_parity = a.strict;
  tc.model.n_tok = a.ntok;
  tc.model.embed_dim = a.embed_dim;
  tc.model.hidden = a.hidden;
  tc.lr = a.lr > 0.0 ? a.lr
                     : (tc.model.encoder == encoders::EncoderKind::mean ? 0.001 : 0.0005);
  tc.batch = a.batch;
  tc.beta = a.beta;
  tc.max_epochs = a.epochs;
  tc.patience = a.patience;
  tc.seed = seed;
  tc.min_count = a.min_count;
  tc.embeddings_path = a.embeddings_path;
  if (a.deep && tc.model.head == heads::HeadKind::pooled)
    throw error("--deep-classifier requires an attention head");
  return tc;
}

// Resolves the train/validation datasets per --synth mode, loading files and
// generating synthetic sentences as needed.
std::pair<corpus::Dataset, corpus::Dataset> resolve_datasets(const TrainArgs& a,
                                                             const schema::LabelSchema& sch,
                                                             std::uint64_t seed,
                                                             std::ostream& log) {
  corpus::Dataset train, val;
  const bool have_val = !a.val_path.empty();
  if (a.synth_mode == "only") {
    train = synth::generate_synthetic(sch);
    if (have_val) {
      val = corpus::load_dataset(a.val_path, sch);
    } else {
      val = train;
      log << "note: no validation file given; validating on the synthetic training set\n";
    }
    return {std::move(train), std::move(val)};
  }
  if (a.data_path.empty())
    throw error("--data is required unless --synth only is used");
  corpus::Dataset data = corpus::load_dataset(a.data_path, sch);
  if (have_val) {
    train = std::move(data);
    val = corpus::load_dataset(a.val_path, sch);
  } else {
    std::tie(train, val) = corpus::split_by_report(data, a.split, seed);
    log << "note: no validation file given; split " << train.size() << "/" << val.size()
        << " sentences by report\n";
  }
  if (a.synth_mode == "augment") {
    const auto extra = synth::generate_synthetic(sch);
    train.insert(train.end(), extra.begin(), extra.end());
  } else if (a.synth_mode != "off") {
    throw error("--synth must be one of only, augment, off");
  }
  return {std::move(train), std::move(val)};
}

void add_train_inputs(cli::RunManifest& m, const TrainArgs& a) {
  m.input_hashes[a.schema_path] = cli::fnv1a64_file(a.schema_path);
  if (!a.data_path.empty()) m.input_hashes[a.data_path] = cli::fnv1a64_file(a.data_path);
  if (!a.val_path.empty()) m.input_hashes[a.val_path] = cli::fnv1a64_file(a.val_path);
  if (!a.embeddings_path.empty())
    m.input_hashes[a.embeddings_path] = cli::fnv1a64_file(a.embeddings_path);
}

std::map<std::string, std::string> train_config_snapshot(const TrainArgs& a,
                                                         const training::TrainConfig& tc) {
  return {{"model", a.model_kind},
          {"head", a.head_kind},
          {"deep_classifier", a.deep ? "true" : "false"},
          {"strict_paper_parity", a.strict ? "true" : "false"},
          {"lr", num(tc.lr)},
          {"batch", std::to_string(tc.batch)},
          {"beta", num(tc.beta)},
          {"epochs", std::to_string(tc.max_epochs)},
          {"patience", std::to_string(tc.patience)},
          {"ntok", std::to_string(tc.model.n_tok)},
          {"hidden", std::to_string(tc.model.hidden)},
          {"embed_dim", std::to_string(tc.model.embed_dim)},
          {"min_count", std::to_string(tc.min_count)},
          {"synth", a.synth_mode},
          {"split", num(a.split)},
          {"embeddings", a.embeddings_path},
          {"schema", a.schema_path},
          {"data", a.data_path},
          {"val", a.val_path}};
}

// One seed's training run into dir. Returns the result for summaries.
training::TrainResult train_one(const TrainArgs& a, const schema::LabelSchema& sch,
                                std::uint64_t seed, const std::string& dir,
                                std::vector<std::string>& outputs) {
  const auto [train, val] = resolve_datasets(a, sch, seed, std::cout);
  const auto tc = resolve_train_config(a, seed);
  auto res = training::train_model(tc, sch, train, val, &std::cout);

  ensure_dir(dir);
  const std::string ckpt = join_path(dir, "model.ckpt");
  const std::string cfg_file = join_path(dir, "model.json");
  const std::string vocab_file = join_path(dir, "vocab.txt");
  const std::string history_file = join_path(dir, "history.csv");
  autodiff::save_params(res.params, ckpt);
  model::save_model_config(res.config, cfg_file);
  corpus::save_vocab(res.vocab, vocab_file);
  training::write_history_csv(res.history, history_file);
  outputs.insert(outputs.end(), {ckpt, cfg_file, vocab_file, history_file});
  std::cout << "seed " << seed << ": best epoch " << res.best_epoch << ", validation micro F1 "
            << res.best_val_micro << "\n";
  return res;
}

int run_train(const TrainArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  const auto seeds = parse_seeds(a.seed_spec);
  const auto sch = schema::load_schema(a.schema_path);
  // Validate data files before creating any outputs.
  if (!a.data_path.empty()) corpus::load_dataset(a.data_path, sch);
  if (!a.val_path.empty()) corpus::load_dataset(a.val_path, sch);

  cli::RunManifest m;
  m.command = "train";
  m.seed = seeds.front();
  m.config = train_config_snapshot(a, resolve_train_config(a, seeds.front()));
  m.config["seeds"] = a.seed_spec;
  add_train_inputs(m, a);

  if (seeds.size() == 1) {
    train_one(a, sch, seeds[0], a.out_dir, m.outputs);
    m.timings_sec["train"] = seconds_since(start);
    cli::save_manifest(m, join_path(a.out_dir, "manifest.json"));
    return 0;
  }

  ensure_dir(a.out_dir);
  std::vector<double> best_f1;
  std::ostringstream summary;
  summary << "seed,best_epoch,best_val_micro_f1\n";
  for (std::uint64_t seed : seeds) {
    const std::string dir = join_path(a.out_dir, "seed" + std::to_string(seed));
    const auto res = train_one(a, sch, seed, dir, m.outputs);
    best_f1.push_back(res.best_val_micro);
    summary << seed << "," << res.best_epoch << "," << num(res.best_val_micro) << "\n";
  }
  summary << "mean,," << num(mean_of(best_f1)) << "\n";
  summary << "std,," << num(sample_std(best_f1)) << "\n";
  const std::string summary_file = join_path(a.out_dir, "summary.csv");
  std::ofstream(summary_file, std::ios::trunc) << summary.str();
  m.outputs.push_back(summary_file);
  m.timings_sec["train"] = seconds_since(start);
  cli::save_manifest(m, join_path(a.out_dir, "manifest.json"));
  return 0;
}

// ---------------------------------------------------------------------------
// eval / label / attention share a loaded run
// ---------------------------------------------------------------------------

struct LoadedRun {
  model::ModelConfig config;
  autodiff::ParamStore<double> params;
  corpus::Vocabulary vocab;
  std::string dir;
};

LoadedRun load_run(const std::string& dir, const schema::LabelSchema& sch) {
  LoadedRun run;
  run.dir = dir;
  run.config = model::load_model_config(join_path(dir, "model.json"));
  if (run.config.n_labels != sch.size())
    throw data_error("checkpoint was trained with " + std::to_string(run.config.n_labels) +
                     " labels but the schema has " + std::to_string(sch.size()));
  run.vocab = corpus::load_vocab(join_path(dir, "vocab.txt"));
  if (run.vocab.size() != run.config.vocab_size)
    throw data_error("vocabulary file size does not match the checkpoint configuration");
  autodiff::load_params(run.params, join_path(dir, "model.ckpt"));
  return run;
}

// A run directory holds either one model or per-seed subdirectories.
std::vector<std::string> discover_run_dirs(const std::string& dir) {
  if (fs::exists(join_path(dir, "model.ckpt"))) return {dir};
  std::vector<std::string> subs;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_directory() && entry.path().filename().string().rfind("seed", 0) == 0 &&
          fs::exists(entry.path() / "model.ckpt"))
        subs.push_back(entry.path().string());
    }
  }
  std::sort(subs.begin(), subs.end());
  if (subs.empty()) throw data_error("no model.ckpt under " + dir);
  return subs;
}

struct EvalArgs {
  std::string run_dir, schema_path, data_path, out_dir;
};

metrics::EvalReport evaluate_run(const LoadedRun& run, const schema::LabelSchema& sch,
                                 const corpus::Dataset& data) {
  const auto examples = training::encode_dataset(data, run.vocab, sch, run.config.n_tok);
  metrics::Confusion conf(sch.size());
  std::vector<std::vector<int>> preds, golds;
  for (const auto& ex : examples) {
    preds.push_back(model::predict(run.config, run.params, ex).classes);
    golds.push_back(ex.gold);
    conf.add(preds.back(), golds.back());
  }
  return metrics::build_report(conf, preds, golds);
}

void write_eval_outputs(const metrics::EvalReport& rep, const schema::LabelSchema& sch,
                        const std::string& dir, std::vector<std::string>& outputs) {
  ensure_dir(dir);
  const std::string summary = join_path(dir, "summary.txt");
  std::ofstream(summary, std::ios::trunc) << metrics::format_report(rep, sch);
  const std::string per_label = join_path(dir, "per_label.csv");
  metrics::write_per_label_csv(rep, sch, per_label);
  const std::string errors = join_path(dir, "errors.csv");
  metrics::write_error_csv(rep, errors);
  outputs.insert(outputs.end(), {summary, per_label, errors});
}

int run_eval(const EvalArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  const auto sch = schema::load_schema(a.schema_path);
  const auto data = corpus::load_dataset(a.data_path, sch);
  const auto dirs = discover_run_dirs(a.run_dir);

  cli::RunManifest m;
  m.command = "eval";
  m.config = {{"run", a.run_dir}, {"schema", a.schema_path}, {"data", a.data_path}};
  m.input_hashes[a.schema_path] = cli::fnv1a64_file(a.schema_path);
  m.input_hashes[a.data_path] = cli::fnv1a64_file(a.data_path);

  std::vector<metrics::EvalReport> reports;
  for (const auto& dir : dirs) {
    const auto run = load_run(dir, sch);
    reports.push_back(evaluate_run(run, sch, data));
    const std::string out =
        dirs.size() == 1 ? a.out_dir : join_path(a.out_dir, fs::path(dir).filename().string());
    write_eval_outputs(reports.back(), sch, out, m.outputs);
    std::cout << "evaluated " << dir << "\n"
              << metrics::format_report(reports.back(), sch) << "\n";
  }

  if (reports.size() > 1) {
    static const char* names[8] = {"micro_all",       "micro_negative", "micro_uncertain",
                                   "micro_positive",  "macro_all",      "macro_negative",
                                   "macro_uncertain", "macro_positive"};
    std::ostringstream agg;
    agg << "metric,mean,std\n";
    for (int k = 0; k < 8; ++k) {
      std::vector<double> xs;
      for (const auto& r : reports)
        xs.push_back(k < 4 ? r.micro[static_cast<std::size_t>(k)]
                           : r.macro_[static_cast<std::size_t>(k - 4)]);
      agg << names[k] << "," << num(mean_of(xs)) << "," << num(sample_std(xs)) << "\n";
    }
    const std::string agg_file = join_path(a.out_dir, "aggregate.csv");
    std::ofstream(agg_file, std::ios::trunc) << agg.str();
    m.outputs.push_back(agg_file);
    std::cout << "aggregate over " << reports.size() << " runs:\n" << agg.str();
  }

  m.timings_sec["total"] = seconds_since(start);
  cli::save_manifest(m, join_path(a.out_dir, "manifest.json"));
  return 0;
}

// ---------------------------------------------------------------------------
// label
// ---------------------------------------------------------------------------

int run_label(const EvalArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  const auto sch = schema::load_schema(a.schema_path);
  const auto data = corpus::load_dataset(a.data_path, sch);
  const auto run = load_run(discover_run_dirs(a.run_dir).front(), sch);
  const auto examples = training::encode_dataset(data, run.vocab, sch, run.config.n_tok);

  ensure_dir(a.out_dir);
  const std::string out_file = join_path(a.out_dir, "predictions.jsonl");
  corpus::Dataset labelled;
  for (std::size_t i = 0; i < data.size(); ++i) {
    corpus::AnnotatedSentence s;
    s.report_id = data[i].report_id;
    s.text = data[i].text;
    const auto pred = model::predict(run.config, run.params, examples[i]);
    for (int l = 0; l < sch.size(); ++l) {
      const auto c = static_cast<schema::Certainty>(pred.classes[static_cast<std::size_t>(l)]);
      if (c != schema::Certainty::not_mentioned) s.annotations[sch.at(l).id] = c;
    }
    labelled.push_back(std::move(s));
  }
  corpus::save_dataset(labelled, out_file);

  cli::RunManifest m;
  m.command = "label";
  m.config = {{"run", a.run_dir}, {"schema", a.schema_path}, {"data", a.data_path}};
  m.input_hashes[a.schema_path] = cli::fnv1a64_file(a.schema_path);
  m.input_hashes[a.data_path] = cli::fnv1a64_file(a.data_path);
  m.outputs = {out_file};
  m.timings_sec["total"] = seconds_since(start);
  cli::save_manifest(m, join_path(a.out_dir, "manifest.json"));
  std::cout << "wrote predictions for " << labelled.size() << " sentences to " << out_file << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// attention
// ---------------------------------------------------------------------------

struct AttentionArgs {
  EvalArgs base;
  bool render = false;
};

int run_attention(const AttentionArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  const auto sch = schema::load_schema(a.base.schema_path);
  const auto data = corpus::load_dataset(a.base.data_path, sch);
  const auto run = load_run(discover_run_dirs(a.base.run_dir).front(), sch);
  if (!run.config.has_attention())
    throw data_error("this checkpoint uses a pooled head and has no attention to dump; "
                     "train with --head single or --head per-label");
  const auto examples = training::encode_dataset(data, run.vocab, sch, run.config.n_tok);

  ensure_dir(a.base.out_dir);
  const std::string out_file = join_path(a.base.out_dir, "attention.csv");
  std::ofstream os(out_file, std::ios::trunc);
  if (!os) throw data_error("cannot write attention dump: " + out_file);
  os << "sentence_id,label_id,token_index,token,weight\n";
  os << std::setprecision(17);

  const bool per_label = run.config.head == heads::HeadKind::per_label_attention;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto tokens = corpus::tokenize(data[i].text);
    const auto pred = model::predict(run.config, run.params, examples[i]);
    const int rows = pred.alpha.rows();
    for (int row = 0; row < rows; ++row) {
      // The shared-attention head has one weight row for every label.
      const std::string label_id = per_label ? sch.at(row).id : "*";
      for (int t = 0; t < pred.processed; ++t) {
        const std::string& tok = t < static_cast<int>(tokens.size())
                                     ? tokens[static_cast<std::size_t>(t)]
                                     : run.vocab.token_of(corpus::Vocabulary::kPad);
        os << i << "," << label_id << "," << t << "," << tok << ","
           << pred.alpha.at(row, t) << "\n";
      }
    }
    if (a.render) {
      std::cout << "[" << i << "] " << data[i].text << "\n";
      for (int row = 0; row < rows; ++row) {
        if (per_label &&
            pred.classes[static_cast<std::size_t>(row)] ==
                static_cast<int>(schema::Certainty::not_mentioned))
          continue;
        std::cout << "  " << (per_label ? sch.at(row).id : "(shared)") << ":";
        for (int t = 0; t < pred.processed && t < static_cast<int>(tokens.size()); ++t) {
          const double w = pred.alpha.at(row, t);
          std::cout << " " << tokens[static_cast<std::size_t>(t)];
          if (w >= 0.15) std::cout << "(" << std::fixed << std::setprecision(2) << w << ")";
          std::cout << std::defaultfloat << std::setprecision(6);
        }
        std::cout << "\n";
      }
    }
  }
  os.close();

  cli::RunManifest m;
  m.command = "attention";
  m.config = {{"run", a.base.run_dir},
              {"schema", a.base.schema_path},
              {"data", a.base.data_path}};
  m.input_hashes[a.base.schema_path] = cli::fnv1a64_file(a.base.schema_path);
  m.input_hashes[a.base.data_path] = cli::fnv1a64_file(a.base.data_path);
  m.outputs = {out_file};
  m.timings_sec["total"] = seconds_since(start);
  cli::save_manifest(m, join_path(a.base.out_dir, "manifest.json"));
  std::cout << "wrote attention weights to " << out_file << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relabel: multi-label certainty classification for report sentences"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate the synthetic template sentences");
  synth_cmd->add_option("--schema", synth_args.schema_path, "Label schema JSON")->required();
  synth_cmd->add_option("--out", synth_args.out_dir, "Output directory")->required();
  synth_cmd->add_option("--seed", synth_args.seed, "Seed recorded in the manifest");
  synth_cmd->set_config("--config");

  PretrainArgs pre_args;
  auto* pre_cmd = app.add_subcommand("pretrain", "Train word embeddings by skip-gram");
  pre_cmd->add_option("--corpus", pre_args.corpus_path, "Plain text, one document per line")
      ->required();
  pre_cmd->add_option("--out", pre_args.out_dir, "Output directory")->required();
  pre_cmd->add_option("--embed-dim", pre_args.cfg.dim, "Embedding size");
  pre_cmd->add_option("--epochs", pre_args.cfg.epochs, "Pretraining epochs");
  pre_cmd->add_option("--window", pre_args.cfg.window, "Context window");
  pre_cmd->add_option("--negatives", pre_args.cfg.negatives, "Negative samples per pair");
  pre_cmd->add_option("--lr", pre_args.cfg.lr, "Starting learning rate");
  pre_cmd->add_option("--min-count", pre_args.cfg.min_count, "Minimum token frequency");
  pre_cmd->add_option("--seed", pre_args.cfg.seed, "Random seed");
  pre_cmd->set_config("--config");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a sentence-labelling model");
  train_cmd->add_option("--schema", train_args.schema_path, "Label schema JSON")->required();
  train_cmd->add_option("--data", train_args.data_path, "Training dataset (JSON Lines)");
  train_cmd->add_option("--val", train_args.val_path, "Validation dataset (JSON Lines)");
  train_cmd->add_option("--out", train_args.out_dir, "Output directory")->required();
  train_cmd->add_option("--model", train_args.model_kind, "Encoder: mean, caml or bigru");
  train_cmd->add_option("--head", train_args.head_kind, "Head: pooled, single or per-label");
  train_cmd->add_flag("--deep-classifier", train_args.deep,
                      "Three-layer per-label classifiers instead of linear maps");
  train_cmd->add_option("--lr", train_args.lr, "Learning rate (default 0.001 mean, else 0.0005)");
  train_cmd->add_option("--batch", train_args.batch, "Batch size");
  train_cmd->add_option("--beta", train_args.beta, "Loss weighting exponent");
  train_cmd->add_option("--epochs", train_args.epochs, "Maximum epochs");
  train_cmd->add_option("--patience", train_args.patience, "Early stopping patience");
  train_cmd->add_option("--ntok", train_args.ntok, "Tokens per sentence");
  train_cmd->add_option("--hidden", train_args.hidden, "Hidden size h");
  train_cmd->add_option("--embed-dim", train_args.embed_dim, "Embedding size e");
  train_cmd->add_option("--embeddings", train_args.embeddings_path,
                        "Pretrained embedding text file");
  train_cmd->add_option("--synth", train_args.synth_mode,
                        "Synthetic data: only, augment or off");
  train_cmd->add_option("--seed", train_args.seed_spec, "Random seed");
  train_cmd->add_option("--seeds", train_args.seed_spec,
                        "Several seeds (\"1..5\" or \"1,3,7\"); one run each");
  train_cmd->add_flag("--strict-paper-parity", train_args.strict,
                      "Process pad positions instead of masking them");
  train_cmd->add_option("--split", train_args.split,
                        "Train fraction for the report-level split when --val is absent");
  train_cmd->add_option("--min-count", train_args.min_count, "Vocabulary frequency cutoff");
  train_cmd->set_config("--config");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained run on a dataset");
  eval_cmd->add_option("--run", eval_args.run_dir, "Training output directory")->required();
  eval_cmd->add_option("--schema", eval_args.schema_path, "Label schema JSON")->required();
  eval_cmd->add_option("--data", eval_args.data_path, "Evaluation dataset")->required();
  eval_cmd->add_option("--out", eval_args.out_dir, "Output directory")->required();
  eval_cmd->set_config("--config");

  EvalArgs label_args;
  auto* label_cmd = app.add_subcommand("label", "Write model predictions for a dataset");
  label_cmd->add_option("--run", label_args.run_dir, "Training output directory")->required();
  label_cmd->add_option("--schema", label_args.schema_path, "Label schema JSON")->required();
  label_cmd->add_option("--data", label_args.data_path, "Input dataset")->required();
  label_cmd->add_option("--out", label_args.out_dir, "Output directory")->required();
  label_cmd->set_config("--config");

  AttentionArgs att_args;
  auto* att_cmd = app.add_subcommand("attention", "Dump per-token attention weights");
  att_cmd->add_option("--run", att_args.base.run_dir, "Training output directory")->required();
  att_cmd->add_option("--schema", att_args.base.schema_path, "Label schema JSON")->required();
  att_cmd->add_option("--data", att_args.base.data_path, "Input dataset")->required();
  att_cmd->add_option("--out", att_args.base.out_dir, "Output directory")->required();
  att_cmd->add_flag("--render", att_args.render, "Also print per-label rows to the terminal");
  att_cmd->set_config("--config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth_args);
    if (pre_cmd->parsed()) return run_pretrain(pre_args);
    if (train_cmd->parsed()) return run_train(train_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (label_cmd->parsed()) return run_label(label_args);
    if (att_cmd->parsed()) return run_attention(att_args);
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 3;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
