#include "relabel/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

namespace relabel::training {

LossWeights compute_label_weights(const corpus::Dataset& train, const schema::LabelSchema& sch,
                                  double beta) {
  if (train.empty()) throw data_error("cannot compute loss weights on an empty training set");
  LossWeights w;
  w.beta = beta;
  w.n = static_cast<long>(train.size());
  w.o_l.assign(static_cast<std::size_t>(sch.size()), 0);
  for (const auto& s : train) {
    const auto gold = corpus::gold_vector(s, sch);
    for (int l = 0; l < sch.size(); ++l)
      if (gold[static_cast<std::size_t>(l)] ==
          static_cast<int>(schema::Certainty::not_mentioned))
        ++w.o_l[static_cast<std::size_t>(l)];
  }
  const double n = static_cast<double>(w.n);
  for (int l = 0; l < sch.size(); ++l) {
    long o = w.o_l[static_cast<std::size_t>(l)];
    if (o == 0 || o == w.n) {
      o = std::max<long>(1, std::min<long>(w.n - 1, o));
      w.clamped = true;
    }
    w.w_not_mentioned.push_back(std::pow(n / static_cast<double>(o), beta));
    w.w_mentioned.push_back(std::pow(n / static_cast<double>(w.n - o), beta));
  }
  return w;
}

std::vector<corpus::EncodedExample> encode_dataset(const corpus::Dataset& data,
                                                   const corpus::Vocabulary& vocab,
                                                   const schema::LabelSchema& sch, int n_tok) {
  std::vector<corpus::EncodedExample> out;
  out.reserve(data.size());
  for (const auto& s : data) {
    const auto tokens = corpus::tokenize(s.text);
    if (tokens.empty())
      throw data_error("sentence tokenizes to nothing (report " + s.report_id + ")");
    corpus::EncodedExample ex = corpus::encode(tokens, vocab, n_tok);
    ex.gold = corpus::gold_vector(s, sch);
    out.push_back(std::move(ex));
  }
  return out;
}

namespace {

std::pair<double, double> validation_f1(const model::ModelConfig& cfg,
                                        const ParamStore<double>& params,
                                        const std::vector<corpus::EncodedExample>& val) {
  metrics::Confusion conf(cfg.n_labels);
  for (const auto& ex : val) conf.add(model::predict(cfg, params, ex).classes, ex.gold);
  return {metrics::f1_micro(conf, metrics::all_mentioned_classes()),
          metrics::f1_macro(conf, metrics::all_mentioned_classes())};
}

}  // namespace

TrainResult train_model(const TrainConfig& tc, const schema::LabelSchema& sch,
                        const corpus::Dataset& train, const corpus::Dataset& val,
                        std::ostream* log) {
  if (train.empty() || val.empty())
    throw data_error("training needs non-empty train and validation splits");
  if (tc.batch < 1 || tc.max_epochs < 1 || tc.patience < 1 || !(tc.lr > 0.0))
    throw error("training configuration has non-positive rates or sizes");

  TrainResult res;

  std::vector<std::vector<std::string>> train_tokens;
  train_tokens.reserve(train.size());
  for (const auto& s : train) train_tokens.push_back(corpus::tokenize(s.text));
  res.vocab = corpus::build_vocab(train_tokens, tc.min_count);

  res.config = tc.model;
  res.config.n_labels = sch.size();
  res.config.vocab_size = res.vocab.size();
  res.config.validate();

  res.weights = compute_label_weights(train, sch, tc.beta);
  if (res.weights.clamped && log)
    *log << "warning: some labels are never (or always) mentioned in the training split; "
            "their loss weights were clamped\n";

  const auto train_ex = encode_dataset(train, res.vocab, sch, res.config.n_tok);
  const auto val_ex = encode_dataset(val, res.vocab, sch, res.config.n_tok);

  Rng rng(tc.seed);
  ParamStore<double> params;
  model::init_params(params, res.config, rng);
  if (!tc.embeddings_path.empty()) {
    const auto file = encoders::load_embedding_text(tc.embeddings_path);
    const int covered = encoders::apply_pretrained_embeddings(params, res.vocab, file);
    if (log)
      *log << "loaded pretrained vectors for " << covered << " of " << res.vocab.size()
           << " vocabulary entries\n";
  }

  Adam<double> opt(tc.lr);
  res.best_val_micro = -1.0;

  std::vector<int> order(train_ex.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tc.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tc.batch));
      const double bs = static_cast<double>(end - start);

      Graph<double> g;
      autodiff::ParamBinding<double> bind(g, params);
      std::vector<Var<double>> losses;
      losses.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = train_ex[static_cast<std::size_t>(order[k])];
        auto eg = model::build_example(g, bind, res.config, ex);
        losses.push_back(example_loss(g, eg.logits, ex.gold, res.weights));
      }
      Var<double> batch_loss =
          weighted_sum(losses, std::vector<double>(losses.size(), 1.0 / bs));
      params.zero_grads();
      backward(g, batch_loss);
      g.collect_param_grads(params);
      // The pad embedding stays identically zero.
      params.grad("embed").mat().row(corpus::Vocabulary::kPad).setZero();
      opt.step(params);
      loss_sum += g.value(batch_loss).v(0) * bs;
    }
    const double train_loss = loss_sum / static_cast<double>(train_ex.size());

    const auto [micro, macro] = validation_f1(res.config, params, val_ex);
    res.history.push_back({epoch, train_loss, micro, macro});
    if (log)
      *log << "epoch " << epoch << "  loss " << train_loss << "  val micro F1 " << micro
           << "  val macro F1 " << macro << "\n";

    if (micro > res.best_val_micro) {
      res.best_val_micro = micro;
      res.best_epoch = epoch;
      res.params = params;
    }
    if (tc.stop_when_val_f1 > 0.0 && micro >= tc.stop_when_val_f1) break;
    if (epoch - res.best_epoch >= tc.patience) break;
  }
  return res;
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw data_error("cannot write history file: " + path);
  os << "epoch,train_loss,val_micro_f1,val_macro_f1\n";
  os << std::setprecision(17);
  for (const auto& r : history)
    os << r.epoch << "," << r.train_loss << "," << r.val_micro_f1 << "," << r.val_macro_f1
       << "\n";
}

}  // namespace relabel::training
