#include "qbm/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "qbm/error.hpp"

namespace qbm {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (patience < 1) throw ConfigError("train: patience must be >= 1");
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  if (lr <= 0.0) throw ConfigError("train: learning rate must be positive");
}

ValidationScores validate_f1(ModelParams<float>& params,
                             const std::vector<PreparedRecord>& records) {
  long tp = 0, fp = 0, fn = 0;
  for (const auto& rec : records) {
    const bool predicted = forward_probability(params, rec) >= 0.5;
    if (predicted && rec.label == 1) ++tp;
    if (predicted && rec.label == 0) ++fp;
    if (!predicted && rec.label == 1) ++fn;
  }
  ValidationScores s;
  s.precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

std::string format_epoch_log(const EpochLog& e) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d\t%.6f\t%.4f\t%.4f\t%.4f\t%.4f\t%.3f",
                e.epoch, e.loss, e.train_acc, e.val.precision, e.val.recall,
                e.val.f1, e.seconds);
  return buf;
}

namespace {

bool record_usable(const PreparedRecord& rec, const ModelConfig& cfg) {
  if (rec.query.empty()) return false;
  switch (cfg.variant) {
    case Variant::bagcon:
      return !rec.concat.empty();
    case Variant::qq:
      return rec.questions.size() == 1 && !rec.questions[0].empty();
    default:
      break;
  }
  if (rec.questions.empty()) return false;
  for (const auto& q : rec.questions) {
    if (q.empty()) return false;
  }
  if (variant_has_br(cfg.variant) && !rec.brep_valid) return false;
  return true;
}

}  // namespace

TrainResult train(const std::vector<PreparedRecord>& train_records,
                  const std::vector<PreparedRecord>& valid_records,
                  ModelParams<float> params, const Vocabulary& vocab,
                  const TrainConfig& cfg, std::ostream* live_log) {
  cfg.validate();
  std::vector<const PreparedRecord*> usable;
  long skipped = 0;
  for (const auto& rec : train_records) {
    if (record_usable(rec, params.cfg)) {
      usable.push_back(&rec);
    } else {
      ++skipped;
    }
  }
  if (usable.empty()) throw DatasetError("train: no usable training records");

  Rng root(cfg.seed);
  Rng shuffle_rng = root.derive(11);
  Rng dropout_rng = root.derive(12);

  auto tensors = params.tensors();
  AdamState<float> opt = AdamState<float>::init(tensors, cfg.lr);

  TrainResult result;
  result.skipped_records = skipped;
  result.best.config = params.cfg;
  result.best.vocab = vocab;
  result.best.seed = cfg.seed;
  double best_f1 = -1.0;
  int stale_epochs = 0;

  Tape<float> tape;
  std::vector<size_t> order(usable.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    long correct = 0;
    long batch_id = 0;
    for (size_t start = 0; start < order.size(); start += size_t(cfg.batch_size)) {
      ++batch_id;
      const size_t stop = std::min(order.size(), start + size_t(cfg.batch_size));
      std::vector<Tensor<float>> feats;
      std::vector<int> labels;
      for (size_t i = start; i < stop; ++i) {
        const PreparedRecord& rec = *usable[order[i]];
        feats.push_back(instance_features<float>(&tape, params, rec));
        labels.push_back(rec.label);
      }
      Tensor<float> batch = ops::stack_rows(&tape, feats);
      Tensor<float> logits = head_logits(&tape, params, batch, true, dropout_rng);
      Tensor<float> loss = ops::cross_entropy(&tape, logits, labels);
      const double loss_value = double(loss.data()[0]);
      if (!std::isfinite(loss_value)) {
        throw NumericError("train: non-finite loss " + std::to_string(loss_value) +
                           " in epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(batch_id));
      }
      loss_sum += loss_value * double(stop - start);
      for (size_t i = 0; i < labels.size(); ++i) {
        const bool predicted = logits.data()[i * 2 + 1] >= logits.data()[i * 2];
        if (int(predicted) == labels[i]) ++correct;
      }
      tape.backward(loss);
      adam_step(tensors, opt);
      params.zero_grad();
      tape.clear();
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = loss_sum / double(order.size());
    entry.train_acc = double(correct) / double(order.size());
    entry.val = valid_records.empty() ? ValidationScores{}
                                      : validate_f1(params, valid_records);
    entry.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(entry);
    if (live_log) (*live_log) << format_epoch_log(entry) << "\n" << std::flush;

    if (valid_records.empty()) {
      // No selection signal: keep the latest epoch, never stop early.
      result.best.params = params.deep_copy();
      result.best.opt = opt;
      result.best.epoch = epoch;
      result.best.val_f1 = 0.0;
    } else if (entry.val.f1 > best_f1) {
      best_f1 = entry.val.f1;
      stale_epochs = 0;
      result.best.params = params.deep_copy();
      result.best.opt = opt;
      result.best.epoch = epoch;
      result.best.val_f1 = entry.val.f1;
    } else {
      ++stale_epochs;
      if (stale_epochs >= cfg.patience) {
        result.stopped_early = true;
        break;
      }
    }
  }
  return result;
}

}  // namespace qbm
