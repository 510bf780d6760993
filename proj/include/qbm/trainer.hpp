#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "qbm/adam.hpp"
#include "qbm/forward.hpp"
#include "qbm/model.hpp"
#include "qbm/prep.hpp"
#include "qbm/text.hpp"

namespace qbm {

struct TrainConfig {
  double lr = 1e-4;
  int batch_size = 32;
  int max_epochs = 20;
  int patience = 5;  // epochs without validation-F1 improvement
  uint64_t seed = 1;

  void validate() const;
};

// Versioned serialized model: parameters, optimizer state, config, vocabulary.
struct Checkpoint {
  static constexpr uint32_t kVersion = 1;

  ModelConfig config;
  Vocabulary vocab;
  ModelParams<float> params;
  AdamState<float> opt;
  int epoch = 0;
  double val_f1 = 0.0;
  uint64_t seed = 0;
};

struct ValidationScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Positive-class precision/recall/F1 at threshold 0.5; F1 is 0 when P+R is 0.
ValidationScores validate_f1(ModelParams<float>& params,
                             const std::vector<PreparedRecord>& records);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  ValidationScores val;
  double seconds = 0.0;
};

// Tab-separated `epoch loss train_acc val_P val_R val_F1 seconds`.
std::string format_epoch_log(const EpochLog& e);

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> log;
  bool stopped_early = false;
  long skipped_records = 0;  // degenerate inputs dropped before training
};

// Mini-batch Adam training with per-epoch seeded shuffling and best-epoch
// checkpoint selection by validation F1 (ties keep the earlier epoch).
TrainResult train(const std::vector<PreparedRecord>& train_records,
                  const std::vector<PreparedRecord>& valid_records,
                  ModelParams<float> params, const Vocabulary& vocab,
                  const TrainConfig& cfg, std::ostream* live_log = nullptr);

// Binary checkpoint file: `QBM1` magic, version, JSON header (config,
// vocabulary, metadata, array manifest), little-endian float32 arrays in
// manifest order (parameters, then Adam first and second moments), and a
// trailing 64-bit checksum over all preceding bytes.
void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace qbm
