#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "qbm/model.hpp"
#include "qbm/trainer.hpp"

namespace qbm {

// Flat key=value run configuration. Precedence is command-line flag over
// config file over built-in default; unknown keys are rejected.
class RunConfig {
 public:
  RunConfig();

  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  bool empty(const std::string& key) const { return get(key).empty(); }
  long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  uint64_t seed() const;

  ModelConfig model_config() const;
  TrainConfig train_config() const;

  // One `key = value` line per setting, sorted by key.
  std::string echo() const;

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace qbm
