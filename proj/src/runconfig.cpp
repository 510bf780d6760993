#include "qbm/runconfig.hpp"

#include <fstream>
#include <sstream>

#include "qbm/error.hpp"

namespace qbm {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace((unsigned char)s[a])) ++a;
  while (b > a && std::isspace((unsigned char)s[b - 1])) --b;
  return s.substr(a, b - a);
}

}  // namespace

RunConfig::RunConfig() {
  kv_ = {
      {"seed", "1"},
      {"variant", "qbm"},
      {"threads", "0"},
      {"lr", "0.0001"},
      {"batch_size", "32"},
      {"max_epochs", "20"},
      {"patience", "5"},
      {"dropout", "0.5"},
      {"max_len", "20"},
      {"bag_capacity", "5"},
      {"embed_dim", "300"},
      {"conv1_filters", "128"},
      {"conv1_width", "3"},
      {"grid_filters", "32,32"},
      {"grid_kernel", "3"},
      {"cov_hidden", "64"},
      {"head_hidden", "256"},
      {"br_terms", "10"},
      {"min_count", "1"},
      {"min_bag_size", "3"},
      {"neg_train", "1"},
      {"neg_test", "9"},
      {"train_queries", "-1"},
      {"valid_queries", "0"},
      {"test_queries", "0"},
      {"pairs_file", ""},
      {"train_file", ""},
      {"valid_file", ""},
      {"test_file", ""},
      {"embedding_file", ""},
      {"stopword_file", ""},
      {"checkpoint", ""},
      {"out", ""},
      {"qq_mode", ""},
      {"grad_points", "10"},
  };
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("config: unknown key '" + key + "'");
  it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("config: unknown key '" + key + "'");
  return it->second;
}

long RunConfig::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t pos = 0;
    const long parsed = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' is not an integer: '" + v + "'");
  }
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t pos = 0;
    const double parsed = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' is not a number: '" + v + "'");
  }
}

uint64_t RunConfig::seed() const {
  const std::string& v = get("seed");
  try {
    size_t pos = 0;
    const unsigned long long parsed = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("config: seed is not an unsigned integer: '" + v + "'");
  }
}

ModelConfig RunConfig::model_config() const {
  ModelConfig cfg;
  cfg.variant = parse_variant(get("variant"));
  cfg.max_len = int(get_int("max_len"));
  cfg.bag_capacity = int(get_int("bag_capacity"));
  cfg.embed_dim = int(get_int("embed_dim"));
  cfg.conv1_filters = int(get_int("conv1_filters"));
  cfg.conv1_width = int(get_int("conv1_width"));
  cfg.cov_hidden = int(get_int("cov_hidden"));
  cfg.head_hidden = int(get_int("head_hidden"));
  cfg.br_terms = int(get_int("br_terms"));
  cfg.dropout = get_double("dropout");
  cfg.grid_stages.clear();
  const int kernel = int(get_int("grid_kernel"));
  std::istringstream fs(get("grid_filters"));
  std::string field;
  while (std::getline(fs, field, ',')) {
    try {
      cfg.grid_stages.push_back({std::stoi(field), kernel});
    } catch (const std::exception&) {
      throw ConfigError("config: grid_filters entry is not an integer: '" +
                        field + "'");
    }
  }
  cfg.validate();
  return cfg;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig cfg;
  cfg.lr = get_double("lr");
  cfg.batch_size = int(get_int("batch_size"));
  cfg.max_epochs = int(get_int("max_epochs"));
  cfg.patience = int(get_int("patience"));
  cfg.seed = seed();
  cfg.validate();
  return cfg;
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [k, v] : kv_) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  }
  return out;
}

}  // namespace qbm
