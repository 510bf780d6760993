#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <list>
#include <sstream>

#include "qbm/dataset.hpp"
#include "qbm/error.hpp"
#include "qbm/evaluator.hpp"
#include "qbm/forward.hpp"
#include "qbm/grad_suite.hpp"
#include "qbm/kernels.hpp"
#include "qbm/runconfig.hpp"
#include "qbm/trainer.hpp"

namespace {

using namespace qbm;

// Binds CLI flags to run-config keys; flags win over the config file, which
// wins over built-in defaults.
class FlagMap {
 public:
  void add(CLI::App* cmd, const std::string& flag, const std::string& key,
           const std::string& desc) {
    entries_.push_back({flag, key, ""});
    cmd->add_option(flag, entries_.back().value, desc);
  }

  void apply(CLI::App* cmd, RunConfig& rc) const {
    for (const auto& e : entries_) {
      if (cmd->count(e.flag) > 0) rc.set(e.key, e.value);
    }
  }

 private:
  struct Entry {
    std::string flag;
    std::string key;
    std::string value;
  };
  std::list<Entry> entries_;
};

struct CommandState {
  CLI::App* cmd = nullptr;
  FlagMap flags;
  std::string config_path;
  std::vector<std::string> sets;

  RunConfig resolve() const {
    RunConfig rc;
    if (!config_path.empty()) rc.load_file(config_path);
    for (const auto& kv : sets) {
      const size_t eq = kv.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got '" + kv + "'");
      }
      rc.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    flags.apply(cmd, rc);
    return rc;
  }
};

CommandState* make_command(CLI::App& app, const std::string& name,
                           const std::string& desc,
                           std::list<CommandState>& storage) {
  storage.emplace_back();
  CommandState& st = storage.back();
  st.cmd = app.add_subcommand(name, desc);
  st.cmd->add_option("--config", st.config_path, "key = value configuration file");
  st.cmd->add_option("--set", st.sets, "override a single config key (key=value)")
      ->take_all();
  return &st;
}

void apply_threads(const RunConfig& rc) {
  const long threads = rc.get_int("threads");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  kernels::set_exec_mode(threads == 1 ? kernels::Exec::serial
                                      : kernels::Exec::parallel);
  kernels::set_num_threads(int(threads));
}

void echo_config(const RunConfig& rc) {
  std::istringstream lines(rc.echo());
  std::string line;
  while (std::getline(lines, line)) {
    std::cerr << "# [seed=" << rc.get("seed") << "] " << line << "\n";
  }
}

// Query text once per instance plus every bag question, for vocabulary builds.
std::vector<std::string> training_texts(const std::vector<InstanceRow>& rows) {
  std::vector<std::string> texts;
  std::string last_id;
  bool first = true;
  for (const auto& row : rows) {
    if (first || row.query_id != last_id) {
      texts.push_back(row.query);
      last_id = row.query_id;
      first = false;
    }
    for (const auto& q : row.questions) texts.push_back(q);
  }
  return texts;
}

int run_build_dataset(const RunConfig& rc) {
  if (rc.empty("pairs_file")) throw ConfigError("build-dataset needs --pairs");
  if (rc.empty("out")) throw ConfigError("build-dataset needs --out");
  const auto pairs = read_pair_file(rc.get("pairs_file"));
  if (pairs.empty()) throw DatasetError("empty corpus: " + rc.get("pairs_file") +
                                        " has no data rows");
  BuildOptions opt;
  opt.seed = rc.seed();
  opt.min_bag_size = int(rc.get_int("min_bag_size"));
  opt.negatives_train = int(rc.get_int("neg_train"));
  opt.negatives_test = int(rc.get_int("neg_test"));
  opt.train_queries = rc.get_int("train_queries");
  opt.valid_queries = rc.get_int("valid_queries");
  opt.test_queries = rc.get_int("test_queries");
  const DatasetStats stats = build_dataset(pairs, opt, rc.get("out"));
  std::cout << stats.summary() << "\n";
  return 0;
}

int run_train(const RunConfig& rc) {
  if (rc.empty("train_file")) throw ConfigError("train needs --train");
  if (rc.empty("out")) throw ConfigError("train needs --out");
  const ModelConfig mcfg = rc.model_config();
  const TrainConfig tcfg = rc.train_config();

  const auto train_rows = read_instance_rows(rc.get("train_file"));
  if (train_rows.empty()) throw DatasetError("train file has no rows");
  std::vector<InstanceRow> valid_rows;
  if (!rc.empty("valid_file")) valid_rows = read_instance_rows(rc.get("valid_file"));

  const Vocabulary vocab =
      Vocabulary::build(training_texts(train_rows), int(rc.get_int("min_count")));
  Rng root(tcfg.seed);
  EmbeddingTable table =
      rc.empty("embedding_file")
          ? random_embeddings(vocab, mcfg.embed_dim, root.derive(21))
          : load_embeddings(rc.get("embedding_file"), vocab, mcfg.embed_dim,
                            root.derive(21));
  const Stopwords stopwords = rc.empty("stopword_file")
                                  ? Stopwords::builtin()
                                  : Stopwords::from_file(rc.get("stopword_file"));

  Preprocessor prep(vocab, stopwords, mcfg);
  prep.fit(collect_bag_questions(train_rows));
  const auto train_records = prep.training_records(train_rows);
  const auto valid_records = prep.training_records(valid_rows);

  ModelParams<float> params = ModelParams<float>::init(mcfg, vocab.size(), root.derive(22));
  params.set_embedding(table);
  std::cerr << "# [seed=" << tcfg.seed << "] variant=" << variant_name(mcfg.variant)
            << " parameters=" << params.param_count()
            << " train_records=" << train_records.size()
            << " valid_records=" << valid_records.size() << "\n";

  TrainResult result = train(train_records, valid_records, params, vocab, tcfg,
                             &std::cerr);

  const std::string out_dir = rc.get("out");
  std::filesystem::create_directories(out_dir);
  const std::string ckpt_path = out_dir + "/checkpoint.qbm";
  save_checkpoint(ckpt_path, result.best);
  {
    std::ofstream log(out_dir + "/train.log");
    std::istringstream lines(rc.echo());
    std::string line;
    while (std::getline(lines, line)) log << "# " << line << "\n";
    log << "# skipped_records = " << result.skipped_records << "\n";
    for (const auto& e : result.log) log << format_epoch_log(e) << "\n";
  }
  std::cout << "best_epoch=" << result.best.epoch << " val_f1=" << result.best.val_f1
            << " checkpoint=" << ckpt_path << "\n";
  return 0;
}

QqMode mode_for_entry(const std::string& name, const Checkpoint& cp) {
  if (cp.config.variant != Variant::qq) return QqMode::none;
  if (name.size() >= 3 && name.substr(name.size() - 3) == "max") return QqMode::max;
  if (name.size() >= 4 && name.substr(name.size() - 4) == "mean") return QqMode::mean;
  throw ConfigError("pairwise checkpoint entry '" + name +
                    "' must be named ...max or ...mean to pick the aggregation");
}

int run_evaluate(const RunConfig& rc, const std::vector<std::string>& entries) {
  if (rc.empty("test_file")) throw ConfigError("evaluate needs --test");
  if (entries.empty()) throw ConfigError("evaluate needs at least one --checkpoint NAME=PATH");
  const auto rows = read_instance_rows(rc.get("test_file"));
  const auto raw_instances = group_instances(rows);
  const Stopwords stopwords = rc.empty("stopword_file")
                                  ? Stopwords::builtin()
                                  : Stopwords::from_file(rc.get("stopword_file"));
  std::vector<ReportRow> report;
  for (const auto& entry : entries) {
    const size_t eq = entry.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--checkpoint expects NAME=PATH, got '" + entry + "'");
    }
    const std::string name = entry.substr(0, eq);
    Checkpoint cp = load_checkpoint(entry.substr(eq + 1));
    const QqMode mode = mode_for_entry(name, cp);
    Preprocessor prep(cp.vocab, stopwords, cp.config);
    prep.fit(collect_bag_questions(rows));
    std::vector<PreparedInstance> instances;
    instances.reserve(raw_instances.size());
    for (const auto& raw : raw_instances) instances.push_back(prep.instance(raw));
    report.push_back(evaluate_model(name, cp.params, instances, mode));
  }
  const std::string table = ablation_report(report);
  std::cout << table;
  if (!rc.empty("out")) {
    std::ofstream out(rc.get("out"));
    out << table;
  }
  return 0;
}

int run_rank(const RunConfig& rc, const std::string& query,
             const std::string& bags_path) {
  if (rc.empty("checkpoint")) throw ConfigError("rank needs --checkpoint");
  if (bags_path.empty()) throw ConfigError("rank needs --bags");
  Checkpoint cp = load_checkpoint(rc.get("checkpoint"));
  const QqMode mode = cp.config.variant == Variant::qq
                          ? parse_qq_mode(rc.get("qq_mode").empty() ? "max"
                                                                    : rc.get("qq_mode"))
                          : QqMode::none;

  std::ifstream in(bags_path);
  if (!in) throw ParseError("bags: cannot open " + bags_path);
  struct BagLine {
    long bag_id;
    std::vector<std::string> questions;
  };
  std::vector<BagLine> bags;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError("bags: line " + std::to_string(line_no) +
                       ": expected bag_id<TAB>questions");
    }
    BagLine bag;
    try {
      bag.bag_id = std::stol(line.substr(0, tab));
    } catch (const std::exception&) {
      throw ParseError("bags: line " + std::to_string(line_no) + ": bad bag id '" +
                       line.substr(0, tab) + "'");
    }
    size_t start = tab + 1;
    while (true) {
      const size_t pos = line.find("||", start);
      if (pos == std::string::npos) {
        bag.questions.push_back(line.substr(start));
        break;
      }
      bag.questions.push_back(line.substr(start, pos - start));
      start = pos + 2;
    }
    bags.push_back(std::move(bag));
  }
  if (bags.empty()) throw DatasetError("bag file is empty: " + bags_path);

  const Stopwords stopwords = rc.empty("stopword_file")
                                  ? Stopwords::builtin()
                                  : Stopwords::from_file(rc.get("stopword_file"));
  Preprocessor prep(cp.vocab, stopwords, cp.config);
  std::vector<std::string> all_questions;
  for (const auto& bag : bags) {
    for (const auto& q : bag.questions) all_questions.push_back(q);
  }
  prep.fit(all_questions);

  std::vector<std::pair<long, double>> scored;
  for (const auto& bag : bags) {
    const PreparedRecord rec = prep.record(query, bag.questions, 0, bag.bag_id);
    scored.emplace_back(bag.bag_id, score_candidate(cp.params, rec, mode));
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [bag_id, score] : scored) {
    std::printf("%ld\t%.4f\n", bag_id, score);
  }
  return 0;
}

int run_inspect_weights(const RunConfig& rc, const std::string& token_list) {
  if (rc.empty("checkpoint")) throw ConfigError("inspect-weights needs --checkpoint");
  Checkpoint cp = load_checkpoint(rc.get("checkpoint"));
  std::vector<std::string> tokens;
  std::istringstream ts(token_list);
  std::string tok;
  while (std::getline(ts, tok, ',')) {
    if (!tok.empty()) tokens.push_back(tok);
  }
  const WeightReport report = inspect_weights(cp, tokens);
  for (const auto& [token, weight] : report.rows) {
    std::printf("%s\t%.4f\n", token.c_str(), weight);
  }
  std::printf("<average>\t%.4f\n", report.vocab_average);
  return 0;
}

int run_grad_check(const RunConfig& rc) {
  const auto rows = run_grad_suite(rc.seed(), int(rc.get_int("grad_points")));
  bool ok = true;
  for (const auto& row : rows) {
    std::printf("%s\t%.3e\n", row.name.c_str(), row.max_rel_err);
    ok = ok && row.max_rel_err < 1e-3;
  }
  std::printf("%s\n", ok ? "all checks below 1e-3" : "FAILED: a check is above 1e-3");
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"query-bag matching toolkit"};
  app.require_subcommand(1);
  std::list<CommandState> commands;

  CommandState* build = make_command(app, "build-dataset",
                                     "group duplicate-question pairs into bags "
                                     "and emit train/valid/test instance files",
                                     commands);
  build->flags.add(build->cmd, "--pairs", "pairs_file", "tab-separated pair file");
  build->flags.add(build->cmd, "--out", "out", "output directory");
  build->flags.add(build->cmd, "--seed", "seed", "run seed");
  build->flags.add(build->cmd, "--min-bag-size", "min_bag_size", "smallest kept component");
  build->flags.add(build->cmd, "--neg-train", "neg_train", "negatives per train/valid query");
  build->flags.add(build->cmd, "--neg-test", "neg_test", "negatives per test query");
  build->flags.add(build->cmd, "--train-queries", "train_queries", "train split size (-1: rest)");
  build->flags.add(build->cmd, "--valid-queries", "valid_queries", "valid split size");
  build->flags.add(build->cmd, "--test-queries", "test_queries", "test split size");

  CommandState* tr = make_command(app, "train", "train a model variant", commands);
  tr->flags.add(tr->cmd, "--train", "train_file", "training instance file");
  tr->flags.add(tr->cmd, "--valid", "valid_file", "validation instance file");
  tr->flags.add(tr->cmd, "--embeddings", "embedding_file", "pretrained embedding text file");
  tr->flags.add(tr->cmd, "--stopwords", "stopword_file", "extra stopword file");
  tr->flags.add(tr->cmd, "--out", "out", "output directory");
  tr->flags.add(tr->cmd, "--seed", "seed", "run seed");
  tr->flags.add(tr->cmd, "--variant", "variant", "model variant");
  tr->flags.add(tr->cmd, "--lr", "lr", "learning rate");
  tr->flags.add(tr->cmd, "--batch-size", "batch_size", "mini-batch size");
  tr->flags.add(tr->cmd, "--max-epochs", "max_epochs", "epoch budget");
  tr->flags.add(tr->cmd, "--patience", "patience", "early-stop patience");
  tr->flags.add(tr->cmd, "--dropout", "dropout", "dropout rate");
  tr->flags.add(tr->cmd, "--threads", "threads", "kernel threads (1 = serial)");

  CommandState* ev = make_command(app, "evaluate", "ranking report over a test file", commands);
  std::vector<std::string> checkpoint_entries;
  ev->cmd->add_option("--checkpoint", checkpoint_entries,
                      "NAME=PATH, repeatable; pairwise entries end in max/mean")
      ->take_all();
  ev->flags.add(ev->cmd, "--test", "test_file", "test instance file");
  ev->flags.add(ev->cmd, "--stopwords", "stopword_file", "extra stopword file");
  ev->flags.add(ev->cmd, "--out", "out", "also write the report here");
  ev->flags.add(ev->cmd, "--threads", "threads", "kernel threads");

  CommandState* rk = make_command(app, "rank", "rank candidate bags for one query", commands);
  std::string rank_query;
  std::string rank_bags;
  rk->cmd->add_option("--query", rank_query, "query text")->required();
  rk->cmd->add_option("--bags", rank_bags, "bag file: bag_id<TAB>q1||q2||...");
  rk->flags.add(rk->cmd, "--checkpoint", "checkpoint", "model checkpoint");
  rk->flags.add(rk->cmd, "--qq-mode", "qq_mode", "max or mean for pairwise checkpoints");
  rk->flags.add(rk->cmd, "--stopwords", "stopword_file", "extra stopword file");

  CommandState* iw = make_command(app, "inspect-weights",
                                  "raw coverage weights of tokens", commands);
  std::string token_list;
  iw->cmd->add_option("--tokens", token_list, "comma-separated tokens");
  iw->flags.add(iw->cmd, "--checkpoint", "checkpoint", "model checkpoint");

  CommandState* gc = make_command(app, "grad-check",
                                  "finite-difference gradient verification", commands);
  gc->flags.add(gc->cmd, "--seed", "seed", "run seed");
  gc->flags.add(gc->cmd, "--points", "grad_points", "random points per check");
  gc->flags.add(gc->cmd, "--threads", "threads", "kernel threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    CommandState* active = nullptr;
    for (auto& st : commands) {
      if (st.cmd->parsed()) active = &st;
    }
    RunConfig rc = active->resolve();
    apply_threads(rc);
    echo_config(rc);
    if (active == build) return run_build_dataset(rc);
    if (active == tr) return run_train(rc);
    if (active == ev) return run_evaluate(rc, checkpoint_entries);
    if (active == rk) return run_rank(rc, rank_query, rank_bags);
    if (active == iw) return run_inspect_weights(rc, token_list);
    if (active == gc) return run_grad_check(rc);
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
