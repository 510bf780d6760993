#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qbm/trainer.hpp"

namespace {

struct CmdResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

CmdResult run_cli(const std::string& args) {
  const std::string out_path = "/tmp/qbm_cli_stdout.txt";
  const std::string err_path = "/tmp/qbm_cli_stderr.txt";
  const std::string cmd = std::string(QBM_CLI_PATH) + " " + args + " > " +
                          out_path + " 2> " + err_path;
  const int rc = std::system(cmd.c_str());
  CmdResult result;
  result.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

// Deterministic duplicate-question clusters, four questions each.
std::string cluster_pairs(int clusters) {
  std::ostringstream os;
  os << "q1\tq2\tis_duplicate\n";
  for (int c = 0; c < clusters; ++c) {
    std::vector<std::string> qs;
    for (int v = 0; v < 4; ++v) {
      std::ostringstream q;
      q << "topic" << c << " item" << (c % 7) << " question variant " << v;
      qs.push_back(q.str());
    }
    for (size_t v = 0; v + 1 < qs.size(); ++v) {
      os << qs[v] << "\t" << qs[v + 1] << "\t1\n";
    }
  }
  return os.str();
}

const std::string kTinyModel =
    " --set max_len=6 --set bag_capacity=3 --set embed_dim=12"
    " --set conv1_filters=4 --set grid_filters=2,2 --set cov_hidden=4"
    " --set head_hidden=8 --set dropout=0";

}  // namespace

TEST_CASE("build-dataset: tiny fixture, byte-stable reruns, known bag count") {
  const std::string pairs = "/tmp/qbm_cli_pairs6.tsv";
  write_file(pairs,
             "a one two\ta one three\t1\n"
             "a one three\ta one four\t1\n"
             "a one four\ta one five\t1\n"
             "b six seven\tb six eight\t1\n"
             "b six eight\tb six nine\t1\n"
             "a one two\tb six seven\t0\n");
  std::filesystem::remove_all("/tmp/qbm_cli_ds1");
  std::filesystem::remove_all("/tmp/qbm_cli_ds2");
  CmdResult r1 = run_cli("build-dataset --pairs " + pairs +
                         " --out /tmp/qbm_cli_ds1 --seed 5 --train-queries 2");
  CHECK(r1.code == 0);
  CHECK(r1.out.find("bags=2") != std::string::npos);
  CmdResult r2 = run_cli("build-dataset --pairs " + pairs +
                         " --out /tmp/qbm_cli_ds2 --seed 5 --train-queries 2");
  CHECK(r2.code == 0);
  CHECK(slurp("/tmp/qbm_cli_ds1/train.tsv") == slurp("/tmp/qbm_cli_ds2/train.tsv"));
  CHECK(!slurp("/tmp/qbm_cli_ds1/train.tsv").empty());
}

TEST_CASE("build-dataset: header-only file is an empty-corpus error") {
  const std::string pairs = "/tmp/qbm_cli_header_only.tsv";
  write_file(pairs, "q1\tq2\tis_duplicate\n");
  CmdResult r = run_cli("build-dataset --pairs " + pairs + " --out /tmp/qbm_cli_dsx");
  CHECK(r.code == 2);
  CHECK(r.err.find("empty corpus") != std::string::npos);
}

TEST_CASE("config file: unknown keys rejected, flags override the file") {
  write_file("/tmp/qbm_cli_bad.cfg", "no_such_key = 1\n");
  CmdResult bad = run_cli("grad-check --config /tmp/qbm_cli_bad.cfg");
  CHECK(bad.code == 2);
  CHECK(bad.err.find("unknown key") != std::string::npos);

  // seed from the command line beats the config file
  const std::string pairs = "/tmp/qbm_cli_pairs12.tsv";
  write_file(pairs, cluster_pairs(12));
  write_file("/tmp/qbm_cli_seed.cfg", "seed = 5\n");
  std::filesystem::remove_all("/tmp/qbm_cli_dsa");
  std::filesystem::remove_all("/tmp/qbm_cli_dsb");
  CmdResult a = run_cli("build-dataset --pairs " + pairs +
                        " --out /tmp/qbm_cli_dsa --config /tmp/qbm_cli_seed.cfg"
                        " --seed 7 --train-queries 8 --valid-queries 2 --test-queries 2");
  CmdResult b = run_cli("build-dataset --pairs " + pairs +
                        " --out /tmp/qbm_cli_dsb --seed 7 --train-queries 8"
                        " --valid-queries 2 --test-queries 2");
  CHECK(a.code == 0);
  CHECK(b.code == 0);
  CHECK(slurp("/tmp/qbm_cli_dsa/test.tsv") == slurp("/tmp/qbm_cli_dsb/test.tsv"));
}

TEST_CASE("train pipeline: errors, variant parameter counts, evaluate, rank") {
  const std::string pairs = "/tmp/qbm_cli_pairs16.tsv";
  write_file(pairs, cluster_pairs(16));
  std::filesystem::remove_all("/tmp/qbm_cli_data");
  CmdResult built = run_cli("build-dataset --pairs " + pairs +
                            " --out /tmp/qbm_cli_data --seed 3 --train-queries 10"
                            " --valid-queries 3 --test-queries 3");
  REQUIRE(built.code == 0);

  // missing embedding file names the path
  CmdResult missing = run_cli(
      "train --train /tmp/qbm_cli_data/train.tsv --out /tmp/qbm_cli_run"
      " --embeddings /tmp/no_such_embeddings.txt" + kTinyModel);
  CHECK(missing.code == 2);
  CHECK(missing.err.find("/tmp/no_such_embeddings.txt") != std::string::npos);

  // zero epoch budget is a configuration error
  CmdResult zero = run_cli(
      "train --train /tmp/qbm_cli_data/train.tsv --out /tmp/qbm_cli_run"
      " --max-epochs 0" + kTinyModel);
  CHECK(zero.code == 2);

  // qbm vs base checkpoints carry different parameter counts
  std::filesystem::remove_all("/tmp/qbm_cli_run_qbm");
  std::filesystem::remove_all("/tmp/qbm_cli_run_base");
  CmdResult t1 = run_cli(
      "train --train /tmp/qbm_cli_data/train.tsv --valid /tmp/qbm_cli_data/valid.tsv"
      " --out /tmp/qbm_cli_run_qbm --variant qbm --max-epochs 2 --seed 9" + kTinyModel);
  REQUIRE(t1.code == 0);
  CmdResult t2 = run_cli(
      "train --train /tmp/qbm_cli_data/train.tsv --valid /tmp/qbm_cli_data/valid.tsv"
      " --out /tmp/qbm_cli_run_base --variant base --max-epochs 2 --seed 9" + kTinyModel);
  REQUIRE(t2.code == 0);
  qbm::Checkpoint cq = qbm::load_checkpoint("/tmp/qbm_cli_run_qbm/checkpoint.qbm");
  qbm::Checkpoint cb = qbm::load_checkpoint("/tmp/qbm_cli_run_base/checkpoint.qbm");
  CHECK(cq.params.param_count() != cb.params.param_count());

  // evaluate: one row per checkpoint entry, reruns bit-identical
  CmdResult e1 = run_cli(
      "evaluate --test /tmp/qbm_cli_data/test.tsv"
      " --checkpoint qbm=/tmp/qbm_cli_run_qbm/checkpoint.qbm"
      " --checkpoint base=/tmp/qbm_cli_run_base/checkpoint.qbm");
  REQUIRE(e1.code == 0);
  CHECK(e1.out.find("model\tMRR\tR10@1\tR10@2\tR10@5\tR2@1\n") == 0);
  int lines = 0;
  for (char c : e1.out) lines += c == '\n';
  CHECK(lines == 3);  // header + 2 model rows
  CmdResult e2 = run_cli(
      "evaluate --test /tmp/qbm_cli_data/test.tsv"
      " --checkpoint qbm=/tmp/qbm_cli_run_qbm/checkpoint.qbm"
      " --checkpoint base=/tmp/qbm_cli_run_base/checkpoint.qbm");
  CHECK(e1.out == e2.out);

  CmdResult missing_ckpt = run_cli(
      "evaluate --test /tmp/qbm_cli_data/test.tsv --checkpoint x=/tmp/absent.qbm");
  CHECK(missing_ckpt.code == 2);
  CHECK(missing_ckpt.err.find("/tmp/absent.qbm") != std::string::npos);

  // rank: single candidate comes back with a probability
  write_file("/tmp/qbm_cli_bags.tsv",
             "0\ttopic0 item0 question variant 1||topic0 item0 question variant 2\n");
  CmdResult rank1 = run_cli(
      "rank --checkpoint /tmp/qbm_cli_run_qbm/checkpoint.qbm"
      " --query \"topic0 item0 question variant 0\" --bags /tmp/qbm_cli_bags.tsv");
  CHECK(rank1.code == 0);
  CHECK(rank1.out.substr(0, 2) == "0\t");

  write_file("/tmp/qbm_cli_bags_bad.tsv", "0\tok question\nmissing-tab-line\n");
  CmdResult rank_bad = run_cli(
      "rank --checkpoint /tmp/qbm_cli_run_qbm/checkpoint.qbm"
      " --query \"hello\" --bags /tmp/qbm_cli_bags_bad.tsv");
  CHECK(rank_bad.code == 2);
  CHECK(rank_bad.err.find("line 2") != std::string::npos);

  write_file("/tmp/qbm_cli_bags_empty.tsv", "");
  CmdResult rank_empty = run_cli(
      "rank --checkpoint /tmp/qbm_cli_run_qbm/checkpoint.qbm"
      " --query \"hello\" --bags /tmp/qbm_cli_bags_empty.tsv");
  CHECK(rank_empty.code == 2);

  // inspect-weights: coverage-bearing model prints rows + average, duplicates
  // collapse; the base variant is a capability error
  CmdResult iw = run_cli(
      "inspect-weights --checkpoint /tmp/qbm_cli_run_qbm/checkpoint.qbm"
      " --tokens topic0,topic1,topic0");
  REQUIRE(iw.code == 0);
  int iw_lines = 0;
  for (char c : iw.out) iw_lines += c == '\n';
  CHECK(iw_lines == 3);  // two tokens + the vocabulary average
  CHECK(iw.out.find("<average>") != std::string::npos);

  CmdResult iw_base = run_cli(
      "inspect-weights --checkpoint /tmp/qbm_cli_run_base/checkpoint.qbm"
      " --tokens topic0");
  CHECK(iw_base.code == 2);
  CHECK(iw_base.err.find("coverage") != std::string::npos);
}

TEST_CASE("train determinism: same seed gives identical checkpoints and logs") {
  const std::string pairs = "/tmp/qbm_cli_pairs10.tsv";
  write_file(pairs, cluster_pairs(10));
  std::filesystem::remove_all("/tmp/qbm_cli_det_data");
  REQUIRE(run_cli("build-dataset --pairs " + pairs +
                  " --out /tmp/qbm_cli_det_data --seed 1 --train-queries 6"
                  " --valid-queries 2 --test-queries 2")
              .code == 0);
  std::filesystem::remove_all("/tmp/qbm_cli_det1");
  std::filesystem::remove_all("/tmp/qbm_cli_det2");
  const std::string train_cmd =
      "train --train /tmp/qbm_cli_det_data/train.tsv"
      " --valid /tmp/qbm_cli_det_data/valid.tsv --variant qbm --max-epochs 3"
      " --seed 17" + kTinyModel;
  REQUIRE(run_cli(train_cmd + " --out /tmp/qbm_cli_det1").code == 0);
  REQUIRE(run_cli(train_cmd + " --out /tmp/qbm_cli_det2").code == 0);
  CHECK(slurp("/tmp/qbm_cli_det1/checkpoint.qbm") ==
        slurp("/tmp/qbm_cli_det2/checkpoint.qbm"));

  // epoch lines identical once the wall-clock column is stripped (the header
  // comments differ in the out path by construction)
  auto strip_seconds = [](const std::string& log) {
    std::istringstream in(log);
    std::string line, out;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      out += line.substr(0, line.rfind('\t')) + "\n";
    }
    return out;
  };
  CHECK(strip_seconds(slurp("/tmp/qbm_cli_det1/train.log")) ==
        strip_seconds(slurp("/tmp/qbm_cli_det2/train.log")));
}

TEST_CASE("grad-check command: all rows pass and exit zero") {
  CmdResult r = run_cli("grad-check --points 2 --seed 1");
  CHECK(r.code == 0);
  CHECK(r.out.find("qbm_forward") != std::string::npos);
  CHECK(r.out.find("all checks below 1e-3") != std::string::npos);
}
