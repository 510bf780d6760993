#pragma once

#include <string>
#include <vector>

#include "qbm/forward.hpp"
#include "qbm/trainer.hpp"

namespace qbm {

struct RankedCandidate {
  long bag_id = -1;
  double score = 0.0;
  bool positive = false;
};

// Candidates in stored (file) order plus a stable score-descending ranking.
struct RankedInstance {
  std::string query_id;
  std::vector<RankedCandidate> candidates;
  std::vector<int> ranking;  // candidate indices, best first

  int positive_rank() const;  // 1-based
};

// Scores all candidates of a 10-candidate test instance and ranks them,
// breaking score ties by the original candidate position.
RankedInstance rank_candidates(ModelParams<float>& params,
                               const PreparedInstance& inst,
                               QqMode mode = QqMode::none);

double mrr(const std::vector<RankedInstance>& instances);

// R_n@k: the positive plus the first n-1 negatives in stored order,
// re-ranked by their existing scores.
double recall_at(const std::vector<RankedInstance>& instances, int n, int k);

struct ReportRow {
  std::string name;
  double mrr = 0.0;
  double r10_1 = 0.0;
  double r10_2 = 0.0;
  double r10_5 = 0.0;
  double r2_1 = 0.0;
};

ReportRow evaluate_model(const std::string& name, ModelParams<float>& params,
                         const std::vector<PreparedInstance>& instances,
                         QqMode mode = QqMode::none);

// Tab-separated table `model MRR R10@1 R10@2 R10@5 R2@1`, 4 decimal places.
std::string ablation_report(const std::vector<ReportRow>& rows);

struct WeightReport {
  std::vector<std::pair<std::string, double>> rows;  // token, raw weight
  double vocab_average = 0.0;
};

// Raw coverage-MLP weight of each requested token (unknown tokens use the UNK
// row) plus the average over the whole vocabulary.
WeightReport inspect_weights(const Checkpoint& cp,
                             const std::vector<std::string>& tokens);

}  // namespace qbm
