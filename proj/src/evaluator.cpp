#include "qbm/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include "qbm/error.hpp"

namespace qbm {

int RankedInstance::positive_rank() const {
  for (size_t r = 0; r < ranking.size(); ++r) {
    if (candidates[size_t(ranking[r])].positive) return int(r) + 1;
  }
  throw DatasetError("instance " + query_id + " has no positive candidate");
}

RankedInstance rank_candidates(ModelParams<float>& params,
                               const PreparedInstance& inst, QqMode mode) {
  if (inst.candidates.size() != 10) {
    throw DatasetError("instance " + inst.query_id + " has " +
                       std::to_string(inst.candidates.size()) +
                       " candidates, expected 10");
  }
  int positives = 0;
  for (const auto& c : inst.candidates) positives += c.label == 1;
  if (positives != 1) {
    throw DatasetError("instance " + inst.query_id + " has " +
                       std::to_string(positives) + " positives, expected 1");
  }
  RankedInstance out;
  out.query_id = inst.query_id;
  for (const auto& rec : inst.candidates) {
    out.candidates.push_back(
        {rec.bag_id, score_candidate(params, rec, mode), rec.label == 1});
  }
  out.ranking.resize(out.candidates.size());
  std::iota(out.ranking.begin(), out.ranking.end(), 0);
  std::stable_sort(out.ranking.begin(), out.ranking.end(), [&](int a, int b) {
    return out.candidates[size_t(a)].score > out.candidates[size_t(b)].score;
  });
  return out;
}

double mrr(const std::vector<RankedInstance>& instances) {
  if (instances.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& inst : instances) sum += 1.0 / double(inst.positive_rank());
  return sum / double(instances.size());
}

double recall_at(const std::vector<RankedInstance>& instances, int n, int k) {
  if (k > n) {
    throw ConfigError("recall: k=" + std::to_string(k) + " exceeds n=" +
                      std::to_string(n));
  }
  if (k < 1) throw ConfigError("recall: k must be >= 1");
  if (instances.empty()) return 0.0;
  long hits = 0;
  for (const auto& inst : instances) {
    int pos_index = -1;
    for (size_t i = 0; i < inst.candidates.size(); ++i) {
      if (inst.candidates[i].positive) pos_index = int(i);
    }
    const double pos_score = inst.candidates[size_t(pos_index)].score;
    int ahead = 0;      // subset members ranked above the positive
    int negatives = 0;  // negatives admitted to the subset
    for (size_t i = 0; i < inst.candidates.size() && negatives < n - 1; ++i) {
      if (int(i) == pos_index) continue;
      ++negatives;
      const auto& c = inst.candidates[i];
      if (c.score > pos_score ||
          (c.score == pos_score && int(i) < pos_index)) {
        ++ahead;
      }
    }
    if (ahead + 1 <= k) ++hits;
  }
  return double(hits) / double(instances.size());
}

ReportRow evaluate_model(const std::string& name, ModelParams<float>& params,
                         const std::vector<PreparedInstance>& instances,
                         QqMode mode) {
  std::vector<RankedInstance> ranked;
  ranked.reserve(instances.size());
  for (const auto& inst : instances) {
    ranked.push_back(rank_candidates(params, inst, mode));
  }
  ReportRow row;
  row.name = name;
  row.mrr = mrr(ranked);
  row.r10_1 = recall_at(ranked, 10, 1);
  row.r10_2 = recall_at(ranked, 10, 2);
  row.r10_5 = recall_at(ranked, 10, 5);
  row.r2_1 = recall_at(ranked, 2, 1);
  return row;
}

std::string ablation_report(const std::vector<ReportRow>& rows) {
  std::string out = "model\tMRR\tR10@1\tR10@2\tR10@5\tR2@1\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s\t%.4f\t%.4f\t%.4f\t%.4f\t%.4f\n",
                  r.name.c_str(), r.mrr, r.r10_1, r.r10_2, r.r10_5, r.r2_1);
    out += buf;
  }
  return out;
}

namespace {

double raw_weight(ModelParams<float>& params, int token_id) {
  const int d = params.cfg.embed_dim;
  std::vector<float> row(params.embedding.data() + size_t(token_id) * d,
                         params.embedding.data() + size_t(token_id + 1) * d);
  Tensor<float> emb = Tensor<float>::from({1, d}, std::move(row));
  Tensor<float> e = coverage_logits<float>(nullptr, params, emb);
  return double(e.data()[0]);
}

}  // namespace

WeightReport inspect_weights(const Checkpoint& cp,
                             const std::vector<std::string>& tokens) {
  if (!variant_has_coverage_mlp(cp.config.variant)) {
    throw CapabilityError(std::string("variant '") + variant_name(cp.config.variant) +
                          "' has no coverage weighting component");
  }
  ModelParams<float> params = cp.params;
  WeightReport report;
  std::unordered_set<std::string> seen;
  for (const auto& tok : tokens) {
    if (!seen.insert(tok).second) continue;
    report.rows.emplace_back(tok, raw_weight(params, cp.vocab.id(tok)));
  }
  double sum = 0.0;
  long count = 0;
  for (int id = 2; id < cp.vocab.size(); ++id) {
    sum += raw_weight(params, id);
    ++count;
  }
  report.vocab_average = count > 0 ? sum / double(count) : 0.0;
  return report;
}

}  // namespace qbm
