#include "qbm/prep.hpp"

#include <algorithm>
#include <map>

#include "qbm/error.hpp"

namespace qbm {

PreparedRecord Preprocessor::record(const std::string& query,
                                    const std::vector<std::string>& questions,
                                    int label, long bag_id) const {
  PreparedRecord rec;
  rec.label = label;
  rec.bag_id = bag_id;
  rec.query = encode(query, vocab_, cfg_.encode_len());
  if (cfg_.variant == Variant::bagcon) {
    std::string joined;
    for (size_t i = 0; i < questions.size(); ++i) {
      if (i) joined += ' ';
      joined += questions[i];
    }
    rec.concat = encode(joined, vocab_, cfg_.encode_len());
    return rec;
  }
  for (const auto& q : questions) {
    if (int(rec.questions.size()) >= cfg_.bag_capacity &&
        cfg_.variant != Variant::qq) {
      break;
    }
    rec.questions.push_back(encode(q, vocab_, cfg_.max_len));
  }
  if (variant_has_br(cfg_.variant)) {
    if (!fitted_) {
      throw ConfigError("preprocessor: bag-representation variant used before fit()");
    }
    const auto terms = index_.top_terms(questions, cfg_.br_terms, stopwords_);
    std::string pseudo;
    if (!terms.empty()) {
      for (size_t i = 0; i < terms.size(); ++i) {
        if (i) pseudo += ' ';
        pseudo += terms[i].token;
      }
    } else {
      // Fall back to the single most frequent non-stopword token.
      std::map<std::string, int> tf;
      for (const auto& q : questions) {
        for (auto& tok : tokenize(q)) {
          if (!stopwords_.contains(tok)) tf[tok] += 1;
        }
      }
      int best = 0;
      for (auto& [tok, count] : tf) {
        if (count > best) {
          best = count;
          pseudo = tok;
        }
      }
    }
    if (pseudo.empty()) {
      rec.brep_valid = false;
      rec.brep = encode("", vocab_, cfg_.max_len);
    } else {
      rec.brep = encode(pseudo, vocab_, cfg_.max_len);
    }
  }
  return rec;
}

PreparedInstance Preprocessor::instance(const RawInstance& raw) const {
  PreparedInstance inst;
  inst.query_id = raw.query_id;
  for (const auto& row : raw.candidates) {
    inst.candidates.push_back(record(row.query, row.questions, row.label, row.bag_id));
  }
  inst.positive_index = raw.positive_index();
  return inst;
}

std::vector<PreparedRecord> Preprocessor::training_records(
    const std::vector<InstanceRow>& rows) const {
  std::vector<PreparedRecord> out;
  for (const auto& row : rows) {
    if (cfg_.variant == Variant::qq) {
      for (const auto& q : row.questions) {
        out.push_back(record(row.query, {q}, row.label, row.bag_id));
      }
    } else {
      out.push_back(record(row.query, row.questions, row.label, row.bag_id));
    }
  }
  return out;
}

std::vector<std::string> collect_bag_questions(const std::vector<InstanceRow>& rows) {
  std::vector<std::string> out;
  for (const auto& row : rows) {
    for (const auto& q : row.questions) out.push_back(q);
  }
  return out;
}

}  // namespace qbm
