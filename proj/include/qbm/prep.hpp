#pragma once

#include <string>
#include <vector>

#include "qbm/dataset.hpp"
#include "qbm/index.hpp"
#include "qbm/model.hpp"
#include "qbm/text.hpp"

namespace qbm {

// One (query, bag, label) record with every encoding the configured variant
// needs, ready for the forward pass.
struct PreparedRecord {
  EncodedText query;
  std::vector<EncodedText> questions;  // at most bag_capacity entries
  EncodedText concat;                  // bagcon: the joined long question
  EncodedText brep;                    // BR variants: the keyword pseudo-question
  bool brep_valid = true;
  int label = 0;
  long bag_id = -1;
};

struct PreparedInstance {
  std::string query_id;
  std::vector<PreparedRecord> candidates;
  int positive_index = -1;
};

// Turns raw instance rows into prepared records. For bag-representation
// variants the keyword selection needs corpus idf statistics, so call fit()
// with the file's bag questions first.
class Preprocessor {
 public:
  Preprocessor(Vocabulary vocab, Stopwords stopwords, const ModelConfig& cfg)
      : vocab_(std::move(vocab)), stopwords_(std::move(stopwords)), cfg_(cfg) {}

  void fit(const std::vector<std::string>& bag_questions) {
    index_ = InvertedIndex::build(bag_questions);
    fitted_ = true;
  }
  bool fitted() const { return fitted_; }
  const InvertedIndex& idf_index() const { return index_; }

  PreparedRecord record(const std::string& query,
                        const std::vector<std::string>& questions,
                        int label, long bag_id) const;
  PreparedInstance instance(const RawInstance& raw) const;

  // Flat training records; the pairwise baseline expands each bag question
  // into its own (query, question, label) record.
  std::vector<PreparedRecord> training_records(
      const std::vector<InstanceRow>& rows) const;

 private:
  Vocabulary vocab_;
  Stopwords stopwords_;
  ModelConfig cfg_;
  InvertedIndex index_;
  bool fitted_ = false;
};

// All bag questions mentioned in a set of rows, for Preprocessor::fit.
std::vector<std::string> collect_bag_questions(const std::vector<InstanceRow>& rows);

}  // namespace qbm
