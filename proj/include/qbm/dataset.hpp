#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qbm/index.hpp"
#include "qbm/rng.hpp"

namespace qbm {

struct PairRecord {
  std::string q1;
  std::string q2;
  bool is_duplicate = false;
};

// A bag of paraphrase questions (already capped and query-extracted when it
// comes out of filter_and_extract).
struct Bag {
  long bag_id = -1;
  std::vector<std::string> questions;
};

struct QueryBag {
  std::string query;
  Bag bag;
};

// One candidate line of an instance file.
struct InstanceRow {
  std::string query_id;
  std::string query;
  long bag_id = -1;
  int label = 0;
  std::vector<std::string> questions;
};

// One query with its candidate bags (1 positive + k negatives).
struct RawInstance {
  std::string query_id;
  std::string query;
  std::vector<InstanceRow> candidates;

  int positive_index() const;
};

// Tab-separated pair file q1<TAB>q2<TAB>is_duplicate(0|1); a header line is
// detected and skipped.
std::vector<PairRecord> read_pair_file(const std::string& path);

// Connected components of the duplicate graph (union-find, path compression,
// union by size). Questions seen only in non-duplicate pairs form singletons.
// Components and the component list are sorted lexicographically, so the
// result is independent of edge order.
std::vector<std::vector<std::string>> group_duplicates(
    const std::vector<PairRecord>& pairs);

// Drops components smaller than min_size, extracts the lexicographically
// smallest question as the query, and caps the remaining bag at `cap`
// questions (again lexicographically smallest). bag_id is the position in the
// returned list.
std::vector<QueryBag> filter_and_extract(
    const std::vector<std::vector<std::string>>& components, int min_size = 3,
    int cap = 5);

// Retrieval-based hard-negative mining over the final bags.
class NegativeSampler {
 public:
  explicit NegativeSampler(const std::vector<QueryBag>& bags);

  // k distinct negative bag ids for a query: top-20 retrieved questions,
  // minus those of the positive bag, mapped to bags, deduplicated in
  // retrieval order, then sampled without replacement; falls back to uniform
  // bags when the retrieved pool is too small.
  std::vector<long> sample(const std::string& query, long positive_bag, int k,
                           Rng rng) const;

  const InvertedIndex& index() const { return index_; }

 private:
  const std::vector<QueryBag>* bags_;
  InvertedIndex index_;
  std::vector<long> question_bag_;  // doc id -> bag id
};

struct DatasetStats {
  long pair_count = 0;
  long component_count = 0;
  long bag_count = 0;
  std::vector<long> bag_size_histogram;  // index = capped bag size
  long train_instances = 0;
  long valid_instances = 0;
  long test_instances = 0;

  std::string summary() const;
};

struct BuildOptions {
  uint64_t seed = 1;
  int min_bag_size = 3;
  int bag_cap = 5;
  int negatives_train = 1;
  int negatives_test = 9;
  long train_queries = -1;  // -1: everything not used by valid/test
  long valid_queries = 0;
  long test_queries = 0;
};

// Full pipeline: pairs -> bags -> per-split instance files
// (train.tsv/valid.tsv/test.tsv under out_dir).
DatasetStats build_dataset(const std::vector<PairRecord>& pairs,
                           const BuildOptions& opt, const std::string& out_dir);

// Instance file round trip.
void write_instance_file(const std::string& path,
                         const std::vector<RawInstance>& instances);
std::vector<InstanceRow> read_instance_rows(const std::string& path);
std::vector<RawInstance> group_instances(const std::vector<InstanceRow>& rows);

}  // namespace qbm
