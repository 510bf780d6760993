#include "qbm/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "qbm/bytes.hpp"
#include "qbm/error.hpp"

namespace qbm {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

void check_field(const std::string& text, const char* what) {
  if (text.find('\t') != std::string::npos ||
      text.find('\n') != std::string::npos ||
      text.find('\r') != std::string::npos) {
    throw DatasetError(std::string(what) + " contains a literal tab or newline: '" +
                       text + "'");
  }
  if (text.find("||") != std::string::npos) {
    throw DatasetError(std::string(what) + " contains the separator '||': '" +
                       text + "'");
  }
}

// Union-find with path compression and union by size.
class DisjointSet {
 public:
  explicit DisjointSet(size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  size_t find(size_t x) {
    size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const size_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  void unite(size_t a, size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

 private:
  std::vector<size_t> parent_;
  std::vector<size_t> size_;
};

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DatasetError("cannot write " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

int RawInstance::positive_index() const {
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].label == 1) return int(i);
  }
  return -1;
}

std::vector<PairRecord> read_pair_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("pairs: cannot open " + path);
  std::vector<PairRecord> pairs;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError("pairs: line " + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    if (fields[2] != "0" && fields[2] != "1") {
      if (line_no == 1) continue;  // header
      throw ParseError("pairs: line " + std::to_string(line_no) +
                       ": duplicate flag must be 0 or 1, got '" + fields[2] + "'");
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw ParseError("pairs: line " + std::to_string(line_no) + ": empty question text");
    }
    pairs.push_back({fields[0], fields[1], fields[2] == "1"});
  }
  return pairs;
}

std::vector<std::vector<std::string>> group_duplicates(
    const std::vector<PairRecord>& pairs) {
  std::vector<std::string> questions;
  std::unordered_map<std::string, size_t> ids;
  auto intern = [&](const std::string& q) {
    auto [it, inserted] = ids.emplace(q, questions.size());
    if (inserted) questions.push_back(q);
    return it->second;
  };
  std::vector<std::pair<size_t, size_t>> edges;
  for (const auto& p : pairs) {
    const size_t a = intern(p.q1);
    const size_t b = intern(p.q2);
    if (p.is_duplicate) edges.emplace_back(a, b);
  }
  DisjointSet dsu(questions.size());
  for (auto& [a, b] : edges) dsu.unite(a, b);
  std::unordered_map<size_t, std::vector<std::string>> groups;
  for (size_t i = 0; i < questions.size(); ++i) {
    groups[dsu.find(i)].push_back(questions[i]);
  }
  std::vector<std::vector<std::string>> components;
  components.reserve(groups.size());
  for (auto& [root, members] : groups) {
    std::sort(members.begin(), members.end());
    components.push_back(std::move(members));
  }
  std::sort(components.begin(), components.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return components;
}

std::vector<QueryBag> filter_and_extract(
    const std::vector<std::vector<std::string>>& components, int min_size,
    int cap) {
  std::vector<QueryBag> out;
  for (const auto& comp : components) {
    if (int(comp.size()) < min_size) continue;
    QueryBag qb;
    qb.query = comp.front();  // components arrive sorted
    qb.bag.questions.assign(comp.begin() + 1, comp.end());
    if (int(qb.bag.questions.size()) > cap) qb.bag.questions.resize(size_t(cap));
    qb.bag.bag_id = long(out.size());
    out.push_back(std::move(qb));
  }
  return out;
}

NegativeSampler::NegativeSampler(const std::vector<QueryBag>& bags)
    : bags_(&bags) {
  std::vector<std::string> docs;
  for (const auto& qb : bags) {
    for (const auto& q : qb.bag.questions) {
      docs.push_back(q);
      question_bag_.push_back(qb.bag.bag_id);
    }
  }
  index_ = InvertedIndex::build(docs);
}

std::vector<long> NegativeSampler::sample(const std::string& query,
                                          long positive_bag, int k,
                                          Rng rng) const {
  const long n_bags = long(bags_->size());
  if (n_bags < long(k) + 1) {
    throw DatasetError("negative sampling: need at least " +
                       std::to_string(k + 1) + " bags, have " +
                       std::to_string(n_bags));
  }
  const auto retrieved = index_.top_k_similar(query, 20);
  std::vector<long> candidates;
  std::unordered_set<long> seen;
  for (const auto& [doc, score] : retrieved) {
    const long bag = question_bag_[size_t(doc)];
    if (bag == positive_bag) continue;
    if (seen.insert(bag).second) candidates.push_back(bag);
  }
  std::vector<long> chosen;
  if (long(candidates.size()) >= k) {
    // partial Fisher-Yates: draw k distinct positions
    for (int i = 0; i < k; ++i) {
      const size_t j = size_t(i) + size_t(rng.below(candidates.size() - size_t(i)));
      std::swap(candidates[size_t(i)], candidates[j]);
      chosen.push_back(candidates[size_t(i)]);
    }
  } else {
    chosen = candidates;
    std::unordered_set<long> used(chosen.begin(), chosen.end());
    used.insert(positive_bag);
    while (long(chosen.size()) < k) {
      const long bag = long(rng.below(uint64_t(n_bags)));
      if (used.insert(bag).second) chosen.push_back(bag);
    }
  }
  return chosen;
}

std::string DatasetStats::summary() const {
  std::ostringstream os;
  os << "pairs=" << pair_count << " components=" << component_count
     << " bags=" << bag_count << " sizes=[";
  for (size_t i = 0; i < bag_size_histogram.size(); ++i) {
    if (bag_size_histogram[i] == 0) continue;
    os << i << ":" << bag_size_histogram[i] << " ";
  }
  std::string s = os.str();
  if (s.back() == ' ') s.pop_back();
  std::ostringstream tail;
  tail << "] train_instances=" << train_instances
       << " valid_instances=" << valid_instances
       << " test_instances=" << test_instances;
  return s + tail.str();
}

namespace {

RawInstance make_instance(const QueryBag& qb, const std::vector<QueryBag>& bags,
                          const NegativeSampler& sampler, int k, Rng rng) {
  RawInstance inst;
  inst.query_id = "q" + std::to_string(qb.bag.bag_id);
  inst.query = qb.query;
  const auto negatives = sampler.sample(qb.query, qb.bag.bag_id, k, rng);
  std::vector<long> order;
  order.push_back(qb.bag.bag_id);
  for (long b : negatives) order.push_back(b);
  rng.shuffle(order);
  for (long bag_id : order) {
    InstanceRow row;
    row.query_id = inst.query_id;
    row.query = qb.query;
    row.bag_id = bag_id;
    row.label = bag_id == qb.bag.bag_id ? 1 : 0;
    row.questions = bags[size_t(bag_id)].bag.questions;
    inst.candidates.push_back(std::move(row));
  }
  return inst;
}

}  // namespace

DatasetStats build_dataset(const std::vector<PairRecord>& pairs,
                           const BuildOptions& opt, const std::string& out_dir) {
  DatasetStats stats;
  stats.pair_count = long(pairs.size());
  const auto components = group_duplicates(pairs);
  stats.component_count = long(components.size());
  if (components.empty()) throw DatasetError("empty corpus: no questions found");
  const auto bags = filter_and_extract(components, opt.min_bag_size, opt.bag_cap);
  stats.bag_count = long(bags.size());
  stats.bag_size_histogram.assign(size_t(opt.bag_cap) + 1, 0);
  for (const auto& qb : bags) {
    stats.bag_size_histogram[qb.bag.questions.size()] += 1;
  }

  const long total = long(bags.size());
  long n_valid = std::max<long>(0, opt.valid_queries);
  long n_test = std::max<long>(0, opt.test_queries);
  long n_train = opt.train_queries < 0 ? total - n_valid - n_test : opt.train_queries;
  if (n_train < 0 || n_train + n_valid + n_test > total) {
    throw DatasetError("requested split sizes " + std::to_string(n_train) + "/" +
                       std::to_string(n_valid) + "/" + std::to_string(n_test) +
                       " exceed " + std::to_string(total) + " available queries");
  }
  if (n_train == 0) throw DatasetError("empty training split");

  Rng run_rng(opt.seed);
  std::vector<size_t> order(bags.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng = run_rng.derive(0x5711u);
  split_rng.shuffle(order);

  NegativeSampler sampler(bags);
  auto build_split = [&](size_t begin, long count, int k) {
    std::vector<RawInstance> out;
    out.reserve(size_t(count));
    for (long i = 0; i < count; ++i) {
      const QueryBag& qb = bags[order[begin + size_t(i)]];
      Rng inst_rng = run_rng.derive(fnv1a64(qb.query));
      out.push_back(make_instance(qb, bags, sampler, k, inst_rng));
    }
    return out;
  };

  const auto train = build_split(0, n_train, opt.negatives_train);
  const auto valid = build_split(size_t(n_train), n_valid, opt.negatives_train);
  const auto test = build_split(size_t(n_train + n_valid), n_test, opt.negatives_test);
  for (const auto& i : train) stats.train_instances += long(i.candidates.size());
  for (const auto& i : valid) stats.valid_instances += long(i.candidates.size());
  for (const auto& i : test) stats.test_instances += long(i.candidates.size());

  std::filesystem::create_directories(out_dir);
  write_instance_file(out_dir + "/train.tsv", train);
  write_instance_file(out_dir + "/valid.tsv", valid);
  write_instance_file(out_dir + "/test.tsv", test);
  return stats;
}

void write_instance_file(const std::string& path,
                         const std::vector<RawInstance>& instances) {
  std::string content;
  for (const auto& inst : instances) {
    for (const auto& row : inst.candidates) {
      check_field(row.query, "query");
      std::string joined;
      for (size_t i = 0; i < row.questions.size(); ++i) {
        check_field(row.questions[i], "bag question");
        if (i) joined += "||";
        joined += row.questions[i];
      }
      content += row.query_id;
      content += '\t';
      content += row.query;
      content += '\t';
      content += std::to_string(row.bag_id);
      content += '\t';
      content += std::to_string(row.label);
      content += '\t';
      content += joined;
      content += '\n';
    }
  }
  write_file_atomic(path, content);
}

std::vector<InstanceRow> read_instance_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("instances: cannot open " + path);
  std::vector<InstanceRow> rows;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 5) {
      throw ParseError("instances: line " + std::to_string(line_no) +
                       ": expected 5 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    InstanceRow row;
    row.query_id = fields[0];
    row.query = fields[1];
    try {
      row.bag_id = std::stol(fields[2]);
    } catch (const std::exception&) {
      throw ParseError("instances: line " + std::to_string(line_no) +
                       ": bad bag id '" + fields[2] + "'");
    }
    if (fields[3] != "0" && fields[3] != "1") {
      throw ParseError("instances: line " + std::to_string(line_no) +
                       ": label must be 0 or 1, got '" + fields[3] + "'");
    }
    row.label = fields[3] == "1" ? 1 : 0;
    size_t start = 0;
    const std::string& qs = fields[4];
    if (!qs.empty()) {
      while (true) {
        const size_t pos = qs.find("||", start);
        if (pos == std::string::npos) {
          row.questions.push_back(qs.substr(start));
          break;
        }
        row.questions.push_back(qs.substr(start, pos - start));
        start = pos + 2;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RawInstance> group_instances(const std::vector<InstanceRow>& rows) {
  std::vector<RawInstance> out;
  for (const auto& row : rows) {
    if (out.empty() || out.back().query_id != row.query_id) {
      RawInstance inst;
      inst.query_id = row.query_id;
      inst.query = row.query;
      out.push_back(std::move(inst));
    }
    out.back().candidates.push_back(row);
  }
  return out;
}

}  // namespace qbm
