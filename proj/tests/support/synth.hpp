#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qbm::synth {

// Seeded paraphrase-cluster generator emitting a duplicate-question pair file
// in the builder's input format. Each cluster holds one topic expressed by a
// few content words; paraphrases permute the content words, substitute
// function words, occasionally drop a content word, and sprinkle rare filler
// tokens. Difficulty is controlled by pool sizes, the per-cluster marker
// word, and the drop/filler rates.
struct Options {
  uint64_t seed = 1;
  int clusters = 500;
  int min_paraphrases = 4;
  int max_paraphrases = 7;
  int shared_pool = 80;    // heavily reused topic words (hard-negative glue)
  int medium_pool = 240;   // moderately reused topic words
  int medium_words = 1;    // medium words per cluster
  bool unique_marker = true;  // one cluster-exclusive content word
  double drop_prob = 0.2;  // chance a paraphrase drops one content word
  double filler_prob = 0.4;  // chance of a rare filler token per question
};

// The 20 function words woven into every generated question; all of them are
// in the built-in stopword list.
const std::vector<std::string>& function_words();

// Tab-separated q1/q2/is_duplicate lines with a header row.
std::string pair_file(const Options& opt);

}  // namespace qbm::synth
