#pragma once

#include "tempovec/random.hpp"
#include "tempovec/types.hpp"
#include "tempovec/vocabulary.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tempovec {

struct Slice {
  std::string label;   // filename stem, e.g. "1990"
  long long key = 0;   // numeric sort key parsed from the label
  std::vector<std::vector<TokenId>> sentences;

  std::int64_t token_count() const;
};

/// Ordered set of labeled temporal slices over one shared vocabulary.
struct DiachronicCorpus {
  std::vector<Slice> slices;

  int n() const { return static_cast<int>(slices.size()); }
  /// Index of a slice by label, -1 when absent.
  int index_of(std::string_view label) const;
  std::vector<std::string> labels() const;
  /// Tokens summed over all slices (selector "" ) or one slice.
  std::int64_t token_count(std::string_view slice_label = {}) const;
};

/// Reads every `<label>.txt` under `corpus_dir` (label = integer sort
/// key), one sentence per line, mapping tokens to ids and dropping
/// out-of-vocabulary tokens. Lines longer than `chunk_words` are split
/// into consecutive chunks when chunk_words > 0 (for corpora shipped
/// without sentence boundaries). Sentences that end up empty are
/// dropped. Throws on duplicate labels or an empty directory.
DiachronicCorpus load_slices(const std::filesystem::path& corpus_dir, const Vocabulary& vocab,
                             int chunk_words = 0);

/// Per-slice occurrence counts for one slice; `out[id]` is how often
/// `id` appears in it. Used to flag words a slice never trains.
std::vector<std::int64_t> slice_token_counts(const Slice& slice, std::int32_t vocab_size);

/// Ids that never occur in the slice; their rows in a per-slice matrix
/// keep whatever the initialization put there.
std::vector<TokenId> untrained_ids(const Slice& slice, std::int32_t vocab_size);

/// Keep probability of one occurrence of a word with relative
/// frequency f under threshold t: min(1, (sqrt(f/t) + 1) * t / f).
double keep_probability(double frequency, double threshold);

/// Frequent-word downsampling of one sentence. threshold = 0 disables
/// (input returned unchanged, no randomness consumed). One uniform
/// draw is consumed per token otherwise.
std::vector<TokenId> subsample(std::span<const TokenId> sentence, const Vocabulary& vocab,
                               double threshold, Rng& rng);

/// Sampling distribution over token ids proportional to count^alpha.
class NegativeTable {
 public:
  NegativeTable(const Vocabulary& vocab, double alpha = 0.75);

  std::int32_t vocab_size() const { return static_cast<std::int32_t>(probs_.size()); }
  const std::vector<double>& probabilities() const { return probs_; }

  TokenId sample(Rng& rng) const;

  /// Draws k ids; the excluded (true target) id is rejected and
  /// redrawn. Throws when the vocabulary has a single entry.
  void sample_excluding(int k, TokenId exclude, Rng& rng, std::vector<TokenId>& out) const;

 private:
  std::vector<double> probs_;
  std::vector<double> cumulative_;
};

struct TrainingSample {
  TokenId target;
  std::vector<TokenId> context;  // nonempty, never contains the target position
};

struct SampleOptions {
  int window = 5;
  /// Draw the effective window per position uniformly from 1..window
  /// (word2vec practice). Off = fixed window, useful for exact counts.
  bool dynamic_window = true;
  double subsample_threshold = 0.0;
};

/// Walks every position of the selected slices (selector "" = all, in
/// label order) and invokes fn(target, context) for each sample whose
/// context is nonempty. Randomness: one subsampling draw per token
/// when enabled, then one window draw per surviving position when
/// dynamic. Throws on an unknown slice label.
void for_each_sample(const DiachronicCorpus& corpus, std::string_view slice_label,
                     const Vocabulary& vocab, const SampleOptions& opts, Rng& rng,
                     const std::function<void(TokenId, std::span<const TokenId>)>& fn);

/// Materialized variant of for_each_sample, for tests and small runs.
std::vector<TrainingSample> iterate_samples(const DiachronicCorpus& corpus,
                                            std::string_view slice_label, const Vocabulary& vocab,
                                            const SampleOptions& opts, Rng& rng);

}  // namespace tempovec
