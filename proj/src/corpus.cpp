#include "tempovec/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace tempovec {

namespace fsys = std::filesystem;

std::int64_t Slice::token_count() const {
  std::int64_t n = 0;
  for (const auto& s : sentences) n += static_cast<std::int64_t>(s.size());
  return n;
}

int DiachronicCorpus::index_of(std::string_view label) const {
  for (int i = 0; i < n(); ++i)
    if (slices[static_cast<std::size_t>(i)].label == label) return i;
  return -1;
}

std::vector<std::string> DiachronicCorpus::labels() const {
  std::vector<std::string> out;
  out.reserve(slices.size());
  for (const auto& s : slices) out.push_back(s.label);
  return out;
}

std::int64_t DiachronicCorpus::token_count(std::string_view slice_label) const {
  if (!slice_label.empty()) {
    int i = index_of(slice_label);
    if (i < 0) throw std::runtime_error("unknown slice label: " + std::string(slice_label));
    return slices[static_cast<std::size_t>(i)].token_count();
  }
  std::int64_t total = 0;
  for (const auto& s : slices) total += s.token_count();
  return total;
}

DiachronicCorpus load_slices(const fsys::path& corpus_dir, const Vocabulary& vocab,
                             int chunk_words) {
  DiachronicCorpus corpus;
  for (const auto& file : list_slice_files(corpus_dir)) {
    Slice slice;
    slice.label = file.stem().string();
    slice.key = std::stoll(slice.label);
    for (const auto& prev : corpus.slices)
      if (prev.key == slice.key)
        throw std::runtime_error("duplicate slice label: " + prev.label + " vs " + slice.label);

    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read slice file: " + file.string());
    std::string line;
    while (std::getline(in, line)) {
      std::vector<TokenId> ids;
      for (const auto& tok : tokenize_line(line)) {
        TokenId id = vocab.id_of(tok);
        if (id >= 0) ids.push_back(id);
      }
      if (ids.empty()) continue;
      if (chunk_words > 0 && static_cast<int>(ids.size()) > chunk_words) {
        for (std::size_t off = 0; off < ids.size(); off += static_cast<std::size_t>(chunk_words)) {
          std::size_t end = std::min(ids.size(), off + static_cast<std::size_t>(chunk_words));
          slice.sentences.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(off),
                                       ids.begin() + static_cast<std::ptrdiff_t>(end));
        }
      } else {
        slice.sentences.push_back(std::move(ids));
      }
    }
    corpus.slices.push_back(std::move(slice));
  }
  return corpus;
}

std::vector<std::int64_t> slice_token_counts(const Slice& slice, std::int32_t vocab_size) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(vocab_size), 0);
  for (const auto& sentence : slice.sentences)
    for (TokenId id : sentence) ++counts[static_cast<std::size_t>(id)];
  return counts;
}

std::vector<TokenId> untrained_ids(const Slice& slice, std::int32_t vocab_size) {
  const auto counts = slice_token_counts(slice, vocab_size);
  std::vector<TokenId> out;
  for (std::int32_t id = 0; id < vocab_size; ++id)
    if (counts[static_cast<std::size_t>(id)] == 0) out.push_back(id);
  return out;
}

double keep_probability(double frequency, double threshold) {
  if (threshold <= 0.0 || frequency <= 0.0) return 1.0;
  double p = (std::sqrt(frequency / threshold) + 1.0) * threshold / frequency;
  return std::min(1.0, p);
}

std::vector<TokenId> subsample(std::span<const TokenId> sentence, const Vocabulary& vocab,
                               double threshold, Rng& rng) {
  std::vector<TokenId> out;
  out.reserve(sentence.size());
  if (threshold <= 0.0) {
    out.assign(sentence.begin(), sentence.end());
    return out;
  }
  for (TokenId id : sentence) {
    double p = keep_probability(vocab.frequency(id), threshold);
    if (rng.uniform() < p) out.push_back(id);
  }
  return out;
}

NegativeTable::NegativeTable(const Vocabulary& vocab, double alpha) {
  if (vocab.size() == 0) throw std::invalid_argument("negative table over empty vocabulary");
  probs_.resize(static_cast<std::size_t>(vocab.size()));
  double norm = 0.0;
  for (std::int32_t i = 0; i < vocab.size(); ++i) {
    double w = std::pow(static_cast<double>(vocab.count(i)), alpha);
    probs_[static_cast<std::size_t>(i)] = w;
    norm += w;
  }
  cumulative_.resize(probs_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    probs_[i] /= norm;
    acc += probs_[i];
    cumulative_[i] = acc;
  }
  cumulative_.back() = 1.0;
}

TokenId NegativeTable::sample(Rng& rng) const {
  double u = rng.uniform();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return static_cast<TokenId>(it - cumulative_.begin());
}

void NegativeTable::sample_excluding(int k, TokenId exclude, Rng& rng,
                                     std::vector<TokenId>& out) const {
  if (vocab_size() < 2)
    throw std::runtime_error("cannot sample negatives from a single-entry vocabulary");
  out.clear();
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    TokenId id = exclude;
    for (int tries = 0; id == exclude && tries < 1000; ++tries) id = sample(rng);
    if (id == exclude) id = (exclude + 1) % vocab_size();  // pathological mass on `exclude`
    out.push_back(id);
  }
}

void for_each_sample(const DiachronicCorpus& corpus, std::string_view slice_label,
                     const Vocabulary& vocab, const SampleOptions& opts, Rng& rng,
                     const std::function<void(TokenId, std::span<const TokenId>)>& fn) {
  if (opts.window < 1) throw std::invalid_argument("window must be >= 1");
  int begin = 0, end = corpus.n();
  if (!slice_label.empty()) {
    begin = corpus.index_of(slice_label);
    if (begin < 0) throw std::runtime_error("unknown slice label: " + std::string(slice_label));
    end = begin + 1;
  }
  std::vector<TokenId> kept;
  std::vector<TokenId> context;
  for (int si = begin; si < end; ++si) {
    for (const auto& sentence : corpus.slices[static_cast<std::size_t>(si)].sentences) {
      if (opts.subsample_threshold > 0.0) {
        kept = subsample(sentence, vocab, opts.subsample_threshold, rng);
      } else {
        kept.assign(sentence.begin(), sentence.end());
      }
      const int len = static_cast<int>(kept.size());
      for (int pos = 0; pos < len; ++pos) {
        int b = opts.window;
        if (opts.dynamic_window) b = static_cast<int>(rng.between(1, opts.window));
        context.clear();
        for (int j = std::max(0, pos - b); j < std::min(len, pos + b + 1); ++j)
          if (j != pos) context.push_back(kept[static_cast<std::size_t>(j)]);
        if (!context.empty()) fn(kept[static_cast<std::size_t>(pos)], context);
      }
    }
  }
}

std::vector<TrainingSample> iterate_samples(const DiachronicCorpus& corpus,
                                            std::string_view slice_label, const Vocabulary& vocab,
                                            const SampleOptions& opts, Rng& rng) {
  std::vector<TrainingSample> out;
  for_each_sample(corpus, slice_label, vocab, opts, rng,
                  [&](TokenId target, std::span<const TokenId> ctx) {
                    out.push_back({target, {ctx.begin(), ctx.end()}});
                  });
  return out;
}

}  // namespace tempovec
