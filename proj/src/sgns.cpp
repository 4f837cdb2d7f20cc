#include "tempovec/sgns.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace tempovec {

const char* arch_name(Arch a) { return a == Arch::cbow ? "cbow" : "sg"; }

Arch arch_from_name(std::string_view name) {
  if (name == "cbow") return Arch::cbow;
  if (name == "sg" || name == "skipgram") return Arch::skipgram;
  throw std::invalid_argument("unknown architecture: " + std::string(name));
}

void TrainConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (negatives < 1) throw std::invalid_argument("negatives must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (freeze_target && freeze_context)
    throw std::invalid_argument("cannot freeze both matrices");
  if (lr_initial <= 0.0) throw std::invalid_argument("lr_initial must be positive");
  if (resolved_lr_min() > lr_initial)
    throw std::invalid_argument("lr_min must not exceed lr_initial");
  if (subsample_threshold < 0.0)
    throw std::invalid_argument("subsample_threshold must be >= 0");
}

double sigmoid(double x) {
  if (x > 30.0) x = 30.0;
  if (x < -30.0) x = -30.0;
  return 1.0 / (1.0 + std::exp(-x));
}

double log_sigmoid(double x) {
  if (x > 30.0) x = 30.0;
  if (x < -30.0) x = -30.0;
  return -std::log1p(std::exp(-x));
}

SigmoidTable::SigmoidTable() : table_(kBins) {
  for (int i = 0; i < kBins; ++i) {
    double x = (2.0 * i / kBins - 1.0) * kMaxExp;
    table_[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-x));
  }
}

double SigmoidTable::value(double x) const {
  if (x >= kMaxExp) return table_.back();
  if (x <= -kMaxExp) return table_.front();
  int i = static_cast<int>((x + kMaxExp) * (kBins / (2.0 * kMaxExp)));
  if (i < 0) i = 0;
  if (i >= kBins) i = kBins - 1;
  return table_[static_cast<std::size_t>(i)];
}

RowVecD context_mean(const MatrixRM& m, std::span<const TokenId> ids) {
  if (ids.empty()) throw std::invalid_argument("context_mean of an empty context");
  RowVecD acc = RowVecD::Zero(m.cols());
  for (TokenId id : ids) acc += m.row(id).cast<double>();
  return acc / static_cast<double>(ids.size());
}

std::pair<EmbeddingMatrix, EmbeddingMatrix> init_matrices(std::int32_t vocab_size, int dim,
                                                          std::uint64_t seed) {
  if (vocab_size < 1 || dim < 1) throw std::invalid_argument("init_matrices: sizes must be positive");
  EmbeddingMatrix context{MatrixRM(vocab_size, dim), Role::context};
  EmbeddingMatrix target{MatrixRM::Zero(vocab_size, dim), Role::target};
  Rng rng(seed);
  const double scale = 1.0 / dim;
  for (std::int32_t r = 0; r < vocab_size; ++r)
    for (int c = 0; c < dim; ++c)
      context.w(r, c) = static_cast<float>((rng.uniform() - 0.5) * scale);
  return {std::move(context), std::move(target)};
}

namespace {

struct StepScratch {
  RowVecD cbar;
  RowVecD hidden;              // accumulated dL/d(cbar)
  std::vector<double> gs;      // dL/ds per output row
  std::vector<TokenId> outs;   // target followed by negatives
  std::vector<TokenId> negatives;
};

inline double sigmoid_of(double x, const SigmoidTable* table) {
  return table ? table->value(x) : sigmoid(x);
}

/// Core of one negative-sampling step. Scores every output row against
/// the pre-update parameters, then applies the updates, so duplicate
/// negative ids receive the exact summed gradient.
double step_impl(std::span<const TokenId> ctx, TokenId target, std::span<const TokenId> negs,
                 MatrixRM& C, MatrixRM& U, double lr, bool freeze_target, bool freeze_context,
                 bool mean_gradient, const SigmoidTable* table, StepScratch& s) {
  const auto M = static_cast<double>(ctx.size());

  s.cbar.setZero(C.cols());
  for (TokenId id : ctx) s.cbar += C.row(id).cast<double>();
  s.cbar /= M;

  s.outs.clear();
  s.outs.push_back(target);
  s.outs.insert(s.outs.end(), negs.begin(), negs.end());
  s.gs.resize(s.outs.size());
  s.hidden.setZero(C.cols());

  double loss = 0.0;
  for (std::size_t i = 0; i < s.outs.size(); ++i) {
    const bool positive = i == 0;
    const double score = U.row(s.outs[i]).cast<double>().dot(s.cbar);
    const double p = sigmoid_of(score, table);
    loss -= positive ? std::log(p) : std::log(1.0 - p);
    const double g = p - (positive ? 1.0 : 0.0);  // dL/dscore
    s.gs[i] = g;
    s.hidden += g * U.row(s.outs[i]).cast<double>();
  }

  if (!freeze_target) {
    for (std::size_t i = 0; i < s.outs.size(); ++i)
      U.row(s.outs[i]) -= (lr * s.gs[i] * s.cbar).cast<float>();
  }
  if (!freeze_context) {
    const double scale = mean_gradient ? lr / M : lr;
    for (TokenId id : ctx) C.row(id) -= (scale * s.hidden).cast<float>();
  }
  return loss;
}

void check_pair(const EmbeddingMatrix& context, const EmbeddingMatrix& target) {
  if (context.dim() != target.dim())
    throw std::invalid_argument("context/target dimension mismatch");
  if (context.rows() != target.rows())
    throw std::invalid_argument("context/target row count mismatch");
}

}  // namespace

StepGradients cbow_gradients(std::span<const TokenId> context_ids, TokenId target,
                             std::span<const TokenId> negatives, const EmbeddingMatrix& context,
                             const EmbeddingMatrix& target_matrix, const SigmoidTable* table) {
  check_pair(context, target_matrix);
  if (context_ids.empty()) throw std::invalid_argument("sample with empty context");

  StepGradients out;
  RowVecD cbar = context_mean(context.w, context_ids);
  out.mean_grad = RowVecD::Zero(context.dim());

  auto accumulate = [&](TokenId id, bool positive) {
    const double score = target_matrix.w.row(id).cast<double>().dot(cbar);
    const double p = sigmoid_of(score, table);
    out.loss -= positive ? std::log(p) : std::log(1.0 - p);
    const double g = p - (positive ? 1.0 : 0.0);
    out.mean_grad += g * target_matrix.w.row(id).cast<double>();
    for (auto& [tid, grad] : out.target_grads) {
      if (tid == id) {
        grad += g * cbar;
        return;
      }
    }
    out.target_grads.emplace_back(id, g * cbar);
  };

  accumulate(target, true);
  for (TokenId n : negatives) accumulate(n, false);
  return out;
}

double step_cbow(std::span<const TokenId> context_ids, TokenId target,
                 std::span<const TokenId> negatives, EmbeddingMatrix& context,
                 EmbeddingMatrix& target_matrix, double lr, bool freeze_target,
                 bool freeze_context, bool mean_gradient, const SigmoidTable* table) {
  check_pair(context, target_matrix);
  if (context_ids.empty()) throw std::invalid_argument("sample with empty context");
  StepScratch scratch;
  return step_impl(context_ids, target, negatives, context.w, target_matrix.w, lr, freeze_target,
                   freeze_context, mean_gradient, table, scratch);
}

double step_skipgram(TokenId context_word, TokenId target, std::span<const TokenId> negatives,
                     EmbeddingMatrix& context, EmbeddingMatrix& target_matrix, double lr,
                     bool freeze_target, bool freeze_context, const SigmoidTable* table) {
  const TokenId ctx[1] = {context_word};
  return step_cbow(ctx, target, negatives, context, target_matrix, lr, freeze_target,
                   freeze_context, /*mean_gradient=*/true, table);
}

namespace {

/// Sentences of the selection, flattened in slice-label order.
std::vector<const std::vector<TokenId>*> collect_sentences(const DiachronicCorpus& corpus,
                                                           std::string_view slice) {
  int begin = 0, end = corpus.n();
  if (!slice.empty()) {
    begin = corpus.index_of(slice);
    if (begin < 0) throw std::runtime_error("unknown slice label: " + std::string(slice));
    end = begin + 1;
  }
  std::vector<const std::vector<TokenId>*> out;
  for (int i = begin; i < end; ++i)
    for (const auto& s : corpus.slices[static_cast<std::size_t>(i)].sentences) out.push_back(&s);
  return out;
}

struct WorkerResult {
  std::uint64_t samples = 0;
  double loss = 0.0;
};

/// One worker's pass over its sentence shard for one epoch.
/// `position` is the shared raw-token counter driving the lr schedule;
/// single-worker mode refreshes lr at every token, parallel mode in
/// batches of 10k (word2vec convention).
void run_epoch_shard(std::span<const std::vector<TokenId>* const> sentences,
                     const SampleSource& src, const TrainConfig& cfg, const LrSchedule& sched,
                     MatrixRM& C, MatrixRM& U, const SigmoidTable* table, Rng& rng,
                     std::atomic<std::uint64_t>& position, bool batched_lr, WorkerResult& result) {
  StepScratch scratch;
  std::vector<TokenId> kept;
  std::vector<std::uint32_t> kept_offset;  // raw index of each kept token
  std::vector<TokenId> context;

  constexpr std::uint64_t kLrBatch = 10000;
  std::uint64_t local_base = 0;
  std::uint64_t local_count = 0;
  double lr = 0.0;
  if (batched_lr) {
    local_base = position.load(std::memory_order_relaxed);
    lr = sched.at(local_base);
  }

  for (const auto* sentence_ptr : sentences) {
    const auto& sentence = *sentence_ptr;
    kept.clear();
    kept_offset.clear();
    if (cfg.subsample_threshold > 0.0) {
      for (std::size_t r = 0; r < sentence.size(); ++r) {
        double p = keep_probability(src.vocab->frequency(sentence[r]), cfg.subsample_threshold);
        if (rng.uniform() < p) {
          kept.push_back(sentence[r]);
          kept_offset.push_back(static_cast<std::uint32_t>(r));
        }
      }
    } else {
      kept.assign(sentence.begin(), sentence.end());
      kept_offset.resize(kept.size());
      for (std::size_t r = 0; r < kept.size(); ++r)
        kept_offset[r] = static_cast<std::uint32_t>(r);
    }

    std::uint64_t sentence_base;
    if (batched_lr) {
      sentence_base = local_base + local_count;
    } else {
      sentence_base = position.load(std::memory_order_relaxed);
    }

    const int len = static_cast<int>(kept.size());
    for (int pos = 0; pos < len; ++pos) {
      if (!batched_lr) lr = sched.at(sentence_base + kept_offset[static_cast<std::size_t>(pos)]);

      int b = cfg.window;
      if (cfg.dynamic_window) b = static_cast<int>(rng.between(1, cfg.window));
      context.clear();
      for (int j = std::max(0, pos - b); j < std::min(len, pos + b + 1); ++j)
        if (j != pos) context.push_back(kept[static_cast<std::size_t>(j)]);
      if (context.empty()) continue;

      const TokenId center = kept[static_cast<std::size_t>(pos)];
      if (cfg.arch == Arch::cbow) {
        src.negatives->sample_excluding(cfg.negatives, center, rng, scratch.negatives);
        result.loss += step_impl(context, center, scratch.negatives, C, U, lr, cfg.freeze_target,
                                 cfg.freeze_context, cfg.mean_gradient, table, scratch);
        ++result.samples;
      } else {
        for (TokenId ctx_word : context) {
          src.negatives->sample_excluding(cfg.negatives, center, rng, scratch.negatives);
          const TokenId one[1] = {ctx_word};
          result.loss += step_impl(one, center, scratch.negatives, C, U, lr, cfg.freeze_target,
                                   cfg.freeze_context, cfg.mean_gradient, table, scratch);
          ++result.samples;
        }
      }
    }

    const auto raw_len = static_cast<std::uint64_t>(sentence.size());
    if (batched_lr) {
      local_count += raw_len;
      if (local_count >= kLrBatch) {
        local_base = position.fetch_add(local_count, std::memory_order_relaxed) + local_count;
        local_count = 0;
        lr = sched.at(local_base);
      }
    } else {
      position.fetch_add(raw_len, std::memory_order_relaxed);
    }
  }
  if (batched_lr && local_count > 0) position.fetch_add(local_count, std::memory_order_relaxed);
}

}  // namespace

TrainSummary train(const SampleSource& source, const TrainConfig& cfg, EmbeddingMatrix& context,
                   EmbeddingMatrix& target, int workers) {
  cfg.validate();
  if (source.corpus == nullptr || source.vocab == nullptr || source.negatives == nullptr)
    throw std::invalid_argument("train: incomplete sample source");
  check_pair(context, target);
  if (context.rows() != source.vocab->size())
    throw std::invalid_argument("matrix rows do not match vocabulary size");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");

  const auto sentences = collect_sentences(*source.corpus, source.slice);
  std::uint64_t tokens = 0;
  for (const auto* s : sentences) tokens += s->size();

  TrainSummary summary;
  if (tokens == 0) return summary;  // vacuous training, matrices untouched

  const LrSchedule sched{cfg.lr_initial, cfg.resolved_lr_min(),
                         tokens * static_cast<std::uint64_t>(cfg.epochs)};
  SigmoidTable table_storage;
  const SigmoidTable* table = cfg.sigmoid_table ? &table_storage : nullptr;

  std::atomic<std::uint64_t> position{0};
  const int n_workers = std::min<int>(workers, static_cast<int>(sentences.size()));
  std::vector<Rng> rngs;
  rngs.reserve(static_cast<std::size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w)
    rngs.emplace_back(mix_seed(cfg.seed, static_cast<std::uint64_t>(w)));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<WorkerResult> results(static_cast<std::size_t>(n_workers));
    if (n_workers == 1) {
      run_epoch_shard(sentences, source, cfg, sched, context.w, target.w, table, rngs[0], position,
                      /*batched_lr=*/false, results[0]);
    } else {
      std::vector<std::thread> threads;
      const std::size_t per = (sentences.size() + static_cast<std::size_t>(n_workers) - 1) /
                              static_cast<std::size_t>(n_workers);
      for (int w = 0; w < n_workers; ++w) {
        const std::size_t lo = static_cast<std::size_t>(w) * per;
        const std::size_t hi = std::min(sentences.size(), lo + per);
        threads.emplace_back([&, w, lo, hi] {
          run_epoch_shard(std::span(sentences).subspan(lo, hi - lo), source, cfg, sched, context.w,
                          target.w, table, rngs[static_cast<std::size_t>(w)], position,
                          /*batched_lr=*/true, results[static_cast<std::size_t>(w)]);
        });
      }
      for (auto& t : threads) t.join();
    }
    std::uint64_t epoch_samples = 0;
    double epoch_loss = 0.0;
    for (const auto& r : results) {
      epoch_samples += r.samples;
      epoch_loss += r.loss;
    }
    summary.samples += epoch_samples;
    summary.epoch_samples.push_back(epoch_samples);
    summary.epoch_mean_loss.push_back(epoch_samples == 0 ? 0.0
                                                         : epoch_loss / static_cast<double>(epoch_samples));
  }
  return summary;
}

}  // namespace tempovec
