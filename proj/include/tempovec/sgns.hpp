#pragma once

#include "tempovec/corpus.hpp"
#include "tempovec/random.hpp"
#include "tempovec/types.hpp"
#include "tempovec/vocabulary.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tempovec {

/// |V| x d table of word vectors playing one role. Parameters are
/// 32-bit; training math runs in 64-bit and quantizes on store.
struct EmbeddingMatrix {
  MatrixRM w;
  Role role = Role::context;

  std::int32_t rows() const { return static_cast<std::int32_t>(w.rows()); }
  int dim() const { return static_cast<int>(w.cols()); }
};

enum class Arch { cbow, skipgram };

const char* arch_name(Arch a);                 // "cbow" / "sg"
Arch arch_from_name(std::string_view name);

struct TrainConfig {
  int dim = 50;
  int window = 5;
  int negatives = 5;
  double lr_initial = 0.025;
  double lr_min = -1.0;  // < 0 resolves to lr_initial * 1e-4
  int epochs = 5;
  Arch arch = Arch::cbow;
  bool freeze_target = false;
  bool freeze_context = false;
  std::uint64_t seed = 1;
  double subsample_threshold = 1e-3;
  bool dynamic_window = true;
  /// Scale the context-side gradient by 1/M, the true gradient of the
  /// mean. Off reproduces word2vec's unscaled distribution.
  bool mean_gradient = true;
  /// Approximate sigmoid by the classic 1000-bin table over [-6, 6]
  /// instead of direct evaluation (speed-parity mode).
  bool sigmoid_table = false;
  double negative_exponent = 0.75;

  double resolved_lr_min() const { return lr_min < 0.0 ? lr_initial * 1e-4 : lr_min; }
  /// Throws std::invalid_argument on any violated bound.
  void validate() const;
};

/// 1/(1+exp(-x)) with the input clamped to [-30, 30] so the result is
/// never exactly 0 or 1 and its log stays finite.
double sigmoid(double x);
/// log(sigmoid(x)) under the same clamp.
double log_sigmoid(double x);

/// Nearest-bin sigmoid lookup over [-6, 6], word2vec's training-time
/// approximation. Out-of-range inputs saturate at the table ends.
class SigmoidTable {
 public:
  SigmoidTable();
  double value(double x) const;

 private:
  static constexpr int kBins = 1000;
  static constexpr double kMaxExp = 6.0;
  std::vector<double> table_;
};

/// Component-wise mean of the selected rows, accumulated in 64-bit.
/// Throws on an empty id list.
RowVecD context_mean(const MatrixRM& m, std::span<const TokenId> ids);

/// Fresh parameter pair: context rows uniform in [-0.5/d, +0.5/d] from
/// the seed (row-major fill order), target rows all zero.
std::pair<EmbeddingMatrix, EmbeddingMatrix> init_matrices(std::int32_t vocab_size, int dim,
                                                          std::uint64_t seed);

/// Analytic gradients of one sample's loss, taken at the current
/// parameters before any update. Duplicate output rows (a negative id
/// drawn twice) are merged. Everything is 64-bit; this is the object
/// the finite-difference oracle checks.
struct StepGradients {
  double loss = 0.0;
  RowVecD mean_grad;  // dL/d(cbar)
  std::vector<std::pair<TokenId, RowVecD>> target_grads;
};

StepGradients cbow_gradients(std::span<const TokenId> context_ids, TokenId target,
                             std::span<const TokenId> negatives, const EmbeddingMatrix& context,
                             const EmbeddingMatrix& target_matrix,
                             const SigmoidTable* table = nullptr);

/// One SGD step on a CBOW sample: loss = -log s(u_k . cbar) -
/// sum_n log s(-u_n . cbar). Rows of a frozen matrix are bit-identical
/// after the call. Returns the pre-update loss.
double step_cbow(std::span<const TokenId> context_ids, TokenId target,
                 std::span<const TokenId> negatives, EmbeddingMatrix& context,
                 EmbeddingMatrix& target_matrix, double lr, bool freeze_target,
                 bool freeze_context, bool mean_gradient = true,
                 const SigmoidTable* table = nullptr);

/// Skip-gram step: one (target, single context word) pair, otherwise
/// identical to step_cbow.
double step_skipgram(TokenId context_word, TokenId target, std::span<const TokenId> negatives,
                     EmbeddingMatrix& context, EmbeddingMatrix& target_matrix, double lr,
                     bool freeze_target, bool freeze_context,
                     const SigmoidTable* table = nullptr);

/// Linear decay from `initial` to `floor` across `total` scheduled
/// positions. Positions count raw corpus tokens (pre-subsampling), so
/// the denominator is known before training starts.
struct LrSchedule {
  double initial = 0.025;
  double floor = 0.025e-4;
  std::uint64_t total = 0;

  double at(std::uint64_t s) const {
    if (total == 0) return initial;
    double lr = initial + (floor - initial) * (static_cast<double>(s) / static_cast<double>(total));
    return lr > floor ? lr : floor;
  }
};

struct TrainSummary {
  std::uint64_t samples = 0;  // emitted (target, context) updates
  std::vector<std::uint64_t> epoch_samples;
  std::vector<double> epoch_mean_loss;
};

/// What a training run reads: the corpus (one slice or all), the shared
/// vocabulary and the shared negative-sampling table.
struct SampleSource {
  const DiachronicCorpus* corpus = nullptr;
  std::string slice;  // empty = concatenation of all slices
  const Vocabulary* vocab = nullptr;
  const NegativeTable* negatives = nullptr;
};

/// Runs `cfg.epochs` passes of CBOW or Skip-gram with negative
/// sampling. workers == 1 is fully deterministic under a fixed seed;
/// workers > 1 shards sentences across lock-free threads that share
/// the matrices (word2vec convention, benign lost updates). An empty
/// selection trains nothing and returns a zero-sample summary.
TrainSummary train(const SampleSource& source, const TrainConfig& cfg, EmbeddingMatrix& context,
                   EmbeddingMatrix& target, int workers = 1);

}  // namespace tempovec
