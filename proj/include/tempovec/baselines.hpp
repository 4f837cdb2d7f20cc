#pragma once

#include "tempovec/corpus.hpp"
#include "tempovec/sgns.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tempovec {

/// Plain word2vec over the pooled corpus, time ignored. The context
/// matrix is the word representation, consistent with the compass
/// outputs; the target matrix is kept for held-out scoring.
struct StaticModel {
  Vocabulary vocab;
  EmbeddingMatrix context;
  EmbeddingMatrix target;
  TrainConfig config;
  TrainSummary summary;
};

StaticModel train_static(const DiachronicCorpus& corpus, const Vocabulary& vocab,
                         const TrainConfig& config, int workers = 1);

/// Independently trained word2vec per slice: shared vocabulary, one
/// (context, target) pair per slice, each slice drawing from its own
/// seed. Coordinates of different slices are mutually incomparable
/// until aligned.
struct PerSliceModels {
  Vocabulary vocab;
  std::vector<std::string> labels;
  std::vector<MatrixRM> contexts;
  std::vector<MatrixRM> targets;
  std::vector<std::vector<TokenId>> untrained;  // per slice: ids it never contains
  std::vector<std::uint64_t> seeds;
  TrainConfig config;
  std::vector<TrainSummary> summaries;
};

/// Trains every slice independently. Throws if any slice has no
/// sentences: an empty slice cannot produce a usable space.
PerSliceModels train_per_slice(const DiachronicCorpus& corpus, const Vocabulary& vocab,
                               const TrainConfig& config, int workers = 1);

/// Orthogonal Procrustes: the d×d map W with WᵀW = I minimizing
/// ‖source[anchors]·W − reference[anchors]‖_F, from the singular value
/// decomposition of source[anchors]ᵀ·reference[anchors]. Throws when
/// that product is rank-deficient (the minimizer is not unique).
Eigen::MatrixXd fit_orthogonal(const MatrixRM& source, const MatrixRM& reference,
                               const std::vector<TokenId>& anchor_ids);

/// Unconstrained least squares for the same problem, solved by a
/// column-pivoting QR factorization. Throws on a singular system.
Eigen::MatrixXd fit_linear(const MatrixRM& source, const MatrixRM& reference,
                           const std::vector<TokenId>& anchor_ids);

enum class AlignKind { none, linear, orthogonal };
enum class AlignPolicy { to_reference, consecutive };

const char* align_kind_name(AlignKind k);
AlignKind align_kind_from_name(std::string_view name);
const char* align_policy_name(AlignPolicy p);
AlignPolicy align_policy_from_name(std::string_view name);

struct AlignOptions {
  AlignKind kind = AlignKind::orthogonal;
  /// to_reference fits every slice directly against the reference;
  /// consecutive fits each pair of neighboring slices and composes the
  /// maps onto the reference.
  AlignPolicy policy = AlignPolicy::to_reference;
  /// Label of the slice left untouched; empty selects the last
  /// (most recent) slice.
  std::string reference_label;
  /// Anchors are the words trained in both slices of a fit; this
  /// additionally requires a corpus-wide count of at least the given
  /// value.
  std::int64_t anchor_min_count = 0;
};

/// Per-slice spaces mapped into the reference slice's coordinates.
/// `contexts` hold the aligned word representations used for
/// cross-slice comparison; `raw_contexts`/`targets` keep the original
/// per-slice pairs, whose inner products the alignment must not touch.
struct AlignedTemporalModel {
  Vocabulary vocab;
  std::vector<std::string> labels;
  std::vector<MatrixRM> contexts;
  std::vector<MatrixRM> raw_contexts;
  std::vector<MatrixRM> targets;
  std::vector<std::vector<TokenId>> untrained;
  std::vector<std::uint64_t> seeds;
  AlignKind kind = AlignKind::none;
  AlignPolicy policy = AlignPolicy::to_reference;
  std::string reference_label;
  TrainConfig config;

  int slice_index(std::string_view label) const;  // -1 when absent
};

/// Aligns the per-slice spaces. kind = none passes the input through
/// unchanged (any slice count); the other kinds need at least two
/// slices and at least d anchors per fit.
AlignedTemporalModel align_chain(const PerSliceModels& models, const AlignOptions& opts);

/// The anchor set of one fit: ids trained in both slices, with
/// corpus-wide count ≥ min_count.
std::vector<TokenId> anchor_ids(const Vocabulary& vocab, const std::vector<TokenId>& untrained_a,
                                const std::vector<TokenId>& untrained_b,
                                std::int64_t min_count);

}  // namespace tempovec
