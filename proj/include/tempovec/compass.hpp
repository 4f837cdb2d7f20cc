#pragma once

#include "tempovec/corpus.hpp"
#include "tempovec/sgns.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tempovec {

/// How the trainable matrix of a slice run starts out: a fresh seeded
/// draw, or a copy of the pooled context matrix. Starting from the
/// pooled matrix helps held-out likelihood but hurts analogies, so the
/// choice stays explicit.
enum class SliceInit { random, from_compass_context };

const char* slice_init_name(SliceInit m);
SliceInit slice_init_from_name(std::string_view name);

struct CompassProvenance {
  int static_epochs = 0;
  int dynamic_epochs = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> slice_seeds;        // phase-2 seed per slice
  std::vector<std::vector<TokenId>> untrained;   // per slice: ids it never contains
  TrainSummary static_summary;
  std::vector<TrainSummary> slice_summaries;
};

/// Two-phase model: a pooled pass trains the atemporal pair (U, C);
/// each slice then retrains its own copy of the non-frozen matrix
/// against the shared frozen one, which places every slice in a common
/// coordinate system without any explicit alignment step.
struct CompassModel {
  Vocabulary vocab;
  std::vector<std::string> labels;
  EmbeddingMatrix atemporal_target;   // U, the frozen compass
  EmbeddingMatrix atemporal_context;  // C from the pooled pass
  /// Per-slice trained matrices, one per label. In the default mode
  /// these are the temporal context matrices C^t (the temporal word
  /// embeddings); in specular mode they are per-slice target matrices
  /// trained against a frozen C.
  std::vector<MatrixRM> slice_contexts;
  TrainConfig config;
  SliceInit init_mode = SliceInit::random;
  bool specular = false;
  CompassProvenance provenance;

  int slice_index(std::string_view label) const;  // -1 when absent
  const MatrixRM& slice_context(std::string_view label) const;
};

/// Phase 1: ordinary training over the concatenation of all slices,
/// both matrices trainable regardless of the freeze flags passed in.
/// config.epochs is the static epoch count. Returns (context, target).
std::pair<EmbeddingMatrix, EmbeddingMatrix> train_compass(const DiachronicCorpus& corpus,
                                                          const Vocabulary& vocab,
                                                          const NegativeTable& negatives,
                                                          const TrainConfig& config,
                                                          int workers = 1,
                                                          TrainSummary* summary = nullptr);

/// Phase 2 for one slice: the target matrix starts as a copy of
/// `atemporal_target` and stays frozen (verified by hash); the context
/// matrix starts per `init_mode` and is trained on the slice alone for
/// config.epochs epochs. `atemporal_context` is required only for
/// SliceInit::from_compass_context. All slices are trained with the
/// same seed unless `seed_override` is given, so slices with identical
/// text produce identical matrices.
MatrixRM train_slice(const EmbeddingMatrix& atemporal_target, std::string_view slice_label,
                     const DiachronicCorpus& corpus, const Vocabulary& vocab,
                     const NegativeTable& negatives, const TrainConfig& config,
                     SliceInit init_mode = SliceInit::random,
                     const EmbeddingMatrix* atemporal_context = nullptr,
                     std::optional<std::uint64_t> seed_override = std::nullopt, int workers = 1,
                     TrainSummary* summary = nullptr);

struct CompassOptions {
  TrainConfig base;       // epochs field is ignored; the counts below apply
  int static_epochs = 5;
  int dynamic_epochs = 5;
  SliceInit init_mode = SliceInit::random;
  /// Freeze the pooled context matrix instead and train per-slice
  /// target matrices. Exposed for experimentation, not tuned.
  bool specular = false;
  int workers = 1;
};

/// Runs both phases over every slice. Slice trainings are independent:
/// retraining one slice can never change another slice's matrix.
CompassModel train_all(const DiachronicCorpus& corpus, const Vocabulary& vocab,
                       const CompassOptions& opts);

}  // namespace tempovec
