#include "tempovec/compass.hpp"

#include <stdexcept>

namespace tempovec {

const char* slice_init_name(SliceInit m) {
  return m == SliceInit::random ? "random" : "from_compass_context";
}

SliceInit slice_init_from_name(std::string_view name) {
  if (name == "random") return SliceInit::random;
  if (name == "from_compass_context") return SliceInit::from_compass_context;
  throw std::invalid_argument("unknown slice init mode: " + std::string(name));
}

int CompassModel::slice_index(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<int>(i);
  return -1;
}

const MatrixRM& CompassModel::slice_context(std::string_view label) const {
  const int i = slice_index(label);
  if (i < 0) throw std::out_of_range("no slice with label: " + std::string(label));
  return slice_contexts[static_cast<std::size_t>(i)];
}

std::pair<EmbeddingMatrix, EmbeddingMatrix> train_compass(const DiachronicCorpus& corpus,
                                                          const Vocabulary& vocab,
                                                          const NegativeTable& negatives,
                                                          const TrainConfig& config, int workers,
                                                          TrainSummary* summary) {
  if (corpus.n() == 0) throw std::invalid_argument("train_compass: corpus has no slices");
  TrainConfig cfg = config;
  cfg.freeze_target = false;
  cfg.freeze_context = false;
  cfg.validate();

  auto [context, target] = init_matrices(vocab.size(), cfg.dim, cfg.seed);
  SampleSource source{&corpus, std::string(), &vocab, &negatives};
  TrainSummary s = train(source, cfg, context, target, workers);
  if (summary) *summary = std::move(s);
  return {std::move(context), std::move(target)};
}

namespace {

/// Shared body of the default and specular slice runs: one matrix is a
/// frozen copy, the other starts per init_mode and is trained on the
/// slice. Returns the trained matrix.
MatrixRM run_slice(const EmbeddingMatrix& frozen_source, bool frozen_is_target,
                   std::string_view slice_label, const DiachronicCorpus& corpus,
                   const Vocabulary& vocab, const NegativeTable& negatives,
                   const TrainConfig& config, SliceInit init_mode,
                   const EmbeddingMatrix* pooled_init, std::optional<std::uint64_t> seed_override,
                   int workers, TrainSummary* summary) {
  if (corpus.index_of(slice_label) < 0)
    throw std::runtime_error("unknown slice label: " + std::string(slice_label));
  if (frozen_source.rows() != vocab.size())
    throw std::invalid_argument("frozen matrix rows do not match vocabulary size");

  TrainConfig cfg = config;
  cfg.seed = seed_override.value_or(config.seed);
  cfg.freeze_target = frozen_is_target;
  cfg.freeze_context = !frozen_is_target;
  cfg.validate();
  if (frozen_source.dim() != cfg.dim)
    throw std::invalid_argument("frozen matrix dimension does not match config");

  auto [init_context, init_target] = init_matrices(vocab.size(), cfg.dim, cfg.seed);
  EmbeddingMatrix trained = frozen_is_target ? std::move(init_context) : std::move(init_target);
  if (init_mode == SliceInit::from_compass_context) {
    if (pooled_init == nullptr)
      throw std::invalid_argument("from_compass_context needs the pooled matrix");
    if (pooled_init->rows() != vocab.size() || pooled_init->dim() != cfg.dim)
      throw std::invalid_argument("pooled init matrix shape mismatch");
    trained.w = pooled_init->w;
  }

  EmbeddingMatrix frozen{frozen_source.w, frozen_source.role};
  const std::uint64_t frozen_hash = matrix_hash(frozen.w);

  EmbeddingMatrix& context = frozen_is_target ? trained : frozen;
  EmbeddingMatrix& target = frozen_is_target ? frozen : trained;
  SampleSource source{&corpus, std::string(slice_label), &vocab, &negatives};
  TrainSummary s = train(source, cfg, context, target, workers);
  if (summary) *summary = std::move(s);

  if (matrix_hash(frozen.w) != frozen_hash)
    throw std::logic_error("frozen matrix changed during slice training");
  return std::move(trained.w);
}

}  // namespace

MatrixRM train_slice(const EmbeddingMatrix& atemporal_target, std::string_view slice_label,
                     const DiachronicCorpus& corpus, const Vocabulary& vocab,
                     const NegativeTable& negatives, const TrainConfig& config,
                     SliceInit init_mode, const EmbeddingMatrix* atemporal_context,
                     std::optional<std::uint64_t> seed_override, int workers,
                     TrainSummary* summary) {
  return run_slice(atemporal_target, /*frozen_is_target=*/true, slice_label, corpus, vocab,
                   negatives, config, init_mode, atemporal_context, seed_override, workers,
                   summary);
}

CompassModel train_all(const DiachronicCorpus& corpus, const Vocabulary& vocab,
                       const CompassOptions& opts) {
  if (corpus.n() == 0) throw std::invalid_argument("train_all: corpus has no slices");
  if (opts.static_epochs < 1 || opts.dynamic_epochs < 1)
    throw std::invalid_argument("epoch counts must be >= 1");

  NegativeTable negatives(vocab, opts.base.negative_exponent);

  CompassModel model;
  model.vocab = vocab;
  model.labels = corpus.labels();
  model.config = opts.base;
  model.init_mode = opts.init_mode;
  model.specular = opts.specular;
  model.provenance.static_epochs = opts.static_epochs;
  model.provenance.dynamic_epochs = opts.dynamic_epochs;
  model.provenance.seed = opts.base.seed;

  TrainConfig phase1 = opts.base;
  phase1.epochs = opts.static_epochs;
  auto [context, target] = train_compass(corpus, vocab, negatives, phase1, opts.workers,
                                         &model.provenance.static_summary);
  model.atemporal_context = std::move(context);
  model.atemporal_target = std::move(target);

  TrainConfig phase2 = opts.base;
  phase2.epochs = opts.dynamic_epochs;
  const EmbeddingMatrix& frozen = opts.specular ? model.atemporal_context : model.atemporal_target;
  const EmbeddingMatrix& pooled_init = opts.specular ? model.atemporal_target : model.atemporal_context;

  for (std::size_t i = 0; i < model.labels.size(); ++i) {
    TrainSummary summary;
    model.slice_contexts.push_back(run_slice(frozen, /*frozen_is_target=*/!opts.specular,
                                             model.labels[i], corpus, vocab, negatives, phase2,
                                             opts.init_mode, &pooled_init, std::nullopt,
                                             opts.workers, &summary));
    model.provenance.slice_seeds.push_back(phase2.seed);
    model.provenance.slice_summaries.push_back(std::move(summary));
    model.provenance.untrained.push_back(untrained_ids(corpus.slices[i], vocab.size()));
  }
  return model;
}

}  // namespace tempovec
