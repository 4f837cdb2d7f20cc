#include "tempovec/baselines.hpp"

#include <Eigen/SVD>

#include <limits>
#include <stdexcept>
#include <utility>

namespace tempovec {

StaticModel train_static(const DiachronicCorpus& corpus, const Vocabulary& vocab,
                         const TrainConfig& config, int workers) {
  if (corpus.n() == 0) throw std::invalid_argument("train_static: corpus has no slices");
  TrainConfig cfg = config;
  cfg.freeze_target = false;
  cfg.freeze_context = false;
  cfg.validate();

  NegativeTable negatives(vocab, cfg.negative_exponent);
  auto [context, target] = init_matrices(vocab.size(), cfg.dim, cfg.seed);
  SampleSource source{&corpus, std::string(), &vocab, &negatives};

  StaticModel model;
  model.vocab = vocab;
  model.config = cfg;
  model.summary = train(source, cfg, context, target, workers);
  model.context = std::move(context);
  model.target = std::move(target);
  return model;
}

PerSliceModels train_per_slice(const DiachronicCorpus& corpus, const Vocabulary& vocab,
                               const TrainConfig& config, int workers) {
  if (corpus.n() == 0) throw std::invalid_argument("train_per_slice: corpus has no slices");
  TrainConfig base = config;
  base.freeze_target = false;
  base.freeze_context = false;
  base.validate();

  NegativeTable negatives(vocab, base.negative_exponent);
  PerSliceModels out;
  out.vocab = vocab;
  out.labels = corpus.labels();
  out.config = base;

  for (std::size_t i = 0; i < corpus.slices.size(); ++i) {
    const Slice& slice = corpus.slices[i];
    if (slice.sentences.empty())
      throw std::runtime_error("cannot train a per-slice model on empty slice '" + slice.label +
                               "'");
    TrainConfig cfg = base;
    cfg.seed = mix_seed(base.seed, static_cast<std::uint64_t>(i));
    auto [context, target] = init_matrices(vocab.size(), cfg.dim, cfg.seed);
    SampleSource source{&corpus, slice.label, &vocab, &negatives};
    out.summaries.push_back(train(source, cfg, context, target, workers));
    out.contexts.push_back(std::move(context.w));
    out.targets.push_back(std::move(target.w));
    out.untrained.push_back(untrained_ids(slice, vocab.size()));
    out.seeds.push_back(cfg.seed);
  }
  return out;
}

namespace {

Eigen::MatrixXd gather_rows(const MatrixRM& m, const std::vector<TokenId>& ids) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), m.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const TokenId id = ids[i];
    if (id < 0 || id >= m.rows()) throw std::out_of_range("anchor id out of range");
    out.row(static_cast<Eigen::Index>(i)) = m.row(id).cast<double>();
  }
  return out;
}

void check_fit_inputs(const MatrixRM& source, const MatrixRM& reference,
                      const std::vector<TokenId>& anchors) {
  if (source.cols() != reference.cols())
    throw std::invalid_argument("source/reference dimension mismatch");
  if (static_cast<Eigen::Index>(anchors.size()) < source.cols())
    throw std::invalid_argument("need at least d anchors, got " +
                                std::to_string(anchors.size()));
}

}  // namespace

Eigen::MatrixXd fit_orthogonal(const MatrixRM& source, const MatrixRM& reference,
                               const std::vector<TokenId>& anchor_ids) {
  check_fit_inputs(source, reference, anchor_ids);
  const Eigen::MatrixXd a = gather_rows(source, anchor_ids);
  const Eigen::MatrixXd b = gather_rows(reference, anchor_ids);
  const Eigen::MatrixXd m = a.transpose() * b;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol =
      sv(0) * static_cast<double>(m.rows()) * std::numeric_limits<double>::epsilon();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  if (rank < m.rows())
    throw std::runtime_error("anchor cross-covariance is rank-deficient (rank " +
                             std::to_string(rank) + " of " + std::to_string(m.rows()) +
                             "); the orthogonal map is not unique");
  return svd.matrixU() * svd.matrixV().transpose();
}

Eigen::MatrixXd fit_linear(const MatrixRM& source, const MatrixRM& reference,
                           const std::vector<TokenId>& anchor_ids) {
  check_fit_inputs(source, reference, anchor_ids);
  const Eigen::MatrixXd a = gather_rows(source, anchor_ids);
  const Eigen::MatrixXd b = gather_rows(reference, anchor_ids);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < a.cols())
    throw std::runtime_error("anchor matrix is singular (rank " + std::to_string(qr.rank()) +
                             " of " + std::to_string(a.cols()) + ")");
  return qr.solve(b);
}

const char* align_kind_name(AlignKind k) {
  switch (k) {
    case AlignKind::none: return "none";
    case AlignKind::linear: return "linear";
    case AlignKind::orthogonal: return "orthogonal";
  }
  return "none";
}

AlignKind align_kind_from_name(std::string_view name) {
  if (name == "none") return AlignKind::none;
  if (name == "linear") return AlignKind::linear;
  if (name == "orthogonal" || name == "ortho") return AlignKind::orthogonal;
  throw std::invalid_argument("unknown alignment kind: " + std::string(name));
}

const char* align_policy_name(AlignPolicy p) {
  return p == AlignPolicy::to_reference ? "to_reference" : "consecutive";
}

AlignPolicy align_policy_from_name(std::string_view name) {
  if (name == "to_reference") return AlignPolicy::to_reference;
  if (name == "consecutive") return AlignPolicy::consecutive;
  throw std::invalid_argument("unknown alignment policy: " + std::string(name));
}

int AlignedTemporalModel::slice_index(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<int>(i);
  return -1;
}

std::vector<TokenId> anchor_ids(const Vocabulary& vocab, const std::vector<TokenId>& untrained_a,
                                const std::vector<TokenId>& untrained_b, std::int64_t min_count) {
  std::vector<char> excluded(static_cast<std::size_t>(vocab.size()), 0);
  for (TokenId id : untrained_a) excluded[static_cast<std::size_t>(id)] = 1;
  for (TokenId id : untrained_b) excluded[static_cast<std::size_t>(id)] = 1;
  std::vector<TokenId> out;
  for (TokenId id = 0; id < vocab.size(); ++id)
    if (!excluded[static_cast<std::size_t>(id)] && vocab.count(id) >= min_count) out.push_back(id);
  return out;
}

AlignedTemporalModel align_chain(const PerSliceModels& models, const AlignOptions& opts) {
  const int n = static_cast<int>(models.labels.size());
  if (n == 0) throw std::invalid_argument("align_chain: no slices");

  AlignedTemporalModel out;
  out.vocab = models.vocab;
  out.labels = models.labels;
  out.raw_contexts = models.contexts;
  out.targets = models.targets;
  out.untrained = models.untrained;
  out.seeds = models.seeds;
  out.kind = opts.kind;
  out.policy = opts.policy;
  out.config = models.config;

  int ref = n - 1;
  if (!opts.reference_label.empty()) {
    ref = -1;
    for (int i = 0; i < n; ++i)
      if (models.labels[static_cast<std::size_t>(i)] == opts.reference_label) ref = i;
    if (ref < 0)
      throw std::runtime_error("unknown reference slice label: " + opts.reference_label);
  }
  out.reference_label = models.labels[static_cast<std::size_t>(ref)];

  if (opts.kind == AlignKind::none) {
    out.contexts = models.contexts;
    return out;
  }
  if (n < 2) throw std::invalid_argument("alignment needs at least two slices");

  auto fit = opts.kind == AlignKind::linear ? fit_linear : fit_orthogonal;
  auto anchors_for = [&](int a, int b) {
    return anchor_ids(models.vocab, models.untrained[static_cast<std::size_t>(a)],
                      models.untrained[static_cast<std::size_t>(b)], opts.anchor_min_count);
  };
  auto apply = [](const MatrixRM& m, const Eigen::MatrixXd& w) -> MatrixRM {
    return (m.cast<double>() * w).cast<float>();
  };

  out.contexts.resize(static_cast<std::size_t>(n));
  if (opts.policy == AlignPolicy::to_reference) {
    for (int i = 0; i < n; ++i) {
      const auto& c = models.contexts[static_cast<std::size_t>(i)];
      if (i == ref) {
        out.contexts[static_cast<std::size_t>(i)] = c;
        continue;
      }
      const Eigen::MatrixXd w = fit(c, models.contexts[static_cast<std::size_t>(ref)],
                                    anchors_for(i, ref));
      out.contexts[static_cast<std::size_t>(i)] = apply(c, w);
    }
  } else {
    // Fit neighbors only, then compose the chain onto the reference.
    // Row convention: x aligned = x * W(i,i+1) * ... * W(ref-1,ref).
    std::vector<Eigen::MatrixXd> maps(static_cast<std::size_t>(n));
    const int d = static_cast<int>(models.contexts[0].cols());
    maps[static_cast<std::size_t>(ref)] = Eigen::MatrixXd::Identity(d, d);
    for (int i = ref - 1; i >= 0; --i) {
      const Eigen::MatrixXd step = fit(models.contexts[static_cast<std::size_t>(i)],
                                       models.contexts[static_cast<std::size_t>(i + 1)],
                                       anchors_for(i, i + 1));
      maps[static_cast<std::size_t>(i)] = step * maps[static_cast<std::size_t>(i + 1)];
    }
    for (int i = ref + 1; i < n; ++i) {
      const Eigen::MatrixXd step = fit(models.contexts[static_cast<std::size_t>(i)],
                                       models.contexts[static_cast<std::size_t>(i - 1)],
                                       anchors_for(i, i - 1));
      maps[static_cast<std::size_t>(i)] = step * maps[static_cast<std::size_t>(i - 1)];
    }
    for (int i = 0; i < n; ++i)
      out.contexts[static_cast<std::size_t>(i)] =
          apply(models.contexts[static_cast<std::size_t>(i)], maps[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace tempovec
