#pragma once

#include "tempovec/model_io.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tempovec {

struct HeldoutOptions {
  /// Negative draws per scored position. Drawn once per evaluation run
  /// from `seed` mixed with the slice label, then reused for every
  /// scoring slice and every model under comparison.
  int negatives = 5;
  std::uint64_t seed = 1;
  /// Average the negative half over its draws (default) or sum it.
  bool average_negatives = true;
  /// Context window; 0 uses the model's training window. Evaluation
  /// windows are fixed, never dynamically shrunk.
  int window = 0;
  double negative_exponent = 0.75;
  /// Split boundary-free lines into chunks of this many words (0 off).
  int chunk_words = 0;
};

/// Log probability of one position: half the positive term plus half
/// the negative term, log s(u_k . cbar)/2 + (1/2)(1/k) sum_n
/// log s(-u_n . cbar), with cbar the context mean over rows of
/// `context`. `average` off sums the negatives instead of averaging.
double position_log_prob(const MatrixRM& context, const MatrixRM& target, TokenId target_id,
                         std::span<const TokenId> context_ids, std::span<const TokenId> negatives,
                         bool average = true);

/// Max-shifted softmax over per-class log-likelihoods: the posterior
/// over classes under a uniform prior. Sums to 1 by construction.
std::vector<double> posterior_from_loglik(std::span<const double> loglik);

/// Total and per-position log-likelihood of one held-out slice scored
/// with the vectors of `scoring_label`. Throws when the slice has no
/// scorable positions or the label is unknown.
std::pair<double, double> slice_log_likelihood(const TemporalModel& model, const Slice& slice,
                                               std::string_view scoring_label,
                                               const HeldoutOptions& opts);

struct PosteriorResult {
  std::vector<std::string> classes;
  /// Mean per-sentence posterior mass per class; sums to 1.
  std::vector<double> mean_posterior;
  /// Mass on the class matching the slice's own label (P^t).
  double true_mass = 0.0;
  std::int64_t sentences = 0;
};

/// Per-sentence Bayes classification of a held-out slice over all
/// scoring classes, uniform prior. Throws when no sentence has a
/// scorable position.
PosteriorResult posterior(const TemporalModel& model, const Slice& slice,
                          const HeldoutOptions& opts);

struct HeldoutSliceReport {
  std::string label;
  std::int64_t positions = 0;  // scored positions N
  std::int64_t sentences = 0;  // sentences with at least one position
  double total_ll = 0.0;       // matched-class total log-likelihood
  double normalized_ll = 0.0;  // total / N
  double posterior_true = 0.0;       // mean sentence mass on the true label
  double log_posterior_true = 0.0;   // natural log of the above
  std::vector<double> ll_by_class;   // normalized log-likelihood under every class
};

struct HeldoutReport {
  /// Scoring classes: the model's slice labels, or the held-out corpus
  /// labels for a pooled static model (every class then shares the
  /// same vectors).
  std::vector<std::string> classes;
  std::vector<HeldoutSliceReport> slices;
  double mean_normalized_ll = 0.0;
  double mean_posterior_true = 0.0;
  double mean_log_posterior_true = 0.0;
  /// A single class makes posterior classification trivially 1.
  bool degenerate = false;
  std::vector<std::string> skipped_labels;  // held-out slices absent from the model
  HeldoutOptions options;
  nlohmann::json manifest;
};

/// Scores every held-out slice whose label the model knows: normalized
/// log-likelihood under the matched class, the full by-class matrix,
/// and the posterior of the true label. Throws when no label overlaps.
HeldoutReport evaluate_heldout(const TemporalModel& model, const DiachronicCorpus& heldout,
                               const HeldoutOptions& opts);

void write_heldout_json(const HeldoutReport& report, const std::filesystem::path& file);
/// Per-slice rows: label, positions, sentences, ll, posterior columns.
void write_heldout_csv(const HeldoutReport& report, const std::filesystem::path& file);

}  // namespace tempovec
