#include "tempovec/heldout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace tempovec {

namespace fs = std::filesystem;
using nlohmann::json;

double position_log_prob(const MatrixRM& context, const MatrixRM& target, TokenId target_id,
                         std::span<const TokenId> context_ids, std::span<const TokenId> negatives,
                         bool average) {
  if (context.cols() != target.cols())
    throw std::invalid_argument("context/target dimension mismatch");
  const RowVecD cbar = context_mean(context, context_ids);
  const double positive = log_sigmoid(target.row(target_id).cast<double>().dot(cbar));

  std::vector<double> neg_terms;
  neg_terms.reserve(negatives.size());
  for (TokenId n : negatives)
    neg_terms.push_back(log_sigmoid(-target.row(n).cast<double>().dot(cbar)));
  double negative = pairwise_sum(neg_terms);
  if (average && !neg_terms.empty()) negative /= static_cast<double>(neg_terms.size());
  return 0.5 * positive + 0.5 * negative;
}

std::vector<double> posterior_from_loglik(std::span<const double> loglik) {
  if (loglik.empty()) throw std::invalid_argument("empty log-likelihood vector");
  const double shift = *std::max_element(loglik.begin(), loglik.end());
  std::vector<double> out(loglik.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < loglik.size(); ++i) {
    out[i] = std::exp(loglik[i] - shift);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

namespace {

struct Position {
  TokenId target;
  std::vector<TokenId> context;
  std::vector<TokenId> negatives;
};

struct SentenceInstances {
  std::vector<Position> positions;
};

/// The deterministic scoring instances of one slice: fixed window, no
/// subsampling, negatives drawn once in reading order from the seed
/// mixed with the slice label.
std::vector<SentenceInstances> build_instances(const Slice& slice, const NegativeTable& table,
                                               int window, int negatives, std::uint64_t seed) {
  Rng rng(mix_seed(seed, fnv1a(slice.label.data(), slice.label.size())));
  std::vector<SentenceInstances> out;
  for (const auto& sentence : slice.sentences) {
    SentenceInstances si;
    const int len = static_cast<int>(sentence.size());
    for (int pos = 0; pos < len; ++pos) {
      Position p;
      p.target = sentence[static_cast<std::size_t>(pos)];
      for (int j = std::max(0, pos - window); j < std::min(len, pos + window + 1); ++j)
        if (j != pos) p.context.push_back(sentence[static_cast<std::size_t>(j)]);
      if (p.context.empty()) continue;
      if (negatives > 0) table.sample_excluding(negatives, p.target, rng, p.negatives);
      si.positions.push_back(std::move(p));
    }
    if (!si.positions.empty()) out.push_back(std::move(si));
  }
  return out;
}

/// Scoring classes: label plus (context, target) pair per class.
struct ClassSet {
  std::vector<std::string> labels;
  std::vector<const MatrixRM*> contexts;
  std::vector<const MatrixRM*> targets;

  int index_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return static_cast<int>(i);
    return -1;
  }
};

ClassSet make_classes(const TemporalModel& model, const std::vector<std::string>& fallback) {
  ClassSet cs;
  if (model.time_independent()) {
    cs.labels = fallback;
    for (std::size_t i = 0; i < cs.labels.size(); ++i) {
      cs.contexts.push_back(&model.heldout_context(0));
      cs.targets.push_back(&model.heldout_target(0));
    }
    return cs;
  }
  cs.labels = model.labels;
  for (int i = 0; i < static_cast<int>(model.labels.size()); ++i) {
    cs.contexts.push_back(&model.heldout_context(i));
    cs.targets.push_back(&model.heldout_target(i));
  }
  return cs;
}

int resolve_window(const TemporalModel& model, const HeldoutOptions& opts) {
  const int w = opts.window > 0 ? opts.window : model.config.window;
  if (w < 1) throw std::invalid_argument("held-out window must be >= 1");
  return w;
}

/// ll[s][k]: log-likelihood of sentence s under class k, summed over
/// positions with a fixed pairwise reduction.
std::vector<std::vector<double>> sentence_loglik(const std::vector<SentenceInstances>& instances,
                                                 const ClassSet& cs, bool average) {
  std::vector<std::vector<double>> ll(instances.size(),
                                      std::vector<double>(cs.labels.size(), 0.0));
  std::vector<double> terms;
  for (std::size_t s = 0; s < instances.size(); ++s) {
    for (std::size_t k = 0; k < cs.labels.size(); ++k) {
      terms.clear();
      for (const Position& p : instances[s].positions)
        terms.push_back(position_log_prob(*cs.contexts[k], *cs.targets[k], p.target, p.context,
                                          p.negatives, average));
      ll[s][k] = pairwise_sum(terms);
    }
  }
  return ll;
}

std::int64_t count_positions(const std::vector<SentenceInstances>& instances) {
  std::int64_t n = 0;
  for (const auto& si : instances) n += static_cast<std::int64_t>(si.positions.size());
  return n;
}

constexpr double kLogFloor = 1e-300;  // keeps log of a vanished posterior finite

}  // namespace

std::pair<double, double> slice_log_likelihood(const TemporalModel& model, const Slice& slice,
                                               std::string_view scoring_label,
                                               const HeldoutOptions& opts) {
  ClassSet cs = make_classes(model, {std::string(scoring_label)});
  const int k = cs.index_of(scoring_label);
  if (k < 0) throw std::runtime_error("unknown scoring slice label: " + std::string(scoring_label));

  NegativeTable table(model.vocab, opts.negative_exponent);
  const auto instances =
      build_instances(slice, table, resolve_window(model, opts), opts.negatives, opts.seed);
  const std::int64_t n = count_positions(instances);
  if (n == 0)
    throw std::runtime_error("held-out slice '" + slice.label + "' has no scorable positions");

  std::vector<double> sentence_totals;
  std::vector<double> terms;
  for (const auto& si : instances) {
    terms.clear();
    for (const Position& p : si.positions)
      terms.push_back(position_log_prob(*cs.contexts[static_cast<std::size_t>(k)],
                                        *cs.targets[static_cast<std::size_t>(k)], p.target,
                                        p.context, p.negatives, opts.average_negatives));
    sentence_totals.push_back(pairwise_sum(terms));
  }
  const double total = pairwise_sum(sentence_totals);
  return {total, total / static_cast<double>(n)};
}

PosteriorResult posterior(const TemporalModel& model, const Slice& slice,
                          const HeldoutOptions& opts) {
  ClassSet cs = make_classes(model, {slice.label});
  const int true_class = cs.index_of(slice.label);
  if (true_class < 0) throw std::runtime_error("model has no slice labeled '" + slice.label + "'");

  NegativeTable table(model.vocab, opts.negative_exponent);
  const auto instances =
      build_instances(slice, table, resolve_window(model, opts), opts.negatives, opts.seed);
  if (instances.empty())
    throw std::runtime_error("held-out slice '" + slice.label + "' has no scorable positions");

  const auto ll = sentence_loglik(instances, cs, opts.average_negatives);
  PosteriorResult out;
  out.classes = cs.labels;
  out.mean_posterior.assign(cs.labels.size(), 0.0);
  out.sentences = static_cast<std::int64_t>(instances.size());
  for (const auto& sentence_ll : ll) {
    const auto p = posterior_from_loglik(sentence_ll);
    for (std::size_t k = 0; k < p.size(); ++k) out.mean_posterior[k] += p[k];
  }
  for (double& v : out.mean_posterior) v /= static_cast<double>(out.sentences);
  out.true_mass = out.mean_posterior[static_cast<std::size_t>(true_class)];
  return out;
}

HeldoutReport evaluate_heldout(const TemporalModel& model, const DiachronicCorpus& heldout,
                               const HeldoutOptions& opts) {
  HeldoutReport report;
  report.options = opts;

  ClassSet cs = make_classes(model, heldout.labels());
  report.classes = cs.labels;
  report.degenerate = cs.labels.size() == 1;

  std::vector<const Slice*> selected;
  for (const auto& slice : heldout.slices) {
    if (cs.index_of(slice.label) >= 0)
      selected.push_back(&slice);
    else
      report.skipped_labels.push_back(slice.label);
  }
  if (selected.empty())
    throw std::runtime_error("no overlapping slice labels between model and held-out corpus");

  NegativeTable table(model.vocab, opts.negative_exponent);
  const int window = resolve_window(model, opts);

  std::vector<double> means_ll, means_post, means_logpost;
  for (const Slice* slice : selected) {
    const auto instances = build_instances(*slice, table, window, opts.negatives, opts.seed);
    const std::int64_t n = count_positions(instances);
    if (n == 0)
      throw std::runtime_error("held-out slice '" + slice->label + "' has no scorable positions");

    const auto ll = sentence_loglik(instances, cs, opts.average_negatives);
    const int true_class = cs.index_of(slice->label);

    HeldoutSliceReport sr;
    sr.label = slice->label;
    sr.positions = n;
    sr.sentences = static_cast<std::int64_t>(instances.size());

    std::vector<double> sentence_vals(ll.size());
    sr.ll_by_class.resize(cs.labels.size());
    for (std::size_t k = 0; k < cs.labels.size(); ++k) {
      for (std::size_t s = 0; s < ll.size(); ++s) sentence_vals[s] = ll[s][k];
      sr.ll_by_class[k] = pairwise_sum(sentence_vals) / static_cast<double>(n);
    }
    for (std::size_t s = 0; s < ll.size(); ++s)
      sentence_vals[s] = ll[s][static_cast<std::size_t>(true_class)];
    sr.total_ll = pairwise_sum(sentence_vals);
    sr.normalized_ll = sr.total_ll / static_cast<double>(n);

    double mass = 0.0;
    for (const auto& sentence_ll : ll)
      mass += posterior_from_loglik(sentence_ll)[static_cast<std::size_t>(true_class)];
    sr.posterior_true = mass / static_cast<double>(sr.sentences);
    sr.log_posterior_true = std::log(std::max(sr.posterior_true, kLogFloor));

    means_ll.push_back(sr.normalized_ll);
    means_post.push_back(sr.posterior_true);
    means_logpost.push_back(sr.log_posterior_true);
    report.slices.push_back(std::move(sr));
  }

  const auto n_slices = static_cast<double>(report.slices.size());
  report.mean_normalized_ll = pairwise_sum(means_ll) / n_slices;
  report.mean_posterior_true = pairwise_sum(means_post) / n_slices;
  report.mean_log_posterior_true = pairwise_sum(means_logpost) / n_slices;
  return report;
}

void write_heldout_json(const HeldoutReport& report, const fs::path& file) {
  json j;
  j["tool"] = kToolName;
  j["tool_version"] = kToolVersion;
  j["manifest"] = report.manifest.is_null() ? json::object() : report.manifest;
  j["options"] = json{{"negatives", report.options.negatives},
                      {"seed", report.options.seed},
                      {"average_negatives", report.options.average_negatives},
                      {"window", report.options.window},
                      {"negative_exponent", report.options.negative_exponent},
                      {"chunk_words", report.options.chunk_words}};
  j["classes"] = report.classes;
  j["degenerate"] = report.degenerate;
  j["skipped_labels"] = report.skipped_labels;
  json slices = json::array();
  for (const auto& s : report.slices) {
    slices.push_back(json{{"label", s.label},
                          {"positions", s.positions},
                          {"sentences", s.sentences},
                          {"total_ll", s.total_ll},
                          {"normalized_ll", s.normalized_ll},
                          {"posterior_true", s.posterior_true},
                          {"log_posterior_true", s.log_posterior_true},
                          {"ll_by_class", s.ll_by_class}});
  }
  j["slices"] = slices;
  j["means"] = json{{"normalized_ll", report.mean_normalized_ll},
                    {"posterior_true", report.mean_posterior_true},
                    {"log_posterior_true", report.mean_log_posterior_true}};
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

void write_heldout_csv(const HeldoutReport& report, const fs::path& file) {
  std::FILE* f = std::fopen(file.string().c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + file.string());
  std::fprintf(f, "label,positions,sentences,total_ll,normalized_ll,posterior_true,log_posterior_true\n");
  for (const auto& s : report.slices)
    std::fprintf(f, "%s,%lld,%lld,%.10g,%.10g,%.10g,%.10g\n", s.label.c_str(),
                 static_cast<long long>(s.positions), static_cast<long long>(s.sentences),
                 s.total_ll, s.normalized_ll, s.posterior_true, s.log_posterior_true);
  std::fclose(f);
}

}  // namespace tempovec
