#pragma once

#include "tempovec/model_io.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tempovec {

/// One temporal analogy "w1 at t1 is what w2 is at t2": the vector of
/// w1 in slice t1 should rank w2 first among all slice-t2 vectors.
/// Static queries (w1 == w2) probe alignment stability; dynamic ones
/// probe actual semantic change.
struct AnalogyQuery {
  std::string category;
  std::string w1;
  std::string t1;
  std::string w2;
  std::string t2;

  bool is_static() const { return w1 == w2; }
  /// |t1 - t2| with labels read as integers.
  long long time_depth() const;
};

struct TestsetLoadResult {
  std::vector<AnalogyQuery> queries;
  std::vector<std::string> warnings;  // malformed lines, with line numbers
};

/// TSV rows `category<TAB>w1<TAB>t1<TAB>w2<TAB>t2`; '#' lines and blank
/// lines are skipped; malformed rows produce warnings, not errors.
/// Words are lowercased the same way the corpus reader lowercases
/// tokens. Throws when the file is unreadable or no row is valid.
TestsetLoadResult load_testset(const std::filesystem::path& file);

struct ScoreOptions {
  std::vector<int> ks = {1, 3, 5, 10};
  /// Drop candidate rows flagged untrained in the answer slice.
  bool exclude_untrained = false;
  /// Rank by raw dot product instead of cosine.
  bool dot_similarity = false;
  /// Ranks beyond the cutoff score 0 toward MRR and miss every MP@K;
  /// 0 disables.
  int rank_cutoff = 0;
  /// Score skipped queries as rank infinity instead of excluding them.
  bool strict_oov = false;
};

struct QueryResult {
  std::size_t query_index = 0;
  /// 1-based rank of the expected answer; 0 means unranked (infinity).
  long long rank = 0;
  bool scored = false;
  bool skipped = false;
  std::string skip_reason;  // "oov_word" or "unknown_slice"
};

struct MetricBlock {
  std::size_t count = 0;
  double mrr = 0.0;
  std::map<int, double> mp;  // K -> MP@K
};

struct AnalogyReport {
  std::vector<QueryResult> results;
  MetricBlock all;
  MetricBlock statics;
  MetricBlock dynamics;
  std::map<std::string, MetricBlock> by_category;
  std::map<long long, MetricBlock> by_depth;
  std::size_t total = 0;
  std::size_t scored = 0;
  std::size_t skipped = 0;
  ScoreOptions options;
  nlohmann::json manifest;
};

struct Neighbor {
  TokenId id;
  double similarity;
};

/// Ranks every vocabulary word of an answer slice against a query
/// vector. Candidate matrices are row-normalized once up front (cosine
/// = dot of unit vectors); scores accumulate in 64-bit and ties break
/// by ascending token id. The query word itself is never excluded:
/// a static analogy is answered correctly precisely when the aligned
/// spaces put the same word on top.
class AnalogyScorer {
 public:
  explicit AnalogyScorer(const TemporalModel& model, ScoreOptions opts = {});

  /// 1-based rank of q.w2, or 0 with `skip_reason` set.
  long long rank_of_expected(const AnalogyQuery& q, std::string* skip_reason = nullptr) const;

  /// Top-k candidates for the query vector of (word, slice_from)
  /// against all vectors of slice_to. Throws on OOV word or unknown
  /// slice.
  std::vector<Neighbor> nearest(std::string_view word, std::string_view slice_from,
                                std::string_view slice_to, int k) const;

  const TemporalModel& model() const { return *model_; }

 private:
  const MatrixRM* candidates(std::string_view label) const;
  const std::vector<char>* excluded(std::string_view label) const;

  const TemporalModel* model_;
  ScoreOptions opts_;
  MatrixRM pooled_;                        // static models
  std::vector<MatrixRM> per_slice_;        // by model label order
  std::vector<std::vector<char>> excluded_;
};

/// Scores the whole test set. Throws when `queries` is empty or every
/// query was skipped.
AnalogyReport score(const std::vector<AnalogyQuery>& queries, const TemporalModel& model,
                    const ScoreOptions& opts = {});

/// Metric aggregation from bare ranks (0 = infinity), exposed so the
/// arithmetic can be checked against hand-computed tables.
MetricBlock aggregate_ranks(const std::vector<long long>& ranks, const std::vector<int>& ks,
                            int rank_cutoff);

void write_report_json(const AnalogyReport& report, const std::vector<AnalogyQuery>& queries,
                       const std::filesystem::path& file);
/// subset,count,mrr,mp@K... rows for All/Static/Dynamic.
void write_summary_csv(const AnalogyReport& report, const std::filesystem::path& file);
/// category,count,mrr,mp@1 rows.
void write_categories_csv(const AnalogyReport& report, const std::filesystem::path& file);
/// time_depth,mp@1,count rows, one per observed depth.
void write_timedepth_csv(const AnalogyReport& report, const std::filesystem::path& file);

/// Rows of `points` mean-centered and projected onto their top-2
/// principal components. Component signs are fixed by making the
/// largest-magnitude loading positive. Requires >= 3 points.
Eigen::MatrixXd pca_project_2d(const Eigen::MatrixXd& points);

/// word,slice,x,y rows for the trajectories of the given words across
/// the given slices (default: all model slices). Throws on OOV words
/// or fewer than 3 total points.
void export_pca_trajectories(const TemporalModel& model, const std::vector<std::string>& words,
                             const std::vector<std::string>& slices,
                             const std::filesystem::path& file);

}  // namespace tempovec
