#include "tempovec/analogy.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace tempovec {

namespace fs = std::filesystem;
using nlohmann::json;

long long AnalogyQuery::time_depth() const {
  const long long a = std::stoll(t1);
  const long long b = std::stoll(t2);
  return a > b ? a - b : b - a;
}

namespace {

std::string ascii_lower(std::string s) {
  for (char& c : s)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool integer_label(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

TestsetLoadResult load_testset(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read test set: " + file.string());

  TestsetLoadResult out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    auto fields = split_tabs(line);
    if (fields.size() != 5) {
      out.warnings.push_back("line " + std::to_string(lineno) + ": expected 5 tab-separated fields, got " +
                             std::to_string(fields.size()));
      continue;
    }
    bool blank = false;
    for (const auto& f : fields) blank = blank || f.empty();
    if (blank) {
      out.warnings.push_back("line " + std::to_string(lineno) + ": empty field");
      continue;
    }
    if (!integer_label(fields[2]) || !integer_label(fields[4])) {
      out.warnings.push_back("line " + std::to_string(lineno) + ": slice labels must be integers");
      continue;
    }
    out.queries.push_back(AnalogyQuery{fields[0], ascii_lower(fields[1]), fields[2],
                                       ascii_lower(fields[3]), fields[4]});
  }
  if (out.queries.empty())
    throw std::runtime_error("no valid analogy rows in " + file.string());
  return out;
}

namespace {

MatrixRM normalized_rows(const MatrixRM& m) {
  MatrixRM out = m;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double n = m.row(r).cast<double>().norm();
    if (n > 0.0) out.row(r) = (m.row(r).cast<double>() / n).cast<float>();
  }
  return out;
}

}  // namespace

AnalogyScorer::AnalogyScorer(const TemporalModel& model, ScoreOptions opts)
    : model_(&model), opts_(std::move(opts)) {
  if (model.time_independent()) {
    pooled_ = opts_.dot_similarity ? model.pooled_context : normalized_rows(model.pooled_context);
    return;
  }
  per_slice_.reserve(model.slice_reps.size());
  for (const auto& m : model.slice_reps)
    per_slice_.push_back(opts_.dot_similarity ? m : normalized_rows(m));
  if (opts_.exclude_untrained) {
    excluded_.resize(model.labels.size());
    for (std::size_t i = 0; i < model.labels.size(); ++i) {
      excluded_[i].assign(static_cast<std::size_t>(model.vocab.size()), 0);
      if (i < model.untrained.size())
        for (TokenId id : model.untrained[i]) excluded_[i][static_cast<std::size_t>(id)] = 1;
    }
  }
}

const MatrixRM* AnalogyScorer::candidates(std::string_view label) const {
  if (model_->time_independent()) return &pooled_;
  const int i = model_->slice_index(label);
  return i < 0 ? nullptr : &per_slice_[static_cast<std::size_t>(i)];
}

const std::vector<char>* AnalogyScorer::excluded(std::string_view label) const {
  if (excluded_.empty()) return nullptr;
  const int i = model_->slice_index(label);
  return i < 0 ? nullptr : &excluded_[static_cast<std::size_t>(i)];
}

long long AnalogyScorer::rank_of_expected(const AnalogyQuery& q, std::string* skip_reason) const {
  if (skip_reason) skip_reason->clear();
  auto skip = [&](const char* reason) -> long long {
    if (skip_reason) *skip_reason = reason;
    return 0;
  };

  const TokenId id1 = model_->vocab.id_of(q.w1);
  const TokenId id2 = model_->vocab.id_of(q.w2);
  if (id1 < 0 || id2 < 0) return skip("oov_word");
  const MatrixRM* m1 = candidates(q.t1);
  const MatrixRM* m2 = candidates(q.t2);
  if (m1 == nullptr || m2 == nullptr) return skip("unknown_slice");

  const Eigen::VectorXd query = m1->row(id1).cast<double>().transpose();
  const Eigen::VectorXd scores = m2->cast<double>() * query;

  const std::vector<char>* excl = excluded(q.t2);
  if (excl && (*excl)[static_cast<std::size_t>(id2)]) return 0;  // answer not rankable

  const double expected = scores(id2);
  long long rank = 1;
  for (Eigen::Index id = 0; id < scores.size(); ++id) {
    if (id == id2) continue;
    if (excl && (*excl)[static_cast<std::size_t>(id)]) continue;
    const double s = scores(id);
    if (s > expected || (s == expected && id < id2)) ++rank;
  }
  return rank;
}

std::vector<Neighbor> AnalogyScorer::nearest(std::string_view word, std::string_view slice_from,
                                             std::string_view slice_to, int k) const {
  const TokenId id = model_->vocab.id_of(word);
  if (id < 0) throw std::runtime_error("word not in vocabulary: " + std::string(word));
  const MatrixRM* m1 = candidates(slice_from);
  if (m1 == nullptr) throw std::runtime_error("unknown slice label: " + std::string(slice_from));
  const MatrixRM* m2 = candidates(slice_to);
  if (m2 == nullptr) throw std::runtime_error("unknown slice label: " + std::string(slice_to));
  if (k < 1) throw std::invalid_argument("k must be >= 1");

  const Eigen::VectorXd query = m1->row(id).cast<double>().transpose();
  const Eigen::VectorXd scores = m2->cast<double>() * query;
  const std::vector<char>* excl = excluded(slice_to);

  std::vector<Neighbor> all;
  all.reserve(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (excl && (*excl)[static_cast<std::size_t>(i)]) continue;
    all.push_back(Neighbor{static_cast<TokenId>(i), scores(i)});
  }
  const auto better = [](const Neighbor& a, const Neighbor& b) {
    return a.similarity > b.similarity || (a.similarity == b.similarity && a.id < b.id);
  };
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k), all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    better);
  all.resize(keep);
  return all;
}

MetricBlock aggregate_ranks(const std::vector<long long>& ranks, const std::vector<int>& ks,
                            int rank_cutoff) {
  MetricBlock b;
  b.count = ranks.size();
  for (int k : ks) b.mp[k] = 0.0;
  if (ranks.empty()) return b;

  double rr_sum = 0.0;
  std::map<int, std::size_t> hits;
  for (long long rank : ranks) {
    const bool ranked = rank > 0 && (rank_cutoff == 0 || rank <= rank_cutoff);
    if (!ranked) continue;
    rr_sum += 1.0 / static_cast<double>(rank);
    for (int k : ks)
      if (rank <= k) ++hits[k];
  }
  b.mrr = rr_sum / static_cast<double>(ranks.size());
  for (int k : ks) b.mp[k] = static_cast<double>(hits[k]) / static_cast<double>(ranks.size());
  return b;
}

AnalogyReport score(const std::vector<AnalogyQuery>& queries, const TemporalModel& model,
                    const ScoreOptions& opts) {
  if (queries.empty()) throw std::invalid_argument("empty analogy set");
  AnalogyScorer scorer(model, opts);

  AnalogyReport report;
  report.options = opts;
  report.total = queries.size();

  std::vector<long long> all, statics, dynamics;
  std::map<std::string, std::vector<long long>> by_category;
  std::map<long long, std::vector<long long>> by_depth;

  for (std::size_t i = 0; i < queries.size(); ++i) {
    const AnalogyQuery& q = queries[i];
    QueryResult r;
    r.query_index = i;
    std::string reason;
    r.rank = scorer.rank_of_expected(q, &reason);
    if (!reason.empty() && !opts.strict_oov) {
      r.skipped = true;
      r.skip_reason = reason;
      ++report.skipped;
      report.results.push_back(std::move(r));
      continue;
    }
    r.scored = true;
    r.skip_reason = reason;  // strict mode keeps the reason in the log
    ++report.scored;
    all.push_back(r.rank);
    (q.is_static() ? statics : dynamics).push_back(r.rank);
    by_category[q.category].push_back(r.rank);
    by_depth[q.time_depth()].push_back(r.rank);
    report.results.push_back(std::move(r));
  }
  if (report.scored == 0) throw std::runtime_error("every analogy query was skipped");

  report.all = aggregate_ranks(all, opts.ks, opts.rank_cutoff);
  report.statics = aggregate_ranks(statics, opts.ks, opts.rank_cutoff);
  report.dynamics = aggregate_ranks(dynamics, opts.ks, opts.rank_cutoff);
  for (const auto& [cat, ranks] : by_category)
    report.by_category[cat] = aggregate_ranks(ranks, opts.ks, opts.rank_cutoff);
  for (const auto& [depth, ranks] : by_depth)
    report.by_depth[depth] = aggregate_ranks(ranks, opts.ks, opts.rank_cutoff);
  return report;
}

namespace {

json block_to_json(const MetricBlock& b) {
  json mp = json::object();
  for (const auto& [k, v] : b.mp) mp[std::to_string(k)] = v;
  return json{{"count", b.count}, {"mrr", b.mrr}, {"mp", mp}};
}

struct CsvFile {
  explicit CsvFile(const fs::path& file) : f(std::fopen(file.string().c_str(), "w")) {
    if (!f) throw std::runtime_error("cannot write " + file.string());
  }
  ~CsvFile() {
    if (f) std::fclose(f);
  }
  CsvFile(const CsvFile&) = delete;
  CsvFile& operator=(const CsvFile&) = delete;
  std::FILE* f;
};

void print_metric(std::FILE* f, double v) { std::fprintf(f, ",%.10g", v); }

}  // namespace

void write_report_json(const AnalogyReport& report, const std::vector<AnalogyQuery>& queries,
                       const fs::path& file) {
  json j;
  j["tool"] = kToolName;
  j["tool_version"] = kToolVersion;
  j["manifest"] = report.manifest.is_null() ? json::object() : report.manifest;
  j["options"] = json{{"ks", report.options.ks},
                      {"exclude_untrained", report.options.exclude_untrained},
                      {"dot_similarity", report.options.dot_similarity},
                      {"rank_cutoff", report.options.rank_cutoff},
                      {"strict_oov", report.options.strict_oov}};
  j["totals"] = json{{"total", report.total}, {"scored", report.scored},
                     {"skipped", report.skipped}};
  j["metrics"] = json{{"all", block_to_json(report.all)},
                      {"static", block_to_json(report.statics)},
                      {"dynamic", block_to_json(report.dynamics)}};
  json cats = json::object();
  for (const auto& [cat, b] : report.by_category) cats[cat] = block_to_json(b);
  j["by_category"] = cats;
  json depths = json::object();
  for (const auto& [d, b] : report.by_depth) depths[std::to_string(d)] = block_to_json(b);
  j["by_time_depth"] = depths;

  json rows = json::array();
  for (const auto& r : report.results) {
    const AnalogyQuery& q = queries[r.query_index];
    json row = json{{"category", q.category}, {"w1", q.w1}, {"t1", q.t1},
                    {"w2", q.w2},             {"t2", q.t2}, {"rank", r.rank},
                    {"scored", r.scored},     {"skipped", r.skipped}};
    if (!r.skip_reason.empty()) row["skip_reason"] = r.skip_reason;
    rows.push_back(std::move(row));
  }
  j["queries"] = rows;

  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

void write_summary_csv(const AnalogyReport& report, const fs::path& file) {
  CsvFile csv(file);
  std::fprintf(csv.f, "subset,count,mrr");
  for (int k : report.options.ks) std::fprintf(csv.f, ",mp@%d", k);
  std::fprintf(csv.f, "\n");
  const auto row = [&](const char* name, const MetricBlock& b) {
    std::fprintf(csv.f, "%s,%zu", name, b.count);
    print_metric(csv.f, b.mrr);
    for (int k : report.options.ks) print_metric(csv.f, b.mp.at(k));
    std::fprintf(csv.f, "\n");
  };
  row("all", report.all);
  row("static", report.statics);
  row("dynamic", report.dynamics);
}

void write_categories_csv(const AnalogyReport& report, const fs::path& file) {
  CsvFile csv(file);
  std::fprintf(csv.f, "category,count,mrr,mp@1\n");
  for (const auto& [cat, b] : report.by_category) {
    std::fprintf(csv.f, "%s,%zu", cat.c_str(), b.count);
    print_metric(csv.f, b.mrr);
    print_metric(csv.f, b.mp.count(1) ? b.mp.at(1) : 0.0);
    std::fprintf(csv.f, "\n");
  }
}

void write_timedepth_csv(const AnalogyReport& report, const fs::path& file) {
  CsvFile csv(file);
  std::fprintf(csv.f, "time_depth,mp@1,count\n");
  for (const auto& [depth, b] : report.by_depth) {
    std::fprintf(csv.f, "%lld", depth);
    print_metric(csv.f, b.mp.count(1) ? b.mp.at(1) : 0.0);
    std::fprintf(csv.f, ",%zu\n", b.count);
  }
}

Eigen::MatrixXd pca_project_2d(const Eigen::MatrixXd& points) {
  if (points.rows() < 3)
    throw std::invalid_argument("PCA projection needs at least 3 points, got " +
                                std::to_string(points.rows()));
  Eigen::MatrixXd centered = points.rowwise() - points.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);

  const Eigen::Index comps = std::min<Eigen::Index>(2, svd.matrixV().cols());
  Eigen::MatrixXd basis = svd.matrixV().leftCols(comps);
  // Deterministic orientation: the largest-magnitude loading of each
  // component points in the positive direction.
  for (Eigen::Index c = 0; c < comps; ++c) {
    Eigen::Index imax = 0;
    basis.col(c).cwiseAbs().maxCoeff(&imax);
    if (basis(imax, c) < 0.0) basis.col(c) = -basis.col(c);
  }
  Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(points.rows(), 2);
  coords.leftCols(comps) = centered * basis;
  return coords;
}

void export_pca_trajectories(const TemporalModel& model, const std::vector<std::string>& words,
                             const std::vector<std::string>& slices, const fs::path& file) {
  if (words.empty()) throw std::invalid_argument("no words given");
  std::vector<std::string> use = slices;
  if (use.empty()) use = model.labels;
  if (use.empty()) use.push_back("all");  // pooled static model: one point per word

  std::vector<TokenId> ids;
  for (const auto& w : words) {
    const TokenId id = model.vocab.id_of(w);
    if (id < 0) throw std::runtime_error("word not in vocabulary: " + w);
    ids.push_back(id);
  }

  const Eigen::Index n = static_cast<Eigen::Index>(ids.size() * use.size());
  Eigen::MatrixXd points(n, model.config.dim);
  Eigen::Index row = 0;
  for (std::size_t w = 0; w < ids.size(); ++w)
    for (const auto& label : use) {
      const MatrixRM* m = model.representation(label);
      if (m == nullptr) throw std::runtime_error("unknown slice label: " + label);
      points.row(row++) = m->row(ids[w]).cast<double>();
    }

  const Eigen::MatrixXd coords = pca_project_2d(points);
  CsvFile csv(file);
  std::fprintf(csv.f, "word,slice,x,y\n");
  row = 0;
  for (std::size_t w = 0; w < ids.size(); ++w)
    for (const auto& label : use) {
      std::fprintf(csv.f, "%s,%s,%.10g,%.10g\n", words[w].c_str(), label.c_str(), coords(row, 0),
                   coords(row, 1));
      ++row;
    }
}

}  // namespace tempovec
