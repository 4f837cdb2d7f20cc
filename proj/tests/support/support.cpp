#include "support/support.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace testsupport {

using tempovec::EmbeddingMatrix;
using tempovec::MatrixRM;
using tempovec::Rng;
using tempovec::TokenId;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  const std::string name = "tempovec-test-" + std::to_string(::getpid()) + "-" +
                           std::to_string(counter.fetch_add(1));
  path_ = std::filesystem::temp_directory_path() / name;
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_file(const std::filesystem::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << content;
}

void write_corpus(const std::filesystem::path& dir, const std::vector<std::string>& labels,
                  const std::vector<std::vector<std::string>>& slices) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::ostringstream text;
    for (const std::string& line : slices[i]) text << line << '\n';
    write_file(dir / (labels[i] + ".txt"), text.str());
  }
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_command(const std::string& command, std::string* output) {
  const std::string full = command + " 2>&1";
  FILE* pipe = ::popen(full.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed for: " + command);
  std::string captured;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) captured.append(buf, n);
  const int status = ::pclose(pipe);
  if (output) *output = std::move(captured);
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

// ---------------------------------------------------------------- corpora

namespace {

std::string numbered(const std::string& prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%02d", prefix.c_str(), i);
  return buf;
}

/// words[cluster][i] for `clusters` x `per` names like "w3_07".
std::vector<std::vector<std::string>> cluster_names(int clusters, int per,
                                                    const std::string& prefix) {
  std::vector<std::vector<std::string>> names(clusters);
  for (int c = 0; c < clusters; ++c)
    for (int i = 0; i < per; ++i)
      names[c].push_back(numbered(prefix + std::to_string(c) + "_", i));
  return names;
}

std::string sentence_from(const std::vector<std::string>& cluster, int len, Rng& rng) {
  std::string line;
  for (int i = 0; i < len; ++i) {
    if (i) line += ' ';
    line += cluster[rng.below(cluster.size())];
  }
  return line;
}

/// `lead` followed by `len` distinct members of `cluster`.
std::string led_sentence(const std::string& lead, const std::vector<std::string>& cluster, int len,
                         Rng& rng) {
  std::vector<std::size_t> idx(cluster.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (int i = 0; i < len; ++i)
    std::swap(idx[static_cast<std::size_t>(i)], idx[i + rng.below(idx.size() - i)]);
  std::string line = lead;
  for (int i = 0; i < len; ++i) {
    line += ' ';
    line += cluster[idx[static_cast<std::size_t>(i)]];
  }
  return line;
}

void shuffle_lines(std::vector<std::string>& lines, Rng& rng) {
  for (std::size_t i = lines.size(); i > 1; --i)
    std::swap(lines[i - 1], lines[rng.below(i)]);
}

}  // namespace

std::vector<std::string> clustered_sentences(int clusters, int words_per_cluster, int sentences,
                                             int sentence_len, std::uint64_t seed,
                                             const std::string& prefix) {
  const auto names = cluster_names(clusters, words_per_cluster, prefix);
  Rng rng(seed);
  std::vector<std::string> lines;
  lines.reserve(static_cast<std::size_t>(sentences));
  for (int s = 0; s < sentences; ++s)
    lines.push_back(sentence_from(names[rng.below(static_cast<std::size_t>(clusters))],
                                  sentence_len, rng));
  return lines;
}

ShiftCorpus planted_shift(int cluster_size, int shift_sentences, int pure_sentences,
                          int background_sentences, std::uint64_t seed) {
  ShiftCorpus corpus;
  for (int i = 0; i < cluster_size; ++i) {
    corpus.a_words.push_back(numbered("a", i));
    corpus.b_words.push_back(numbered("b", i));
  }
  const auto background = cluster_names(6, 10, "f");
  Rng rng(seed);

  const auto make_slice = [&](const std::vector<std::string>& gate_cluster) {
    std::vector<std::string> lines;
    for (int s = 0; s < shift_sentences; ++s)
      lines.push_back(led_sentence(corpus.shift_word, gate_cluster, 4, rng));
    for (int s = 0; s < pure_sentences; ++s) {
      lines.push_back(sentence_from(corpus.a_words, 5, rng));
      lines.push_back(sentence_from(corpus.b_words, 5, rng));
    }
    for (int s = 0; s < background_sentences; ++s)
      lines.push_back(sentence_from(background[rng.below(background.size())], 5, rng));
    shuffle_lines(lines, rng);
    return lines;
  };
  corpus.slice1 = make_slice(corpus.a_words);
  corpus.slice2 = make_slice(corpus.b_words);
  return corpus;
}

SwapCorpus swap_pairs(int pairs, int sentences_per_word, std::uint64_t seed) {
  SwapCorpus corpus;
  std::vector<std::vector<std::string>> sig_s(static_cast<std::size_t>(pairs));
  std::vector<std::vector<std::string>> sig_r(static_cast<std::size_t>(pairs));
  for (int i = 0; i < pairs; ++i) {
    corpus.p_words.push_back(numbered("p", i));
    corpus.q_words.push_back(numbered("q", i));
    for (int j = 0; j < 6; ++j) {
      sig_s[static_cast<std::size_t>(i)].push_back(numbered("s" + std::to_string(i) + "_", j));
      sig_r[static_cast<std::size_t>(i)].push_back(numbered("r" + std::to_string(i) + "_", j));
    }
  }
  Rng rng(seed);
  const auto make_slice = [&](bool swapped) {
    std::vector<std::string> lines;
    for (int i = 0; i < pairs; ++i) {
      const auto& p_sig = swapped ? sig_r[static_cast<std::size_t>(i)]
                                  : sig_s[static_cast<std::size_t>(i)];
      const auto& q_sig = swapped ? sig_s[static_cast<std::size_t>(i)]
                                  : sig_r[static_cast<std::size_t>(i)];
      for (int s = 0; s < sentences_per_word; ++s) {
        lines.push_back(led_sentence(corpus.p_words[static_cast<std::size_t>(i)], p_sig, 3, rng));
        lines.push_back(led_sentence(corpus.q_words[static_cast<std::size_t>(i)], q_sig, 3, rng));
      }
    }
    shuffle_lines(lines, rng);
    return lines;
  };
  corpus.slice1 = make_slice(false);
  corpus.slice2 = make_slice(true);
  return corpus;
}

EraCorpus era_corpus(int n_slices, int sentences_per_slice, std::uint64_t seed) {
  EraCorpus corpus;
  const auto core = cluster_names(8, 12, "c");
  Rng rng(seed);
  for (int t = 0; t < n_slices; ++t) {
    corpus.labels.push_back(std::to_string(1900 + 25 * t));
    const auto era = cluster_names(3, 10, "e" + std::to_string(t) + "_");
    std::vector<std::string> lines;
    lines.reserve(static_cast<std::size_t>(sentences_per_slice));
    for (int s = 0; s < sentences_per_slice; ++s) {
      const bool core_sentence = rng.below(10) < 6;
      const auto& cluster =
          core_sentence ? core[rng.below(core.size())] : era[rng.below(era.size())];
      lines.push_back(sentence_from(cluster, 5, rng));
    }
    corpus.text.push_back(std::move(lines));
  }
  return corpus;
}

// ------------------------------------------------------------- reference

namespace {

double plain_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double reference_loss(const Eigen::MatrixXd& context, const Eigen::MatrixXd& target,
                      TokenId target_id, std::span<const TokenId> context_ids,
                      std::span<const TokenId> negatives) {
  Eigen::RowVectorXd cbar = Eigen::RowVectorXd::Zero(context.cols());
  for (TokenId id : context_ids) cbar += context.row(id);
  cbar /= static_cast<double>(context_ids.size());

  double loss = -std::log(plain_sigmoid(cbar.dot(target.row(target_id))));
  for (TokenId id : negatives) loss -= std::log(plain_sigmoid(-cbar.dot(target.row(id))));
  return loss;
}

double gradient_check(const EmbeddingMatrix& context, const EmbeddingMatrix& target,
                      TokenId target_id, std::span<const TokenId> context_ids,
                      std::span<const TokenId> negatives) {
  constexpr double h = 1e-5;
  Eigen::MatrixXd c = context.w.cast<double>();
  Eigen::MatrixXd u = target.w.cast<double>();
  const tempovec::StepGradients grads =
      tempovec::cbow_gradients(context_ids, target_id, negatives, context, target);

  double worst = 0.0;
  const auto compare = [&](double analytic, double fd) {
    const double denom = std::max(std::abs(analytic) + std::abs(fd), 1e-6);
    worst = std::max(worst, std::abs(analytic - fd) / denom);
  };
  const auto fd_at = [&](Eigen::MatrixXd& m, TokenId row, int col) {
    const double saved = m(row, col);
    m(row, col) = saved + h;
    const double up = reference_loss(c, u, target_id, context_ids, negatives);
    m(row, col) = saved - h;
    const double down = reference_loss(c, u, target_id, context_ids, negatives);
    m(row, col) = saved;
    return (up - down) / (2.0 * h);
  };

  compare(grads.loss, reference_loss(c, u, target_id, context_ids, negatives));

  // dL/dC[w] = (occurrences of w in the window / M) * dL/dcbar.
  std::map<TokenId, int> multiplicity;
  for (TokenId id : context_ids) ++multiplicity[id];
  const double m = static_cast<double>(context_ids.size());
  for (const auto& [id, times] : multiplicity)
    for (int col = 0; col < context.dim(); ++col)
      compare(grads.mean_grad(col) * static_cast<double>(times) / m, fd_at(c, id, col));

  for (const auto& [id, grad] : grads.target_grads)
    for (int col = 0; col < target.dim(); ++col) compare(grad(col), fd_at(u, id, col));

  return worst;
}

double gaussian(Rng& rng) {
  constexpr double two_pi = 6.283185307179586;
  const double u1 = 1.0 - rng.uniform();  // (0, 1]
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

Eigen::MatrixXd random_orthogonal(int d, Rng& rng) {
  Eigen::MatrixXd g(d, d);
  for (int r = 0; r < d; ++r)
    for (int col = 0; col < d; ++col) g(r, col) = gaussian(rng);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

double mean_row_cosine(const MatrixRM& a, const MatrixRM& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("mean_row_cosine: shape mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) sum += tempovec::cosine(a.row(i), b.row(i));
  return sum / static_cast<double>(a.rows());
}

}  // namespace testsupport
