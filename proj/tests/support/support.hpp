// Shared helpers for the test binaries: scratch directories, synthetic
// corpora with planted structure, and reference math kept independent
// of the library implementations it checks.
#pragma once

#include "tempovec/random.hpp"
#include "tempovec/sgns.hpp"
#include "tempovec/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace testsupport {

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_file(const std::filesystem::path& file, const std::string& content);
/// One `<label>.txt` per slice, one sentence per line.
void write_corpus(const std::filesystem::path& dir, const std::vector<std::string>& labels,
                  const std::vector<std::vector<std::string>>& slices);
std::string read_file(const std::filesystem::path& file);

/// Runs a shell command, captures stdout+stderr, returns the exit code
/// (negative on abnormal termination).
int run_command(const std::string& command, std::string* output = nullptr);

// ---------------------------------------------------------------- corpora

/// Topic-cluster text: `clusters` disjoint groups of `words_per_cluster`
/// words named <prefix><cluster>_<i>; every sentence draws one cluster
/// and `sentence_len` of its members uniformly.
std::vector<std::string> clustered_sentences(int clusters, int words_per_cluster, int sentences,
                                             int sentence_len, std::uint64_t seed,
                                             const std::string& prefix = "w");

/// Two slices in which `shift_word` co-occurs exclusively with the A
/// cluster in slice 1 and the B cluster in slice 2, on top of shared
/// background text; both slices also carry pure A and pure B sentences
/// so every cluster is trained everywhere.
struct ShiftCorpus {
  std::vector<std::string> slice1;
  std::vector<std::string> slice2;
  std::vector<std::string> a_words;
  std::vector<std::string> b_words;
  std::string shift_word = "gate";
};
ShiftCorpus planted_shift(int cluster_size, int shift_sentences, int pure_sentences,
                          int background_sentences, std::uint64_t seed);

/// Two slices with `pairs` word pairs (p_i, q_i) whose context
/// signatures swap between the slices: p_i keeps signature S_i in
/// slice 1 and R_i in slice 2, q_i the reverse. The temporal analogy
/// p_i@t1 -> q_i@t2 (and its mirror) holds by construction.
struct SwapCorpus {
  std::vector<std::string> slice1;
  std::vector<std::string> slice2;
  std::vector<std::string> p_words;
  std::vector<std::string> q_words;
};
SwapCorpus swap_pairs(int pairs, int sentences_per_word, std::uint64_t seed);

/// `n_slices` slices sharing a core vocabulary, each additionally
/// carrying era-specific words that appear in no other slice; slices
/// are therefore distinguishable from text alone. `seed` controls the
/// draws, so a second call with another seed yields held-out text from
/// the same distributions.
struct EraCorpus {
  std::vector<std::string> labels;
  std::vector<std::vector<std::string>> text;  // per slice
};
EraCorpus era_corpus(int n_slices, int sentences_per_slice, std::uint64_t seed);

// ------------------------------------------------------------- reference

/// Plain 64-bit sample loss -log s(u_k . cbar) - sum_n log s(-u_n . cbar)
/// evaluated without clamping or lookup tables; the finite-difference
/// oracle differentiates this.
double reference_loss(const Eigen::MatrixXd& context, const Eigen::MatrixXd& target,
                      tempovec::TokenId target_id, std::span<const tempovec::TokenId> context_ids,
                      std::span<const tempovec::TokenId> negatives);

/// Largest relative error between the analytic gradients of one sample
/// and central finite differences (h = 1e-5) over every parameter the
/// sample touches. Relative error uses max(|a| + |f|, 1e-6) as the
/// denominator so near-zero components do not amplify rounding noise.
double gradient_check(const tempovec::EmbeddingMatrix& context,
                      const tempovec::EmbeddingMatrix& target, tempovec::TokenId target_id,
                      std::span<const tempovec::TokenId> context_ids,
                      std::span<const tempovec::TokenId> negatives);

/// Standard normal draw (Box-Muller over the shared Rng).
double gaussian(tempovec::Rng& rng);

/// Haar-ish random d x d orthogonal matrix (QR of a Gaussian matrix).
Eigen::MatrixXd random_orthogonal(int d, tempovec::Rng& rng);

/// Mean over rows of the cosine between corresponding rows of a and b.
double mean_row_cosine(const tempovec::MatrixRM& a, const tempovec::MatrixRM& b);

}  // namespace testsupport
