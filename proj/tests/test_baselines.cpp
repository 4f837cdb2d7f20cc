#include "tempovec/baselines.hpp"

#include "support/support.hpp"

#include <doctest.h>

#include <cmath>

using namespace tempovec;
using testsupport::clustered_sentences;
using testsupport::gaussian;
using testsupport::random_orthogonal;
using testsupport::TempDir;
using testsupport::write_corpus;

namespace {

MatrixRM random_matrix(int rows, int cols, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  MatrixRM m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = static_cast<float>(gaussian(rng) * scale);
  return m;
}

std::vector<TokenId> all_ids(int n) {
  std::vector<TokenId> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
  return ids;
}

double fit_residual(const MatrixRM& source, const MatrixRM& reference,
                    const Eigen::MatrixXd& w) {
  return (source.cast<double>() * w - reference.cast<double>()).norm();
}

/// Hand-built per-slice bundle whose contexts are exact rotations of
/// one base matrix; alignment must undo the rotations.
PerSliceModels rotated_bundle(const Vocabulary& vocab, const MatrixRM& base,
                              const std::vector<Eigen::MatrixXd>& rotations) {
  PerSliceModels models;
  models.vocab = vocab;
  models.config.dim = static_cast<int>(base.cols());
  for (std::size_t i = 0; i < rotations.size(); ++i) {
    models.labels.push_back(std::to_string(1900 + 50 * i));
    models.contexts.push_back((base.cast<double>() * rotations[i]).cast<float>());
    models.targets.push_back(base);
    models.untrained.emplace_back();
    models.seeds.push_back(i);
    models.summaries.emplace_back();
  }
  return models;
}

Vocabulary tiny_vocab(int n) {
  std::vector<std::string> tokens;
  std::vector<std::int64_t> counts;
  for (int i = 0; i < n; ++i) {
    tokens.push_back("w" + std::to_string(i));
    counts.push_back(n - i + 1);
  }
  return Vocabulary(tokens, counts);
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("aligning a space to itself is the identity") {
  const MatrixRM a = random_matrix(60, 8, 11);
  const Eigen::MatrixXd w = fit_orthogonal(a, a, all_ids(60));
  CHECK((w - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("orthogonal fit recovers a planted rotation") {
  Rng rng(13);
  const MatrixRM a = random_matrix(200, 16, 14);
  const Eigen::MatrixXd rot = random_orthogonal(16, rng);
  const MatrixRM b = (a.cast<double>() * rot).cast<float>();

  const Eigen::MatrixXd w = fit_orthogonal(a, b, all_ids(200));
  CHECK((w - rot).cwiseAbs().maxCoeff() < 1e-4);
  CHECK((w.transpose() * w - Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("orthogonal maps preserve pairwise cosines") {
  Rng rng(15);
  const MatrixRM a = random_matrix(80, 10, 16);
  const Eigen::MatrixXd rot = random_orthogonal(10, rng);
  const MatrixRM b = (a.cast<double>() * rot).cast<float>();
  const Eigen::MatrixXd w = fit_orthogonal(a, b, all_ids(80));

  const MatrixRM mapped = (a.cast<double>() * w).cast<float>();
  for (int i = 0; i < 10; ++i) {
    const double before = cosine(a.row(i), a.row(i + 1));
    const double after = cosine(mapped.row(i), mapped.row(i + 1));
    CHECK(after == doctest::Approx(before).epsilon(1e-5));
  }
}

TEST_CASE("linear fit recovers a plain scaling") {
  const MatrixRM a = random_matrix(50, 6, 17);
  const MatrixRM b = (a.cast<double>() * 2.0).cast<float>();
  const Eigen::MatrixXd w = fit_linear(a, b, all_ids(50));
  CHECK((w - 2.0 * Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("two-dimensional linear fit matches the normal equations") {
  MatrixRM a(3, 2), b(3, 2);
  a << 1.0f, 0.0f, 1.0f, 1.0f, 0.0f, 2.0f;
  b << 0.5f, 1.0f, 2.0f, 0.0f, 1.0f, -1.0f;

  // W = (A^T A)^{-1} A^T B, written out by hand for the 2x2 case.
  const Eigen::MatrixXd ad = a.cast<double>(), bd = b.cast<double>();
  const Eigen::Matrix2d ata = ad.transpose() * ad;
  const double det = ata(0, 0) * ata(1, 1) - ata(0, 1) * ata(1, 0);
  Eigen::Matrix2d inv;
  inv << ata(1, 1) / det, -ata(0, 1) / det, -ata(1, 0) / det, ata(0, 0) / det;
  const Eigen::MatrixXd expected = inv * ad.transpose() * bd;

  const Eigen::MatrixXd w = fit_linear(a, b, all_ids(3));
  CHECK((w - expected).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("linear residual never exceeds the orthogonal residual") {
  Rng rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    const MatrixRM a = random_matrix(120, 8, 20 + static_cast<std::uint64_t>(trial));
    const Eigen::MatrixXd rot = random_orthogonal(8, rng);
    MatrixRM b = (a.cast<double>() * rot).cast<float>();
    Rng noise(99 + static_cast<std::uint64_t>(trial));
    for (int r = 0; r < b.rows(); ++r)
      for (int c = 0; c < b.cols(); ++c) b(r, c) += static_cast<float>(gaussian(noise) * 0.05);

    const auto ids = all_ids(120);
    const double lin = fit_residual(a, b, fit_linear(a, b, ids));
    const double ortho = fit_residual(a, b, fit_orthogonal(a, b, ids));
    CHECK(lin <= ortho + 1e-9);
  }
}

TEST_CASE("degenerate anchor systems are rejected") {
  MatrixRM a(5, 3), b(5, 3);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 3; ++c) {
      a(r, c) = static_cast<float>(c + 1);  // every anchor row identical: rank 1
      b(r, c) = static_cast<float>(c - 1);
    }
  CHECK_THROWS_AS(fit_orthogonal(a, b, all_ids(5)), std::runtime_error);
  CHECK_THROWS_AS(fit_linear(a, b, all_ids(5)), std::runtime_error);

  const MatrixRM ok = random_matrix(10, 4, 23);
  CHECK_THROWS_AS(fit_orthogonal(ok, ok, {0, 1}), std::invalid_argument);  // fewer than d anchors
}

TEST_CASE("anchors are the words trained on both sides, count-filtered") {
  const Vocabulary vocab = tiny_vocab(6);  // counts 7,6,5,4,3,2
  const std::vector<TokenId> missing_a = {1};
  const std::vector<TokenId> missing_b = {3, 4};
  const auto plain = anchor_ids(vocab, missing_a, missing_b, 0);
  CHECK(plain == std::vector<TokenId>{0, 2, 5});
  const auto filtered = anchor_ids(vocab, missing_a, missing_b, 4);
  CHECK(filtered == std::vector<TokenId>{0, 2});
}

TEST_CASE("per-slice baseline trains each slice from its own seed") {
  TempDir dir;
  write_corpus(dir.path(), {"1900", "1950"},
               {clustered_sentences(3, 6, 300, 5, 31), clustered_sentences(3, 6, 300, 5, 31)});
  const Vocabulary vocab = build_vocabulary(dir.path(), 1);
  const DiachronicCorpus corpus = load_slices(dir.path(), vocab);
  TrainConfig cfg;
  cfg.dim = 10;
  cfg.epochs = 2;

  const PerSliceModels models = train_per_slice(corpus, vocab, cfg);
  REQUIRE(models.labels.size() == 2);
  CHECK(models.seeds[0] != models.seeds[1]);
  // Identical text, different seeds: the spaces must differ.
  CHECK(matrix_hash(models.contexts[0]) != matrix_hash(models.contexts[1]));
}

TEST_CASE("an empty slice cannot be trained per-slice") {
  TempDir dir;
  write_corpus(dir.path(), {"1900", "1950"}, {{"a b a b"}, {""}});
  const Vocabulary vocab = build_vocabulary(dir.path(), 1);
  const DiachronicCorpus corpus = load_slices(dir.path(), vocab);
  TrainConfig cfg;
  cfg.dim = 4;
  CHECK_THROWS_WITH_AS(train_per_slice(corpus, vocab, cfg),
                       doctest::Contains("1950"), std::runtime_error);
}

TEST_CASE("alignment kind none passes spaces through untouched") {
  const Vocabulary vocab = tiny_vocab(30);
  Rng rng(33);
  const MatrixRM base = random_matrix(30, 6, 34);
  const PerSliceModels models =
      rotated_bundle(vocab, base, {random_orthogonal(6, rng), random_orthogonal(6, rng)});

  AlignOptions opts;
  opts.kind = AlignKind::none;
  const AlignedTemporalModel aligned = align_chain(models, opts);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(matrix_hash(aligned.contexts[i]) == matrix_hash(models.contexts[i]));
    CHECK(matrix_hash(aligned.raw_contexts[i]) == matrix_hash(models.contexts[i]));
  }
}

TEST_CASE("alignment undoes planted rotations of a shared space") {
  const Vocabulary vocab = tiny_vocab(40);
  Rng rng(35);
  const MatrixRM base = random_matrix(40, 8, 36);
  const std::vector<Eigen::MatrixXd> rotations = {
      random_orthogonal(8, rng), random_orthogonal(8, rng), random_orthogonal(8, rng)};
  const PerSliceModels models = rotated_bundle(vocab, base, rotations);

  AlignOptions opts;  // orthogonal, to_reference, reference = last slice
  const AlignedTemporalModel aligned = align_chain(models, opts);
  CHECK(aligned.reference_label == "2000");
  const Eigen::MatrixXd want = base.cast<double>() * rotations[2];
  for (std::size_t i = 0; i < 3; ++i)
    CHECK((aligned.contexts[i].cast<double>() - want).cwiseAbs().maxCoeff() < 1e-4);
  // Raw spaces keep their original coordinates.
  CHECK(matrix_hash(aligned.raw_contexts[0]) == matrix_hash(models.contexts[0]));
}

TEST_CASE("consecutive composition agrees with direct fits on clean data") {
  const Vocabulary vocab = tiny_vocab(50);
  Rng rng(37);
  const MatrixRM base = random_matrix(50, 8, 38);
  const std::vector<Eigen::MatrixXd> rotations = {
      random_orthogonal(8, rng), random_orthogonal(8, rng), random_orthogonal(8, rng),
      random_orthogonal(8, rng)};
  const PerSliceModels models = rotated_bundle(vocab, base, rotations);

  AlignOptions direct;
  AlignOptions chained;
  chained.policy = AlignPolicy::consecutive;
  const AlignedTemporalModel a = align_chain(models, direct);
  const AlignedTemporalModel b = align_chain(models, chained);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK((a.contexts[i].cast<double>() - b.contexts[i].cast<double>()).cwiseAbs().maxCoeff() <
          5e-4);
}

TEST_CASE("two-slice chains make consecutive and to_reference identical") {
  const Vocabulary vocab = tiny_vocab(25);
  Rng rng(39);
  const MatrixRM base = random_matrix(25, 6, 40);
  const PerSliceModels models =
      rotated_bundle(vocab, base, {random_orthogonal(6, rng), random_orthogonal(6, rng)});

  AlignOptions direct;
  AlignOptions chained;
  chained.policy = AlignPolicy::consecutive;
  const AlignedTemporalModel a = align_chain(models, direct);
  const AlignedTemporalModel b = align_chain(models, chained);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(matrix_hash(a.contexts[i]) == matrix_hash(b.contexts[i]));
}

TEST_CASE("alignment option errors") {
  const Vocabulary vocab = tiny_vocab(20);
  Rng rng(41);
  const MatrixRM base = random_matrix(20, 5, 42);
  const PerSliceModels one = rotated_bundle(vocab, base, {random_orthogonal(5, rng)});
  AlignOptions opts;
  CHECK_THROWS_AS(align_chain(one, opts), std::invalid_argument);  // needs two slices

  const PerSliceModels two =
      rotated_bundle(vocab, base, {random_orthogonal(5, rng), random_orthogonal(5, rng)});
  AlignOptions bad_ref;
  bad_ref.reference_label = "1066";
  CHECK_THROWS_AS(align_chain(two, bad_ref), std::runtime_error);

  AlignOptions named;
  named.reference_label = "1900";  // the first slice this time
  const AlignedTemporalModel aligned = align_chain(two, named);
  CHECK(aligned.reference_label == "1900");
  CHECK(matrix_hash(aligned.contexts[0]) == matrix_hash(two.contexts[0]));  // untouched
}

TEST_CASE("name helpers round-trip") {
  CHECK(align_kind_from_name("ortho") == AlignKind::orthogonal);
  CHECK(align_kind_from_name(align_kind_name(AlignKind::linear)) == AlignKind::linear);
  CHECK(align_policy_from_name(align_policy_name(AlignPolicy::consecutive)) ==
        AlignPolicy::consecutive);
  CHECK_THROWS_AS(align_kind_from_name("diagonal"), std::invalid_argument);
}

}  // TEST_SUITE
