#include "tempovec/corpus.hpp"
#include "tempovec/vocabulary.hpp"

#include "support/support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace tempovec;
using testsupport::TempDir;
using testsupport::write_corpus;
using testsupport::write_file;

TEST_SUITE("corpus") {

TEST_CASE("vocabulary keeps only words at or above min_count") {
  TempDir dir;
  write_corpus(dir.path(), {"1900"}, {{"a a a b", "a b c"}});
  const Vocabulary vocab = build_vocabulary(dir.path(), 2);
  CHECK(vocab.size() == 2);
  CHECK(vocab.id_of("a") == 0);  // ids by descending count
  CHECK(vocab.id_of("b") == 1);
  CHECK(vocab.id_of("c") == -1);
  CHECK(vocab.count(0) == 4);
  CHECK(vocab.count(1) == 2);
  CHECK(vocab.total_count() == 6);

  CHECK_THROWS_AS(build_vocabulary(dir.path(), 100), std::runtime_error);
}

TEST_CASE("vocabulary ids break count ties by first occurrence") {
  TempDir dir;
  write_corpus(dir.path(), {"1900"}, {{"zeta alpha zeta alpha"}});
  const Vocabulary vocab = build_vocabulary(dir.path(), 1);
  CHECK(vocab.id_of("zeta") == 0);
  CHECK(vocab.id_of("alpha") == 1);
}

TEST_CASE("tokenizer lowercases and splits on any whitespace") {
  const auto tokens = tokenize_line("  The QUICK\tbrown\r");
  REQUIRE(tokens.size() == 3);
  CHECK(tokens[0] == "the");
  CHECK(tokens[1] == "quick");
  CHECK(tokens[2] == "brown");
  CHECK(tokenize_line("   ").empty());
}

TEST_CASE("slice files sort by numeric label, not lexically") {
  TempDir dir;
  write_corpus(dir.path(), {"990", "1900", "1850"}, {{"a"}, {"a"}, {"a"}});
  const auto files = list_slice_files(dir.path());
  REQUIRE(files.size() == 3);
  CHECK(files[0].stem() == "990");
  CHECK(files[1].stem() == "1850");
  CHECK(files[2].stem() == "1900");

  TempDir bad;
  write_corpus(bad.path(), {"notayear"}, {{"a"}});
  CHECK_THROWS_AS(list_slice_files(bad.path()), std::runtime_error);

  TempDir empty;
  CHECK_THROWS_AS(list_slice_files(empty.path()), std::runtime_error);
}

TEST_CASE("loading drops out-of-vocabulary tokens and empty sentences") {
  TempDir dir;
  write_corpus(dir.path(), {"1900", "1950"},
               {{"a b rare", "rare rare", "", "b a b"}, {"a a b"}});
  const Vocabulary vocab = build_vocabulary(dir.path(), 4);  // a:4 b:4 rare:3
  CHECK(vocab.id_of("rare") == -1);

  const DiachronicCorpus corpus = load_slices(dir.path(), vocab);
  REQUIRE(corpus.n() == 2);
  CHECK(corpus.slices[0].label == "1900");
  CHECK(corpus.slices[0].sentences.size() == 2);  // "rare rare" and "" vanish
  CHECK(corpus.token_count("1900") == 5);
  CHECK(corpus.token_count() == 8);
  CHECK(corpus.index_of("1950") == 1);
  CHECK(corpus.index_of("2000") == -1);
}

TEST_CASE("long lines split into chunks when requested") {
  TempDir dir;
  write_corpus(dir.path(), {"1900"}, {{"a b a b a b a b a b"}});
  const Vocabulary vocab = build_vocabulary(dir.path(), 1);

  const DiachronicCorpus whole = load_slices(dir.path(), vocab, 0);
  CHECK(whole.slices[0].sentences.size() == 1);

  const DiachronicCorpus chunked = load_slices(dir.path(), vocab, 4);
  CHECK(chunked.slices[0].sentences.size() == 3);  // 4 + 4 + 2
  CHECK(chunked.slices[0].sentences[2].size() == 2);
  CHECK(chunked.token_count() == whole.token_count());
}

TEST_CASE("untrained ids are the words a slice never contains") {
  TempDir dir;
  write_corpus(dir.path(), {"1900", "1950"}, {{"a a b b"}, {"a a c c"}});
  const Vocabulary vocab = build_vocabulary(dir.path(), 1);
  const DiachronicCorpus corpus = load_slices(dir.path(), vocab);

  const auto missing1 = untrained_ids(corpus.slices[0], vocab.size());
  REQUIRE(missing1.size() == 1);
  CHECK(missing1[0] == vocab.id_of("c"));
  const auto missing2 = untrained_ids(corpus.slices[1], vocab.size());
  REQUIRE(missing2.size() == 1);
  CHECK(missing2[0] == vocab.id_of("b"));
}

TEST_CASE("keep probability follows the downsampling formula") {
  // (sqrt(f/t) + 1) * t / f, capped at 1.
  CHECK(keep_probability(0.1, 1e-3) == doctest::Approx(0.11).epsilon(1e-12));
  CHECK(keep_probability(1e-3, 1e-3) == 1.0);   // f == t keeps everything
  CHECK(keep_probability(1e-4, 1e-3) == 1.0);   // rare words always kept
  CHECK(keep_probability(0.25, 1e-2) == doctest::Approx((std::sqrt(25.0) + 1.0) / 25.0));
}

TEST_CASE("subsampling disabled consumes no randomness") {
  TempDir dir;
  write_corpus(dir.path(), {"1900"}, {{"a a a a b"}});
  const Vocabulary vocab = build_vocabulary(dir.path(), 1);
  const std::vector<TokenId> sentence = {0, 0, 1, 0};

  Rng used(7);
  const auto kept = subsample(sentence, vocab, 0.0, used);
  CHECK(kept == sentence);
  Rng untouched(7);
  CHECK(used.next() == untouched.next());  // no draw was consumed
}

TEST_CASE("subsampling thins frequent words but keeps rare ones") {
  TempDir dir;
  std::string heavy;
  for (int i = 0; i < 1000; ++i) heavy += "a ";
  heavy += "b";
  write_corpus(dir.path(), {"1900"}, {{heavy}});
  const Vocabulary vocab = build_vocabulary(dir.path(), 1);

  std::vector<TokenId> sentence(1000, vocab.id_of("a"));
  sentence.push_back(vocab.id_of("b"));
  Rng rng(3);
  const auto kept = subsample(sentence, vocab, 1e-3, rng);
  CHECK(kept.size() < 300);  // keep prob of "a" is ~0.033
  CHECK(std::count(kept.begin(), kept.end(), vocab.id_of("b")) == 1);
}

TEST_CASE("fixed-window samples of a three-word sentence") {
  TempDir dir;
  write_corpus(dir.path(), {"1900"}, {{"a b c"}});
  const Vocabulary vocab = build_vocabulary(dir.path(), 1);
  const DiachronicCorpus corpus = load_slices(dir.path(), vocab);

  SampleOptions opts;
  opts.window = 1;
  opts.dynamic_window = false;
  opts.subsample_threshold = 0.0;
  Rng rng(1);
  const auto samples = iterate_samples(corpus, "", vocab, opts, rng);

  REQUIRE(samples.size() == 3);
  const TokenId a = vocab.id_of("a"), b = vocab.id_of("b"), c = vocab.id_of("c");
  CHECK(samples[0].target == a);
  CHECK(samples[0].context == std::vector<TokenId>{b});
  CHECK(samples[1].target == b);
  CHECK(samples[1].context == std::vector<TokenId>{a, c});
  CHECK(samples[2].target == c);
  CHECK(samples[2].context == std::vector<TokenId>{b});
}

TEST_CASE("dynamic windows never exceed the configured span") {
  TempDir dir;
  write_corpus(dir.path(), {"1900"}, {{"a b c d e f g h a b c d e f g h"}});
  const Vocabulary vocab = build_vocabulary(dir.path(), 1);
  const DiachronicCorpus corpus = load_slices(dir.path(), vocab);

  SampleOptions opts;
  opts.window = 3;
  opts.dynamic_window = true;
  Rng rng(11);
  const auto samples = iterate_samples(corpus, "", vocab, opts, rng);
  CHECK(!samples.empty());
  std::set<std::size_t> sizes;
  for (const auto& s : samples) {
    CHECK(s.context.size() <= 6);  // at most `window` per side
    CHECK(!s.context.empty());
    sizes.insert(s.context.size());
  }
  CHECK(sizes.size() > 1);  // the window actually varies
}

TEST_CASE("sampling an unknown slice label fails loudly") {
  TempDir dir;
  write_corpus(dir.path(), {"1900"}, {{"a b"}});
  const Vocabulary vocab = build_vocabulary(dir.path(), 1);
  const DiachronicCorpus corpus = load_slices(dir.path(), vocab);
  SampleOptions opts;
  Rng rng(1);
  CHECK_THROWS_AS(iterate_samples(corpus, "1999", vocab, opts, rng), std::runtime_error);
}

TEST_CASE("negative table probabilities follow count^alpha") {
  TempDir dir;
  write_corpus(dir.path(), {"1900"}, {{"a a a a a a a a b"}});  // counts 8 and 1
  const Vocabulary vocab = build_vocabulary(dir.path(), 1);
  const NegativeTable table(vocab, 0.75);

  const double wa = std::pow(8.0, 0.75);
  const double expected_a = wa / (wa + 1.0);
  CHECK(table.probabilities()[0] == doctest::Approx(expected_a).epsilon(1e-12));

  // Draw frequencies agree with the table within Monte-Carlo noise.
  Rng rng(5);
  int hits = 0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) hits += table.sample(rng) == 0;
  CHECK(static_cast<double>(hits) / draws == doctest::Approx(expected_a).epsilon(0.02));
}

TEST_CASE("negative sampling rejects the excluded id") {
  TempDir dir;
  write_corpus(dir.path(), {"1900"}, {{"a a a a a a a a a a a a a a a a b c"}});
  const Vocabulary vocab = build_vocabulary(dir.path(), 1);
  const NegativeTable table(vocab, 0.75);
  Rng rng(9);
  std::vector<TokenId> negs;
  for (int i = 0; i < 500; ++i) {
    table.sample_excluding(5, 0, rng, negs);  // exclude the dominant word
    REQUIRE(negs.size() == 5);
    for (TokenId id : negs) CHECK(id != 0);
  }
}

TEST_CASE("corpus loading is deterministic") {
  TempDir dir;
  write_corpus(dir.path(), {"1900", "1950"},
               {testsupport::clustered_sentences(3, 4, 50, 5, 42),
                testsupport::clustered_sentences(3, 4, 50, 5, 43)});
  const Vocabulary vocab = build_vocabulary(dir.path(), 1);
  const DiachronicCorpus one = load_slices(dir.path(), vocab);
  const DiachronicCorpus two = load_slices(dir.path(), vocab);
  REQUIRE(one.n() == two.n());
  for (int i = 0; i < one.n(); ++i) CHECK(one.slices[i].sentences == two.slices[i].sentences);
}

}  // TEST_SUITE
