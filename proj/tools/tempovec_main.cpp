// Command-line front end: vocabulary building, training, evaluation,
// neighbor queries and plot-data export over one model directory
// format. Exit codes: 0 success, 2 bad input, 3 internal failure.
#include "tempovec/analogy.hpp"
#include "tempovec/baselines.hpp"
#include "tempovec/compass.hpp"
#include "tempovec/heldout.hpp"
#include "tempovec/model_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tempovec;
using nlohmann::json;

namespace {

std::string join_command(int argc, char** argv) {
  std::string cmd = "tempovec";
  for (int i = 1; i < argc; ++i) {
    cmd += ' ';
    cmd += argv[i];
  }
  return cmd;
}

std::vector<std::string> corpus_input_files(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& path : list_slice_files(dir)) files.push_back(path.string());
  return files;
}

void check_expected_hash(const TemporalModel& model, const std::string& expected, bool force) {
  if (expected.empty()) return;
  const std::string actual = hash_hex(model.vocab.content_hash());
  if (actual != expected && !force)
    throw std::runtime_error("model vocabulary hash " + actual + " does not match expected " +
                             expected + "; pass --force to evaluate anyway");
}

struct VocabArgs {
  std::string corpus;
  std::string out;
  int min_count = 5;
};

void run_vocab(const VocabArgs& a) {
  const Vocabulary vocab = build_vocabulary(a.corpus, a.min_count);
  save_vocabulary(vocab, a.out);
  std::printf("%d words (%lld tokens) -> %s\n", vocab.size(),
              static_cast<long long>(vocab.total_count()), a.out.c_str());
}

struct TrainArgs {
  std::string corpus;
  std::string out;
  std::string method = "compass";
  std::string arch = "cbow";
  std::string align_policy = "to_reference";
  std::string reference;
  int size = 50;
  int window = 5;
  int negative = 5;
  int min_count = 5;
  int static_iter = 5;
  int dyn_iter = 5;
  int workers = 1;
  int chunk_words = 0;
  double lr = 0.025;
  double lr_min = -1.0;
  double subsample = 1e-3;
  double negative_exponent = 0.75;
  std::uint64_t seed = 1;
  std::int64_t anchor_min_count = 0;
  bool init_from_compass = false;
  bool fixed_window = false;
  bool word2vec_gradient = false;
  bool sigmoid_table = false;
  bool specular = false;
  bool binary = false;
};

void print_summary(const char* what, const TrainSummary& s) {
  std::printf("%s: %llu samples", what, static_cast<unsigned long long>(s.samples));
  if (!s.epoch_mean_loss.empty())
    std::printf(", final epoch mean loss %.6f", s.epoch_mean_loss.back());
  std::printf("\n");
}

void run_train(const TrainArgs& a, const std::string& command) {
  const Vocabulary vocab = build_vocabulary(a.corpus, a.min_count);
  const DiachronicCorpus corpus = load_slices(a.corpus, vocab, a.chunk_words);

  TrainConfig base;
  base.dim = a.size;
  base.window = a.window;
  base.negatives = a.negative;
  base.lr_initial = a.lr;
  base.lr_min = a.lr_min;
  base.arch = arch_from_name(a.arch);
  base.seed = a.seed;
  base.subsample_threshold = a.subsample;
  base.dynamic_window = !a.fixed_window;
  base.mean_gradient = !a.word2vec_gradient;
  base.sigmoid_table = a.sigmoid_table;
  base.negative_exponent = a.negative_exponent;

  json manifest = make_manifest(command, corpus_input_files(a.corpus));
  manifest["corpus"] = a.corpus;
  manifest["method"] = a.method;
  manifest["min_count"] = a.min_count;
  manifest["chunk_words"] = a.chunk_words;
  manifest["seed"] = a.seed;
  manifest["workers"] = a.workers;
  manifest["deterministic"] = a.workers == 1;

  TemporalModel model;
  if (a.method == "compass") {
    CompassOptions opts;
    opts.base = base;
    opts.static_epochs = a.static_iter;
    opts.dynamic_epochs = a.dyn_iter;
    opts.init_mode = a.init_from_compass ? SliceInit::from_compass_context : SliceInit::random;
    opts.specular = a.specular;
    opts.workers = a.workers;
    CompassModel trained = train_all(corpus, vocab, opts);
    print_summary("pooled pass", trained.provenance.static_summary);
    for (std::size_t i = 0; i < trained.labels.size(); ++i)
      print_summary(("slice " + trained.labels[i]).c_str(),
                    trained.provenance.slice_summaries[i]);
    model = to_temporal(std::move(trained));
  } else if (a.method == "static") {
    TrainConfig cfg = base;
    cfg.epochs = a.static_iter;
    StaticModel trained = train_static(corpus, vocab, cfg, a.workers);
    print_summary("pooled pass", trained.summary);
    model = to_temporal(std::move(trained));
  } else {  // linear / ortho
    TrainConfig cfg = base;
    cfg.epochs = a.dyn_iter;
    PerSliceModels per = train_per_slice(corpus, vocab, cfg, a.workers);
    for (std::size_t i = 0; i < per.labels.size(); ++i)
      print_summary(("slice " + per.labels[i]).c_str(), per.summaries[i]);
    AlignOptions opts;
    opts.kind = align_kind_from_name(a.method);
    opts.policy = align_policy_from_name(a.align_policy);
    opts.reference_label = a.reference;
    opts.anchor_min_count = a.anchor_min_count;
    model = to_temporal(align_chain(per, opts));
  }
  model.manifest = std::move(manifest);
  save_model(model, a.out, a.binary);
  std::printf("model written to %s (%d words, dim %d)\n", a.out.c_str(), model.vocab.size(),
              model.config.dim);
}

struct EvalAnalogyArgs {
  std::string model;
  std::string testset;
  std::string out;
  std::string expect_vocab_hash;
  int cutoff = 0;
  bool exclude_untrained = false;
  bool dot = false;
  bool strict_oov = false;
  bool force = false;
};

void run_eval_analogy(const EvalAnalogyArgs& a, const std::string& command) {
  TemporalModel model = load_model(a.model, a.force);
  check_expected_hash(model, a.expect_vocab_hash, a.force);

  TestsetLoadResult ts = load_testset(a.testset);
  for (const auto& w : ts.warnings) std::fprintf(stderr, "testset: %s\n", w.c_str());

  ScoreOptions opts;
  opts.exclude_untrained = a.exclude_untrained;
  opts.dot_similarity = a.dot;
  opts.rank_cutoff = a.cutoff;
  opts.strict_oov = a.strict_oov;

  AnalogyReport report = score(ts.queries, model, opts);
  report.manifest = make_manifest(command, {a.testset});
  report.manifest["model_dir"] = a.model;
  report.manifest["model_vocab_hash"] = hash_hex(model.vocab.content_hash());
  report.manifest["model"] = model.manifest;
  report.manifest["testset_warnings"] = ts.warnings.size();

  fs::create_directories(a.out);
  write_report_json(report, ts.queries, fs::path(a.out) / "report.json");
  write_summary_csv(report, fs::path(a.out) / "summary.csv");
  write_categories_csv(report, fs::path(a.out) / "categories.csv");
  write_timedepth_csv(report, fs::path(a.out) / "timedepth.csv");

  const auto line = [&](const char* name, const MetricBlock& b) {
    std::printf("%-8s n=%-6zu MRR=%.4f", name, b.count, b.mrr);
    for (int k : report.options.ks) std::printf(" MP@%d=%.4f", k, b.mp.at(k));
    std::printf("\n");
  };
  line("all", report.all);
  line("static", report.statics);
  line("dynamic", report.dynamics);
  std::printf("scored %zu of %zu queries (%zu skipped)\n", report.scored, report.total,
              report.skipped);
}

struct EvalHeldoutArgs {
  std::string model;
  std::string corpus;
  std::string out;
  std::string metric = "both";
  std::string expect_vocab_hash;
  int negative = 5;
  int window = 0;
  int chunk_words = 0;
  std::uint64_t seed = 1;
  double negative_exponent = 0.75;
  bool sum_negatives = false;
  bool force = false;
};

void run_eval_heldout(const EvalHeldoutArgs& a, const std::string& command) {
  TemporalModel model = load_model(a.model, a.force);
  check_expected_hash(model, a.expect_vocab_hash, a.force);
  const DiachronicCorpus heldout = load_slices(a.corpus, model.vocab, a.chunk_words);

  HeldoutOptions opts;
  opts.negatives = a.negative;
  opts.seed = a.seed;
  opts.average_negatives = !a.sum_negatives;
  opts.window = a.window;
  opts.negative_exponent = a.negative_exponent;
  opts.chunk_words = a.chunk_words;

  HeldoutReport report = evaluate_heldout(model, heldout, opts);
  report.manifest = make_manifest(command, corpus_input_files(a.corpus));
  report.manifest["model_dir"] = a.model;
  report.manifest["model_vocab_hash"] = hash_hex(model.vocab.content_hash());
  report.manifest["model"] = model.manifest;
  report.manifest["metric"] = a.metric;

  fs::create_directories(a.out);
  write_heldout_json(report, fs::path(a.out) / "heldout.json");
  write_heldout_csv(report, fs::path(a.out) / "heldout.csv");

  if (report.degenerate) std::printf("degenerate: single scoring class, posterior trivially 1\n");
  for (const auto& s : report.slices) {
    std::printf("slice %-8s N=%-8lld", s.label.c_str(), static_cast<long long>(s.positions));
    if (a.metric != "posterior") std::printf(" L=%.6f", s.normalized_ll);
    if (a.metric != "likelihood")
      std::printf(" P=%.6f logP=%.6f", s.posterior_true, s.log_posterior_true);
    std::printf("\n");
  }
  if (a.metric != "posterior") std::printf("mean L = %.6f\n", report.mean_normalized_ll);
  if (a.metric != "likelihood")
    std::printf("mean P = %.6f  mean logP = %.6f\n", report.mean_posterior_true,
                report.mean_log_posterior_true);
}

struct NnArgs {
  std::string model;
  std::string word;
  std::string slice;
  std::string to;
  int k = 10;
  bool cross = false;
  bool exclude_untrained = false;
  bool force = false;
};

void run_nn(const NnArgs& a) {
  TemporalModel model = load_model(a.model, a.force);
  ScoreOptions opts;
  opts.exclude_untrained = a.exclude_untrained;
  AnalogyScorer scorer(model, opts);
  const std::string target_slice = a.cross ? a.to : a.slice;
  const auto neighbors = scorer.nearest(a.word, a.slice, target_slice, a.k);
  for (const auto& n : neighbors)
    std::printf("%s\t%.6f\n", model.vocab.token(n.id).c_str(), n.similarity);
}

MetricBlock block_from_json(const json& j) {
  MetricBlock b;
  b.count = j.at("count").get<std::size_t>();
  b.mrr = j.at("mrr").get<double>();
  for (const auto& [k, v] : j.at("mp").items()) b.mp[std::stoi(k)] = v.get<double>();
  return b;
}

json read_report(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read report: " + file);
  json j;
  in >> j;
  return j;
}

void run_export_timedepth(const std::string& report_file, const std::string& out) {
  const json j = read_report(report_file);
  AnalogyReport report;
  for (const auto& [key, val] : j.at("by_time_depth").items())
    report.by_depth[std::stoll(key)] = block_from_json(val);
  write_timedepth_csv(report, out);
}

void run_export_categories(const std::string& report_file, const std::string& out) {
  const json j = read_report(report_file);
  AnalogyReport report;
  for (const auto& [key, val] : j.at("by_category").items())
    report.by_category[key] = block_from_json(val);
  write_categories_csv(report, out);
}

struct PcaArgs {
  std::string model;
  std::string out;
  std::vector<std::string> words;
  std::vector<std::string> slices;
  bool force = false;
};

void run_export_pca(const PcaArgs& a) {
  const TemporalModel model = load_model(a.model, a.force);
  export_pca_trajectories(model, a.words, a.slices, a.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temporal word embeddings trained against a frozen compass"};
  app.require_subcommand(1);
  const std::string command = join_command(argc, argv);

  VocabArgs vocab_args;
  auto* vocab_cmd = app.add_subcommand("vocab", "build and save a vocabulary");
  vocab_cmd->add_option("--corpus", vocab_args.corpus, "corpus directory of <label>.txt files")
      ->required();
  vocab_cmd->add_option("--out", vocab_args.out, "output TSV file")->required();
  vocab_cmd->add_option("--min-count", vocab_args.min_count, "discard rarer words");
  vocab_cmd->callback([&] { run_vocab(vocab_args); });

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a temporal model");
  train_cmd->add_option("--corpus", train_args.corpus, "corpus directory")->required();
  train_cmd->add_option("--out", train_args.out, "model output directory")->required();
  train_cmd->add_option("--method", train_args.method, "training method")
      ->check(CLI::IsMember({"compass", "static", "linear", "ortho"}));
  train_cmd->add_option("--size", train_args.size, "embedding dimension");
  train_cmd->add_option("--window", train_args.window, "context window");
  train_cmd->add_option("--negative", train_args.negative, "negative samples per position");
  train_cmd->add_option("--min-count", train_args.min_count, "discard rarer words");
  train_cmd->add_option("--static-iter", train_args.static_iter, "pooled-pass epochs");
  train_cmd->add_option("--dyn-iter", train_args.dyn_iter, "per-slice epochs");
  train_cmd->add_flag("--init-context-from-compass", train_args.init_from_compass,
                      "start slice contexts from the pooled context matrix");
  train_cmd->add_option("--arch", train_args.arch, "architecture")
      ->check(CLI::IsMember({"cbow", "sg"}));
  train_cmd->add_option("--seed", train_args.seed, "random seed");
  train_cmd->add_option("--workers", train_args.workers, "worker threads (1 = deterministic)")
      ->envname("TEMPOVEC_WORKERS");
  train_cmd->add_option("--lr", train_args.lr, "initial learning rate");
  train_cmd->add_option("--lr-min", train_args.lr_min, "learning-rate floor");
  train_cmd->add_option("--subsample", train_args.subsample,
                        "frequent-word downsampling threshold (0 off)");
  train_cmd->add_option("--chunk-words", train_args.chunk_words,
                        "split lines into chunks of this many words");
  train_cmd->add_flag("--fixed-window", train_args.fixed_window,
                      "disable per-position window shrinking");
  train_cmd->add_flag("--word2vec-gradient", train_args.word2vec_gradient,
                      "distribute context gradients unscaled");
  train_cmd->add_flag("--sigmoid-table", train_args.sigmoid_table,
                      "use the 1000-bin sigmoid lookup table");
  train_cmd->add_flag("--specular", train_args.specular,
                      "compass variant: freeze contexts, train per-slice targets");
  train_cmd->add_option("--align-policy", train_args.align_policy, "alignment composition")
      ->check(CLI::IsMember({"to_reference", "consecutive"}));
  train_cmd->add_option("--reference", train_args.reference,
                        "reference slice label (default: last)");
  train_cmd->add_option("--anchor-min-count", train_args.anchor_min_count,
                        "minimum corpus count for alignment anchors");
  train_cmd->add_option("--negative-exponent", train_args.negative_exponent,
                        "negative-table count exponent");
  train_cmd->add_flag("--binary", train_args.binary, "write binary vector files");
  train_cmd->callback([&] { run_train(train_args, command); });

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model");
  eval_cmd->require_subcommand(1);

  EvalAnalogyArgs ana_args;
  auto* ana_cmd = eval_cmd->add_subcommand("analogy", "temporal analogy metrics");
  ana_cmd->add_option("--model", ana_args.model, "model directory")->required();
  ana_cmd->add_option("--testset", ana_args.testset, "analogy TSV")->required();
  ana_cmd->add_option("--out", ana_args.out, "report output directory")->required();
  ana_cmd->add_option("--cutoff", ana_args.cutoff, "rank cutoff (0 = none)");
  ana_cmd->add_flag("--exclude-untrained", ana_args.exclude_untrained,
                    "drop untrained candidate rows");
  ana_cmd->add_flag("--dot", ana_args.dot, "rank by dot product instead of cosine");
  ana_cmd->add_flag("--strict-oov", ana_args.strict_oov, "score skipped queries as rank infinity");
  ana_cmd->add_option("--expect-vocab-hash", ana_args.expect_vocab_hash,
                      "refuse models whose vocabulary hash differs");
  ana_cmd->add_flag("--force", ana_args.force, "ignore hash and consistency checks");
  ana_cmd->callback([&] { run_eval_analogy(ana_args, command); });

  EvalHeldoutArgs ho_args;
  auto* ho_cmd = eval_cmd->add_subcommand("heldout", "held-out likelihood and posterior");
  ho_cmd->add_option("--model", ho_args.model, "model directory")->required();
  ho_cmd->add_option("--corpus", ho_args.corpus, "held-out corpus directory")->required();
  ho_cmd->add_option("--out", ho_args.out, "report output directory")->required();
  ho_cmd->add_option("--metric", ho_args.metric, "which metrics to print")
      ->check(CLI::IsMember({"likelihood", "posterior", "both"}));
  ho_cmd->add_option("--negative", ho_args.negative, "negatives per scored position");
  ho_cmd->add_option("--seed", ho_args.seed, "negative-sampling seed");
  ho_cmd->add_option("--window", ho_args.window, "scoring window (0 = model's)");
  ho_cmd->add_option("--chunk-words", ho_args.chunk_words,
                     "split lines into chunks of this many words");
  ho_cmd->add_flag("--sum-negatives", ho_args.sum_negatives,
                   "sum the negative half instead of averaging");
  ho_cmd->add_option("--negative-exponent", ho_args.negative_exponent,
                     "negative-table count exponent");
  ho_cmd->add_option("--expect-vocab-hash", ho_args.expect_vocab_hash,
                     "refuse models whose vocabulary hash differs");
  ho_cmd->add_flag("--force", ho_args.force, "ignore hash and consistency checks");
  ho_cmd->callback([&] { run_eval_heldout(ho_args, command); });

  NnArgs nn_args;
  auto* nn_cmd = app.add_subcommand("nn", "nearest neighbors of a word in a slice");
  nn_cmd->add_option("--model", nn_args.model, "model directory")->required();
  nn_cmd->add_option("--word", nn_args.word, "query word")->required();
  nn_cmd->add_option("--slice", nn_args.slice, "slice of the query vector")->required();
  auto* to_opt = nn_cmd->add_option("--to", nn_args.to, "slice of the candidates");
  nn_cmd->add_flag("--cross", nn_args.cross, "rank candidates of a different slice")
      ->needs(to_opt);
  nn_cmd->add_option("-k,--k", nn_args.k, "neighbors to print");
  nn_cmd->add_flag("--exclude-untrained", nn_args.exclude_untrained,
                   "drop untrained candidate rows");
  nn_cmd->add_flag("--force", nn_args.force, "ignore hash and consistency checks");
  nn_cmd->callback([&] { run_nn(nn_args); });

  auto* export_cmd = app.add_subcommand("export", "plot-data CSV exports");
  export_cmd->require_subcommand(1);

  std::string td_report, td_out;
  auto* td_cmd = export_cmd->add_subcommand("timedepth", "accuracy by time depth");
  td_cmd->add_option("--report", td_report, "analogy report.json")->required();
  td_cmd->add_option("--out", td_out, "output CSV")->required();
  td_cmd->callback([&] { run_export_timedepth(td_report, td_out); });

  std::string cat_report, cat_out;
  auto* cat_cmd = export_cmd->add_subcommand("categories", "per-category accuracy");
  cat_cmd->add_option("--report", cat_report, "analogy report.json")->required();
  cat_cmd->add_option("--out", cat_out, "output CSV")->required();
  cat_cmd->callback([&] { run_export_categories(cat_report, cat_out); });

  PcaArgs pca_args;
  auto* pca_cmd = export_cmd->add_subcommand("pca", "2-d trajectories of words across slices");
  pca_cmd->add_option("--model", pca_args.model, "model directory")->required();
  pca_cmd->add_option("--words", pca_args.words, "words to project")
      ->required()
      ->delimiter(',');
  pca_cmd->add_option("--slices", pca_args.slices, "slice labels (default: all)")->delimiter(',');
  pca_cmd->add_option("--out", pca_args.out, "output CSV")->required();
  pca_cmd->add_flag("--force", pca_args.force, "ignore hash and consistency checks");
  pca_cmd->callback([&] { run_export_pca(pca_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help text or the usage error
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
