#include "tempovec/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tempovec {

namespace fs = std::filesystem;
using nlohmann::json;

const char* method_name(Method m) {
  switch (m) {
    case Method::compass: return "compass";
    case Method::static_pooled: return "static";
    case Method::per_slice: return "per_slice";
  }
  return "compass";
}

Method method_from_name(std::string_view name) {
  if (name == "compass") return Method::compass;
  if (name == "static") return Method::static_pooled;
  if (name == "per_slice") return Method::per_slice;
  throw std::invalid_argument("unknown method: " + std::string(name));
}

int TemporalModel::slice_index(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<int>(i);
  return -1;
}

const MatrixRM* TemporalModel::representation(std::string_view label) const {
  if (time_independent()) return &pooled_context;
  const int i = slice_index(label);
  return i < 0 ? nullptr : &slice_reps[static_cast<std::size_t>(i)];
}

int TemporalModel::heldout_slices() const {
  return time_independent() ? 1 : static_cast<int>(labels.size());
}

const MatrixRM& TemporalModel::heldout_context(int slice) const {
  switch (method) {
    case Method::static_pooled: return pooled_context;
    case Method::compass:
      return specular ? pooled_context : slice_reps[static_cast<std::size_t>(slice)];
    case Method::per_slice:
      return align_kind == AlignKind::none ? slice_reps[static_cast<std::size_t>(slice)]
                                           : raw_contexts[static_cast<std::size_t>(slice)];
  }
  return pooled_context;
}

const MatrixRM& TemporalModel::heldout_target(int slice) const {
  switch (method) {
    case Method::static_pooled: return pooled_target;
    case Method::compass:
      return specular ? slice_reps[static_cast<std::size_t>(slice)] : pooled_target;
    case Method::per_slice: return slice_targets[static_cast<std::size_t>(slice)];
  }
  return pooled_target;
}

const std::vector<TokenId>* TemporalModel::untrained_of(std::string_view label) const {
  const int i = slice_index(label);
  if (i < 0 || static_cast<std::size_t>(i) >= untrained.size()) return nullptr;
  return &untrained[static_cast<std::size_t>(i)];
}

TemporalModel to_temporal(CompassModel&& m) {
  TemporalModel out;
  out.method = Method::compass;
  out.specular = m.specular;
  out.init_mode = m.init_mode;
  out.vocab = std::move(m.vocab);
  out.labels = std::move(m.labels);
  out.pooled_target = std::move(m.atemporal_target.w);
  out.pooled_context = std::move(m.atemporal_context.w);
  out.slice_reps = std::move(m.slice_contexts);
  out.untrained = std::move(m.provenance.untrained);
  out.slice_seeds = std::move(m.provenance.slice_seeds);
  out.config = m.config;
  out.static_epochs = m.provenance.static_epochs;
  out.dynamic_epochs = m.provenance.dynamic_epochs;
  return out;
}

TemporalModel to_temporal(StaticModel&& m) {
  TemporalModel out;
  out.method = Method::static_pooled;
  out.vocab = std::move(m.vocab);
  out.pooled_target = std::move(m.target.w);
  out.pooled_context = std::move(m.context.w);
  out.config = m.config;
  out.static_epochs = m.config.epochs;
  return out;
}

TemporalModel to_temporal(AlignedTemporalModel&& m) {
  TemporalModel out;
  out.method = Method::per_slice;
  out.align_kind = m.kind;
  out.align_policy = m.policy;
  out.reference_label = std::move(m.reference_label);
  out.vocab = std::move(m.vocab);
  out.labels = std::move(m.labels);
  out.slice_reps = std::move(m.contexts);
  out.raw_contexts = std::move(m.raw_contexts);
  out.slice_targets = std::move(m.targets);
  out.untrained = std::move(m.untrained);
  out.slice_seeds = std::move(m.seeds);
  out.config = m.config;
  out.dynamic_epochs = m.config.epochs;
  return out;
}

namespace {

void write_text_row(std::FILE* f, const std::string& token, const MatrixRM& m, Eigen::Index r) {
  std::fputs(token.c_str(), f);
  char buf[40];
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    // %.9g round-trips every 32-bit float exactly.
    std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(m(r, c)));
    std::fputs(buf, f);
  }
  std::fputc('\n', f);
}

[[noreturn]] void fail_open(const fs::path& file, const char* what) {
  throw std::runtime_error(std::string(what) + ": " + file.string());
}

}  // namespace

void save_vectors(const fs::path& file, const Vocabulary& vocab, const MatrixRM& m, bool binary) {
  if (m.rows() != vocab.size())
    throw std::invalid_argument("matrix rows do not match vocabulary size");
  if (binary) {
    std::ofstream out(file, std::ios::binary);
    if (!out) fail_open(file, "cannot write vector file");
    out << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      out << vocab.token(static_cast<TokenId>(r)) << ' ';
      out.write(reinterpret_cast<const char*>(m.row(r).data()),
                static_cast<std::streamsize>(sizeof(float)) * m.cols());
      out.put('\n');
    }
    if (!out) fail_open(file, "short write on vector file");
    return;
  }
  std::FILE* f = std::fopen(file.string().c_str(), "w");
  if (!f) fail_open(file, "cannot write vector file");
  std::fprintf(f, "%lld %lld\n", static_cast<long long>(m.rows()),
               static_cast<long long>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    write_text_row(f, vocab.token(static_cast<TokenId>(r)), m, r);
  if (std::fclose(f) != 0) fail_open(file, "short write on vector file");
}

MatrixRM load_vectors(const fs::path& file, const Vocabulary& vocab, bool binary) {
  std::ifstream in(file, binary ? std::ios::binary : std::ios::in);
  if (!in) fail_open(file, "cannot read vector file");

  std::string header;
  if (!std::getline(in, header)) fail_open(file, "empty vector file");
  std::istringstream hs(header);
  long long rows = 0, cols = 0;
  if (!(hs >> rows >> cols) || rows < 0 || cols < 1)
    throw std::runtime_error("malformed vector file header: " + file.string());
  if (rows != vocab.size())
    throw std::runtime_error("vector file row count " + std::to_string(rows) +
                             " does not match vocabulary size " + std::to_string(vocab.size()) +
                             ": " + file.string());

  MatrixRM m(rows, cols);
  std::string token;
  if (binary) {
    for (long long r = 0; r < rows; ++r) {
      token.clear();
      char ch;
      while (in.get(ch) && ch != ' ') token.push_back(ch);
      if (token != vocab.token(static_cast<TokenId>(r)))
        throw std::runtime_error("vector file word " + std::to_string(r) + " is '" + token +
                                 "', expected '" + vocab.token(static_cast<TokenId>(r)) +
                                 "': " + file.string());
      in.read(reinterpret_cast<char*>(m.row(r).data()),
              static_cast<std::streamsize>(sizeof(float)) * cols);
      in.get(ch);  // trailing newline
      if (!in) fail_open(file, "truncated vector file");
    }
  } else {
    for (long long r = 0; r < rows; ++r) {
      if (!(in >> token)) fail_open(file, "truncated vector file");
      if (token != vocab.token(static_cast<TokenId>(r)))
        throw std::runtime_error("vector file word " + std::to_string(r) + " is '" + token +
                                 "', expected '" + vocab.token(static_cast<TokenId>(r)) +
                                 "': " + file.string());
      for (long long c = 0; c < cols; ++c)
        if (!(in >> m(r, c))) fail_open(file, "truncated vector file");
    }
  }
  return m;
}

namespace {

json config_to_json(const TrainConfig& c) {
  return json{{"dim", c.dim},
              {"window", c.window},
              {"negatives", c.negatives},
              {"lr_initial", c.lr_initial},
              {"lr_min", c.resolved_lr_min()},
              {"arch", arch_name(c.arch)},
              {"seed", c.seed},
              {"subsample_threshold", c.subsample_threshold},
              {"dynamic_window", c.dynamic_window},
              {"mean_gradient", c.mean_gradient},
              {"sigmoid_table", c.sigmoid_table},
              {"negative_exponent", c.negative_exponent}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.dim = j.at("dim").get<int>();
  c.window = j.at("window").get<int>();
  c.negatives = j.at("negatives").get<int>();
  c.lr_initial = j.at("lr_initial").get<double>();
  c.lr_min = j.at("lr_min").get<double>();
  c.arch = arch_from_name(j.at("arch").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.subsample_threshold = j.at("subsample_threshold").get<double>();
  c.dynamic_window = j.at("dynamic_window").get<bool>();
  c.mean_gradient = j.at("mean_gradient").get<bool>();
  c.sigmoid_table = j.at("sigmoid_table").get<bool>();
  c.negative_exponent = j.at("negative_exponent").get<double>();
  return c;
}

void write_json(const fs::path& file, const json& j) {
  std::ofstream out(file);
  if (!out) fail_open(file, "cannot write");
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) fail_open(file, "cannot read");
  json j;
  in >> j;
  return j;
}

}  // namespace

void save_model(const TemporalModel& model, const fs::path& dir, bool binary) {
  fs::create_directories(dir);
  save_vocabulary(model.vocab, dir / "vocab.tsv");

  if (model.pooled_target.rows() > 0)
    save_vectors(dir / "compass.vec", model.vocab, model.pooled_target, binary);
  if (model.pooled_context.rows() > 0)
    save_vectors(dir / "context.vec", model.vocab, model.pooled_context, binary);

  if (!model.labels.empty()) {
    fs::create_directories(dir / "slices");
    for (std::size_t i = 0; i < model.labels.size(); ++i)
      save_vectors(dir / "slices" / (model.labels[i] + ".vec"), model.vocab, model.slice_reps[i],
                   binary);
  }
  if (model.method == Method::per_slice) {
    fs::create_directories(dir / "targets");
    for (std::size_t i = 0; i < model.labels.size(); ++i)
      save_vectors(dir / "targets" / (model.labels[i] + ".vec"), model.vocab,
                   model.slice_targets[i], binary);
    if (model.align_kind != AlignKind::none) {
      fs::create_directories(dir / "raw_slices");
      for (std::size_t i = 0; i < model.labels.size(); ++i)
        save_vectors(dir / "raw_slices" / (model.labels[i] + ".vec"), model.vocab,
                     model.raw_contexts[i], binary);
    }
  }

  json meta;
  meta["format_version"] = kModelFormatVersion;
  meta["tool"] = kToolName;
  meta["tool_version"] = kToolVersion;
  meta["vector_format"] = binary ? "binary" : "text";
  meta["method"] = method_name(model.method);
  meta["labels"] = model.labels;
  meta["config"] = config_to_json(model.config);
  meta["static_epochs"] = model.static_epochs;
  meta["dynamic_epochs"] = model.dynamic_epochs;
  meta["vocab_hash"] = hash_hex(model.vocab.content_hash());
  if (model.method == Method::compass) {
    meta["specular"] = model.specular;
    meta["init_mode"] = slice_init_name(model.init_mode);
  }
  if (model.method == Method::per_slice) {
    meta["align"] = json{{"kind", align_kind_name(model.align_kind)},
                         {"policy", align_policy_name(model.align_policy)},
                         {"reference", model.reference_label}};
  }
  if (!model.slice_seeds.empty()) meta["slice_seeds"] = model.slice_seeds;
  json untrained = json::object();
  for (std::size_t i = 0; i < model.untrained.size(); ++i)
    untrained[model.labels[i]] = model.untrained[i];
  meta["untrained"] = untrained;
  meta["manifest"] = model.manifest.is_null() ? json::object() : model.manifest;
  write_json(dir / "meta.json", meta);
}

TemporalModel load_model(const fs::path& dir, bool force) {
  const json meta = read_json(dir / "meta.json");
  if (meta.at("format_version").get<int>() != kModelFormatVersion && !force)
    throw std::runtime_error("unsupported model format version in " + dir.string());

  TemporalModel model;
  model.vocab = load_vocabulary(dir / "vocab.tsv");
  const std::string stored_hash = meta.at("vocab_hash").get<std::string>();
  if (!force && stored_hash != hash_hex(model.vocab.content_hash()))
    throw std::runtime_error("vocabulary hash mismatch in " + dir.string() +
                             " (expected " + stored_hash + "); pass --force to ignore");

  model.method = method_from_name(meta.at("method").get<std::string>());
  model.labels = meta.at("labels").get<std::vector<std::string>>();
  model.config = config_from_json(meta.at("config"));
  model.static_epochs = meta.at("static_epochs").get<int>();
  model.dynamic_epochs = meta.at("dynamic_epochs").get<int>();
  if (meta.contains("specular")) model.specular = meta["specular"].get<bool>();
  if (meta.contains("init_mode"))
    model.init_mode = slice_init_from_name(meta["init_mode"].get<std::string>());
  if (meta.contains("align")) {
    model.align_kind = align_kind_from_name(meta["align"].at("kind").get<std::string>());
    model.align_policy = align_policy_from_name(meta["align"].at("policy").get<std::string>());
    model.reference_label = meta["align"].at("reference").get<std::string>();
  }
  if (meta.contains("slice_seeds"))
    model.slice_seeds = meta["slice_seeds"].get<std::vector<std::uint64_t>>();
  model.untrained.resize(model.labels.size());
  if (meta.contains("untrained"))
    for (std::size_t i = 0; i < model.labels.size(); ++i)
      if (meta["untrained"].contains(model.labels[i]))
        model.untrained[i] = meta["untrained"][model.labels[i]].get<std::vector<TokenId>>();
  model.manifest = meta.contains("manifest") ? meta["manifest"] : json::object();

  const bool binary = meta.at("vector_format").get<std::string>() == "binary";
  if (fs::exists(dir / "compass.vec"))
    model.pooled_target = load_vectors(dir / "compass.vec", model.vocab, binary);
  if (fs::exists(dir / "context.vec"))
    model.pooled_context = load_vectors(dir / "context.vec", model.vocab, binary);
  for (const auto& label : model.labels)
    model.slice_reps.push_back(load_vectors(dir / "slices" / (label + ".vec"), model.vocab, binary));
  if (model.method == Method::per_slice) {
    for (const auto& label : model.labels)
      model.slice_targets.push_back(
          load_vectors(dir / "targets" / (label + ".vec"), model.vocab, binary));
    if (model.align_kind != AlignKind::none)
      for (const auto& label : model.labels)
        model.raw_contexts.push_back(
            load_vectors(dir / "raw_slices" / (label + ".vec"), model.vocab, binary));
  }

  if (!force) {
    const int d = model.config.dim;
    auto check_dim = [&](const MatrixRM& m, const char* name) {
      if (m.rows() > 0 && m.cols() != d)
        throw std::runtime_error(std::string("dimension mismatch in ") + name + " of " +
                                 dir.string());
    };
    check_dim(model.pooled_target, "compass.vec");
    check_dim(model.pooled_context, "context.vec");
    for (const auto& m : model.slice_reps) check_dim(m, "slices");
    for (const auto& m : model.slice_targets) check_dim(m, "targets");
    for (const auto& m : model.raw_contexts) check_dim(m, "raw_slices");
  }
  return model;
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash_hex(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail_open(file, "cannot read");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
  return hash_hex(h);
}

json make_manifest(std::string_view command, const std::vector<std::string>& inputs) {
  json m;
  m["tool"] = kToolName;
  m["tool_version"] = kToolVersion;
  m["command"] = std::string(command);
  json files = json::object();
  for (const auto& path : inputs) files[path] = file_hash_hex(path);
  m["inputs"] = files;
  return m;
}

}  // namespace tempovec
