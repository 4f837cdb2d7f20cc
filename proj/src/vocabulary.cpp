#include "tempovec/vocabulary.hpp"

#include "tempovec/types.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tempovec {

namespace {

struct RawEntry {
  std::string token;
  std::int64_t count = 0;
  std::int64_t first_seen = 0;
};

}  // namespace

std::vector<std::string> tokenize_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) {
      std::string tok(line.substr(start, i - start));
      for (char& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.push_back(std::move(tok));
    }
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::int64_t> counts)
    : tokens_(std::move(tokens)), counts_(std::move(counts)) {
  if (tokens_.size() != counts_.size())
    throw std::invalid_argument("vocabulary: tokens and counts differ in length");
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<std::int32_t>(i));
    if (!inserted) throw std::invalid_argument("vocabulary: duplicate token '" + tokens_[i] + "'");
    total_ += counts_[i];
  }
}

std::int32_t Vocabulary::id_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : it->second;
}

double Vocabulary::frequency(std::int32_t id) const {
  return total_ == 0 ? 0.0 : static_cast<double>(count(id)) / static_cast<double>(total_);
}

std::uint64_t Vocabulary::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::int32_t i = 0; i < size(); ++i) {
    const std::string& t = tokens_[static_cast<std::size_t>(i)];
    h = fnv1a(t.data(), t.size(), h);
    std::string c = "\t" + std::to_string(counts_[static_cast<std::size_t>(i)]) + "\n";
    h = fnv1a(c.data(), c.size(), h);
  }
  return h;
}

namespace fsys = std::filesystem;

std::vector<fsys::path> list_slice_files(const fsys::path& corpus_dir) {
  if (!fsys::is_directory(corpus_dir))
    throw std::runtime_error("corpus directory not found: " + corpus_dir.string());
  std::vector<std::pair<long long, fsys::path>> files;
  for (const auto& entry : fsys::directory_iterator(corpus_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    const std::string stem = entry.path().stem().string();
    long long key = 0;
    try {
      std::size_t pos = 0;
      key = std::stoll(stem, &pos);
      if (pos != stem.size()) throw std::invalid_argument(stem);
    } catch (const std::exception&) {
      throw std::runtime_error("slice filename is not an integer label: " +
                               entry.path().filename().string());
    }
    files.emplace_back(key, entry.path());
  }
  if (files.empty())
    throw std::runtime_error("no <label>.txt slice files in " + corpus_dir.string());
  std::sort(files.begin(), files.end());
  std::vector<fsys::path> out;
  out.reserve(files.size());
  for (auto& [key, p] : files) out.push_back(std::move(p));
  return out;
}

Vocabulary build_vocabulary(const fsys::path& corpus_dir, std::int64_t min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  std::unordered_map<std::string, RawEntry> table;
  std::int64_t position = 0;
  for (const auto& file : list_slice_files(corpus_dir)) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read slice file: " + file.string());
    std::string line;
    while (std::getline(in, line)) {
      for (auto& tok : tokenize_line(line)) {
        auto [it, inserted] = table.try_emplace(tok);
        if (inserted) {
          it->second.token = tok;
          it->second.first_seen = position;
        }
        ++it->second.count;
        ++position;
      }
    }
    if (in.bad()) throw std::runtime_error("read error on slice file: " + file.string());
  }

  std::vector<RawEntry> kept;
  kept.reserve(table.size());
  for (auto& [tok, entry] : table)
    if (entry.count >= min_count) kept.push_back(std::move(entry));
  if (kept.empty())
    throw std::runtime_error("no token meets min_count=" + std::to_string(min_count));

  std::sort(kept.begin(), kept.end(), [](const RawEntry& a, const RawEntry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.first_seen < b.first_seen;
  });

  std::vector<std::string> tokens;
  std::vector<std::int64_t> counts;
  tokens.reserve(kept.size());
  counts.reserve(kept.size());
  for (auto& e : kept) {
    tokens.push_back(std::move(e.token));
    counts.push_back(e.count);
  }
  return Vocabulary(std::move(tokens), std::move(counts));
}

void save_vocabulary(const Vocabulary& vocab, const fsys::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write vocabulary file: " + file.string());
  for (std::int32_t i = 0; i < vocab.size(); ++i)
    out << vocab.token(i) << '\t' << vocab.count(i) << '\n';
  if (!out) throw std::runtime_error("write error on vocabulary file: " + file.string());
}

Vocabulary load_vocabulary(const fsys::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read vocabulary file: " + file.string());
  std::vector<std::string> tokens;
  std::vector<std::int64_t> counts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(file.string() + ":" + std::to_string(lineno) +
                               ": expected token<TAB>count");
    tokens.push_back(line.substr(0, tab));
    counts.push_back(std::stoll(line.substr(tab + 1)));
  }
  if (tokens.empty()) throw std::runtime_error("empty vocabulary file: " + file.string());
  return Vocabulary(std::move(tokens), std::move(counts));
}

}  // namespace tempovec
