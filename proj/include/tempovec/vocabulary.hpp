#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tempovec {

/// Token <-> dense id map with corpus-wide counts, shared by every
/// slice and every model trained on the same corpus. Ids are assigned
/// by descending count, ties broken by first occurrence in the corpus,
/// so two builds over the same files agree exactly.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens, std::vector<std::int64_t> counts);

  std::int32_t size() const { return static_cast<std::int32_t>(tokens_.size()); }
  std::int64_t total_count() const { return total_; }

  /// Dense id of a surface token, -1 when absent.
  std::int32_t id_of(std::string_view token) const;
  const std::string& token(std::int32_t id) const { return tokens_[static_cast<std::size_t>(id)]; }
  std::int64_t count(std::int32_t id) const { return counts_[static_cast<std::size_t>(id)]; }
  /// Relative frequency count(id) / total.
  double frequency(std::int32_t id) const;

  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }

  /// FNV-1a over the id-ordered "token\tcount" lines; identifies the
  /// vocabulary independently of any file on disk.
  std::uint64_t content_hash() const;

 private:
  std::vector<std::string> tokens_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::int64_t total_ = 0;
};

/// Scans every slice file in `corpus_dir`, pools counts over the whole
/// corpus and keeps tokens occurring at least `min_count` times.
/// Throws std::runtime_error on an empty directory, an unreadable file,
/// or when no token survives the threshold.
Vocabulary build_vocabulary(const std::filesystem::path& corpus_dir, std::int64_t min_count);

/// One "token\tcount" line per token, in id order.
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& file);
Vocabulary load_vocabulary(const std::filesystem::path& file);

/// Whitespace-split, ASCII-lowercased tokens of one line. Tokens are
/// otherwise taken verbatim: no stemming, no subwords.
std::vector<std::string> tokenize_line(std::string_view line);

/// The `<label>.txt` files of a corpus directory, sorted by numeric
/// label. Throws when the directory is empty or a name does not parse.
std::vector<std::filesystem::path> list_slice_files(const std::filesystem::path& corpus_dir);

}  // namespace tempovec
