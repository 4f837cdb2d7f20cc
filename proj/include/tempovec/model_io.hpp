#pragma once

#include "tempovec/baselines.hpp"
#include "tempovec/compass.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tempovec {

inline constexpr const char* kToolName = "tempovec";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kModelFormatVersion = 1;

enum class Method { compass, static_pooled, per_slice };

const char* method_name(Method m);
Method method_from_name(std::string_view name);

/// Uniform evaluation-facing view over every trained model kind.
///
/// `slice_reps` are the per-slice word representations used for
/// cross-slice comparison (analogies, neighbors, trajectories); for a
/// pooled static model there are none and the pooled context matrix
/// answers every query. Held-out scoring instead needs the (input,
/// output) pair that each slice was actually trained with, exposed via
/// heldout_context/heldout_target; for aligned per-slice baselines
/// that pair is the raw pre-alignment one.
struct TemporalModel {
  Method method = Method::compass;
  bool specular = false;                        // compass variant: frozen C, per-slice targets
  SliceInit init_mode = SliceInit::random;      // compass only
  AlignKind align_kind = AlignKind::none;       // per_slice only
  AlignPolicy align_policy = AlignPolicy::to_reference;
  std::string reference_label;

  Vocabulary vocab;
  std::vector<std::string> labels;              // empty for static_pooled

  MatrixRM pooled_target;                       // compass/static: U
  MatrixRM pooled_context;                      // compass/static: C
  std::vector<MatrixRM> slice_reps;             // per label
  std::vector<MatrixRM> raw_contexts;           // per_slice: pre-alignment contexts
  std::vector<MatrixRM> slice_targets;          // per_slice: per-slice output matrices

  std::vector<std::vector<TokenId>> untrained;  // per label
  std::vector<std::uint64_t> slice_seeds;       // per label
  TrainConfig config;
  int static_epochs = 0;
  int dynamic_epochs = 0;
  nlohmann::json manifest;                      // run provenance, persisted as meta.json

  bool time_independent() const { return method == Method::static_pooled; }
  int slice_index(std::string_view label) const;  // -1 when absent

  /// Word representation for a slice label. Static models answer any
  /// label with the pooled matrix; otherwise nullptr when unknown.
  const MatrixRM* representation(std::string_view label) const;

  /// Number of distinct scoring pairs: 1 for static, |labels| else.
  int heldout_slices() const;
  const MatrixRM& heldout_context(int slice) const;
  const MatrixRM& heldout_target(int slice) const;

  /// Per-slice ids to skip under --exclude-untrained; empty for static.
  const std::vector<TokenId>* untrained_of(std::string_view label) const;
};

TemporalModel to_temporal(CompassModel&& m);
TemporalModel to_temporal(StaticModel&& m);
TemporalModel to_temporal(AlignedTemporalModel&& m);

/// word2vec-style vector file: header `<count> <dim>`, then one line
/// per word. Text mode prints floats with enough digits to round-trip
/// exactly; binary mode stores raw little-endian 32-bit floats.
void save_vectors(const std::filesystem::path& file, const Vocabulary& vocab, const MatrixRM& m,
                  bool binary = false);
MatrixRM load_vectors(const std::filesystem::path& file, const Vocabulary& vocab, bool binary);

/// Model directory layout:
///   meta.json                 manifest (config, seeds, hashes, labels)
///   vocab.tsv                 token<TAB>count, id order
///   compass.vec               pooled target matrix U (compass/static)
///   context.vec               pooled context matrix C (compass/static)
///   slices/<label>.vec        per-slice word representations
///   targets/<label>.vec       per-slice output matrices (per_slice)
///   raw_slices/<label>.vec    pre-alignment contexts (aligned per_slice)
void save_model(const TemporalModel& model, const std::filesystem::path& dir,
                bool binary = false);

/// Reloads a model directory, verifying the stored vocabulary hash and
/// dimensions unless `force`.
TemporalModel load_model(const std::filesystem::path& dir, bool force = false);

/// FNV-1a content hash of a file's bytes, as "0x..." hex.
std::string file_hash_hex(const std::filesystem::path& file);
std::string hash_hex(std::uint64_t h);

/// Shared manifest skeleton: tool name/version, command line, seed,
/// resolved worker count, and input file hashes. Deliberately contains
/// nothing time- or host-dependent, so identical runs write identical
/// artifacts.
nlohmann::json make_manifest(std::string_view command, const std::vector<std::string>& inputs);

}  // namespace tempovec
