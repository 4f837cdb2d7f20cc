#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tempovec {

/// Embedding tables are row-major so that one token id maps to one
/// contiguous row. Parameters are stored in 32-bit floats; every
/// reduction over them is accumulated in 64-bit.
using MatrixRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVecF = Eigen::RowVectorXf;
using RowVecD = Eigen::RowVectorXd;

using TokenId = std::int32_t;

enum class Role { target, context };

inline const char* role_name(Role r) { return r == Role::target ? "target" : "context"; }

inline bool all_finite(const MatrixRM& m) { return m.allFinite(); }

// FNV-1a, used for content hashes of files and parameter matrices.
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(std::span<const char> bytes,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(bytes.data(), bytes.size(), h);
}

/// Byte hash of the raw float storage. Rows are contiguous (row-major),
/// so this is a stable fingerprint of the exact parameter values.
inline std::uint64_t matrix_hash(const MatrixRM& m) {
  if (m.size() == 0) return fnv1a(nullptr, 0);
  return fnv1a(m.data(), sizeof(float) * static_cast<std::size_t>(m.size()));
}

/// Deterministic pairwise summation; order does not depend on how the
/// values were produced, only on their positions.
double pairwise_sum(std::span<const double> xs);

/// Cosine similarity of two float rows, accumulated in 64-bit.
/// Returns 0 when either vector is zero.
double cosine(Eigen::Ref<const RowVecF> a, Eigen::Ref<const RowVecF> b);

}  // namespace tempovec
