#include "tempovec/types.hpp"

#include <cmath>

namespace tempovec {

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.subspan(0, half)) + pairwise_sum(values.subspan(half));
}

double cosine(Eigen::Ref<const RowVecF> a, Eigen::Ref<const RowVecF> b) {
  const double dot = a.cast<double>().dot(b.cast<double>());
  const double na = a.cast<double>().norm();
  const double nb = b.cast<double>().norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (na * nb);
}

}  // namespace tempovec
