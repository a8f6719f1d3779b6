#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>

#include "docqa/gmm.hpp"
#include "docqa/util.hpp"

namespace docqa {

enum class AggregationScheme { Sum, Fisher };

const char* to_string(AggregationScheme scheme);

struct AggregateConfig {
  AggregationScheme scheme = AggregationScheme::Sum;

  // Fisher Vector options; ignored for Sum.
  std::shared_ptr<const GmmModel> gmm;
  bool include_sigma = false;
  double alpha = 0.5;
  bool power_norm = true;
  bool l2_norm = true;

  static AggregateConfig sum();
  static AggregateConfig fisher(std::shared_ptr<const GmmModel> gmm, bool include_sigma = false,
                                double alpha = 0.5, bool power_norm = true, bool l2_norm = true);

  // Throws ModelError for a Fisher config without a GMM or alpha outside [0,1].
  void validate() const;
  // Dimension of the aggregate for embeddings of dimension `input_dim`.
  std::size_t output_dim(std::size_t input_dim) const;
  // Canonical text used in fingerprints, e.g. "fv:gmm=..,sigma=0,alpha=0.5,power=1,l2=1".
  std::string describe() const;
};

struct AggregateVector {
  Vector values;
  AggregationScheme scheme = AggregationScheme::Sum;
};

// Coordinate-wise sum; no normalization.
AggregateVector aggregate_sum(std::span<const Vector> embeddings);

// Fisher Vector w.r.t. means (and standard deviations when include_sigma),
// with the 1/M and 1/sqrt(w_i) normalizers, then power and L2 normalization
// as configured.
AggregateVector aggregate_fv(std::span<const Vector> embeddings, const AggregateConfig& config);

AggregateVector aggregate(std::span<const Vector> embeddings, const AggregateConfig& config);

// sign(z)|z|^alpha elementwise.
Vector power_normalize(Vector v, double alpha);
// v/|v|; the zero vector maps to itself.
Vector l2_normalize(Vector v);

}  // namespace docqa
