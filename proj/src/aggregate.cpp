#include "docqa/aggregate.hpp"

#include <cmath>
#include <cstdio>

#include "docqa/error.hpp"
#include "docqa/kernels.hpp"

namespace docqa {

const char* to_string(AggregationScheme scheme) {
  return scheme == AggregationScheme::Sum ? "sum" : "fv";
}

AggregateConfig AggregateConfig::sum() { return {}; }

AggregateConfig AggregateConfig::fisher(std::shared_ptr<const GmmModel> gmm, bool include_sigma,
                                        double alpha, bool power_norm, bool l2_norm) {
  AggregateConfig c;
  c.scheme = AggregationScheme::Fisher;
  c.gmm = std::move(gmm);
  c.include_sigma = include_sigma;
  c.alpha = alpha;
  c.power_norm = power_norm;
  c.l2_norm = l2_norm;
  return c;
}

void AggregateConfig::validate() const {
  if (scheme == AggregationScheme::Sum) return;
  if (!gmm) throw ModelError("Fisher Vector aggregation requires a fitted GMM");
  validate_gmm(*gmm);
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ModelError("power normalization alpha must lie in [0, 1]");
}

std::size_t AggregateConfig::output_dim(std::size_t input_dim) const {
  if (scheme == AggregationScheme::Sum) return input_dim;
  return (include_sigma ? 2 : 1) * gmm->num_components() * gmm->dim();
}

std::string AggregateConfig::describe() const {
  if (scheme == AggregationScheme::Sum) return "sum";
  char alpha_buf[32];
  std::snprintf(alpha_buf, sizeof(alpha_buf), "%.17g", alpha);
  return std::string("fv:gmm=") + (gmm ? gmm->fingerprint() : "none") +
         ",sigma=" + (include_sigma ? "1" : "0") + ",alpha=" + alpha_buf +
         ",power=" + (power_norm ? "1" : "0") + ",l2=" + (l2_norm ? "1" : "0");
}

AggregateVector aggregate_sum(std::span<const Vector> embeddings) {
  if (embeddings.empty()) throw NoContentWords();
  const std::size_t d = embeddings.front().size();
  Vector out(d, 0.0);
  for (const Vector& e : embeddings) {
    if (e.size() != d) throw ModelError("aggregate_sum: embeddings have inconsistent dimensions");
    for (std::size_t j = 0; j < d; ++j) out[j] += e[j];
  }
  return {std::move(out), AggregationScheme::Sum};
}

AggregateVector aggregate_fv(std::span<const Vector> embeddings, const AggregateConfig& config) {
  if (config.scheme != AggregationScheme::Fisher) throw ModelError("aggregate_fv called with a non-FV config");
  config.validate();
  if (embeddings.empty()) throw NoContentWords();
  for (const Vector& e : embeddings) {
    if (e.size() != config.gmm->dim()) {
      throw ModelError("aggregate_fv: embedding dimension " + std::to_string(e.size()) +
                       " does not match GMM dimension " + std::to_string(config.gmm->dim()));
    }
  }
  Vector fv = kernels::fisher_gradients(*config.gmm, embeddings, config.include_sigma);
  if (config.power_norm) fv = power_normalize(std::move(fv), config.alpha);
  if (config.l2_norm) fv = l2_normalize(std::move(fv));
  return {std::move(fv), AggregationScheme::Fisher};
}

AggregateVector aggregate(std::span<const Vector> embeddings, const AggregateConfig& config) {
  return config.scheme == AggregationScheme::Sum ? aggregate_sum(embeddings)
                                                 : aggregate_fv(embeddings, config);
}

Vector power_normalize(Vector v, double alpha) {
  for (double& z : v) {
    const double m = std::pow(std::abs(z), alpha);
    z = z > 0.0 ? m : (z < 0.0 ? -m : 0.0);
  }
  return v;
}

Vector l2_normalize(Vector v) {
  const double norm = l2_norm(v);
  if (norm == 0.0) return v;
  for (double& z : v) z /= norm;
  return v;
}

}  // namespace docqa
