#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "docqa/util.hpp"

namespace docqa {

// Diagonal-covariance Gaussian mixture.
struct GmmModel {
  Vector weights;
  std::vector<Vector> means;
  std::vector<Vector> variances;

  std::size_t num_components() const { return weights.size(); }
  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
  std::string fingerprint() const;
};

struct GmmFitConfig {
  int max_iter = 100;
  // EM stops once the mean log-likelihood improves by less than this.
  double tol = 1e-6;
  // Relative to the mean per-coordinate variance of the training data.
  double variance_floor = 1e-6;
  std::uint64_t seed = 0;
};

struct GmmFit {
  GmmModel model;
  // Mean training log-likelihood at initialization and after every M-step.
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
  bool converged = false;
  double variance_floor = 0.0;  // absolute floor that was applied
};

GmmFit fit_gmm(std::span<const Vector> samples, std::size_t num_components,
               const GmmFitConfig& config = {});

// Responsibilities gamma_i(x), computed in log space.
Vector posterior(const GmmModel& model, std::span<const double> x);
// log sum_i w_i N(x; mu_i, sigma_i^2).
double log_density(const GmmModel& model, std::span<const double> x);
// Mean of log_density over samples; throws ModelError on an empty set.
double log_likelihood(const GmmModel& model, std::span<const Vector> samples);

void validate_gmm(const GmmModel& model);

std::string gmm_to_json(const GmmModel& model);
GmmModel gmm_from_json(std::string_view text);
void save_gmm(const GmmModel& model, const std::filesystem::path& path);
GmmModel load_gmm(const std::filesystem::path& path);

}  // namespace docqa
