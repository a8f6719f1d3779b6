#pragma once

// Data-parallel inner loops. Every kernel has an OpenMP version and a serial
// reference `*_serial`; both perform the same per-element arithmetic in the
// same order, so their outputs are bit-identical regardless of thread count.

#include <cstddef>
#include <span>

#include "docqa/gmm.hpp"
#include "docqa/util.hpp"

namespace docqa::kernels {

// Cosine similarity of `query` against each row of a row-major float matrix
// with `dim` columns. Zero rows (or a zero query) score 0.
void cosine_scores(std::span<const float> rows, std::size_t dim,
                   std::span<const double> query, std::span<double> out);
void cosine_scores_serial(std::span<const float> rows, std::size_t dim,
                          std::span<const double> query, std::span<double> out);

// E-step: resp[n*K + k] = gamma_k(x_n), log_density[n] = log p(x_n).
void responsibilities(const GmmModel& model, std::span<const Vector> samples,
                      std::span<double> resp, std::span<double> log_density);
void responsibilities_serial(const GmmModel& model, std::span<const Vector> samples,
                             std::span<double> resp, std::span<double> log_density);

// M-step sufficient statistics and parameter update for component k, written
// into `weights`, `means`, `variances`. Parallel over components.
struct MStepResult {
  Vector weights;
  std::vector<Vector> means;
  std::vector<Vector> variances;
};
MStepResult m_step(std::span<const Vector> samples, std::span<const double> resp,
                   const GmmModel& previous, double variance_floor);
MStepResult m_step_serial(std::span<const Vector> samples, std::span<const double> resp,
                          const GmmModel& previous, double variance_floor);

// Un-normalized Fisher Vector gradients: the K mean blocks, followed by the
// K standard-deviation blocks when include_sigma is set.
Vector fisher_gradients(const GmmModel& model, std::span<const Vector> xs, bool include_sigma);
Vector fisher_gradients_serial(const GmmModel& model, std::span<const Vector> xs,
                               bool include_sigma);

}  // namespace docqa::kernels
