#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "docqa/gmm.hpp"

namespace docqa::detail {

// Per-component constants for evaluating log w_k + log N(x; mu_k, sigma_k^2).
struct GmmTerms {
  std::size_t k = 0;
  std::size_t d = 0;
  std::vector<double> log_norm;   // K
  std::vector<double> inv_var;    // K*D

  explicit GmmTerms(const GmmModel& model) : k(model.num_components()), d(model.dim()) {
    log_norm.resize(k);
    inv_var.resize(k * d);
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < k; ++i) {
      double s = std::log(model.weights[i]);
      for (std::size_t j = 0; j < d; ++j) {
        s -= 0.5 * (log_2pi + std::log(model.variances[i][j]));
        inv_var[i * d + j] = 1.0 / model.variances[i][j];
      }
      log_norm[i] = s;
    }
  }

  // Writes gamma_k(x) into `resp` (size K) and returns log p(x).
  double evaluate(const GmmModel& model, std::span<const double> x, double* resp) const {
    double best = -INFINITY;
    for (std::size_t i = 0; i < k; ++i) {
      const double* mu = model.means[i].data();
      const double* iv = inv_var.data() + i * d;
      double q = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = x[j] - mu[j];
        q += diff * diff * iv[j];
      }
      resp[i] = log_norm[i] - 0.5 * q;
      if (resp[i] > best) best = resp[i];
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += std::exp(resp[i] - best);
    const double lse = best + std::log(sum);
    for (std::size_t i = 0; i < k; ++i) resp[i] = std::exp(resp[i] - lse);
    return lse;
  }
};

}  // namespace docqa::detail
