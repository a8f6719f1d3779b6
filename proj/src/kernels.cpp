#include "docqa/kernels.hpp"

#include <cmath>

#include "docqa/error.hpp"
#include "gmm_internal.hpp"

namespace docqa::kernels {

namespace {

inline double cosine_row(const float* row, std::size_t dim, std::span<const double> query,
                         double query_norm) {
  double d = 0.0;
  double n = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    const double r = row[j];
    d += r * query[j];
    n += r * r;
  }
  if (n == 0.0 || query_norm == 0.0) return 0.0;
  return d / (std::sqrt(n) * query_norm);
}

void check_cosine_args(std::span<const float> rows, std::size_t dim, std::span<const double> query,
                       std::span<double> out) {
  if (query.size() != dim || rows.size() != out.size() * dim) {
    throw ModelError("cosine_scores: dimension mismatch");
  }
}

void check_resp_args(const GmmModel& model, std::span<const Vector> samples,
                     std::span<double> resp, std::span<double> log_density) {
  if (resp.size() != samples.size() * model.num_components() || log_density.size() != samples.size()) {
    throw ModelError("responsibilities: output size mismatch");
  }
  for (const Vector& x : samples) {
    if (x.size() != model.dim()) throw ModelError("responsibilities: sample dimension mismatch");
  }
}

// Parameter update for one component from the responsibilities column k.
void update_component(std::span<const Vector> samples, std::span<const double> resp, std::size_t k,
                      std::size_t num_components, const GmmModel& previous, double variance_floor,
                      double& weight, Vector& mean, Vector& variance) {
  const std::size_t n = samples.size();
  const std::size_t d = previous.dim();
  double nk = 0.0;
  for (std::size_t t = 0; t < n; ++t) nk += resp[t * num_components + k];

  if (nk <= 1e-10 * static_cast<double>(n)) {
    // Collapsed component: keep its parameters and give it a negligible weight.
    weight = 1e-12;
    mean = previous.means[k];
    variance = previous.variances[k];
    return;
  }
  weight = nk / static_cast<double>(n);
  mean.assign(d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const double g = resp[t * num_components + k];
    for (std::size_t j = 0; j < d; ++j) mean[j] += g * samples[t][j];
  }
  for (double& m : mean) m /= nk;
  variance.assign(d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const double g = resp[t * num_components + k];
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = samples[t][j] - mean[j];
      variance[j] += g * diff * diff;
    }
  }
  for (double& v : variance) v = std::max(v / nk, variance_floor);
}

MStepResult finish_m_step(MStepResult r) {
  double total = 0.0;
  for (double w : r.weights) total += w;
  for (double& w : r.weights) w /= total;
  return r;
}

void fisher_component(const GmmModel& model, std::span<const Vector> xs, std::span<const double> resp,
                      std::size_t k, bool include_sigma, double* mu_block, double* sigma_block) {
  const std::size_t d = model.dim();
  const std::size_t num = model.num_components();
  const Vector& mu = model.means[k];
  std::vector<double> inv_sd(d);
  for (std::size_t j = 0; j < d; ++j) inv_sd[j] = 1.0 / std::sqrt(model.variances[k][j]);
  for (std::size_t t = 0; t < xs.size(); ++t) {
    const double g = resp[t * num + k];
    for (std::size_t j = 0; j < d; ++j) {
      const double z = (xs[t][j] - mu[j]) * inv_sd[j];
      mu_block[j] += g * z;
      if (include_sigma) sigma_block[j] += g * (z * z - 1.0);
    }
  }
  const double m = static_cast<double>(xs.size());
  const double scale_mu = 1.0 / (m * std::sqrt(model.weights[k]));
  const double scale_sigma = 1.0 / (m * std::sqrt(2.0 * model.weights[k]));
  for (std::size_t j = 0; j < d; ++j) {
    mu_block[j] *= scale_mu;
    if (include_sigma) sigma_block[j] *= scale_sigma;
  }
}

}  // namespace

void cosine_scores(std::span<const float> rows, std::size_t dim, std::span<const double> query,
                   std::span<double> out) {
  check_cosine_args(rows, dim, query, out);
  const double qn = l2_norm(query);
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    out[i] = cosine_row(rows.data() + i * dim, dim, query, qn);
  }
}

void cosine_scores_serial(std::span<const float> rows, std::size_t dim,
                          std::span<const double> query, std::span<double> out) {
  check_cosine_args(rows, dim, query, out);
  const double qn = l2_norm(query);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cosine_row(rows.data() + i * dim, dim, query, qn);
}

void responsibilities(const GmmModel& model, std::span<const Vector> samples,
                      std::span<double> resp, std::span<double> log_density) {
  check_resp_args(model, samples, resp, log_density);
  const detail::GmmTerms terms(model);
  const std::size_t k = model.num_components();
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    log_density[t] = terms.evaluate(model, samples[t], resp.data() + t * k);
  }
}

void responsibilities_serial(const GmmModel& model, std::span<const Vector> samples,
                             std::span<double> resp, std::span<double> log_density) {
  check_resp_args(model, samples, resp, log_density);
  const detail::GmmTerms terms(model);
  const std::size_t k = model.num_components();
  for (std::size_t t = 0; t < samples.size(); ++t) {
    log_density[t] = terms.evaluate(model, samples[t], resp.data() + t * k);
  }
}

MStepResult m_step(std::span<const Vector> samples, std::span<const double> resp,
                   const GmmModel& previous, double variance_floor) {
  const std::size_t k = previous.num_components();
  MStepResult r{Vector(k), std::vector<Vector>(k), std::vector<Vector>(k)};
  const std::ptrdiff_t kk = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < kk; ++i) {
    update_component(samples, resp, i, k, previous, variance_floor, r.weights[i], r.means[i],
                     r.variances[i]);
  }
  return finish_m_step(std::move(r));
}

MStepResult m_step_serial(std::span<const Vector> samples, std::span<const double> resp,
                          const GmmModel& previous, double variance_floor) {
  const std::size_t k = previous.num_components();
  MStepResult r{Vector(k), std::vector<Vector>(k), std::vector<Vector>(k)};
  for (std::size_t i = 0; i < k; ++i) {
    update_component(samples, resp, i, k, previous, variance_floor, r.weights[i], r.means[i],
                     r.variances[i]);
  }
  return finish_m_step(std::move(r));
}

Vector fisher_gradients(const GmmModel& model, std::span<const Vector> xs, bool include_sigma) {
  const std::size_t k = model.num_components();
  const std::size_t d = model.dim();
  std::vector<double> resp(xs.size() * k);
  std::vector<double> logd(xs.size());
  responsibilities(model, xs, resp, logd);
  Vector out((include_sigma ? 2 : 1) * k * d, 0.0);
  const std::ptrdiff_t kk = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < kk; ++i) {
    fisher_component(model, xs, resp, i, include_sigma, out.data() + i * d,
                     include_sigma ? out.data() + (k + i) * d : nullptr);
  }
  return out;
}

Vector fisher_gradients_serial(const GmmModel& model, std::span<const Vector> xs,
                               bool include_sigma) {
  const std::size_t k = model.num_components();
  const std::size_t d = model.dim();
  std::vector<double> resp(xs.size() * k);
  std::vector<double> logd(xs.size());
  responsibilities_serial(model, xs, resp, logd);
  Vector out((include_sigma ? 2 : 1) * k * d, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    fisher_component(model, xs, resp, i, include_sigma, out.data() + i * d,
                     include_sigma ? out.data() + (k + i) * d : nullptr);
  }
  return out;
}

}  // namespace docqa::kernels
