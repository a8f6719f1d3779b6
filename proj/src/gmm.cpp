#include "docqa/gmm.hpp"

#include <cmath>
#include <random>

#include "docqa/error.hpp"
#include "docqa/kernels.hpp"
#include "gmm_internal.hpp"
#include "json.hpp"

namespace docqa {

std::string GmmModel::fingerprint() const { return hex64(fnv1a(gmm_to_json(*this))); }

namespace {

void check_samples(std::span<const Vector> samples) {
  const std::size_t d = samples.front().size();
  if (d == 0) throw ModelError("GMM samples must have dimension >= 1");
  for (const Vector& x : samples) {
    if (x.size() != d) throw ModelError("GMM samples have inconsistent dimensions");
    for (double v : x) {
      if (!std::isfinite(v)) throw ModelError("GMM samples contain NaN or infinity");
    }
  }
}

double squared_distance(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

// k-means++ seeding: first center uniform, then proportional to squared
// distance from the nearest chosen center.
std::vector<Vector> seed_means(std::span<const Vector> samples, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = samples.size();
  std::vector<Vector> centers;
  centers.push_back(samples[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  std::vector<double> dist(n);
  for (std::size_t t = 0; t < n; ++t) dist[t] = squared_distance(samples[t], centers.back());
  while (centers.size() < k) {
    double total = 0.0;
    for (double v : dist) total += v;
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    } else {
      const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t t = 0; t < n; ++t) {
        acc += dist[t];
        if (r < acc) {
          pick = t;
          break;
        }
      }
    }
    centers.push_back(samples[pick]);
    for (std::size_t t = 0; t < n; ++t) dist[t] = std::min(dist[t], squared_distance(samples[t], centers.back()));
  }
  return centers;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

GmmFit fit_gmm(std::span<const Vector> samples, std::size_t num_components, const GmmFitConfig& config) {
  if (num_components == 0) throw ModelError("GMM needs at least one component");
  if (samples.size() < num_components) {
    throw ModelError("GMM with " + std::to_string(num_components) + " components needs at least as many samples (got " +
                     std::to_string(samples.size()) + ")");
  }
  check_samples(samples);
  const std::size_t n = samples.size();
  const std::size_t d = samples.front().size();

  Vector global_mean(d, 0.0);
  for (const Vector& x : samples) {
    for (std::size_t j = 0; j < d; ++j) global_mean[j] += x[j];
  }
  for (double& m : global_mean) m /= static_cast<double>(n);
  Vector global_var(d, 0.0);
  for (const Vector& x : samples) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = x[j] - global_mean[j];
      global_var[j] += diff * diff;
    }
  }
  for (double& v : global_var) v /= static_cast<double>(n);
  const double scale = mean_of(global_var);

  GmmFit fit;
  fit.variance_floor = config.variance_floor * (scale > 0.0 ? scale : 1.0);

  std::mt19937_64 rng(config.seed);
  GmmModel& model = fit.model;
  model.weights.assign(num_components, 1.0 / static_cast<double>(num_components));
  model.means = seed_means(samples, num_components, rng);
  Vector init_var(global_var);
  for (double& v : init_var) v = std::max(v, fit.variance_floor);
  model.variances.assign(num_components, init_var);

  std::vector<double> resp(n * num_components);
  std::vector<double> logd(n);
  kernels::responsibilities(model, samples, resp, logd);
  fit.log_likelihood_trace.push_back(mean_of(logd));

  for (int it = 0; it < config.max_iter; ++it) {
    kernels::MStepResult next = kernels::m_step(samples, resp, model, fit.variance_floor);
    model.weights = std::move(next.weights);
    model.means = std::move(next.means);
    model.variances = std::move(next.variances);
    kernels::responsibilities(model, samples, resp, logd);
    const double ll = mean_of(logd);
    const double gain = ll - fit.log_likelihood_trace.back();
    fit.log_likelihood_trace.push_back(ll);
    fit.iterations = it + 1;
    if (gain < config.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

Vector posterior(const GmmModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) throw ModelError("posterior: dimension mismatch");
  Vector resp(model.num_components());
  detail::GmmTerms(model).evaluate(model, x, resp.data());
  return resp;
}

double log_density(const GmmModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) throw ModelError("log_density: dimension mismatch");
  Vector resp(model.num_components());
  return detail::GmmTerms(model).evaluate(model, x, resp.data());
}

double log_likelihood(const GmmModel& model, std::span<const Vector> samples) {
  if (samples.empty()) throw ModelError("log_likelihood of an empty sample set");
  std::vector<double> resp(samples.size() * model.num_components());
  std::vector<double> logd(samples.size());
  kernels::responsibilities(model, samples, resp, logd);
  return mean_of(logd);
}

void validate_gmm(const GmmModel& model) {
  const std::size_t k = model.num_components();
  if (k == 0) throw ModelError("GMM has no components");
  if (model.means.size() != k || model.variances.size() != k) throw ModelError("GMM parameter counts disagree");
  const std::size_t d = model.dim();
  if (d == 0) throw ModelError("GMM has dimension 0");
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(model.weights[i] > 0.0)) throw ModelError("GMM weights must be positive");
    total += model.weights[i];
    if (model.means[i].size() != d || model.variances[i].size() != d) {
      throw ModelError("GMM component dimensions disagree");
    }
    for (double v : model.variances[i]) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ModelError("GMM variances must be positive and finite");
    }
  }
  if (std::abs(total - 1.0) > 1e-9) throw ModelError("GMM weights must sum to 1");
}

std::string gmm_to_json(const GmmModel& model) {
  nlohmann::json j = {{"K", model.num_components()},
                      {"dim", model.dim()},
                      {"weights", model.weights},
                      {"means", model.means},
                      {"variances", model.variances}};
  return j.dump();
}

GmmModel gmm_from_json(std::string_view text) {
  GmmModel m;
  std::size_t k = 0;
  std::size_t d = 0;
  try {
    auto j = nlohmann::json::parse(text);
    k = j.at("K").get<std::size_t>();
    d = j.at("dim").get<std::size_t>();
    m.weights = j.at("weights").get<Vector>();
    m.means = j.at("means").get<std::vector<Vector>>();
    m.variances = j.at("variances").get<std::vector<Vector>>();
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed GMM model: ") + e.what());
  }
  if (m.num_components() != k || m.dim() != d) throw ModelError("GMM header disagrees with its parameters");
  validate_gmm(m);
  return m;
}

void save_gmm(const GmmModel& model, const std::filesystem::path& path) {
  write_file(path, gmm_to_json(model));
}

GmmModel load_gmm(const std::filesystem::path& path) {
  try {
    return gmm_from_json(read_file(path));
  } catch (const ModelError& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
}

}  // namespace docqa
