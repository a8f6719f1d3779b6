#include "docqa/pca.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "docqa/error.hpp"
#include "json.hpp"

namespace docqa {

namespace {
constexpr double kMinVariance = 1e-12;
}

std::string PcaModel::fingerprint() const { return hex64(fnv1a(pca_to_json(*this))); }

PcaModel fit_pca(std::span<const Vector> samples, std::size_t output_dim) {
  if (samples.empty()) throw ModelError("PCA needs at least one sample");
  const std::size_t d = samples.front().size();
  const std::size_t n = samples.size();
  if (output_dim == 0) throw ModelError("PCA output dimension must be >= 1");
  if (output_dim > d) {
    throw ModelError("PCA output dimension " + std::to_string(output_dim) +
                     " exceeds input dimension " + std::to_string(d));
  }
  if (output_dim > n) {
    throw ModelError("PCA output dimension " + std::to_string(output_dim) +
                     " exceeds sample count " + std::to_string(n));
  }

  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    if (samples[i].size() != d) throw ModelError("PCA samples have inconsistent dimensions");
    for (std::size_t j = 0; j < d; ++j) x(i, j) = samples[i][j];
  }
  if (!x.allFinite()) throw ModelError("PCA samples contain NaN or infinity");
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw ModelError("PCA eigendecomposition failed");
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& vectors = solver.eigenvectors();

  PcaModel model;
  model.input_dim = d;
  model.output_dim = output_dim;
  model.mean.assign(mean.data(), mean.data() + d);
  for (std::size_t c = 0; c < output_dim; ++c) {
    const Eigen::Index col = static_cast<Eigen::Index>(d - 1 - c);
    const double variance = values(col);
    if (variance < kMinVariance) {
      throw ModelError("only " + std::to_string(c) +
                       " directions with non-zero variance; cannot produce " +
                       std::to_string(output_dim) + " components");
    }
    Vector row(vectors.col(col).data(), vectors.col(col).data() + d);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < d; ++j) {
      if (std::abs(row[j]) > std::abs(row[arg])) arg = j;
    }
    if (row[arg] < 0) {
      for (double& v : row) v = -v;
    }
    model.components.push_back(std::move(row));
    model.explained_variance.push_back(variance);
  }
  return model;
}

Vector pca_transform(const PcaModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim) {
    throw ModelError("PCA input has dimension " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(model.input_dim));
  }
  Vector centered(x.begin(), x.end());
  for (std::size_t j = 0; j < centered.size(); ++j) centered[j] -= model.mean[j];
  Vector y(model.output_dim);
  for (std::size_t c = 0; c < model.output_dim; ++c) y[c] = dot(model.components[c], centered);
  return y;
}

std::vector<Vector> pca_transform(const PcaModel& model, std::span<const Vector> xs) {
  std::vector<Vector> out;
  out.reserve(xs.size());
  for (const Vector& x : xs) out.push_back(pca_transform(model, x));
  return out;
}

Vector pca_reconstruct(const PcaModel& model, std::span<const double> y) {
  if (y.size() != model.output_dim) throw ModelError("PCA reconstruction input has wrong dimension");
  Vector x(model.mean);
  for (std::size_t c = 0; c < model.output_dim; ++c) {
    for (std::size_t j = 0; j < model.input_dim; ++j) x[j] += y[c] * model.components[c][j];
  }
  return x;
}

std::string pca_to_json(const PcaModel& model) {
  nlohmann::json j = {{"input_dim", model.input_dim},
                      {"output_dim", model.output_dim},
                      {"mean", model.mean},
                      {"components", model.components},
                      {"explained_variance", model.explained_variance}};
  return j.dump();
}

PcaModel pca_from_json(std::string_view text) {
  PcaModel m;
  try {
    auto j = nlohmann::json::parse(text);
    m.input_dim = j.at("input_dim").get<std::size_t>();
    m.output_dim = j.at("output_dim").get<std::size_t>();
    m.mean = j.at("mean").get<Vector>();
    m.components = j.at("components").get<std::vector<Vector>>();
    if (auto it = j.find("explained_variance"); it != j.end()) m.explained_variance = it->get<Vector>();
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed PCA model: ") + e.what());
  }
  if (m.output_dim == 0 || m.output_dim > m.input_dim || m.mean.size() != m.input_dim ||
      m.components.size() != m.output_dim) {
    throw ModelError("PCA model dimensions are inconsistent");
  }
  for (const Vector& c : m.components) {
    if (c.size() != m.input_dim) throw ModelError("PCA component has wrong dimension");
  }
  return m;
}

void save_pca(const PcaModel& model, const std::filesystem::path& path) {
  write_file(path, pca_to_json(model));
}

PcaModel load_pca(const std::filesystem::path& path) {
  try {
    return pca_from_json(read_file(path));
  } catch (const ModelError& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
}

}  // namespace docqa
