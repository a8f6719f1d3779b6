#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "docqa/util.hpp"

namespace docqa {

// Rotate-and-truncate PCA (no whitening). Component rows are orthonormal and
// sorted by descending explained variance.
struct PcaModel {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  Vector mean;
  std::vector<Vector> components;
  Vector explained_variance;

  std::string fingerprint() const;
};

// Eigenvectors below 1e-12 variance are never returned; asking for more
// components than the data supports throws ModelError.
PcaModel fit_pca(std::span<const Vector> samples, std::size_t output_dim);

Vector pca_transform(const PcaModel& model, std::span<const double> x);
std::vector<Vector> pca_transform(const PcaModel& model, std::span<const Vector> xs);
Vector pca_reconstruct(const PcaModel& model, std::span<const double> y);

std::string pca_to_json(const PcaModel& model);
PcaModel pca_from_json(std::string_view text);
void save_pca(const PcaModel& model, const std::filesystem::path& path);
PcaModel load_pca(const std::filesystem::path& path);

}  // namespace docqa
