#pragma once

#include <vector>

#include <json.hpp>

namespace affect {

// Row-major dense matrix, minimal on purpose.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct PcaModel {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::vector<double> mean;      // length input_dim
  Matrix components;             // output_dim x input_dim, rows orthonormal
  std::vector<double> explained_variance;  // non-increasing
  bool rank_deficient = false;   // trailing components padded, zero variance

  nlohmann::json to_json() const;
  static PcaModel from_json(const nlohmann::json& j);
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix; returns eigenvalues
// descending with matching eigenvectors as rows of `vectors`.
void symmetric_eigen(const Matrix& sym, std::vector<double>& values,
                     Matrix& vectors);

// Top-k eigenvectors of the population covariance of mean-centered data.
// Sign convention: each component's largest-magnitude entry is positive.
// When k exceeds the data rank, trailing components come from the orthogonal
// complement with zero explained variance and the model is flagged.
PcaModel fit_pca(const Matrix& data, std::size_t k);

// (rows - mean) * components^T
Matrix transform_pca(const PcaModel& model, const Matrix& rows);

Matrix inverse_transform_pca(const PcaModel& model, const Matrix& proj);

}  // namespace affect
