#include "affect/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "affect/error.hpp"

namespace affect {

void symmetric_eigen(const Matrix& sym, std::vector<double>& values,
                     Matrix& vectors) {
  const std::size_t n = sym.rows;
  if (sym.cols != n) throw ShapeError("symmetric_eigen: matrix not square");

  Matrix a = sym;
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
    }
    if (off < 1e-24) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a.at(i, p);
          const double aiq = a.at(i, q);
          a.at(i, p) = c * aip - s * aiq;
          a.at(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a.at(p, i);
          const double aqi = a.at(q, i);
          a.at(p, i) = c * api - s * aqi;
          a.at(q, i) = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v.at(i, p);
          const double viq = v.at(i, q);
          v.at(i, p) = c * vip - s * viq;
          v.at(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a.at(i, i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x,
                                                   std::size_t y) {
    return diag[x] > diag[y];
  });

  values.resize(n);
  vectors = Matrix(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    values[r] = diag[order[r]];
    for (std::size_t c = 0; c < n; ++c) {
      vectors.at(r, c) = v.at(c, order[r]);  // columns of v are eigenvectors
    }
  }
}

namespace {

void fix_sign(Matrix& components, std::size_t row) {
  std::size_t arg = 0;
  double best = 0.0;
  for (std::size_t c = 0; c < components.cols; ++c) {
    const double m = std::abs(components.at(row, c));
    if (m > best) {
      best = m;
      arg = c;
    }
  }
  if (components.at(row, arg) < 0) {
    for (std::size_t c = 0; c < components.cols; ++c) {
      components.at(row, c) = -components.at(row, c);
    }
  }
}

}  // namespace

PcaModel fit_pca(const Matrix& data, std::size_t k) {
  const std::size_t n = data.rows;
  const std::size_t d = data.cols;
  if (n < 2) throw DataError("fit_pca: need at least 2 rows");
  if (k < 1 || k > std::min(n - 1, d)) {
    throw ConfigError("fit_pca: k=" + std::to_string(k) +
                      " outside 1..min(n-1,d)=" +
                      std::to_string(std::min(n - 1, d)));
  }

  PcaModel model;
  model.input_dim = d;
  model.output_dim = k;
  model.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) model.mean[c] += data.at(r, c);
  }
  for (double& m : model.mean) m /= n;

  // Sample covariance of the centered data.
  Matrix cov(d, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < d; ++i) {
      const double di = data.at(r, i) - model.mean[i];
      for (std::size_t j = i; j < d; ++j) {
        cov.at(i, j) += di * (data.at(r, j) - model.mean[j]);
      }
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov.at(i, j) /= (n - 1);
      cov.at(j, i) = cov.at(i, j);
    }
  }

  std::vector<double> eigenvalues;
  Matrix eigenvectors;
  symmetric_eigen(cov, eigenvalues, eigenvectors);

  double total = 0.0;
  for (double v : eigenvalues) total += std::max(v, 0.0);
  const double rank_tol = total * 1e-12 + 1e-300;

  model.components = Matrix(k, d);
  model.explained_variance.assign(k, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    const double ev = eigenvalues[r];
    if (ev > rank_tol) {
      model.explained_variance[r] = ev;
    } else {
      // Orthogonal complement direction: keep the eigenvector, zero variance.
      model.explained_variance[r] = 0.0;
      model.rank_deficient = true;
    }
    for (std::size_t c = 0; c < d; ++c) {
      model.components.at(r, c) = eigenvectors.at(r, c);
    }
    fix_sign(model.components, r);
  }
  return model;
}

Matrix transform_pca(const PcaModel& model, const Matrix& rows) {
  if (rows.cols != model.input_dim) {
    throw ShapeError("transform_pca: input has " + std::to_string(rows.cols) +
                     " columns, model expects " +
                     std::to_string(model.input_dim));
  }
  Matrix out(rows.rows, model.output_dim);
  for (std::size_t r = 0; r < rows.rows; ++r) {
    for (std::size_t k = 0; k < model.output_dim; ++k) {
      double acc = 0.0;
      for (std::size_t c = 0; c < model.input_dim; ++c) {
        acc += (rows.at(r, c) - model.mean[c]) * model.components.at(k, c);
      }
      out.at(r, k) = acc;
    }
  }
  return out;
}

Matrix inverse_transform_pca(const PcaModel& model, const Matrix& proj) {
  if (proj.cols != model.output_dim) {
    throw ShapeError("inverse_transform_pca: column mismatch");
  }
  Matrix out(proj.rows, model.input_dim);
  for (std::size_t r = 0; r < proj.rows; ++r) {
    for (std::size_t c = 0; c < model.input_dim; ++c) {
      double acc = model.mean[c];
      for (std::size_t k = 0; k < model.output_dim; ++k) {
        acc += proj.at(r, k) * model.components.at(k, c);
      }
      out.at(r, c) = acc;
    }
  }
  return out;
}

nlohmann::json PcaModel::to_json() const {
  return {{"input_dim", input_dim},
          {"output_dim", output_dim},
          {"mean", mean},
          {"components", components.data},
          {"explained_variance", explained_variance},
          {"rank_deficient", rank_deficient}};
}

PcaModel PcaModel::from_json(const nlohmann::json& j) {
  PcaModel m;
  m.input_dim = j.at("input_dim").get<std::size_t>();
  m.output_dim = j.at("output_dim").get<std::size_t>();
  m.mean = j.at("mean").get<std::vector<double>>();
  m.components = Matrix(m.output_dim, m.input_dim);
  m.components.data = j.at("components").get<std::vector<double>>();
  m.explained_variance =
      j.at("explained_variance").get<std::vector<double>>();
  m.rank_deficient = j.at("rank_deficient").get<bool>();
  return m;
}

}  // namespace affect
