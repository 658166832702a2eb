#include "glcnet/contrastive.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "glcnet/error.hpp"

namespace glcnet {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

ContrastiveResult compute(const EmbeddingBatch& batch, const ContrastiveConfig& cfg, bool with_grad) {
  batch.validate();
  cfg.validate();
  const int M = batch.rows, D = batch.dim;
  Eigen::Map<const RowMat> Z(batch.vectors.data(), M, D);
  Eigen::VectorXd norms = Z.rowwise().norm();
  for (int i = 0; i < M; ++i) {
    if (!(norms[i] > 0.0) || !std::isfinite(norms[i])) {
      throw NumericError("embedding " + std::to_string(i) + " has zero or non-finite norm (collapsed embedding)");
    }
  }
  RowMat U = norms.cwiseInverse().asDiagonal() * Z;
  RowMat S = (U * U.transpose()) / cfg.temperature;

  // P holds softmax weights over each anchor's denominator set.
  RowMat P = RowMat::Zero(M, M);
  double total = 0.0;
  for (int i = 0; i < M; ++i) {
    const int p = batch.pair_index[static_cast<size_t>(i)];
    double mx = -INFINITY;
    for (int k = 0; k < M; ++k) {
      if (k == i || (k == p && !cfg.include_positive_in_denominator)) continue;
      mx = std::max(mx, S(i, k));
    }
    double sum = 0.0;
    for (int k = 0; k < M; ++k) {
      if (k == i || (k == p && !cfg.include_positive_in_denominator)) continue;
      P(i, k) = std::exp(S(i, k) - mx);
      sum += P(i, k);
    }
    total += -(S(i, p) - mx) + std::log(sum);
    P.row(i) /= sum;
  }
  ContrastiveResult out;
  out.loss = total / M;
  if (!std::isfinite(out.loss)) throw NumericError("contrastive loss is not finite");
  if (!with_grad) return out;

  RowMat G = P;
  for (int i = 0; i < M; ++i) G(i, batch.pair_index[static_cast<size_t>(i)]) -= 1.0;
  G /= (static_cast<double>(M) * cfg.temperature);
  RowMat dU = (G + G.transpose()) * U;
  out.grad.resize(static_cast<size_t>(M) * D);
  Eigen::Map<RowMat> dZ(out.grad.data(), M, D);
  for (int i = 0; i < M; ++i) {
    const double radial = U.row(i).dot(dU.row(i));
    dZ.row(i) = (dU.row(i) - radial * U.row(i)) / norms[i];
  }
  return out;
}

}  // namespace

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw InvalidArgument("cosine similarity of vectors with different lengths");
  double dot = 0, nu = 0, nv = 0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (!(nu > 0.0) || !(nv > 0.0)) throw NumericError("cosine similarity of a zero-norm vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

EmbeddingBatch EmbeddingBatch::two_views(std::vector<double> vectors, int n, int dim) {
  EmbeddingBatch b;
  b.rows = 2 * n;
  b.dim = dim;
  b.vectors = std::move(vectors);
  b.pair_index.resize(static_cast<size_t>(2 * n));
  for (int i = 0; i < n; ++i) {
    b.pair_index[static_cast<size_t>(i)] = i + n;
    b.pair_index[static_cast<size_t>(i + n)] = i;
  }
  return b;
}

void EmbeddingBatch::validate() const {
  if (dim < 1) throw InvalidArgument("embedding dimension must be >= 1");
  if (rows < 4) {
    throw InvalidArgument("contrastive loss needs at least 2 source samples (4 embeddings), got " +
                          std::to_string(rows) + " embeddings");
  }
  if (vectors.size() != static_cast<size_t>(rows) * dim) throw InvalidArgument("embedding buffer size mismatch");
  if (pair_index.size() != static_cast<size_t>(rows)) throw InvalidArgument("pair_index length mismatch");
  for (int i = 0; i < rows; ++i) {
    const int p = pair_index[static_cast<size_t>(i)];
    if (p < 0 || p >= rows || p == i || pair_index[static_cast<size_t>(p)] != i) {
      throw InvalidArgument("pair_index is not a fixed-point-free involution at " + std::to_string(i));
    }
  }
}

void ContrastiveConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw InvalidArgument("temperature must be > 0");
}

double nt_xent_loss(const EmbeddingBatch& batch, const ContrastiveConfig& cfg) {
  return compute(batch, cfg, false).loss;
}

ContrastiveResult nt_xent_loss_with_grad(const EmbeddingBatch& batch, const ContrastiveConfig& cfg) {
  return compute(batch, cfg, true);
}

}  // namespace glcnet
