#pragma once

#include <span>
#include <vector>

namespace glcnet {

// Cosine similarity; throws NumericError on a zero-norm vector.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

// M embeddings of dimension D (row-major) and the positive partner of each.
struct EmbeddingBatch {
  int rows = 0;
  int dim = 0;
  std::vector<double> vectors;
  std::vector<int> pair_index;

  // Two-view layout [a_1..a_n, b_1..b_n] with a_i <-> b_i.
  static EmbeddingBatch two_views(std::vector<double> vectors, int n, int dim);

  void validate() const;
  std::span<const double> row(int i) const {
    return {vectors.data() + static_cast<size_t>(i) * dim, static_cast<size_t>(dim)};
  }
};

struct ContrastiveConfig {
  double temperature = 0.5;
  bool include_positive_in_denominator = false;

  void validate() const;
};

struct ContrastiveResult {
  double loss = 0.0;
  std::vector<double> grad;  // dL/d vectors, same layout as the batch
};

double nt_xent_loss(const EmbeddingBatch& batch, const ContrastiveConfig& cfg);
ContrastiveResult nt_xent_loss_with_grad(const EmbeddingBatch& batch, const ContrastiveConfig& cfg);

}  // namespace glcnet
