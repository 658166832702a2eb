#include <cmath>

#include "doctest.h"
#include "glcnet/contrastive.hpp"
#include "glcnet/error.hpp"
#include "oracles.hpp"

using namespace glcnet;

namespace {

EmbeddingBatch random_batch(Rng& rng, int n, int dim) {
  std::vector<double> v(static_cast<size_t>(2 * n * dim));
  for (auto& x : v) x = rng.normal();
  return EmbeddingBatch::two_views(v, n, dim);
}

}  // namespace

TEST_CASE("cosine similarity basics") {
  std::vector<double> a{1, 0, 0}, b{0, 2, 0}, c{-3, 0, 0};
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
  CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
  CHECK(cosine_similarity(a, c) == doctest::Approx(-1.0));
  std::vector<double> z{0, 0, 0};
  CHECK_THROWS_AS(cosine_similarity(a, z), NumericError);
}

TEST_CASE("nt-xent agrees with the double-loop form") {
  Rng rng(11);
  for (double tau : {0.1, 0.5, 1.0}) {
    for (bool inc : {false, true}) {
      for (int n : {2, 3, 5, 8}) {
        const int dim = 1 + static_cast<int>(rng.below(16));
        auto batch = random_batch(rng, n, dim);
        ContrastiveConfig cfg{tau, inc};
        const double got = nt_xent_loss(batch, cfg);
        const double want = oracle::nt_xent(batch.vectors, 2 * n, dim, batch.pair_index, tau, inc);
        CHECK(std::abs(got - want) <= 1e-9 * std::abs(want));
        CHECK(nt_xent_loss_with_grad(batch, cfg).loss == doctest::Approx(got).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("identical embeddings give log(2(N-1))") {
  for (int n : {2, 4, 8}) {
    std::vector<double> v(static_cast<size_t>(2 * n * 3), 0.0);
    for (int i = 0; i < 2 * n; ++i) {
      v[i * 3] = 0.3;
      v[i * 3 + 1] = -1.2;
      v[i * 3 + 2] = 2.0;
    }
    auto batch = EmbeddingBatch::two_views(v, n, 3);
    CHECK(std::abs(nt_xent_loss(batch, {}) - std::log(2.0 * (n - 1))) < 1e-12);
  }
}

TEST_CASE("nt-xent gradient matches central differences") {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    auto batch = random_batch(rng, 4, 6);
    ContrastiveConfig cfg{0.5, trial % 2 == 1};
    const auto r = nt_xent_loss_with_grad(batch, cfg);
    const double h = 1e-6;
    for (size_t i = 0; i < batch.vectors.size(); ++i) {
      auto p = batch, m = batch;
      p.vectors[i] += h;
      m.vectors[i] -= h;
      const double fd = (nt_xent_loss(p, cfg) - nt_xent_loss(m, cfg)) / (2 * h);
      CHECK(r.grad[i] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("nt-xent rejects malformed batches") {
  EmbeddingBatch b;
  b.rows = 2;
  b.dim = 2;
  b.vectors = {1, 0, 0, 1};
  b.pair_index = {1, 0};
  CHECK_THROWS_AS(nt_xent_loss(b, {}), InvalidArgument);

  auto ok = EmbeddingBatch::two_views({1, 0, 0, 1, 1, 1, 1, -1}, 2, 2);
  ok.pair_index[0] = 0;
  CHECK_THROWS_AS(nt_xent_loss(ok, {}), InvalidArgument);

  ContrastiveConfig bad{0.0, false};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("nt-xent keeps large logits finite") {
  auto b = EmbeddingBatch::two_views({1, 0, 1, 0.001, -1, 0, -1, 0.002}, 2, 2);
  ContrastiveConfig cfg{0.001, false};
  const auto r = nt_xent_loss_with_grad(b, cfg);
  CHECK(std::isfinite(r.loss));
  for (double g : r.grad) CHECK(std::isfinite(g));
}
