// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "alforge/dataset.hpp"
#include "alforge/rng.hpp"

namespace alforge {

// Isotropic Gaussian blobs. Blob j carries class j % num_classes; rows cycle
// through the blobs so classes stay balanced. Centers are uniform in
// [-center_box, center_box]^dim.
struct BlobSpec {
  std::string dataset_name = "blobs";
  std::string model_name = "synthetic";
  std::size_t num_train = 2000;
  std::size_t num_test = 1000;
  std::size_t dim = 16;
  std::size_t num_classes = 4;
  std::size_t num_blobs = 0;  // 0 = one blob per class
  double center_box = 5.0;
  double noise = 1.0;
  std::size_t budget = 200;
  std::uint64_t seed = 0;
};

inline double standard_normal(Rng& rng) {
  // Box-Muller on platform-independent uniforms.
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline EmbeddingDataset make_blobs(const BlobSpec& spec) {
  const std::size_t blobs = spec.num_blobs == 0 ? spec.num_classes : spec.num_blobs;
  Rng rng(derive_seed(spec.seed, "blobs", spec.dataset_name));
  std::vector<double> centers(blobs * spec.dim);
  for (double& c : centers) c = (2.0 * rng.uniform() - 1.0) * spec.center_box;

  auto draw = [&](std::size_t n, EmbeddingMatrix& x, LabelVector& y) {
    x = EmbeddingMatrix(n, spec.dim);
    y.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t blob = i % blobs;
      y[i] = static_cast<Label>(blob % spec.num_classes);
      auto row = x.row(i);
      for (std::size_t k = 0; k < spec.dim; ++k)
        row[k] = static_cast<float>(centers[blob * spec.dim + k] + spec.noise * standard_normal(rng));
    }
  };

  EmbeddingDataset ds;
  draw(spec.num_train, ds.train, ds.train_labels);
  draw(spec.num_test, ds.test, ds.test_labels);
  ds.manifest.dataset_name = spec.dataset_name;
  ds.manifest.model_name = spec.model_name;
  ds.manifest.pooling = Pooling::MEAN;
  ds.manifest.num_train = spec.num_train;
  ds.manifest.num_test = spec.num_test;
  ds.manifest.num_classes = spec.num_classes;
  ds.manifest.embedding_dim = spec.dim;
  ds.manifest.budget = spec.budget;
  ds.manifest.source_checksum = payload_checksum(ds);
  return ds;
}

}  // namespace alforge
