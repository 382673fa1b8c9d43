// Copyright 2026 The xling Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "xling/corpus.hpp"
#include "xling/errors.hpp"
#include "xling/mining.hpp"
#include "xling/rng.hpp"

namespace xling {

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotation, ascending.
// Convergence: off-diagonal Frobenius norm below `tol`.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, int n,
                                              double tol = 1e-12,
                                              int max_sweeps = 100) {
  auto at = [&](int i, int j) -> double& {
    return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
  };
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += 2.0 * at(i, j) * at(i, j);
    if (std::sqrt(off) < tol) break;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        double apq = at(p, q);
        if (apq == 0.0) continue;
        double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> eig(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = at(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

struct EigenConfig {
  int sample_size = 10;   // K translation pairs per sample
  int num_samples = 1000;  // N draws
  std::string weighting = "gaussian_median";
  std::uint64_t seed = 0;

  void validate() const {
    if (sample_size < 2) throw ConfigError("eigen: sample_size must be >= 2");
    if (num_samples < 1) throw ConfigError("eigen: num_samples must be >= 1");
    if (weighting != "gaussian_median")
      throw ConfigError("eigen: unknown weighting scheme tag \"" + weighting + "\"");
  }
};

struct LaplacianResult {
  std::vector<double> matrix;  // n x n, row-major
  std::vector<double> eigenvalues;  // ascending
};

// Unnormalized Laplacian L = D - W over a Gaussian-kernel dense graph,
// w_ij = exp(-||e_i - e_j||^2 / sigma^2) with sigma^2 the median squared
// pairwise distance of the sample. A degenerate all-identical sample
// (sigma^2 = 0) takes the limit W = all-ones off the diagonal.
inline LaplacianResult graph_laplacian(const std::vector<std::vector<double>>& embeddings,
                                       const std::string& weighting = "gaussian_median") {
  int n = static_cast<int>(embeddings.size());
  if (n < 2) throw ConfigError("graph_laplacian: need at least 2 embeddings");
  if (weighting != "gaussian_median")
    throw ConfigError("graph_laplacian: unknown weighting scheme tag");

  std::vector<double> sq_dist(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  std::vector<double> upper;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < embeddings[static_cast<std::size_t>(i)].size(); ++k) {
        double diff = embeddings[static_cast<std::size_t>(i)][k] - embeddings[static_cast<std::size_t>(j)][k];
        d2 += diff * diff;
      }
      sq_dist[static_cast<std::size_t>(i) * n + j] = d2;
      sq_dist[static_cast<std::size_t>(j) * n + i] = d2;
      upper.push_back(d2);
    }
  std::sort(upper.begin(), upper.end());
  double sigma_sq = upper.size() % 2 == 1
                        ? upper[upper.size() / 2]
                        : 0.5 * (upper[upper.size() / 2 - 1] + upper[upper.size() / 2]);

  LaplacianResult out;
  out.matrix.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  auto lap = [&](int i, int j) -> double& {
    return out.matrix[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)];
  };
  for (int i = 0; i < n; ++i) {
    double degree = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double w = sigma_sq == 0.0
                     ? 1.0
                     : std::exp(-sq_dist[static_cast<std::size_t>(i) * n + j] / sigma_sq);
      lap(i, j) = -w;
      degree += w;
    }
    lap(i, i) = degree;
  }
  out.eigenvalues = jacobi_eigenvalues(out.matrix, n);
  return out;
}

// Psi(S, T): over N seeded samples of K aligned pairs, the mean of the
// summed squared gaps between source-side and target-side Laplacian
// spectra. Zero when the two sides embed identically.
inline double eigen_similarity_core(const std::vector<std::vector<double>>& source_emb,
                                    const std::vector<std::vector<double>>& target_emb,
                                    const EigenConfig& cfg) {
  cfg.validate();
  if (source_emb.size() != target_emb.size())
    throw DimensionError("eigen_similarity: pair sides must align");
  if (static_cast<int>(source_emb.size()) < cfg.sample_size)
    throw ConfigError("eigen_similarity: need at least sample_size pairs");
  Rng rng(cfg.seed);
  double total = 0.0;
  std::vector<std::vector<double>> s(static_cast<std::size_t>(cfg.sample_size));
  std::vector<std::vector<double>> t(static_cast<std::size_t>(cfg.sample_size));
  for (int draw = 0; draw < cfg.num_samples; ++draw) {
    std::vector<int> idx = rng.sample_indices(static_cast<int>(source_emb.size()),
                                              cfg.sample_size);
    for (int k = 0; k < cfg.sample_size; ++k) {
      s[static_cast<std::size_t>(k)] = source_emb[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
      t[static_cast<std::size_t>(k)] = target_emb[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
    }
    std::vector<double> ls = graph_laplacian(s, cfg.weighting).eigenvalues;
    std::vector<double> lt = graph_laplacian(t, cfg.weighting).eigenvalues;
    for (int j = 0; j < cfg.sample_size; ++j) {
      double gap = ls[static_cast<std::size_t>(j)] - lt[static_cast<std::size_t>(j)];
      total += gap * gap;
    }
  }
  return total / static_cast<double>(cfg.num_samples);
}

inline double eigen_similarity(Model& model,
                               const std::vector<TranslationExample>& pairs,
                               const EigenConfig& cfg) {
  EmbeddingCache cache(model);
  std::vector<std::vector<double>> src, tgt;
  for (const TranslationExample& e : pairs) {
    src.push_back(cache.get(e.src));
    tgt.push_back(cache.get(e.tgt));
  }
  return eigen_similarity_core(src, tgt, cfg);
}

}  // namespace xling
