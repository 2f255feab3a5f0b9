#pragma once

#include <cstdint>
#include <vector>

#include "routerdc/types.hpp"

namespace routerdc {

// Row-major dense matrix, the working representation for clustering.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }
};

// Dimensionality reduction per the configured reducer: exact O(n^2) t-SNE with
// seeded layout, top principal components, or the identity.
Matrix reduce_dim(const Matrix& embeddings, const ClusterConfig& config);

// k-means++ seeding plus Lloyd iterations; every cluster ends non-empty
// (empty clusters re-seed from the farthest point). Deterministic given seed.
std::vector<int> kmeans(const Matrix& points, int n_clusters, std::uint64_t seed, int max_iters,
                        double tol);

// Sum of squared distances to assigned centroids, for invariance checks.
double kmeans_objective(const Matrix& points, const std::vector<int>& assignment, int n_clusters);

// Agreement between two labelings up to relabeling; 1.0 is a perfect match.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

// Sets cluster_id on every query, either from clustering the given embeddings
// (one row per query) or from the distinct task labels (sorted order).
void assign_groups(std::vector<Query>& queries, const Matrix& embeddings,
                   const ClusterConfig& config);

}  // namespace routerdc
