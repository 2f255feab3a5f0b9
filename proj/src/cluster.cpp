#include "routerdc/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <set>

#include "routerdc/rng.hpp"

namespace routerdc {

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

Matrix pairwise_sq_dists(const Matrix& x) {
    Matrix d(x.rows, x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = i + 1; j < x.rows; ++j) {
            double v = sq_dist(x.row(i), x.row(j), x.cols);
            d.at(i, j) = v;
            d.at(j, i) = v;
        }
    }
    return d;
}

bool all_rows_identical(const Matrix& x) {
    for (std::size_t i = 1; i < x.rows; ++i) {
        for (std::size_t c = 0; c < x.cols; ++c) {
            if (x.at(i, c) != x.at(0, c)) return false;
        }
    }
    return true;
}

// Conditional distribution row for t-SNE: binary search the precision beta so
// the entropy hits log(perplexity).
void perplexity_row(const Matrix& d2, std::size_t i, double perplexity, std::vector<double>& p_row) {
    const std::size_t n = d2.rows;
    const double target_entropy = std::log(perplexity);
    double beta = 1.0, beta_min = -std::numeric_limits<double>::infinity();
    double beta_max = std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < 64; ++iter) {
        double sum = 0.0, weighted = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                p_row[j] = 0.0;
                continue;
            }
            p_row[j] = std::exp(-beta * d2.at(i, j));
            sum += p_row[j];
            weighted += p_row[j] * d2.at(i, j);
        }
        if (sum <= 0.0) {
            // All neighbors at numerically infinite distance for this beta.
            beta_max = beta;
            beta = (std::isinf(beta_min)) ? beta / 2.0 : (beta + beta_min) / 2.0;
            continue;
        }
        double entropy = std::log(sum) + beta * weighted / sum;
        for (std::size_t j = 0; j < n; ++j) p_row[j] /= sum;
        double diff = entropy - target_entropy;
        if (std::abs(diff) < 1e-7) return;
        if (diff > 0.0) {
            beta_min = beta;
            beta = std::isinf(beta_max) ? beta * 2.0 : (beta + beta_max) / 2.0;
        } else {
            beta_max = beta;
            beta = std::isinf(beta_min) ? beta / 2.0 : (beta + beta_min) / 2.0;
        }
    }
}

Matrix reduce_tsne(const Matrix& x, const ClusterConfig& cfg) {
    const std::size_t n = x.rows;
    if (n < 4) throw ValidationError("t-SNE needs at least 4 points");
    if (cfg.tsne_perplexity >= static_cast<double>(n) / 3.0)
        throw ValidationError("t-SNE perplexity must be below n/3 (n=" + std::to_string(n) + ")");
    if (all_rows_identical(x))
        throw ValidationError("t-SNE is degenerate on all-identical embeddings");

    Matrix d2 = pairwise_sq_dists(x);

    // Symmetrized affinities.
    Matrix p(n, n);
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
        perplexity_row(d2, i, cfg.tsne_perplexity, row);
        for (std::size_t j = 0; j < n; ++j) p.at(i, j) = row[j];
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = (p.at(i, j) + p.at(j, i)) / (2.0 * n);
            v = std::max(v, 1e-12);
            p.at(i, j) = v;
            p.at(j, i) = v;
        }
        p.at(i, i) = 0.0;
    }

    const std::size_t dim = static_cast<std::size_t>(cfg.reduced_dim);
    Rng rng(cfg.seed);
    Matrix y(n, dim);
    for (double& v : y.data) v = rng.normal() * 1e-4;

    Matrix dy(n, dim), velocity(n, dim), gains(n, dim);
    std::fill(gains.data.begin(), gains.data.end(), 1.0);

    for (int iter = 0; iter < cfg.tsne_iters; ++iter) {
        const double exaggeration =
            iter < cfg.tsne_exaggeration_iters ? cfg.tsne_early_exaggeration : 1.0;
        const double momentum = iter < cfg.tsne_exaggeration_iters ? 0.5 : 0.8;

        // Student-t kernel weights and their normalizer.
        Matrix w(n, n);
        double w_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double v = 1.0 / (1.0 + sq_dist(y.row(i), y.row(j), dim));
                w.at(i, j) = v;
                w.at(j, i) = v;
                w_sum += 2.0 * v;
            }
        }

        std::fill(dy.data.begin(), dy.data.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                double q = std::max(w.at(i, j) / w_sum, 1e-12);
                double coeff = 4.0 * (exaggeration * p.at(i, j) - q) * w.at(i, j);
                for (std::size_t c = 0; c < dim; ++c)
                    dy.at(i, c) += coeff * (y.at(i, c) - y.at(j, c));
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < dim; ++c) {
                double g = dy.at(i, c);
                double& gain = gains.at(i, c);
                gain = ((g > 0.0) != (velocity.at(i, c) > 0.0)) ? gain + 0.2 : gain * 0.8;
                gain = std::max(gain, 0.01);
                velocity.at(i, c) = momentum * velocity.at(i, c) - cfg.tsne_learning_rate * gain * g;
                y.at(i, c) += velocity.at(i, c);
            }
        }

        // Re-center the layout.
        for (std::size_t c = 0; c < dim; ++c) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += y.at(i, c);
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) y.at(i, c) -= mean;
        }
    }
    return y;
}

Matrix reduce_pca(const Matrix& x, const ClusterConfig& cfg) {
    const std::size_t n = x.rows;
    const std::size_t d = x.cols;
    const std::size_t out_dim = std::min<std::size_t>(static_cast<std::size_t>(cfg.reduced_dim), d);
    if (n == 0) throw ValidationError("PCA needs at least one point");

    if (all_rows_identical(x)) {
        std::cerr << "warning: PCA on all-identical embeddings, returning zeros\n";
        return Matrix(n, out_dim);
    }

    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) mean[c] += x.at(i, c);
    for (double& m : mean) m /= static_cast<double>(n);

    Matrix centered(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) centered.at(i, c) = x.at(i, c) - mean[c];

    Matrix cov(d, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = centered.row(i);
        for (std::size_t a = 0; a < d; ++a) {
            if (r[a] == 0.0) continue;
            for (std::size_t b = a; b < d; ++b) cov.at(a, b) += r[a] * r[b];
        }
    }
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < a; ++b) cov.at(a, b) = cov.at(b, a);
    for (double& v : cov.data) v /= static_cast<double>(n);

    // Power iteration with deflation; a fixed deterministic start vector makes
    // runs reproducible without any seed dependence.
    std::vector<std::vector<double>> components;
    Matrix work = cov;
    for (std::size_t comp = 0; comp < out_dim; ++comp) {
        std::vector<double> v(d);
        for (std::size_t c = 0; c < d; ++c) v[c] = 1.0 / std::sqrt(static_cast<double>(d) + c);
        double norm = 0.0;
        for (double e : v) norm += e * e;
        for (double& e : v) e /= std::sqrt(norm);

        double eigen = 0.0;
        for (int iter = 0; iter < 2000; ++iter) {
            std::vector<double> next(d, 0.0);
            for (std::size_t a = 0; a < d; ++a) {
                double acc = 0.0;
                for (std::size_t b = 0; b < d; ++b) acc += work.at(a, b) * v[b];
                next[a] = acc;
            }
            double next_norm = 0.0;
            for (double e : next) next_norm += e * e;
            next_norm = std::sqrt(next_norm);
            if (next_norm == 0.0) break;  // remaining spectrum is zero
            for (double& e : next) e /= next_norm;
            double delta = 0.0;
            for (std::size_t c = 0; c < d; ++c) delta = std::max(delta, std::abs(next[c] - v[c]));
            v = next;
            eigen = next_norm;
            if (delta < 1e-13) break;
        }
        components.push_back(v);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) work.at(a, b) -= eigen * v[a] * v[b];
    }

    Matrix out(n, out_dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t comp = 0; comp < components.size(); ++comp) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c) acc += centered.at(i, c) * components[comp][c];
            out.at(i, comp) = acc;
        }
    return out;
}

}  // namespace

Matrix reduce_dim(const Matrix& embeddings, const ClusterConfig& config) {
    config.validate();
    for (double v : embeddings.data)
        if (!std::isfinite(v)) throw ValidationError("embeddings contain a non-finite value");
    switch (config.reducer) {
        case Reducer::tsne: return reduce_tsne(embeddings, config);
        case Reducer::pca: return reduce_pca(embeddings, config);
        case Reducer::none: return embeddings;
    }
    return embeddings;
}

std::vector<int> kmeans(const Matrix& points, int n_clusters, std::uint64_t seed, int max_iters,
                        double tol) {
    const std::size_t n = points.rows;
    const std::size_t d = points.cols;
    if (n_clusters < 1) throw ValidationError("k-means needs at least one cluster");
    const std::size_t k = static_cast<std::size_t>(n_clusters);
    if (n < k)
        throw ValidationError("k-means needs at least as many points (" + std::to_string(n) +
                              ") as clusters (" + std::to_string(k) + ")");

    Rng rng(seed);
    Matrix centroids(k, d);

    // k-means++ seeding.
    std::size_t first = static_cast<std::size_t>(rng.below(n));
    std::copy(points.row(first), points.row(first) + d, centroids.row(0));
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double v = sq_dist(points.row(i), centroids.row(c - 1), d);
            min_d2[i] = std::min(min_d2[i], v);
            total += min_d2[i];
        }
        std::size_t chosen;
        if (total <= 0.0) {
            chosen = static_cast<std::size_t>(rng.below(n));  // duplicate points
        } else {
            double r = rng.uniform() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += min_d2[i];
                if (acc >= r) {
                    chosen = i;
                    break;
                }
            }
        }
        std::copy(points.row(chosen), points.row(chosen) + d, centroids.row(c));
    }

    std::vector<int> assignment(n, 0);
    for (int iter = 0; iter < max_iters; ++iter) {
        // Assign, ties to the lowest centroid index.
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (std::size_t c = 0; c < k; ++c) {
                double v = sq_dist(points.row(i), centroids.row(c), d);
                if (v < best) {
                    best = v;
                    best_c = static_cast<int>(c);
                }
            }
            assignment[i] = best_c;
        }

        // Re-seed empty clusters from the point farthest from its centroid.
        std::vector<std::size_t> counts(k, 0);
        for (int a : assignment) ++counts[static_cast<std::size_t>(a)];
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            double worst = -1.0;
            std::size_t worst_i = 0;
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t a = static_cast<std::size_t>(assignment[i]);
                if (counts[a] <= 1) continue;  // do not empty another cluster
                double v = sq_dist(points.row(i), centroids.row(a), d);
                if (v > worst) {
                    worst = v;
                    worst_i = i;
                }
            }
            --counts[static_cast<std::size_t>(assignment[worst_i])];
            assignment[worst_i] = static_cast<int>(c);
            counts[c] = 1;
            std::copy(points.row(worst_i), points.row(worst_i) + d, centroids.row(c));
        }

        // Update step.
        Matrix next(k, d);
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t c = static_cast<std::size_t>(assignment[i]);
            ++sizes[c];
            for (std::size_t col = 0; col < d; ++col) next.at(c, col) += points.at(i, col);
        }
        double movement = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t col = 0; col < d; ++col) next.at(c, col) /= static_cast<double>(sizes[c]);
            movement = std::max(movement, std::sqrt(sq_dist(next.row(c), centroids.row(c), d)));
        }
        centroids = next;
        if (movement < tol) break;
    }
    // The returned assignment is the last one used for an update, so the
    // non-empty guarantee holds even for degenerate inputs.
    return assignment;
}

double kmeans_objective(const Matrix& points, const std::vector<int>& assignment, int n_clusters) {
    const std::size_t k = static_cast<std::size_t>(n_clusters);
    const std::size_t d = points.cols;
    Matrix centroids(k, d);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < points.rows; ++i) {
        std::size_t c = static_cast<std::size_t>(assignment[i]);
        ++sizes[c];
        for (std::size_t col = 0; col < d; ++col) centroids.at(c, col) += points.at(i, col);
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (sizes[c] == 0) continue;
        for (std::size_t col = 0; col < d; ++col) centroids.at(c, col) /= static_cast<double>(sizes[c]);
    }
    double obj = 0.0;
    for (std::size_t i = 0; i < points.rows; ++i)
        obj += sq_dist(points.row(i), centroids.row(static_cast<std::size_t>(assignment[i])), d);
    return obj;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw ValidationError("ARI requires equal-length labelings");
    const std::size_t n = a.size();
    if (n == 0) return 1.0;

    std::map<std::pair<int, int>, double> table;
    std::map<int, double> row_sum, col_sum;
    for (std::size_t i = 0; i < n; ++i) {
        table[{a[i], b[i]}] += 1.0;
        row_sum[a[i]] += 1.0;
        col_sum[b[i]] += 1.0;
    }
    auto choose2 = [](double m) { return m * (m - 1.0) / 2.0; };
    double sum_table = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, v] : table) sum_table += choose2(v);
    for (const auto& [key, v] : row_sum) sum_rows += choose2(v);
    for (const auto& [key, v] : col_sum) sum_cols += choose2(v);
    double total = choose2(static_cast<double>(n));
    double expected = sum_rows * sum_cols / total;
    double max_index = (sum_rows + sum_cols) / 2.0;
    if (max_index == expected) return 1.0;  // both labelings trivial
    return (sum_table - expected) / (max_index - expected);
}

void assign_groups(std::vector<Query>& queries, const Matrix& embeddings,
                   const ClusterConfig& config) {
    config.validate();
    if (config.group_source == GroupSource::task_identity) {
        std::set<std::string> labels;
        for (const Query& q : queries) {
            if (!q.task_label)
                throw ValidationError("query '" + q.id +
                                      "' has no task_label; task_identity grouping needs one");
            labels.insert(*q.task_label);
        }
        std::map<std::string, int> group_of;
        int next = 0;
        for (const std::string& label : labels) group_of[label] = next++;
        for (Query& q : queries) q.cluster_id = group_of[*q.task_label];
        return;
    }

    if (embeddings.rows != queries.size())
        throw ValidationError("embedding count does not match query count");
    Matrix reduced = reduce_dim(embeddings, config);
    std::vector<int> assignment =
        kmeans(reduced, config.num_groups, config.seed, config.kmeans_max_iters, config.kmeans_tol);
    for (std::size_t i = 0; i < queries.size(); ++i) queries[i].cluster_id = assignment[i];
}

}  // namespace routerdc
