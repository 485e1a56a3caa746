#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mplan/dataset.hpp"
#include "mplan/vae.hpp"

namespace mplan {

struct EmbeddingReport {
    int subsample_size = 0;
    int k = 0;
    double trustworthiness = 0.0;
    double continuity = 0.0;
    double silhouette = 0.0;                 // over collision classes
    double distance_rank_correlation = 0.0;  // Spearman, high vs latent distances
};

/// Rank-based neighborhood preservation (Venna & Kaski). `high` is D x N,
/// `low` is d x N, one column per point. 1.0 = perfect preservation; the
/// degenerate k = N-1 case yields 1.0 since every point is a neighbor in both
/// spaces. Ties are broken by point index.
double trustworthiness(const Eigen::MatrixXd& high, const Eigen::MatrixXd& low, int k);

/// Symmetric counterpart: penalizes high-space neighbors missing in the embedding.
double continuity(const Eigen::MatrixXd& high, const Eigen::MatrixXd& low, int k);

/// Mean silhouette over the two collision classes in the embedding.
/// Singleton-class points score 0 by convention.
double silhouette_two_class(const Eigen::MatrixXd& points, const std::vector<int>& labels);

/// Spearman correlation between high-space and embedding distances over a
/// seeded random subset of point pairs.
double spearman_distance_correlation(const Eigen::MatrixXd& high, const Eigen::MatrixXd& low,
                                     std::size_t max_pairs, std::uint64_t seed);

/// One report per subsample size: encode the bin, score neighborhood
/// preservation against the 17 non-flag normalized input fields and class
/// separation against the collision flags. Deterministic per seed.
std::vector<EmbeddingReport> stability_across_bins(const Dataset& d, const VaeModel& m,
                                                   const std::vector<int>& bin_sizes, int k, std::uint64_t seed);

EmbeddingReport embedding_report(const Dataset& d, const VaeModel& m, int k, std::uint64_t seed);

void save_embedding_reports_csv(const std::vector<EmbeddingReport>& reports, const std::string& path);

/// Drop the flag row: metrics compare geometry, the flag is categorical.
Eigen::MatrixXd nonflag_rows(const Eigen::MatrixXd& x18);

}  // namespace mplan
