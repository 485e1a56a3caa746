#include "mplan/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "mplan/errors.hpp"
#include "mplan/textio.hpp"

namespace mplan {

namespace {

// Squared distances from point i to every column, via |a|^2 - 2 a.b + |b|^2.
Eigen::VectorXd sq_dists_to(const Eigen::MatrixXd& pts, const Eigen::VectorXd& sq_norms, Eigen::Index i) {
    Eigen::VectorXd d = sq_norms.array() - 2.0 * (pts.transpose() * pts.col(i)).array() + sq_norms[i];
    d = d.cwiseMax(0.0);
    d[i] = std::numeric_limits<double>::infinity();
    return d;
}

// Argsort by (distance, index); returns the permutation and fills ranks
// (rank 1 = nearest neighbor).
void order_and_ranks(const Eigen::VectorXd& d, std::vector<int>& order, std::vector<int>& rank) {
    const int n = static_cast<int>(d.size());
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (d[a] != d[b]) return d[a] < d[b];
        return a < b;
    });
    rank.resize(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r + 1;
}

struct NeighborhoodScores {
    double trust = 1.0;
    double cont = 1.0;
};

NeighborhoodScores neighborhood_scores(const Eigen::MatrixXd& high, const Eigen::MatrixXd& low, int k) {
    const auto n = high.cols();
    if (low.cols() != n) throw DomainError("neighborhood metrics: point counts differ");
    if (k < 1 || k >= n) {
        if (k == n - 1) return {};  // every point is a neighbor in both spaces
        throw DomainError("neighborhood metrics: k must be in [1, n-1]");
    }
    const Eigen::VectorXd hsq = high.colwise().squaredNorm();
    const Eigen::VectorXd lsq = low.colwise().squaredNorm();

    double trust_penalty = 0.0, cont_penalty = 0.0;
    std::vector<int> order_h, rank_h, order_l, rank_l;
    std::vector<char> in_high(static_cast<std::size_t>(n)), in_low(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd dh = sq_dists_to(high, hsq, i);
        const Eigen::VectorXd dl = sq_dists_to(low, lsq, i);
        order_and_ranks(dh, order_h, rank_h);
        order_and_ranks(dl, order_l, rank_l);
        std::fill(in_high.begin(), in_high.end(), 0);
        std::fill(in_low.begin(), in_low.end(), 0);
        for (int r = 0; r < k; ++r) {
            in_high[static_cast<std::size_t>(order_h[static_cast<std::size_t>(r)])] = 1;
            in_low[static_cast<std::size_t>(order_l[static_cast<std::size_t>(r)])] = 1;
        }
        for (int r = 0; r < k; ++r) {
            const int j_low = order_l[static_cast<std::size_t>(r)];
            if (!in_high[static_cast<std::size_t>(j_low)])
                trust_penalty += rank_h[static_cast<std::size_t>(j_low)] - k;
            const int j_high = order_h[static_cast<std::size_t>(r)];
            if (!in_low[static_cast<std::size_t>(j_high)])
                cont_penalty += rank_l[static_cast<std::size_t>(j_high)] - k;
        }
    }
    const double normalizer =
        static_cast<double>(n) * k * (2.0 * static_cast<double>(n) - 3.0 * k - 1.0);
    NeighborhoodScores s;
    if (trust_penalty > 0.0) s.trust = 1.0 - 2.0 / normalizer * trust_penalty;
    if (cont_penalty > 0.0) s.cont = 1.0 - 2.0 / normalizer * cont_penalty;
    return s;
}

}  // namespace

double trustworthiness(const Eigen::MatrixXd& high, const Eigen::MatrixXd& low, int k) {
    return neighborhood_scores(high, low, k).trust;
}

double continuity(const Eigen::MatrixXd& high, const Eigen::MatrixXd& low, int k) {
    return neighborhood_scores(high, low, k).cont;
}

double silhouette_two_class(const Eigen::MatrixXd& points, const std::vector<int>& labels) {
    const auto n = points.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n) throw DomainError("silhouette: label count mismatch");
    std::array<Eigen::Index, 2> class_count{0, 0};
    for (const int l : labels) {
        if (l != 0 && l != 1) throw DomainError("silhouette: labels must be 0/1");
        ++class_count[static_cast<std::size_t>(l)];
    }
    if (class_count[0] == 0 || class_count[1] == 0) throw DomainError("silhouette: both classes required");

    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double sum_same = 0.0, sum_other = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dist = (points.col(i) - points.col(j)).norm();
            (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)] ? sum_same : sum_other) +=
                dist;
        }
        const auto own = class_count[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
        if (own <= 1) continue;  // singleton scores 0
        const double a = sum_same / static_cast<double>(own - 1);
        const double b = sum_other / static_cast<double>(n - own);
        const double denom = std::max(a, b);
        if (denom > 0.0) acc += (b - a) / denom;
    }
    return acc / static_cast<double>(n);
}

namespace {

std::vector<double> midranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = mid;
        i = j + 1;
    }
    return rank;
}

}  // namespace

double spearman_distance_correlation(const Eigen::MatrixXd& high, const Eigen::MatrixXd& low,
                                     std::size_t max_pairs, std::uint64_t seed) {
    const auto n = high.cols();
    if (low.cols() != n) throw DomainError("spearman: point counts differ");
    if (n < 3) throw DomainError("spearman: need at least 3 points");
    const std::size_t total = static_cast<std::size_t>(n) * (static_cast<std::size_t>(n) - 1) / 2;
    const std::size_t m = std::min(max_pairs, total);

    Rng rng(seed ^ 0x3c6ef372fe94f82bull);
    std::vector<double> dh, dl;
    dh.reserve(m);
    dl.reserve(m);
    for (std::size_t t = 0; t < m; ++t) {
        const auto i = static_cast<Eigen::Index>(rng.uniform_int(0, n - 1));
        auto j = static_cast<Eigen::Index>(rng.uniform_int(0, n - 2));
        if (j >= i) ++j;
        dh.push_back((high.col(i) - high.col(j)).norm());
        dl.push_back((low.col(i) - low.col(j)).norm());
    }
    const auto rh = midranks(dh);
    const auto rl = midranks(dl);
    const double mean = 0.5 * static_cast<double>(m + 1);
    double num = 0.0, den_h = 0.0, den_l = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
        const double a = rh[t] - mean, b = rl[t] - mean;
        num += a * b;
        den_h += a * a;
        den_l += b * b;
    }
    const double den = std::sqrt(den_h * den_l);
    return den > 0.0 ? num / den : 0.0;
}

Eigen::MatrixXd nonflag_rows(const Eigen::MatrixXd& x18) {
    return x18.topRows(kSampleDim - 1);
}

EmbeddingReport embedding_report(const Dataset& d, const VaeModel& m, int k, std::uint64_t seed) {
    if (d.samples.empty()) throw DomainError("embedding_report: empty dataset");
    const Eigen::MatrixXd x = normalized_matrix(d, m.norm);
    const Eigen::MatrixXd high = nonflag_rows(x);
    const Eigen::MatrixXd low = m.encode_batch(x);
    std::vector<int> labels;
    labels.reserve(d.samples.size());
    for (const auto& s : d.samples) labels.push_back(s.collision_flag);

    EmbeddingReport r;
    r.subsample_size = static_cast<int>(d.samples.size());
    r.k = k;
    const auto scores = neighborhood_scores(high, low, k);
    r.trustworthiness = scores.trust;
    r.continuity = scores.cont;
    r.silhouette = silhouette_two_class(low, labels);
    r.distance_rank_correlation = spearman_distance_correlation(high, low, 200000, seed);
    return r;
}

std::vector<EmbeddingReport> stability_across_bins(const Dataset& d, const VaeModel& m,
                                                   const std::vector<int>& bin_sizes, int k, std::uint64_t seed) {
    std::vector<EmbeddingReport> out;
    for (std::size_t b = 0; b < bin_sizes.size(); ++b) {
        const auto size = static_cast<std::size_t>(bin_sizes[b]);
        if (size > d.samples.size()) throw DomainError("stability_across_bins: bin larger than dataset");
        const Dataset bin = (size == d.samples.size()) ? d : subsample(d, size, seed + b);
        out.push_back(embedding_report(bin, m, k, seed + b));
    }
    return out;
}

void save_embedding_reports_csv(const std::vector<EmbeddingReport>& reports, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write embedding report: " + path);
    f << "subsample_size,k,trustworthiness,continuity,silhouette,distance_rank_correlation\n";
    for (const auto& r : reports)
        f << r.subsample_size << "," << r.k << "," << fmt_g17(r.trustworthiness) << "," << fmt_g17(r.continuity)
          << "," << fmt_g17(r.silhouette) << "," << fmt_g17(r.distance_rank_correlation) << "\n";
}

}  // namespace mplan
