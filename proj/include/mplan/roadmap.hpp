#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "mplan/collision.hpp"
#include "mplan/vae.hpp"

namespace mplan {

enum class PointOrigin { DataEncoded, GridSampled };

/// Safe latent vertex with its decoded joint configuration cached.
struct LatentPoint {
    Vec2 z = Vec2::Zero();
    PointOrigin origin = PointOrigin::DataEncoded;
    JointVector joints = JointVector::Zero();
};

/// Undirected weighted graph over safe latent points. Edge weights are latent
/// Euclidean distances; adjacency is symmetric with strictly positive weights.
struct Roadmap {
    std::vector<LatentPoint> nodes;
    std::vector<std::map<int, double>> adjacency;
    int k = 0;
    int grid_resolution = 0;
    std::uint64_t model_hash = 0;
    std::uint64_t config_hash = 0;

    std::size_t size() const { return nodes.size(); }
    void add_edge(int u, int v, double w);
    void validate() const;
    /// Hash over nodes and edges; used to prove queries never mutate the graph.
    std::uint64_t structure_hash() const;
};

/// Symmetrized k-nearest-neighbor graph. Exact duplicate coordinates are
/// dropped (first occurrence wins) so all edge weights stay positive.
/// Neighbor ties break deterministically by node index.
Roadmap build_knn(const std::vector<LatentPoint>& safe_points, int k);

/// Axis-aligned bounds of a latent point cloud, padded by `margin_fraction`.
Box2 latent_bounds(const Eigen::MatrixXd& latent, double margin_fraction);

struct GridStats {
    int evaluated = 0;        // resolution^2
    int safe = 0;             // stamped safe by the decoder
    int clamped = 0;          // decoded joints outside limits, clamped
    int stamp_gjk_agree = 0;  // decoder stamp matches the GJK check
};

/// Decode a resolution x resolution grid over `bounds`, stamp each point
/// safe/colliding with the decoder's flag score (threshold 0.5), and return
/// the safe points with cached joints. Out-of-limit joints are clamped and the
/// clamped pose re-checked by GJK against the decoded obstacle position.
std::vector<LatentPoint> densify_grid(const VaeModel& m, const RobotModel& robot, const Box2& bounds,
                                      int resolution, double obstacle_radius, GridStats* stats = nullptr);

struct ConnectReport {
    int components_before = 0;
    std::vector<std::tuple<int, int, double>> bridges;  // indices in the input roadmap
    int dropped_nodes = 0;
};

/// Bridge smaller components to the largest with their shortest bridging edge,
/// dropping components whose bridge would exceed `bridge_cap`.
Roadmap ensure_connected(const Roadmap& r, double bridge_cap, ConnectReport* report = nullptr);

double median_knn_edge_length(const Roadmap& r);

/// Dijkstra with deterministic tie-breaks (lower node index settles first).
/// Returns the node sequence including both endpoints; empty when unreachable.
/// `blocked`, when given, marks nodes that may not be used.
std::vector<int> shortest_path(const Roadmap& r, int start, int goal,
                               const std::vector<char>* blocked = nullptr);

double path_weight(const Roadmap& r, const std::vector<int>& path);

/// Index of the latent-nearest node; ties resolve to the lower index.
/// Returns -1 when all nodes are blocked.
int nearest_node(const Roadmap& r, const Vec2& z, const std::vector<char>* blocked = nullptr);

void save_roadmap(const Roadmap& r, const std::string& path);
Roadmap load_roadmap(const std::string& path);

}  // namespace mplan
