#include "mplan/roadmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "mplan/errors.hpp"
#include "mplan/textio.hpp"

namespace mplan {

void Roadmap::add_edge(int u, int v, double w) {
    if (u == v) throw DomainError("roadmap: self-loop rejected");
    if (!(w > 0.0)) throw DomainError("roadmap: edge weight must be positive");
    adjacency[static_cast<std::size_t>(u)][v] = w;
    adjacency[static_cast<std::size_t>(v)][u] = w;
}

void Roadmap::validate() const {
    if (adjacency.size() != nodes.size()) throw DomainError("roadmap: adjacency size mismatch");
    for (std::size_t u = 0; u < adjacency.size(); ++u) {
        for (const auto& [v, w] : adjacency[u]) {
            if (v < 0 || static_cast<std::size_t>(v) >= nodes.size())
                throw DomainError("roadmap: edge endpoint out of range");
            if (static_cast<std::size_t>(v) == u) throw DomainError("roadmap: self-loop present");
            if (!(w > 0.0)) throw DomainError("roadmap: non-positive edge weight");
            const auto& back = adjacency[static_cast<std::size_t>(v)];
            const auto it = back.find(static_cast<int>(u));
            if (it == back.end() || it->second != w) throw DomainError("roadmap: asymmetric edge");
        }
    }
}

std::uint64_t Roadmap::structure_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& n : nodes) {
        h = fnv1a64(n.z.data(), 2 * sizeof(double), h);
        h = fnv1a64(n.joints.data(), 7 * sizeof(double), h);
        const int o = n.origin == PointOrigin::GridSampled ? 1 : 0;
        h = fnv1a64(&o, sizeof(o), h);
    }
    for (const auto& nbrs : adjacency)
        for (const auto& [v, w] : nbrs) {
            h = fnv1a64(&v, sizeof(v), h);
            h = fnv1a64(&w, sizeof(w), h);
        }
    return h;
}

Roadmap build_knn(const std::vector<LatentPoint>& safe_points, int k) {
    if (k < 1) throw DomainError("build_knn: k must be >= 1");

    // Drop exact duplicate coordinates so no zero-weight edge can appear.
    std::vector<LatentPoint> pts;
    pts.reserve(safe_points.size());
    {
        std::vector<std::size_t> order(safe_points.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const auto &za = safe_points[a].z, &zb = safe_points[b].z;
            if (za.x() != zb.x()) return za.x() < zb.x();
            if (za.y() != zb.y()) return za.y() < zb.y();
            return a < b;
        });
        std::vector<char> keep(safe_points.size(), 1);
        for (std::size_t i = 1; i < order.size(); ++i)
            if (safe_points[order[i]].z == safe_points[order[i - 1]].z) keep[order[i]] = 0;
        for (std::size_t i = 0; i < safe_points.size(); ++i)
            if (keep[i]) pts.push_back(safe_points[i]);
    }
    const int n = static_cast<int>(pts.size());
    if (n < k + 1) throw DomainError("build_knn: need at least k+1 distinct points");

    Roadmap r;
    r.nodes = std::move(pts);
    r.adjacency.assign(static_cast<std::size_t>(n), {});
    r.k = k;

    std::vector<std::pair<double, int>> cand(static_cast<std::size_t>(n));
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v)
            cand[static_cast<std::size_t>(v)] = {(r.nodes[static_cast<std::size_t>(u)].z -
                                                  r.nodes[static_cast<std::size_t>(v)].z)
                                                     .norm(),
                                                 v};
        cand[static_cast<std::size_t>(u)].first = std::numeric_limits<double>::infinity();
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        for (int i = 0; i < k; ++i) {
            const auto& [w, v] = cand[static_cast<std::size_t>(i)];
            r.add_edge(u, v, w);  // union symmetrization
        }
    }
    return r;
}

Box2 latent_bounds(const Eigen::MatrixXd& latent, double margin_fraction) {
    if (latent.cols() == 0) throw DomainError("latent_bounds: empty cloud");
    Box2 b;
    b.lo = latent.rowwise().minCoeff();
    b.hi = latent.rowwise().maxCoeff();
    const Vec2 pad = (b.hi - b.lo) * margin_fraction;
    b.lo -= pad;
    b.hi += pad;
    return b;
}

std::vector<LatentPoint> densify_grid(const VaeModel& m, const RobotModel& robot, const Box2& bounds,
                                      int resolution, double obstacle_radius, GridStats* stats) {
    if (resolution < 2) throw DomainError("densify_grid: resolution must be >= 2");
    GridStats local;
    local.evaluated = resolution * resolution;
    std::vector<LatentPoint> safe;
    for (int iy = 0; iy < resolution; ++iy) {
        for (int ix = 0; ix < resolution; ++ix) {
            Vec2 z;
            z.x() = bounds.lo.x() + (bounds.hi.x() - bounds.lo.x()) * ix / (resolution - 1);
            z.y() = bounds.lo.y() + (bounds.hi.y() - bounds.lo.y()) * iy / (resolution - 1);
            const SampleVec decoded_n = m.decode(z);
            const bool stamped_safe = m.flag_score(decoded_n) < 0.5;
            const Sample s = Sample::unflatten(m.norm.denormalize(decoded_n));

            JointVector joints = s.joints;
            if (!within_limits(robot, joints)) {
                joints = clamp_to_limits(robot, joints);
                ++local.clamped;
            }
            const auto obstacle = ConvexShape::sphere(obstacle_radius, s.obstacle_pos);
            const bool gjk_safe = !is_collision(robot, joints, obstacle, 0.0);
            if (stamped_safe == gjk_safe) ++local.stamp_gjk_agree;

            if (stamped_safe) {
                ++local.safe;
                LatentPoint p;
                p.z = z;
                p.origin = PointOrigin::GridSampled;
                p.joints = joints;
                safe.push_back(p);
            }
        }
    }
    if (stats) *stats = local;
    return safe;
}

namespace {

std::vector<int> component_labels(const Roadmap& r, int& count) {
    std::vector<int> label(r.size(), -1);
    count = 0;
    for (std::size_t s = 0; s < r.size(); ++s) {
        if (label[s] != -1) continue;
        std::vector<int> stack{static_cast<int>(s)};
        label[s] = count;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (const auto& [v, w] : r.adjacency[static_cast<std::size_t>(u)]) {
                (void)w;
                if (label[static_cast<std::size_t>(v)] == -1) {
                    label[static_cast<std::size_t>(v)] = count;
                    stack.push_back(v);
                }
            }
        }
        ++count;
    }
    return label;
}

}  // namespace

double median_knn_edge_length(const Roadmap& r) {
    std::vector<double> w;
    for (std::size_t u = 0; u < r.size(); ++u)
        for (const auto& [v, weight] : r.adjacency[u])
            if (static_cast<std::size_t>(v) > u) w.push_back(weight);
    if (w.empty()) return 0.0;
    std::sort(w.begin(), w.end());
    return w[w.size() / 2];
}

Roadmap ensure_connected(const Roadmap& r, double bridge_cap, ConnectReport* report) {
    ConnectReport rep;
    std::vector<int> label = component_labels(r, rep.components_before);
    Roadmap out = r;
    if (rep.components_before > 1) {
        // Group nodes per component; largest becomes the core.
        std::vector<std::vector<int>> comps(static_cast<std::size_t>(rep.components_before));
        for (std::size_t i = 0; i < label.size(); ++i)
            comps[static_cast<std::size_t>(label[i])].push_back(static_cast<int>(i));
        std::vector<std::size_t> order(comps.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (comps[a].size() != comps[b].size()) return comps[a].size() > comps[b].size();
            return comps[a].front() < comps[b].front();
        });

        std::vector<int> core = comps[order[0]];
        std::vector<char> dropped(r.size(), 0);
        for (std::size_t ci = 1; ci < order.size(); ++ci) {
            const auto& comp = comps[order[ci]];
            double best = std::numeric_limits<double>::infinity();
            int best_u = -1, best_v = -1;
            for (const int u : comp)
                for (const int v : core) {
                    const double d = (r.nodes[static_cast<std::size_t>(u)].z -
                                      r.nodes[static_cast<std::size_t>(v)].z)
                                         .norm();
                    if (d < best || (d == best && (u < best_u || (u == best_u && v < best_v)))) {
                        best = d;
                        best_u = u;
                        best_v = v;
                    }
                }
            if (best <= bridge_cap && best > 0.0) {
                out.add_edge(best_u, best_v, best);
                rep.bridges.emplace_back(best_u, best_v, best);
                core.insert(core.end(), comp.begin(), comp.end());
            } else {
                for (const int u : comp) dropped[static_cast<std::size_t>(u)] = 1;
                rep.dropped_nodes += static_cast<int>(comp.size());
            }
        }

        if (rep.dropped_nodes > 0) {
            // Compact indices after drops.
            std::vector<int> remap(r.size(), -1);
            Roadmap compacted;
            compacted.k = out.k;
            compacted.grid_resolution = out.grid_resolution;
            compacted.model_hash = out.model_hash;
            compacted.config_hash = out.config_hash;
            for (std::size_t i = 0; i < out.nodes.size(); ++i) {
                if (dropped[i]) continue;
                remap[i] = static_cast<int>(compacted.nodes.size());
                compacted.nodes.push_back(out.nodes[i]);
            }
            compacted.adjacency.assign(compacted.nodes.size(), {});
            for (std::size_t u = 0; u < out.nodes.size(); ++u) {
                if (dropped[u]) continue;
                for (const auto& [v, w] : out.adjacency[u])
                    if (!dropped[static_cast<std::size_t>(v)] && remap[u] < remap[static_cast<std::size_t>(v)])
                        compacted.add_edge(remap[u], remap[static_cast<std::size_t>(v)], w);
            }
            out = std::move(compacted);
        }
    }
    if (report) *report = rep;
    return out;
}

std::vector<int> shortest_path(const Roadmap& r, int start, int goal, const std::vector<char>* blocked) {
    const int n = static_cast<int>(r.size());
    if (start < 0 || start >= n || goal < 0 || goal >= n)
        throw DomainError("shortest_path: node index out of range");
    auto is_blocked = [&](int u) { return blocked && (*blocked)[static_cast<std::size_t>(u)]; };
    if (is_blocked(start) || is_blocked(goal)) return {};
    if (start == goal) return {start};

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(static_cast<std::size_t>(n), inf);
    std::vector<int> prev(static_cast<std::size_t>(n), -1);
    std::vector<char> done(static_cast<std::size_t>(n), 0);
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
    dist[static_cast<std::size_t>(start)] = 0.0;
    pq.emplace(0.0, start);
    while (!pq.empty()) {
        const auto [du, u] = pq.top();
        pq.pop();
        if (done[static_cast<std::size_t>(u)]) continue;
        done[static_cast<std::size_t>(u)] = 1;
        if (u == goal) break;
        for (const auto& [v, w] : r.adjacency[static_cast<std::size_t>(u)]) {
            if (is_blocked(v) || done[static_cast<std::size_t>(v)]) continue;
            const double alt = du + w;
            auto& dv = dist[static_cast<std::size_t>(v)];
            // Strict improvement, or an equal-cost path through a lower-index
            // predecessor: keeps results deterministic.
            if (alt < dv || (alt == dv && u < prev[static_cast<std::size_t>(v)])) {
                dv = alt;
                prev[static_cast<std::size_t>(v)] = u;
                pq.emplace(alt, v);
            }
        }
    }
    if (dist[static_cast<std::size_t>(goal)] == inf) return {};
    std::vector<int> path;
    for (int u = goal; u != -1; u = prev[static_cast<std::size_t>(u)]) path.push_back(u);
    std::reverse(path.begin(), path.end());
    return path;
}

double path_weight(const Roadmap& r, const std::vector<int>& path) {
    double w = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const auto& nbrs = r.adjacency[static_cast<std::size_t>(path[i])];
        const auto it = nbrs.find(path[i + 1]);
        if (it == nbrs.end()) throw DomainError("path_weight: path uses a missing edge");
        w += it->second;
    }
    return w;
}

int nearest_node(const Roadmap& r, const Vec2& z, const std::vector<char>* blocked) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (blocked && (*blocked)[i]) continue;
        const double d = (r.nodes[i].z - z).norm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

void save_roadmap(const Roadmap& r, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write roadmap file: " + path);
    f << "mplan-roadmap 1\n";
    f << "config_hash " << hex64(r.config_hash) << "\n";
    f << "model_hash " << hex64(r.model_hash) << "\n";
    f << "k " << r.k << "\n";
    f << "grid_resolution " << r.grid_resolution << "\n";
    f << "nodes " << r.nodes.size() << "\n";
    for (const auto& n : r.nodes) {
        f << "node " << fmt_g17(n.z.x()) << " " << fmt_g17(n.z.y()) << " "
          << (n.origin == PointOrigin::GridSampled ? "grid" : "data");
        for (int i = 0; i < kNumJoints; ++i) f << " " << fmt_g17(n.joints[i]);
        f << "\n";
    }
    std::size_t edges = 0;
    for (std::size_t u = 0; u < r.size(); ++u)
        for (const auto& [v, w] : r.adjacency[u])
            if (static_cast<std::size_t>(v) > u) ++edges;
    f << "edges " << edges << "\n";
    for (std::size_t u = 0; u < r.size(); ++u)
        for (const auto& [v, w] : r.adjacency[u])
            if (static_cast<std::size_t>(v) > u) f << "edge " << u << " " << v << " " << fmt_g17(w) << "\n";
}

Roadmap load_roadmap(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open roadmap file: " + path);
    Roadmap r;
    std::string line;
    int line_no = 0;
    bool saw_magic = false;
    std::size_t want_nodes = 0, want_edges = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const std::string s = strip_comment(line);
        if (s.empty()) continue;
        std::istringstream ls(s);
        std::string tag;
        ls >> tag;
        if (!saw_magic) {
            int version = 0;
            if (tag != "mplan-roadmap" || !(ls >> version) || version != 1)
                throw ParseError(path, line_no, "expected header 'mplan-roadmap 1'");
            saw_magic = true;
            continue;
        }
        if (tag == "config_hash") {
            std::string h;
            ls >> h;
            r.config_hash = std::stoull(h, nullptr, 16);
        } else if (tag == "model_hash") {
            std::string h;
            ls >> h;
            r.model_hash = std::stoull(h, nullptr, 16);
        } else if (tag == "k")
            ls >> r.k;
        else if (tag == "grid_resolution")
            ls >> r.grid_resolution;
        else if (tag == "nodes")
            ls >> want_nodes;
        else if (tag == "node") {
            LatentPoint p;
            std::string origin;
            if (!(ls >> p.z.x() >> p.z.y() >> origin)) throw ParseError(path, line_no, "bad node row");
            if (origin == "grid")
                p.origin = PointOrigin::GridSampled;
            else if (origin == "data")
                p.origin = PointOrigin::DataEncoded;
            else
                throw ParseError(path, line_no, "unknown node origin '" + origin + "'");
            for (int i = 0; i < kNumJoints; ++i)
                if (!(ls >> p.joints[i])) throw ParseError(path, line_no, "node row needs 7 joint values");
            r.nodes.push_back(p);
        } else if (tag == "edges") {
            ls >> want_edges;
            r.adjacency.assign(r.nodes.size(), {});
        } else if (tag == "edge") {
            int u, v;
            double w;
            if (r.adjacency.size() != r.nodes.size())
                throw ParseError(path, line_no, "edge rows must follow the edges count");
            if (!(ls >> u >> v >> w)) throw ParseError(path, line_no, "bad edge row");
            if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= r.nodes.size() ||
                static_cast<std::size_t>(v) >= r.nodes.size())
                throw ParseError(path, line_no, "edge endpoint out of range");
            r.add_edge(u, v, w);
        } else
            throw ParseError(path, line_no, "unknown directive '" + tag + "'");
    }
    if (!saw_magic) throw ParseError(path, 1, "missing header 'mplan-roadmap 1'");
    if (r.nodes.size() != want_nodes) throw ParseError(path, line_no, "node count mismatch");
    std::size_t edges = 0;
    for (std::size_t u = 0; u < r.size(); ++u)
        for (const auto& [v, w] : r.adjacency[u])
            if (static_cast<std::size_t>(v) > u) ++edges;
    if (edges != want_edges) throw ParseError(path, line_no, "edge count mismatch");
    r.validate();
    return r;
}

}  // namespace mplan
