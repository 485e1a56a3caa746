#include "mplan/collision.hpp"

#include <cmath>
#include <limits>

#include "mplan/errors.hpp"

namespace mplan {

const char* shape_kind_name(ShapeKind k) {
    switch (k) {
        case ShapeKind::Sphere: return "sphere";
        case ShapeKind::Box: return "box";
        case ShapeKind::Cylinder: return "cylinder";
        case ShapeKind::Capsule: return "capsule";
        case ShapeKind::Hull: return "hull";
    }
    return "?";
}

ShapeKind shape_kind_from_name(const std::string& name) {
    if (name == "sphere") return ShapeKind::Sphere;
    if (name == "box") return ShapeKind::Box;
    if (name == "cylinder") return ShapeKind::Cylinder;
    if (name == "capsule") return ShapeKind::Capsule;
    if (name == "hull") return ShapeKind::Hull;
    throw DomainError("unknown shape kind '" + name + "'");
}

ConvexShape ConvexShape::sphere(double radius, const Vec3& center) {
    ConvexShape s;
    s.kind = ShapeKind::Sphere;
    s.dims = Vec3(radius, 0, 0);
    s.pose.position = center;
    s.validate();
    return s;
}

ConvexShape ConvexShape::box(const Vec3& half_extents, const Pose& pose) {
    ConvexShape s;
    s.kind = ShapeKind::Box;
    s.dims = half_extents;
    s.pose = pose;
    s.validate();
    return s;
}

ConvexShape ConvexShape::cylinder(double radius, double half_height, const Pose& pose) {
    ConvexShape s;
    s.kind = ShapeKind::Cylinder;
    s.dims = Vec3(radius, half_height, 0);
    s.pose = pose;
    s.validate();
    return s;
}

ConvexShape ConvexShape::capsule(double radius, double half_length, const Pose& pose) {
    ConvexShape s;
    s.kind = ShapeKind::Capsule;
    s.dims = Vec3(radius, half_length, 0);
    s.pose = pose;
    s.validate();
    return s;
}

ConvexShape ConvexShape::capsule_between(const Vec3& p0, const Vec3& p1, double radius) {
    const Vec3 axis = p1 - p0;
    const double len = axis.norm();
    Pose pose;
    pose.position = 0.5 * (p0 + p1);
    if (len > 1e-12) pose.orientation = Quat::FromTwoVectors(Vec3::UnitZ(), axis);
    pose.canonicalize();
    return capsule(radius, 0.5 * len, pose);
}

ConvexShape ConvexShape::hull(std::vector<Vec3> points, const Pose& pose) {
    ConvexShape s;
    s.kind = ShapeKind::Hull;
    s.hull_points = std::move(points);
    s.pose = pose;
    s.validate();
    return s;
}

void ConvexShape::validate() const {
    switch (kind) {
        case ShapeKind::Sphere:
            if (!(dims[0] > 0.0)) throw DomainError("sphere radius must be positive");
            break;
        case ShapeKind::Box:
            if (!(dims.minCoeff() > 0.0)) throw DomainError("box half extents must be positive");
            break;
        case ShapeKind::Cylinder:
            if (!(dims[0] > 0.0) || !(dims[1] > 0.0))
                throw DomainError("cylinder radius and half height must be positive");
            break;
        case ShapeKind::Capsule:
            // zero half length degenerates to a sphere, which is allowed
            if (!(dims[0] > 0.0) || dims[1] < 0.0)
                throw DomainError("capsule needs positive radius and non-negative half length");
            break;
        case ShapeKind::Hull: {
            if (hull_points.size() < 4) throw DomainError("hull needs at least 4 points");
            Vec3 c = Vec3::Zero();
            for (const auto& p : hull_points) c += p;
            c /= static_cast<double>(hull_points.size());
            Eigen::MatrixXd m(3, static_cast<Eigen::Index>(hull_points.size()));
            for (std::size_t i = 0; i < hull_points.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = hull_points[i] - c;
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
            if (svd.singularValues()(2) < 1e-9) throw DomainError("hull points are coplanar");
            break;
        }
    }
}

Vec3 ConvexShape::support_local(const Vec3& dir) const {
    switch (kind) {
        case ShapeKind::Sphere:
            return dims[0] * dir.normalized();
        case ShapeKind::Box:
            return Vec3(dir.x() >= 0 ? dims[0] : -dims[0], dir.y() >= 0 ? dims[1] : -dims[1],
                        dir.z() >= 0 ? dims[2] : -dims[2]);
        case ShapeKind::Cylinder: {
            const double rn = std::hypot(dir.x(), dir.y());
            Vec3 p(0, 0, dir.z() >= 0 ? dims[1] : -dims[1]);
            if (rn > 1e-300) {
                p.x() = dims[0] * dir.x() / rn;
                p.y() = dims[0] * dir.y() / rn;
            }
            return p;
        }
        case ShapeKind::Capsule:
            return Vec3(0, 0, dir.z() >= 0 ? dims[1] : -dims[1]) + dims[0] * dir.normalized();
        case ShapeKind::Hull: {
            double best = -std::numeric_limits<double>::infinity();
            Vec3 bp = hull_points.front();
            for (const auto& p : hull_points) {
                const double d = p.dot(dir);
                if (d > best) {
                    best = d;
                    bp = p;
                }
            }
            return bp;
        }
    }
    return Vec3::Zero();
}

Vec3 ConvexShape::support_world(const Vec3& dir) const {
    return pose.apply(support_local(pose.inverse_rotate(dir)));
}

namespace {

// Closest point to the origin on a simplex of Minkowski-difference vertices,
// reducing the simplex to the minimal supporting feature (Ericson-style
// Voronoi-region tests specialized to query point = origin).

struct Simplex {
    std::array<Vec3, 4> p;
    int n = 0;
    void push(const Vec3& v) { p[n++] = v; }
};

Vec3 closest_on_segment(const Vec3& a, const Vec3& b, Simplex& keep) {
    const Vec3 ab = b - a;
    const double denom = ab.squaredNorm();
    double t = denom > 0.0 ? -a.dot(ab) / denom : 0.0;
    if (t <= 0.0) {
        keep.n = 0;
        keep.push(a);
        return a;
    }
    if (t >= 1.0) {
        keep.n = 0;
        keep.push(b);
        return b;
    }
    keep.n = 0;
    keep.push(a);
    keep.push(b);
    return a + t * ab;
}

Vec3 closest_on_triangle(const Vec3& a, const Vec3& b, const Vec3& c, Simplex& keep) {
    const Vec3 ab = b - a, ac = c - a;
    const double d1 = -ab.dot(a), d2 = -ac.dot(a);
    if (d1 <= 0.0 && d2 <= 0.0) {
        keep.n = 0;
        keep.push(a);
        return a;
    }
    const double d3 = -ab.dot(b), d4 = -ac.dot(b);
    if (d3 >= 0.0 && d4 <= d3) {
        keep.n = 0;
        keep.push(b);
        return b;
    }
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double t = d1 / (d1 - d3);
        keep.n = 0;
        keep.push(a);
        keep.push(b);
        return a + t * ab;
    }
    const double d5 = -ab.dot(c), d6 = -ac.dot(c);
    if (d6 >= 0.0 && d5 <= d6) {
        keep.n = 0;
        keep.push(c);
        return c;
    }
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double t = d2 / (d2 - d6);
        keep.n = 0;
        keep.push(a);
        keep.push(c);
        return a + t * ac;
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        keep.n = 0;
        keep.push(b);
        keep.push(c);
        return b + t * (c - b);
    }
    const double denom = 1.0 / (va + vb + vc);
    keep.n = 0;
    keep.push(a);
    keep.push(b);
    keep.push(c);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

bool origin_outside_plane(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    const Vec3 n = (b - a).cross(c - a);
    const double signp = -a.dot(n);
    const double signd = (d - a).dot(n);
    return signp * signd < 0.0;
}

// Returns true when the tetrahedron contains the origin.
bool closest_on_tetrahedron(Simplex& s, Vec3& out) {
    const Vec3 a = s.p[0], b = s.p[1], c = s.p[2], d = s.p[3];
    const double vol6 = std::abs((b - a).cross(c - a).dot(d - a));
    const double scale = std::max({a.norm(), b.norm(), c.norm(), d.norm(), 1e-30});
    bool degenerate = vol6 < 1e-15 * scale * scale * scale;

    bool outside_any = false;
    double best = std::numeric_limits<double>::infinity();
    Simplex best_keep;
    Vec3 best_point = Vec3::Zero();
    const std::array<std::array<int, 4>, 4> faces = {{{0, 1, 2, 3}, {0, 1, 3, 2}, {0, 2, 3, 1}, {1, 2, 3, 0}}};
    for (const auto& f : faces) {
        const bool outside = degenerate || origin_outside_plane(s.p[f[0]], s.p[f[1]], s.p[f[2]], s.p[f[3]]);
        if (!outside) continue;
        outside_any = true;
        Simplex keep;
        const Vec3 q = closest_on_triangle(s.p[f[0]], s.p[f[1]], s.p[f[2]], keep);
        const double d2 = q.squaredNorm();
        if (d2 < best) {
            best = d2;
            best_keep = keep;
            best_point = q;
        }
    }
    if (!outside_any) return true;  // origin enclosed
    s = best_keep;
    out = best_point;
    return false;
}

Vec3 reduce_simplex(Simplex& s, bool& contains_origin) {
    contains_origin = false;
    switch (s.n) {
        case 1:
            return s.p[0];
        case 2: {
            Simplex keep;
            const Vec3 q = closest_on_segment(s.p[0], s.p[1], keep);
            s = keep;
            return q;
        }
        case 3: {
            Simplex keep;
            const Vec3 q = closest_on_triangle(s.p[0], s.p[1], s.p[2], keep);
            s = keep;
            return q;
        }
        default: {
            Vec3 q = Vec3::Zero();
            contains_origin = closest_on_tetrahedron(s, q);
            return q;
        }
    }
}

}  // namespace

double gjk_distance(const ConvexShape& a, const ConvexShape& b, const GjkParams& params) {
    Vec3 dir = a.center_world() - b.center_world();
    if (dir.squaredNorm() < 1e-24) dir = Vec3::UnitX();

    auto support = [&](const Vec3& d) { return a.support_world(d) - b.support_world(-d); };

    Simplex simplex;
    Vec3 v = support(dir);
    simplex.push(v);

    for (int iter = 0; iter < params.max_iterations; ++iter) {
        const double v2 = v.squaredNorm();
        if (v2 <= 1e-18) return 0.0;  // touching or overlapping

        const Vec3 w = support(-v);
        // No progress towards the origin: v is (numerically) the closest point.
        const double progress = v2 - v.dot(w);
        if (progress <= params.rel_tolerance * std::max(1.0, v2)) return std::sqrt(v2);

        // A repeated support vertex cannot improve the simplex.
        bool duplicate = false;
        for (int i = 0; i < simplex.n; ++i)
            if ((simplex.p[i] - w).squaredNorm() < 1e-24) duplicate = true;
        if (duplicate) return std::sqrt(v2);

        simplex.push(w);
        bool contains = false;
        v = reduce_simplex(simplex, contains);
        if (contains) return 0.0;
    }
    throw NumericalError("gjk_distance: no convergence after " + std::to_string(params.max_iterations) +
                         " iterations (last |v| = " + std::to_string(v.norm()) +
                         ", simplex size " + std::to_string(simplex.n) + ")");
}

std::array<ConvexShape, kNumJoints> link_capsules_world(const RobotModel& model, const JointVector& q) {
    const auto poses = link_poses(model, q);
    std::array<ConvexShape, kNumJoints> out;
    for (int i = 0; i < kNumJoints; ++i) {
        // Capsule i lives in the parent frame: base for link 0, joint frame i-1 after.
        const Pose parent = (i == 0) ? Pose{} : poses[static_cast<std::size_t>(i - 1)];
        out[i] = ConvexShape::capsule_between(parent.apply(model.links[i].p0), parent.apply(model.links[i].p1),
                                              model.links[i].radius);
    }
    return out;
}

ClearanceReport arm_clearance(const RobotModel& model, const JointVector& q, const ConvexShape& obstacle) {
    return arm_clearance(model, q, std::span<const ConvexShape>(&obstacle, 1));
}

ClearanceReport arm_clearance(const RobotModel& model, const JointVector& q,
                              std::span<const ConvexShape> obstacles) {
    const auto capsules = link_capsules_world(model, q);
    ClearanceReport r;
    r.min_distance = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kNumJoints; ++i) {
        double di = std::numeric_limits<double>::infinity();
        for (const auto& obs : obstacles) di = std::min(di, gjk_distance(capsules[i], obs));
        r.per_link[i] = di;
        if (di < r.min_distance) {
            r.min_distance = di;
            r.argmin_link = i;
        }
    }
    return r;
}

double clearance_cost(const ClearanceReport& report, const CostParams& params) {
    if (!(params.beta > 0.0)) throw DomainError("cost beta must be positive");
    if (report.min_distance <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / std::pow(report.min_distance, params.beta);
}

bool is_collision(const RobotModel& model, const JointVector& q, const ConvexShape& obstacle, double margin) {
    if (margin < 0.0) throw DomainError("collision margin must be non-negative");
    return arm_clearance(model, q, obstacle).min_distance <= margin;
}

}  // namespace mplan
