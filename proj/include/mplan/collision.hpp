#pragma once

#include <array>
#include <span>
#include <vector>

#include "mplan/geometry.hpp"
#include "mplan/robot.hpp"

namespace mplan {

enum class ShapeKind { Sphere, Box, Cylinder, Capsule, Hull };

const char* shape_kind_name(ShapeKind k);
ShapeKind shape_kind_from_name(const std::string& name);

/// Convex collision primitive. Local frames:
///   sphere   dims = (radius, 0, 0), centered at origin
///   box      dims = half extents (hx, hy, hz)
///   cylinder dims = (radius, half_height, 0), axis = local z
///   capsule  dims = (radius, half_length, 0), axis = local z; half_length may be 0
///   hull     convex hull of `hull_points` (>= 4 non-coplanar points)
struct ConvexShape {
    ShapeKind kind = ShapeKind::Sphere;
    Vec3 dims = Vec3::Zero();
    std::vector<Vec3> hull_points;
    Pose pose;

    static ConvexShape sphere(double radius, const Vec3& center = Vec3::Zero());
    static ConvexShape box(const Vec3& half_extents, const Pose& pose = Pose::identity());
    static ConvexShape cylinder(double radius, double half_height, const Pose& pose = Pose::identity());
    static ConvexShape capsule(double radius, double half_length, const Pose& pose = Pose::identity());
    /// Capsule spanning two world points.
    static ConvexShape capsule_between(const Vec3& p0, const Vec3& p1, double radius);
    static ConvexShape hull(std::vector<Vec3> points, const Pose& pose = Pose::identity());

    void validate() const;
    Vec3 support_local(const Vec3& dir) const;
    Vec3 support_world(const Vec3& dir) const;
    /// Used only to seed the first GJK direction.
    Vec3 center_world() const { return pose.position; }
};

struct GjkParams {
    double rel_tolerance = 1e-9;  // progress tolerance on |v|^2
    int max_iterations = 64;
};

/// Euclidean minimum distance between two convex shapes; 0 when they touch or
/// overlap. Throws NumericalError when the simplex refinement fails to converge.
double gjk_distance(const ConvexShape& a, const ConvexShape& b, const GjkParams& params = {});

struct ClearanceReport {
    double min_distance = 0.0;
    int argmin_link = 0;
    std::array<double, kNumJoints> per_link{};
};

/// Per-link GJK distance between the arm's capsules at q and one obstacle.
ClearanceReport arm_clearance(const RobotModel& model, const JointVector& q, const ConvexShape& obstacle);

/// Union semantics over several obstacle members: per-link minimum over members.
ClearanceReport arm_clearance(const RobotModel& model, const JointVector& q,
                              std::span<const ConvexShape> obstacles);

/// World-frame capsules of all seven links at configuration q.
std::array<ConvexShape, kNumJoints> link_capsules_world(const RobotModel& model, const JointVector& q);

struct CostParams {
    double beta = 2.0;
};

/// Reciprocal clearance cost 1 / min_distance^beta; +infinity at contact.
double clearance_cost(const ClearanceReport& report, const CostParams& params);

bool is_collision(const RobotModel& model, const JointVector& q, const ConvexShape& obstacle, double margin);

}  // namespace mplan
