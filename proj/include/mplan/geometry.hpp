#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace mplan {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Quat = Eigen::Quaterniond;

/// Rigid transform stored as position + unit quaternion.
struct Pose {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();

    static Pose identity() { return Pose{}; }

    static Pose from_isometry(const Eigen::Isometry3d& t) {
        Pose p;
        p.position = t.translation();
        p.orientation = Quat(t.rotation());
        p.canonicalize();
        return p;
    }

    Eigen::Isometry3d isometry() const {
        Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
        t.linear() = orientation.toRotationMatrix();
        t.translation() = position;
        return t;
    }

    Vec3 apply(const Vec3& p) const { return orientation * p + position; }
    Vec3 rotate(const Vec3& v) const { return orientation * v; }
    Vec3 inverse_rotate(const Vec3& v) const { return orientation.conjugate() * v; }

    /// Fix the double-cover sign so serialized quaternions are stable.
    void canonicalize() {
        orientation.normalize();
        if (orientation.w() < 0.0) orientation.coeffs() = -orientation.coeffs();
    }
};

/// Axis-aligned box, used for obstacle sampling workspaces and latent bounds.
struct Box3 {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();
    bool degenerate() const { return (hi - lo).minCoeff() <= 0.0; }
    double volume() const { return (hi - lo).prod(); }
};

struct Box2 {
    Vec2 lo = Vec2::Zero();
    Vec2 hi = Vec2::Zero();
};

}  // namespace mplan
