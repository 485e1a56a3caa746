#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "mplan/geometry.hpp"
#include "mplan/rng.hpp"

namespace mplan {

inline constexpr int kNumJoints = 7;

using JointVector = Eigen::Matrix<double, kNumJoints, 1>;

/// One modified-DH row (Craig convention). The joint transform is
///   T = RotX(alpha) * TransX(a) * RotZ(q + theta_offset) * TransZ(d)
struct DhRow {
    double a = 0.0;
    double d = 0.0;
    double alpha = 0.0;
    double theta_offset = 0.0;
};

struct JointLimit {
    double lo = 0.0;
    double hi = 0.0;
};

/// Collision capsule for one link, expressed in the parent joint frame
/// (frame i for the capsule guarding the segment between joint origins i and i+1).
/// A zero-length segment degenerates to a sphere, which is fine for elbow joints.
struct LinkCapsule {
    Vec3 p0 = Vec3::Zero();
    Vec3 p1 = Vec3::Zero();
    double radius = 0.0;
};

struct RobotModel {
    std::string name;
    std::array<DhRow, kNumJoints> dh{};
    std::array<JointLimit, kNumJoints> limits{};
    std::array<LinkCapsule, kNumJoints> links{};

    /// Franka Emika Panda modified-DH table with the flange offset folded into
    /// the last row, published joint limits, and skeleton capsules of radius 0.06.
    static RobotModel panda();

    /// Throws DomainError / JointLimitError when invariants are broken.
    void validate() const;

    /// Hash of the serialized description, embedded in derived artifacts.
    std::uint64_t content_hash() const;
};

/// Throws JointLimitError naming the first offending joint.
void check_limits(const RobotModel& model, const JointVector& q);

bool within_limits(const RobotModel& model, const JointVector& q);

JointVector clamp_to_limits(const RobotModel& model, const JointVector& q);

/// End-effector pose: composition of all seven DH transforms.
Pose forward_kinematics(const RobotModel& model, const JointVector& q);

/// Cumulative pose after each joint; the last element equals forward_kinematics.
std::array<Pose, kNumJoints> link_poses(const RobotModel& model, const JointVector& q);

/// Uniform in-limit configuration from a caller-owned stream.
JointVector random_configuration(const RobotModel& model, Rng& rng);

/// Convenience wrapper: same seed, same output.
JointVector random_configuration(const RobotModel& model, std::uint64_t seed);

/// Plain-text robot description file (grammar in docs/formats.md).
RobotModel load_robot(const std::string& path);
void save_robot(const RobotModel& model, const std::string& path);
std::string serialize_robot(const RobotModel& model);
RobotModel parse_robot(const std::string& text, const std::string& origin);

}  // namespace mplan
