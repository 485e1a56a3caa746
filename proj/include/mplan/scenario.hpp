#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mplan/collision.hpp"

namespace mplan {

struct PoseKey {
    int tick = 0;
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();
};

struct ShapeKey {
    int tick = 0;
    ShapeKind kind = ShapeKind::Sphere;
    Vec3 dims = Vec3::Zero();
};

/// One scripted obstacle: piecewise-linear pose keyframes (positions lerped,
/// orientations slerped) and shape keyframes. Same-kind shape keyframes
/// interpolate in parameter space; a kind change swaps discretely at the
/// later keyframe.
struct ObstacleTimeline {
    std::string id;
    int appear_tick = 0;
    std::optional<int> disappear_tick;
    std::vector<PoseKey> pose_keys;
    std::vector<ShapeKey> shape_keys;

    void validate() const;
    bool active_at(int tick) const;
    /// Concrete shape at `tick`; nullopt outside the active window.
    std::optional<ConvexShape> at(int tick) const;
};

struct Scenario {
    std::string id;
    std::string robot_ref = "builtin:panda";
    JointVector start_joints = JointVector::Zero();
    JointVector goal_joints = JointVector::Zero();
    std::uint64_t seed = 0;
    double tick_duration = 0.05;  // seconds
    std::vector<ObstacleTimeline> obstacles;

    void validate() const;
    std::uint64_t content_hash() const;
};

struct ObstacleSnapshot {
    std::string id;
    ConvexShape shape;
};

/// All obstacles active at `tick`; empty when none.
std::vector<ObstacleSnapshot> obstacles_at(const Scenario& s, int tick);

Scenario parse_scenario(const std::string& text, const std::string& origin);
std::string serialize_scenario(const Scenario& s);
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);

/// Scripted environments exercised by the acceptance suite: a blocker that
/// appears on the path, a crossing mover, a moving cuboid/cylinder morpher,
/// a two-obstacle scene, a goal-enclosing trap, and a faraway baseline.
std::vector<Scenario> builtin_suite();
Scenario builtin_scenario(const std::string& id);
std::vector<std::string> builtin_scenario_ids();

}  // namespace mplan
