#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mplan/roadmap.hpp"
#include "mplan/scenario.hpp"

namespace mplan {

struct SafetyConfig {
    double clearance_threshold = 0.08;  // meters; must exceed the dataset margin (0)
    int check_period = 1;               // ticks between periodic clearance checks
    double relabel_radius = 0.0;        // latent units; 0 = 5x median k-NN edge length
    double joint_speed = 0.05;          // per-joint rad/tick cap
    double goal_tolerance = 0.03;       // meters, end-effector position

    void validate() const;
};

enum class PlanStatus { Following, Replanning, Reached, Failed };

const char* plan_status_name(PlanStatus s);

struct PlanEvent {
    int tick = 0;
    std::string kind;    // arrive | reroute | violation | reached | failed | start_in_violation
    std::string detail;
};

struct PlanState {
    JointVector current_joints = JointVector::Zero();
    JointVector goal_joints = JointVector::Zero();
    int goal_node = -1;
    std::vector<int> path;                 // roadmap node ids of the active route
    std::vector<JointVector> waypoints;    // decoded node joints, then the goal joints
    std::size_t progress = 0;              // next waypoint index
    PlanStatus status = PlanStatus::Following;
    std::string failure_reason;
    std::vector<PlanEvent> events;
    int reroute_count = 0;
    Vec2 last_latent = Vec2::Zero();       // latent anchor of the segment being followed
    double resolved_relabel_radius = 0.0;
    std::vector<int> initial_path;         // as planned before any reroute
};

/// Encode start and goal into the latent space (current obstacle position,
/// flag 0), snap to the nearest live-safe nodes and route over nodes verified
/// collision-free against the live obstacle snapshot.
PlanState plan_initial(const Roadmap& r, const VaeModel& m, const RobotModel& robot,
                       const JointVector& start_joints, const JointVector& goal_joints,
                       std::span<const ObstacleSnapshot> live, const SafetyConfig& cfg);

/// Advance one control tick: interpolate toward the next waypoint, monitor
/// clearance, and on a threshold violation halt and reroute (masking violating
/// nodes near the blocked segment first, then the full graph). Exhausted
/// options yield status Failed("trapped"), never an exception.
void step(PlanState& p, const Roadmap& r, const VaeModel& m, const RobotModel& robot,
          std::span<const ObstacleSnapshot> live, const SafetyConfig& cfg, int tick);

struct TraceRecord {
    int tick = 0;
    JointVector joints = JointVector::Zero();
    Vec3 ee_pos = Vec3::Zero();
    Quat ee_quat = Quat::Identity();
    std::optional<std::string> obstacle_id;  // argmin member
    std::optional<Pose> obstacle_pose;
    std::optional<double> min_clearance;     // absent when no obstacle is active
    int argmin_link = -1;
    std::string status;
    std::optional<std::string> event;        // ';'-joined events of this tick
};

struct TraceHeader {
    int version = 1;
    std::uint64_t config_hash = 0;
    std::uint64_t robot_hash = 0;
    std::uint64_t model_hash = 0;
    std::uint64_t roadmap_hash = 0;
    std::string scenario_id;
    std::uint64_t scenario_hash = 0;
    std::uint64_t run_seed = 0;
    double clearance_threshold = 0.0;
    double goal_tolerance = 0.0;
    double tick_duration = 0.0;
};

struct Trace {
    TraceHeader header;
    std::vector<TraceRecord> records;
};

/// Run the executive against the scenario's obstacle timeline until the goal
/// is reached, the plan fails, or max_ticks elapses (timeout -> Failed).
std::pair<PlanState, Trace> execute(PlanState p, const Roadmap& r, const VaeModel& m, const RobotModel& robot,
                                    const Scenario& scenario, const SafetyConfig& cfg, int max_ticks,
                                    TraceHeader header = {});

void save_trace(const Trace& t, const std::string& path);
Trace load_trace(const std::string& path);

}  // namespace mplan
