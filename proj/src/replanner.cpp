#include "mplan/replanner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mplan/errors.hpp"
#include "mplan/textio.hpp"

namespace mplan {

void SafetyConfig::validate() const {
    if (!(clearance_threshold > 0.0)) throw ConfigError("clearance threshold must be positive");
    if (check_period < 1) throw ConfigError("check period must be >= 1");
    if (!(joint_speed > 0.0)) throw ConfigError("joint speed must be positive");
    if (!(goal_tolerance > 0.0)) throw ConfigError("goal tolerance must be positive");
    if (relabel_radius < 0.0) throw ConfigError("relabel radius must be >= 0");
}

const char* plan_status_name(PlanStatus s) {
    switch (s) {
        case PlanStatus::Following: return "following";
        case PlanStatus::Replanning: return "replanning";
        case PlanStatus::Reached: return "reached";
        case PlanStatus::Failed: return "failed";
    }
    return "?";
}

namespace {

// Obstacle position fed into the encoder: the member currently nearest to the
// arm, or a far sentinel when the scene is empty (the encoder needs all 18
// input fields).
Vec3 representative_obstacle_pos(const RobotModel& robot, const JointVector& q,
                                 std::span<const ObstacleSnapshot> live) {
    if (live.empty()) return Vec3(5.0, 5.0, 5.0);
    double best = std::numeric_limits<double>::infinity();
    Vec3 pos = live.front().shape.pose.position;
    for (const auto& obs : live) {
        const double d = arm_clearance(robot, q, obs.shape).min_distance;
        if (d < best) {
            best = d;
            pos = obs.shape.pose.position;
        }
    }
    return pos;
}

Vec2 encode_state(const VaeModel& m, const RobotModel& robot, const JointVector& q,
                  std::span<const ObstacleSnapshot> live) {
    Sample s;
    s.joints = q;
    s.ee_pose = forward_kinematics(robot, q);
    s.obstacle_pos = representative_obstacle_pos(robot, q, live);
    s.collision_flag = 0;  // asserting intent: the state we want is safe
    return m.encode_mean(m.norm.normalize(s.flatten()));
}

std::vector<ConvexShape> shapes_of(std::span<const ObstacleSnapshot> live) {
    std::vector<ConvexShape> shapes;
    shapes.reserve(live.size());
    for (const auto& o : live) shapes.push_back(o.shape);
    return shapes;
}

std::optional<ClearanceReport> live_clearance(const RobotModel& robot, const JointVector& q,
                                              std::span<const ObstacleSnapshot> live) {
    if (live.empty()) return std::nullopt;
    const auto shapes = shapes_of(live);
    return arm_clearance(robot, q, std::span<const ConvexShape>(shapes));
}

bool node_safe(const Roadmap& r, int idx, const std::vector<ConvexShape>& shapes, const RobotModel& robot,
               double threshold) {
    const auto rep =
        arm_clearance(robot, r.nodes[static_cast<std::size_t>(idx)].joints, std::span<const ConvexShape>(shapes));
    return rep.min_distance > threshold;
}

// Nearest node that passes the live clearance check, honoring an existing
// blocked mask and recording new verdicts into it.
int nearest_live_safe_node(const Roadmap& r, const Vec2& z, const std::vector<ConvexShape>& shapes,
                           const RobotModel& robot, double threshold, std::vector<char>& blocked,
                           std::vector<char>& checked) {
    std::vector<int> order(r.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> dist(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) dist[i] = (r.nodes[i].z - z).norm();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (dist[static_cast<std::size_t>(a)] != dist[static_cast<std::size_t>(b)])
            return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
        return a < b;
    });
    for (const int idx : order) {
        const auto u = static_cast<std::size_t>(idx);
        if (!checked[u]) {
            checked[u] = 1;
            if (!shapes.empty() && !node_safe(r, idx, shapes, robot, threshold)) blocked[u] = 1;
        }
        if (!blocked[u]) return idx;
    }
    return -1;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double denom = ab.squaredNorm();
    const double t = denom > 0.0 ? std::clamp((p - a).dot(ab) / denom, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

void log_event(PlanState& p, int tick, const std::string& kind, const std::string& detail = "") {
    p.events.push_back(PlanEvent{tick, kind, detail});
}

void rebuild_waypoints(PlanState& p, const Roadmap& r) {
    p.waypoints.clear();
    for (const int idx : p.path) p.waypoints.push_back(r.nodes[static_cast<std::size_t>(idx)].joints);
    p.waypoints.push_back(p.goal_joints);
    p.progress = 0;
}

void fail(PlanState& p, int tick, const std::string& reason) {
    p.status = PlanStatus::Failed;
    p.failure_reason = reason;
    log_event(p, tick, "failed", reason);
}

// Halt-and-reroute: mask violating nodes near the blocked latent segment,
// escalate to a full-graph mask when no local route exists.
void replan(PlanState& p, const Roadmap& r, const VaeModel& m, const RobotModel& robot,
            std::span<const ObstacleSnapshot> live, const SafetyConfig& cfg, int tick) {
    const auto shapes = shapes_of(live);
    std::vector<char> blocked(r.size(), 0), checked(r.size(), 0);

    // Blocked segment: from the last latent anchor to the next routed node.
    Vec2 seg_a = p.last_latent, seg_b = p.last_latent;
    if (!p.path.empty()) {
        const auto next = std::min(p.progress, p.path.size() - 1);
        seg_b = r.nodes[static_cast<std::size_t>(p.path[next])].z;
    }
    if (!shapes.empty()) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (point_segment_distance(r.nodes[i].z, seg_a, seg_b) > p.resolved_relabel_radius) continue;
            checked[i] = 1;
            if (!node_safe(r, static_cast<int>(i), shapes, robot, cfg.clearance_threshold)) blocked[i] = 1;
        }
    }

    const Vec2 z_now = encode_state(m, robot, p.current_joints, live);
    int start = nearest_live_safe_node(r, z_now, shapes, robot, cfg.clearance_threshold, blocked, checked);
    if (start < 0) {
        fail(p, tick, "trapped");
        return;
    }
    std::vector<int> path = shortest_path(r, start, p.goal_node, &blocked);
    if (path.empty()) {
        // Escalate: verify every remaining node against the live obstacle.
        if (!shapes.empty()) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (checked[i]) continue;
                checked[i] = 1;
                if (!node_safe(r, static_cast<int>(i), shapes, robot, cfg.clearance_threshold)) blocked[i] = 1;
            }
        }
        start = nearest_live_safe_node(r, z_now, shapes, robot, cfg.clearance_threshold, blocked, checked);
        if (start >= 0) path = shortest_path(r, start, p.goal_node, &blocked);
        if (start < 0 || path.empty()) {
            fail(p, tick, "trapped");
            return;
        }
    }
    p.path = std::move(path);
    rebuild_waypoints(p, r);
    p.last_latent = z_now;
    p.status = PlanStatus::Following;
    ++p.reroute_count;
    log_event(p, tick, "reroute",
              "start node " + std::to_string(p.path.front()) + ", " + std::to_string(p.path.size()) + " nodes");
}

}  // namespace

PlanState plan_initial(const Roadmap& r, const VaeModel& m, const RobotModel& robot,
                       const JointVector& start_joints, const JointVector& goal_joints,
                       std::span<const ObstacleSnapshot> live, const SafetyConfig& cfg) {
    cfg.validate();
    check_limits(robot, start_joints);
    check_limits(robot, goal_joints);
    if (r.size() == 0) throw DomainError("plan_initial: empty roadmap");

    PlanState p;
    p.current_joints = start_joints;
    p.goal_joints = goal_joints;
    p.resolved_relabel_radius =
        cfg.relabel_radius > 0.0 ? cfg.relabel_radius : 5.0 * median_knn_edge_length(r);

    const auto shapes = shapes_of(live);
    std::vector<char> blocked(r.size(), 0), checked(r.size(), 0);

    const Vec2 z_start = encode_state(m, robot, start_joints, live);
    const Vec2 z_goal = encode_state(m, robot, goal_joints, live);
    p.last_latent = z_start;

    if ((start_joints - goal_joints).cwiseAbs().maxCoeff() == 0.0) {
        const int n = nearest_node(r, z_start);
        p.path = {n};
        p.initial_path = p.path;
        p.goal_node = n;
        p.status = PlanStatus::Reached;
        log_event(p, 0, "reached", "start equals goal");
        return p;
    }

    const int n_start =
        nearest_live_safe_node(r, z_start, shapes, robot, cfg.clearance_threshold, blocked, checked);
    const int n_goal = nearest_live_safe_node(r, z_goal, shapes, robot, cfg.clearance_threshold, blocked, checked);
    if (n_start < 0 || n_goal < 0) {
        fail(p, 0, "unreachable: no live-safe roadmap node");
        return p;
    }
    p.goal_node = n_goal;

    // Verify the whole route against the live obstacle before committing.
    if (!shapes.empty()) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (checked[i]) continue;
            checked[i] = 1;
            if (!node_safe(r, static_cast<int>(i), shapes, robot, cfg.clearance_threshold)) blocked[i] = 1;
        }
    }
    p.path = shortest_path(r, n_start, n_goal, &blocked);
    if (p.path.empty()) {
        fail(p, 0, "unreachable: no route between start and goal nodes");
        return p;
    }
    p.initial_path = p.path;
    rebuild_waypoints(p, r);
    p.status = PlanStatus::Following;

    const auto rep = live_clearance(robot, start_joints, live);
    if (rep && rep->min_distance <= cfg.clearance_threshold) {
        p.status = PlanStatus::Replanning;
        log_event(p, 0, "start_in_violation",
                  "clearance " + std::to_string(rep->min_distance) + " at link " + std::to_string(rep->argmin_link));
    }
    return p;
}

void step(PlanState& p, const Roadmap& r, const VaeModel& m, const RobotModel& robot,
          std::span<const ObstacleSnapshot> live, const SafetyConfig& cfg, int tick) {
    if (p.status == PlanStatus::Reached || p.status == PlanStatus::Failed) return;

    if (p.status == PlanStatus::Replanning) {
        replan(p, r, m, robot, live, cfg, tick);  // the arm holds still this tick
        return;
    }

    // Advance one tick of joint interpolation toward the next waypoint.
    bool arrived = false;
    if (p.progress < p.waypoints.size()) {
        const JointVector target = p.waypoints[p.progress];
        const JointVector delta = target - p.current_joints;
        const double biggest = delta.cwiseAbs().maxCoeff();
        if (biggest <= cfg.joint_speed) {
            p.current_joints = target;
            arrived = true;
        } else {
            p.current_joints += delta * (cfg.joint_speed / biggest);
        }
    } else {
        arrived = true;  // degenerate: nothing left to follow
    }

    const bool periodic_check = (tick % cfg.check_period) == 0;
    const auto rep = live_clearance(robot, p.current_joints, live);
    // Arrivals are always gated on clearance, the periodic monitor in between.
    if (rep && (periodic_check || arrived) && rep->min_distance <= cfg.clearance_threshold) {
        log_event(p, tick, "violation",
                  "clearance " + std::to_string(rep->min_distance) + " at link " + std::to_string(rep->argmin_link));
        p.status = PlanStatus::Replanning;
        replan(p, r, m, robot, live, cfg, tick);
        return;
    }

    if (arrived) {
        if (p.progress < p.path.size())
            p.last_latent = r.nodes[static_cast<std::size_t>(p.path[p.progress])].z;
        log_event(p, tick, "arrive", "waypoint " + std::to_string(p.progress));
        ++p.progress;
        if (p.progress >= p.waypoints.size()) {
            const Vec3 ee = forward_kinematics(robot, p.current_joints).position;
            const Vec3 goal_ee = forward_kinematics(robot, p.goal_joints).position;
            if ((ee - goal_ee).norm() <= cfg.goal_tolerance) {
                p.status = PlanStatus::Reached;
                log_event(p, tick, "reached");
            } else {
                fail(p, tick, "ended off-goal");  // should not happen: last waypoint is the goal
            }
        }
    }
}

std::pair<PlanState, Trace> execute(PlanState p, const Roadmap& r, const VaeModel& m, const RobotModel& robot,
                                    const Scenario& scenario, const SafetyConfig& cfg, int max_ticks,
                                    TraceHeader header) {
    if (max_ticks < 1) throw DomainError("execute: max_ticks must be >= 1");
    Trace trace;
    header.scenario_id = scenario.id;
    header.scenario_hash = scenario.content_hash();
    header.robot_hash = robot.content_hash();
    header.clearance_threshold = cfg.clearance_threshold;
    header.goal_tolerance = cfg.goal_tolerance;
    header.tick_duration = scenario.tick_duration;
    trace.header = header;

    std::size_t event_cursor = p.events.size();
    for (int tick = 0; tick < max_ticks; ++tick) {
        const auto live = obstacles_at(scenario, tick);
        step(p, r, m, robot, std::span<const ObstacleSnapshot>(live), cfg, tick);

        const bool last_chance = (tick == max_ticks - 1);
        if (last_chance && p.status != PlanStatus::Reached && p.status != PlanStatus::Failed) {
            p.status = PlanStatus::Failed;
            p.failure_reason = "timeout";
            p.events.push_back(PlanEvent{tick, "failed", "timeout"});
        }

        TraceRecord rec;
        rec.tick = tick;
        rec.joints = p.current_joints;
        const Pose ee = forward_kinematics(robot, p.current_joints);
        rec.ee_pos = ee.position;
        rec.ee_quat = ee.orientation;
        if (!live.empty()) {
            const auto shapes = shapes_of(live);
            const auto rep = arm_clearance(robot, p.current_joints, std::span<const ConvexShape>(shapes));
            rec.min_clearance = rep.min_distance;
            rec.argmin_link = rep.argmin_link;
            // Identify the member attaining the minimum.
            double best = std::numeric_limits<double>::infinity();
            for (const auto& o : live) {
                const double d = arm_clearance(robot, p.current_joints, o.shape).min_distance;
                if (d < best) {
                    best = d;
                    rec.obstacle_id = o.id;
                    rec.obstacle_pose = o.shape.pose;
                }
            }
        }
        rec.status = plan_status_name(p.status);
        if (event_cursor < p.events.size()) {
            std::string joined;
            for (std::size_t i = event_cursor; i < p.events.size(); ++i) {
                if (!joined.empty()) joined += ";";
                joined += p.events[i].kind;
            }
            rec.event = joined;
            event_cursor = p.events.size();
        }
        trace.records.push_back(std::move(rec));
        if (p.status == PlanStatus::Reached || p.status == PlanStatus::Failed) break;
    }
    return {std::move(p), std::move(trace)};
}

namespace {

nlohmann::json pose_json(const Pose& p) {
    return nlohmann::json{{"pos", {p.position.x(), p.position.y(), p.position.z()}},
                          {"quat", {p.orientation.w(), p.orientation.x(), p.orientation.y(), p.orientation.z()}}};
}

Pose pose_from_json(const nlohmann::json& j) {
    Pose p;
    p.position = Vec3(j.at("pos")[0], j.at("pos")[1], j.at("pos")[2]);
    p.orientation = Quat(j.at("quat")[0], j.at("quat")[1], j.at("quat")[2], j.at("quat")[3]);
    return p;
}

}  // namespace

void save_trace(const Trace& t, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write trace file: " + path);
    nlohmann::json h;
    h["schema"] = "mplan-trace";
    h["version"] = t.header.version;
    h["config_hash"] = hex64(t.header.config_hash);
    h["robot_hash"] = hex64(t.header.robot_hash);
    h["model_hash"] = hex64(t.header.model_hash);
    h["roadmap_hash"] = hex64(t.header.roadmap_hash);
    h["scenario_id"] = t.header.scenario_id;
    h["scenario_hash"] = hex64(t.header.scenario_hash);
    h["run_seed"] = t.header.run_seed;
    h["clearance_threshold"] = t.header.clearance_threshold;
    h["goal_tolerance"] = t.header.goal_tolerance;
    h["tick_duration"] = t.header.tick_duration;
    f << h.dump() << "\n";
    for (const auto& r : t.records) {
        nlohmann::json j;
        j["tick"] = r.tick;
        j["joints"] = std::vector<double>(r.joints.data(), r.joints.data() + kNumJoints);
        j["ee_pos"] = {r.ee_pos.x(), r.ee_pos.y(), r.ee_pos.z()};
        j["ee_quat"] = {r.ee_quat.w(), r.ee_quat.x(), r.ee_quat.y(), r.ee_quat.z()};
        j["obstacle_id"] = r.obstacle_id ? nlohmann::json(*r.obstacle_id) : nlohmann::json(nullptr);
        j["obstacle_pose"] = r.obstacle_pose ? pose_json(*r.obstacle_pose) : nlohmann::json(nullptr);
        j["min_clearance"] = r.min_clearance ? nlohmann::json(*r.min_clearance) : nlohmann::json(nullptr);
        j["argmin_link"] = r.argmin_link;
        j["status"] = r.status;
        j["event"] = r.event ? nlohmann::json(*r.event) : nlohmann::json(nullptr);
        f << j.dump() << "\n";
    }
}

Trace load_trace(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open trace file: " + path);
    Trace t;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path, line_no, std::string("bad json: ") + e.what());
        }
        try {
            if (line_no == 1) {
                if (j.value("schema", "") != "mplan-trace") throw ParseError(path, 1, "not a trace file");
                t.header.version = j.at("version");
                t.header.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
                t.header.robot_hash = std::stoull(j.at("robot_hash").get<std::string>(), nullptr, 16);
                t.header.model_hash = std::stoull(j.at("model_hash").get<std::string>(), nullptr, 16);
                t.header.roadmap_hash = std::stoull(j.at("roadmap_hash").get<std::string>(), nullptr, 16);
                t.header.scenario_id = j.at("scenario_id");
                t.header.scenario_hash = std::stoull(j.at("scenario_hash").get<std::string>(), nullptr, 16);
                t.header.run_seed = j.at("run_seed");
                t.header.clearance_threshold = j.at("clearance_threshold");
                t.header.goal_tolerance = j.at("goal_tolerance");
                t.header.tick_duration = j.at("tick_duration");
                continue;
            }
            TraceRecord r;
            r.tick = j.at("tick");
            const auto& jj = j.at("joints");
            if (jj.size() != kNumJoints) throw ParseError(path, line_no, "joints must have 7 entries");
            for (int i = 0; i < kNumJoints; ++i) r.joints[i] = jj[static_cast<std::size_t>(i)];
            r.ee_pos = Vec3(j.at("ee_pos")[0], j.at("ee_pos")[1], j.at("ee_pos")[2]);
            r.ee_quat = Quat(j.at("ee_quat")[0], j.at("ee_quat")[1], j.at("ee_quat")[2], j.at("ee_quat")[3]);
            if (!j.at("obstacle_id").is_null()) r.obstacle_id = j.at("obstacle_id").get<std::string>();
            if (!j.at("obstacle_pose").is_null()) r.obstacle_pose = pose_from_json(j.at("obstacle_pose"));
            if (!j.at("min_clearance").is_null()) r.min_clearance = j.at("min_clearance").get<double>();
            r.argmin_link = j.at("argmin_link");
            r.status = j.at("status");
            if (!j.at("event").is_null()) r.event = j.at("event").get<std::string>();
            t.records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path, line_no, std::string("bad trace record: ") + e.what());
        }
    }
    if (t.records.empty() && t.header.scenario_id.empty()) throw ParseError(path, 1, "empty trace file");
    return t;
}

}  // namespace mplan
