#include "mplan/verify.hpp"

#include <cmath>
#include <sstream>

#include "mplan/textio.hpp"

namespace mplan {

namespace {

constexpr double kReplayTol = 1e-6;

void issue(VerifyReport& r, bool& flag, int tick, const std::string& what) {
    flag = false;
    r.issues.push_back(VerifyIssue{tick, what});
}

}  // namespace

VerifyReport verify_trace(const Trace& t, const Scenario& scenario, const RobotModel& robot) {
    VerifyReport rep;
    rep.ticks = static_cast<int>(t.records.size());

    if (t.header.scenario_hash != scenario.content_hash())
        issue(rep, rep.lineage_ok, -1, "scenario hash mismatch: trace was produced from a different scenario");
    if (t.header.scenario_id != scenario.id)
        issue(rep, rep.lineage_ok, -1, "scenario id mismatch: trace says '" + t.header.scenario_id + "'");
    if (t.header.robot_hash != robot.content_hash())
        issue(rep, rep.lineage_ok, -1, "robot hash mismatch: trace was produced from a different robot model");
    if (!rep.lineage_ok) return rep;

    if (t.records.empty()) {
        issue(rep, rep.replay_ok, -1, "trace has no records");
        return rep;
    }

    int expected_tick = 0;
    for (const auto& rec : t.records) {
        const int tick = rec.tick;
        if (tick != expected_tick) {
            issue(rep, rep.replay_ok, tick, "tick sequence broken (expected " + std::to_string(expected_tick) + ")");
            return rep;
        }
        ++expected_tick;

        if (!within_limits(robot, rec.joints)) {
            issue(rep, rep.safety_ok, tick, "joints outside limits");
            continue;
        }
        const Pose ee = forward_kinematics(robot, rec.joints);
        if ((ee.position - rec.ee_pos).norm() > kReplayTol)
            issue(rep, rep.replay_ok, tick, "end-effector position mismatch");
        Quat q = rec.ee_quat;
        if (q.w() < 0) q.coeffs() = -q.coeffs();
        if ((ee.orientation.coeffs() - q.coeffs()).cwiseAbs().maxCoeff() > kReplayTol)
            issue(rep, rep.replay_ok, tick, "end-effector orientation mismatch");

        const auto live = obstacles_at(scenario, tick);
        if (live.empty()) {
            if (rec.min_clearance)
                issue(rep, rep.replay_ok, tick, "clearance logged while no obstacle is active");
        } else {
            std::vector<ConvexShape> shapes;
            for (const auto& o : live) shapes.push_back(o.shape);
            const auto rc = arm_clearance(robot, rec.joints, std::span<const ConvexShape>(shapes));
            if (!rec.min_clearance) {
                issue(rep, rep.replay_ok, tick, "missing clearance while an obstacle is active");
            } else {
                if (std::abs(*rec.min_clearance - rc.min_distance) > kReplayTol)
                    issue(rep, rep.replay_ok, tick,
                          "clearance mismatch: logged " + fmt_g17(*rec.min_clearance) + ", replayed " +
                              fmt_g17(rc.min_distance));
                if (rec.argmin_link != rc.argmin_link &&
                    std::abs(rc.per_link[static_cast<std::size_t>(rec.argmin_link >= 0 ? rec.argmin_link : 0)] -
                             rc.min_distance) > kReplayTol)
                    issue(rep, rep.replay_ok, tick, "argmin link mismatch");
                rep.min_clearance_seen = std::min(rep.min_clearance_seen, rc.min_distance);
                if (rc.min_distance < 0.0) issue(rep, rep.safety_ok, tick, "negative clearance");
                const bool arrival = rec.event && rec.event->find("arrive") != std::string::npos;
                const bool reached = rec.event && rec.event->find("reached") != std::string::npos;
                if ((arrival || reached) && rc.min_distance <= t.header.clearance_threshold)
                    issue(rep, rep.safety_ok, tick,
                          "waypoint arrival with clearance " + fmt_g17(rc.min_distance) + " <= threshold " +
                              fmt_g17(t.header.clearance_threshold));
            }
        }
    }

    const auto& last = t.records.back();
    rep.final_status = last.status;
    if (last.status != "reached" && last.status != "failed")
        issue(rep, rep.replay_ok, last.tick, "final status must be reached or failed, got '" + last.status + "'");
    if (last.status == "reached") {
        const Vec3 goal_ee = forward_kinematics(robot, scenario.goal_joints).position;
        if ((last.ee_pos - goal_ee).norm() > t.header.goal_tolerance + kReplayTol)
            issue(rep, rep.safety_ok, last.tick, "reached status but end-effector is off goal");
    }
    return rep;
}

std::string format_report(const VerifyReport& r) {
    std::ostringstream os;
    os << "ticks: " << r.ticks << "\n";
    os << "final status: " << r.final_status << "\n";
    if (r.min_clearance_seen != std::numeric_limits<double>::infinity())
        os << "min clearance seen: " << fmt_g17(r.min_clearance_seen) << "\n";
    os << "lineage: " << (r.lineage_ok ? "ok" : "MISMATCH") << "\n";
    os << "replay:  " << (r.replay_ok ? "ok" : "MISMATCH") << "\n";
    os << "safety:  " << (r.safety_ok ? "ok" : "VIOLATION") << "\n";
    for (const auto& i : r.issues) {
        os << "  ";
        if (i.tick >= 0) os << "tick " << i.tick << ": ";
        os << i.what << "\n";
    }
    return os.str();
}

}  // namespace mplan
