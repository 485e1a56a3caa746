#include "mplan/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mplan/errors.hpp"
#include "mplan/textio.hpp"

namespace mplan {

namespace {

ConvexShape make_shape(ShapeKind kind, const Vec3& dims, const Pose& pose) {
    switch (kind) {
        case ShapeKind::Sphere: return ConvexShape::sphere(dims[0], pose.position);
        case ShapeKind::Box: return ConvexShape::box(dims, pose);
        case ShapeKind::Cylinder: return ConvexShape::cylinder(dims[0], dims[1], pose);
        case ShapeKind::Capsule: return ConvexShape::capsule(dims[0], dims[1], pose);
        case ShapeKind::Hull: break;
    }
    throw DomainError("scenario shapes must be sphere/box/cylinder/capsule");
}

int dims_used(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::Sphere: return 1;
        case ShapeKind::Box: return 3;
        case ShapeKind::Cylinder:
        case ShapeKind::Capsule: return 2;
        case ShapeKind::Hull: break;
    }
    return 0;
}

}  // namespace

void ObstacleTimeline::validate() const {
    if (id.empty()) throw DomainError("obstacle timeline needs an id");
    if (pose_keys.empty() || shape_keys.empty())
        throw DomainError("obstacle '" + id + "' needs at least one posekey and one shapekey");
    for (std::size_t i = 1; i < pose_keys.size(); ++i)
        if (pose_keys[i].tick <= pose_keys[i - 1].tick)
            throw DomainError("obstacle '" + id + "': posekey ticks must be strictly increasing");
    for (std::size_t i = 1; i < shape_keys.size(); ++i)
        if (shape_keys[i].tick <= shape_keys[i - 1].tick)
            throw DomainError("obstacle '" + id + "': shapekey ticks must be strictly increasing");
    for (const auto& k : shape_keys) make_shape(k.kind, k.dims, Pose{}).validate();
    if (disappear_tick && *disappear_tick <= appear_tick)
        throw DomainError("obstacle '" + id + "': disappear tick must exceed appear tick");
}

bool ObstacleTimeline::active_at(int tick) const {
    if (tick < appear_tick) return false;
    if (disappear_tick && tick >= *disappear_tick) return false;
    return true;
}

std::optional<ConvexShape> ObstacleTimeline::at(int tick) const {
    if (!active_at(tick)) return std::nullopt;

    Pose pose;
    {
        const auto& ks = pose_keys;
        if (tick <= ks.front().tick) {
            pose.position = ks.front().position;
            pose.orientation = ks.front().orientation;
        } else if (tick >= ks.back().tick) {
            pose.position = ks.back().position;
            pose.orientation = ks.back().orientation;
        } else {
            std::size_t hi = 1;
            while (ks[hi].tick < tick) ++hi;
            const auto& a = ks[hi - 1];
            const auto& b = ks[hi];
            const double t = static_cast<double>(tick - a.tick) / static_cast<double>(b.tick - a.tick);
            pose.position = (1.0 - t) * a.position + t * b.position;
            pose.orientation = a.orientation.slerp(t, b.orientation);
        }
        pose.canonicalize();
    }

    ShapeKind kind;
    Vec3 dims;
    {
        const auto& ks = shape_keys;
        if (tick <= ks.front().tick) {
            kind = ks.front().kind;
            dims = ks.front().dims;
        } else if (tick >= ks.back().tick) {
            kind = ks.back().kind;
            dims = ks.back().dims;
        } else {
            std::size_t hi = 1;
            while (ks[hi].tick < tick) ++hi;
            const auto& a = ks[hi - 1];
            const auto& b = ks[hi];
            if (a.kind == b.kind) {
                const double t = static_cast<double>(tick - a.tick) / static_cast<double>(b.tick - a.tick);
                kind = a.kind;
                dims = (1.0 - t) * a.dims + t * b.dims;
            } else {
                // Cross-kind morphs swap discretely at the later keyframe.
                kind = (tick >= b.tick) ? b.kind : a.kind;
                dims = (tick >= b.tick) ? b.dims : a.dims;
            }
        }
    }
    return make_shape(kind, dims, pose);
}

void Scenario::validate() const {
    if (id.empty()) throw DomainError("scenario needs an id");
    if (!(tick_duration > 0.0)) throw DomainError("scenario '" + id + "': tick duration must be positive");
    for (const auto& o : obstacles) o.validate();
}

std::uint64_t Scenario::content_hash() const { return fnv1a64(serialize_scenario(*this)); }

std::vector<ObstacleSnapshot> obstacles_at(const Scenario& s, int tick) {
    if (tick < 0) throw DomainError("obstacles_at: tick must be >= 0");
    std::vector<ObstacleSnapshot> out;
    for (const auto& o : s.obstacles)
        if (auto shape = o.at(tick)) out.push_back(ObstacleSnapshot{o.id, *shape});
    return out;
}

std::string serialize_scenario(const Scenario& s) {
    std::ostringstream os;
    os << "mplan-scenario 1\n";
    os << "id " << s.id << "\n";
    os << "robot " << s.robot_ref << "\n";
    os << "tick_duration " << fmt_g17(s.tick_duration) << "\n";
    os << "seed " << s.seed << "\n";
    os << "start";
    for (int i = 0; i < kNumJoints; ++i) os << " " << fmt_g17(s.start_joints[i]);
    os << "\ngoal";
    for (int i = 0; i < kNumJoints; ++i) os << " " << fmt_g17(s.goal_joints[i]);
    os << "\n";
    for (const auto& o : s.obstacles) {
        // Peak keyframe speed, for the record: replanning assumes slow obstacles.
        double peak = 0.0;
        for (std::size_t i = 1; i < o.pose_keys.size(); ++i)
            peak = std::max(peak, (o.pose_keys[i].position - o.pose_keys[i - 1].position).norm() /
                                      static_cast<double>(o.pose_keys[i].tick - o.pose_keys[i - 1].tick));
        os << "obstacle " << o.id << "  # peak speed " << fmt_g17(peak) << " m/tick\n";
        os << "  appear " << o.appear_tick << "\n";
        if (o.disappear_tick) os << "  disappear " << *o.disappear_tick << "\n";
        for (const auto& k : o.pose_keys) {
            os << "  posekey " << k.tick << " " << fmt_g17(k.position.x()) << " " << fmt_g17(k.position.y()) << " "
               << fmt_g17(k.position.z()) << " " << fmt_g17(k.orientation.w()) << " " << fmt_g17(k.orientation.x())
               << " " << fmt_g17(k.orientation.y()) << " " << fmt_g17(k.orientation.z()) << "\n";
        }
        for (const auto& k : o.shape_keys) {
            os << "  shapekey " << k.tick << " " << shape_kind_name(k.kind);
            for (int i = 0; i < dims_used(k.kind); ++i) os << " " << fmt_g17(k.dims[i]);
            os << "\n";
        }
        os << "end\n";
    }
    return os.str();
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    Scenario s;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    bool saw_magic = false;
    ObstacleTimeline* open = nullptr;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string stripped = strip_comment(line);
        if (stripped.empty()) continue;
        std::istringstream ls(stripped);
        std::string tag;
        ls >> tag;
        if (!saw_magic) {
            int version = 0;
            if (tag != "mplan-scenario" || !(ls >> version) || version != 1)
                throw ParseError(origin, line_no, "expected header 'mplan-scenario 1'");
            saw_magic = true;
            continue;
        }
        if (open) {
            if (tag == "appear") {
                if (!(ls >> open->appear_tick)) throw ParseError(origin, line_no, "appear needs a tick");
            } else if (tag == "disappear") {
                int t;
                if (!(ls >> t)) throw ParseError(origin, line_no, "disappear needs a tick");
                open->disappear_tick = t;
            } else if (tag == "posekey") {
                PoseKey k;
                if (!(ls >> k.tick >> k.position.x() >> k.position.y() >> k.position.z() >> k.orientation.w() >>
                      k.orientation.x() >> k.orientation.y() >> k.orientation.z()))
                    throw ParseError(origin, line_no, "posekey needs: tick x y z qw qx qy qz");
                if (std::abs(k.orientation.norm() - 1.0) > 1e-6)
                    throw ParseError(origin, line_no, "posekey quaternion is not unit length");
                k.orientation.normalize();
                open->pose_keys.push_back(k);
            } else if (tag == "shapekey") {
                ShapeKey k;
                std::string kind;
                if (!(ls >> k.tick >> kind)) throw ParseError(origin, line_no, "shapekey needs: tick kind dims...");
                try {
                    k.kind = shape_kind_from_name(kind);
                } catch (const DomainError&) {
                    throw ParseError(origin, line_no, "unknown shape kind '" + kind + "'");
                }
                if (k.kind == ShapeKind::Hull)
                    throw ParseError(origin, line_no, "hull shapes are not supported in scenario files");
                for (int i = 0; i < dims_used(k.kind); ++i)
                    if (!(ls >> k.dims[i]))
                        throw ParseError(origin, line_no, std::string("shape '") + kind + "' needs " +
                                                              std::to_string(dims_used(k.kind)) + " dimensions");
                open->shape_keys.push_back(k);
            } else if (tag == "end") {
                open = nullptr;
            } else {
                throw ParseError(origin, line_no, "unknown obstacle directive '" + tag + "'");
            }
            continue;
        }
        if (tag == "id") ls >> s.id;
        else if (tag == "robot") ls >> s.robot_ref;
        else if (tag == "tick_duration") ls >> s.tick_duration;
        else if (tag == "seed") ls >> s.seed;
        else if (tag == "start") {
            for (int i = 0; i < kNumJoints; ++i)
                if (!(ls >> s.start_joints[i])) throw ParseError(origin, line_no, "start needs 7 joint values");
        } else if (tag == "goal") {
            for (int i = 0; i < kNumJoints; ++i)
                if (!(ls >> s.goal_joints[i])) throw ParseError(origin, line_no, "goal needs 7 joint values");
        } else if (tag == "obstacle") {
            ObstacleTimeline o;
            if (!(ls >> o.id)) throw ParseError(origin, line_no, "obstacle needs an id");
            s.obstacles.push_back(o);
            open = &s.obstacles.back();
        } else {
            throw ParseError(origin, line_no, "unknown directive '" + tag + "'");
        }
    }
    if (!saw_magic) throw ParseError(origin, 1, "missing header 'mplan-scenario 1'");
    if (open) throw ParseError(origin, line_no, "obstacle block not closed with 'end'");
    try {
        s.validate();
    } catch (const DomainError& e) {
        throw ParseError(origin, line_no, e.what());
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str(), path);
}

void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write scenario file: " + path);
    f << serialize_scenario(s);
}

namespace {

JointVector joints(double a, double b, double c, double d, double e, double f, double g) {
    JointVector q;
    q << a, b, c, d, e, f, g;
    return q;
}

PoseKey pose_key(int tick, double x, double y, double z) {
    PoseKey k;
    k.tick = tick;
    k.position = Vec3(x, y, z);
    return k;
}

ShapeKey shape_key(int tick, ShapeKind kind, const Vec3& dims) {
    ShapeKey k;
    k.tick = tick;
    k.kind = kind;
    k.dims = dims;
    return k;
}

// Shared endpoints: the arm sweeps its end effector from the right-front to
// the left-front of the base; obstacles are staged along that sweep.
const JointVector kStart = joints(-0.9, 0.35, 0.0, -1.6, 0.0, 1.95, 0.785);
const JointVector kGoal = joints(0.9, 0.35, 0.0, -1.6, 0.0, 1.95, 0.785);

Scenario base_scenario(const std::string& id, std::uint64_t seed) {
    Scenario s;
    s.id = id;
    s.seed = seed;
    s.start_joints = kStart;
    s.goal_joints = kGoal;
    s.tick_duration = 0.05;
    return s;
}

}  // namespace

std::vector<Scenario> builtin_suite() {
    std::vector<Scenario> suite;

    {
        // Blocker appears mid-run directly on the remaining path and stays.
        Scenario s = base_scenario("static_blocker", 11);
        ObstacleTimeline o;
        o.id = "blocker";
        o.appear_tick = 60;
        o.pose_keys = {pose_key(60, 0.50, 0.15, 0.55)};
        o.shape_keys = {shape_key(60, ShapeKind::Box, Vec3(0.09, 0.09, 0.16))};
        s.obstacles.push_back(o);
        suite.push_back(s);
    }
    {
        // Sphere sweeping across the workspace through the initial path.
        Scenario s = base_scenario("crossing_mover", 12);
        ObstacleTimeline o;
        o.id = "mover";
        o.appear_tick = 0;
        o.pose_keys = {pose_key(0, 0.45, 0.85, 0.50), pose_key(260, 0.45, -0.55, 0.50)};
        o.shape_keys = {shape_key(0, ShapeKind::Sphere, Vec3(0.11, 0, 0))};
        s.obstacles.push_back(o);
        suite.push_back(s);
    }
    {
        // Moving obstacle that swells as a box and swaps to a cylinder midway.
        Scenario s = base_scenario("morphing_passage", 13);
        ObstacleTimeline o;
        o.id = "morpher";
        o.appear_tick = 0;
        o.pose_keys = {pose_key(0, 0.40, 0.75, 0.55), pose_key(280, 0.40, -0.45, 0.55)};
        o.shape_keys = {shape_key(0, ShapeKind::Box, Vec3(0.07, 0.07, 0.12)),
                        shape_key(90, ShapeKind::Box, Vec3(0.11, 0.11, 0.18)),
                        shape_key(180, ShapeKind::Cylinder, Vec3(0.10, 0.18, 0)),
                        shape_key(260, ShapeKind::Cylinder, Vec3(0.13, 0.22, 0))};
        s.obstacles.push_back(o);
        suite.push_back(s);
    }
    {
        // A parked sphere near the path plus a crossing box.
        Scenario s = base_scenario("two_obstacles", 14);
        ObstacleTimeline parked;
        parked.id = "parked";
        parked.appear_tick = 0;
        parked.pose_keys = {pose_key(0, 0.35, -0.25, 0.65)};
        parked.shape_keys = {shape_key(0, ShapeKind::Sphere, Vec3(0.09, 0, 0))};
        ObstacleTimeline crosser;
        crosser.id = "crosser";
        crosser.appear_tick = 30;
        crosser.pose_keys = {pose_key(30, 0.50, 0.75, 0.45), pose_key(300, 0.50, -0.65, 0.45)};
        crosser.shape_keys = {shape_key(30, ShapeKind::Box, Vec3(0.08, 0.08, 0.14))};
        s.obstacles.push_back(parked);
        s.obstacles.push_back(crosser);
        suite.push_back(s);
    }
    {
        // Sphere large enough to swallow the goal region: must end trapped.
        Scenario s = base_scenario("trapped_goal", 15);
        ObstacleTimeline o;
        o.id = "cage";
        o.appear_tick = 20;
        o.pose_keys = {pose_key(20, 0.35, 0.45, 0.55)};
        o.shape_keys = {shape_key(20, ShapeKind::Sphere, Vec3(0.42, 0, 0))};
        s.obstacles.push_back(o);
        suite.push_back(s);
    }
    {
        // Faraway box: baseline run, no reroutes expected.
        Scenario s = base_scenario("faraway_static", 16);
        ObstacleTimeline o;
        o.id = "far_box";
        o.appear_tick = 0;
        o.pose_keys = {pose_key(0, 3.0, 3.0, 0.5)};
        o.shape_keys = {shape_key(0, ShapeKind::Box, Vec3(0.2, 0.2, 0.2))};
        s.obstacles.push_back(o);
        suite.push_back(s);
    }
    for (const auto& s : suite) s.validate();
    return suite;
}

Scenario builtin_scenario(const std::string& id) {
    for (auto& s : builtin_suite())
        if (s.id == id) return s;
    throw InputError("unknown builtin scenario '" + id + "'");
}

std::vector<std::string> builtin_scenario_ids() {
    std::vector<std::string> ids;
    for (const auto& s : builtin_suite()) ids.push_back(s.id);
    return ids;
}

}  // namespace mplan
