#include "mplan/robot.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mplan/errors.hpp"
#include "mplan/textio.hpp"

namespace mplan {

namespace {

Eigen::Isometry3d dh_transform(const DhRow& row, double q) {
    const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
    const double th = q + row.theta_offset;
    const double ct = std::cos(th), st = std::sin(th);
    // RotX(alpha) * TransX(a) * RotZ(theta) * TransZ(d), written out.
    Eigen::Matrix4d m;
    m << ct, -st, 0.0, row.a,
        st * ca, ct * ca, -sa, -row.d * sa,
        st * sa, ct * sa, ca, row.d * ca,
        0.0, 0.0, 0.0, 1.0;
    Eigen::Isometry3d t;
    t.matrix() = m;
    return t;
}

}  // namespace

RobotModel RobotModel::panda() {
    RobotModel m;
    m.name = "panda";
    const double h = M_PI / 2.0;
    m.dh = {DhRow{0.0, 0.333, 0.0, 0.0},   DhRow{0.0, 0.0, -h, 0.0}, DhRow{0.0, 0.316, h, 0.0},
            DhRow{0.0825, 0.0, h, 0.0},    DhRow{-0.0825, 0.384, -h, 0.0},
            DhRow{0.0, 0.0, h, 0.0},       DhRow{0.088, 0.107, h, 0.0}};
    m.limits = {JointLimit{-2.8973, 2.8973}, JointLimit{-1.7628, 1.7628},
                JointLimit{-2.8973, 2.8973}, JointLimit{-3.0718, -0.0698},
                JointLimit{-2.8973, 2.8973}, JointLimit{-0.0175, 3.7525},
                JointLimit{-2.8973, 2.8973}};
    // Skeleton capsules: segment from joint origin i to joint origin i+1,
    // expressed in frame i. For modified DH that endpoint is constant.
    for (int i = 0; i < kNumJoints; ++i) {
        const DhRow& r = m.dh[i];
        m.links[i].p0 = Vec3::Zero();
        m.links[i].p1 = Vec3(r.a, -r.d * std::sin(r.alpha), r.d * std::cos(r.alpha));
        m.links[i].radius = 0.06;
    }
    return m;
}

void RobotModel::validate() const {
    for (int i = 0; i < kNumJoints; ++i) {
        if (!(limits[i].lo < limits[i].hi))
            throw DomainError("robot '" + name + "': joint " + std::to_string(i) + " limit interval is empty");
        if (!(links[i].radius > 0.0))
            throw DomainError("robot '" + name + "': link " + std::to_string(i) + " capsule radius must be positive");
        if (!links[i].p0.allFinite() || !links[i].p1.allFinite())
            throw DomainError("robot '" + name + "': link " + std::to_string(i) + " capsule endpoints not finite");
    }
}

std::uint64_t RobotModel::content_hash() const { return fnv1a64(serialize_robot(*this)); }

void check_limits(const RobotModel& model, const JointVector& q) {
    for (int i = 0; i < kNumJoints; ++i) {
        if (q[i] < model.limits[i].lo || q[i] > model.limits[i].hi)
            throw JointLimitError(i, q[i], model.limits[i].lo, model.limits[i].hi);
    }
}

bool within_limits(const RobotModel& model, const JointVector& q) {
    for (int i = 0; i < kNumJoints; ++i)
        if (q[i] < model.limits[i].lo || q[i] > model.limits[i].hi) return false;
    return true;
}

JointVector clamp_to_limits(const RobotModel& model, const JointVector& q) {
    JointVector out = q;
    for (int i = 0; i < kNumJoints; ++i)
        out[i] = std::min(std::max(out[i], model.limits[i].lo), model.limits[i].hi);
    return out;
}

std::array<Pose, kNumJoints> link_poses(const RobotModel& model, const JointVector& q) {
    check_limits(model, q);
    std::array<Pose, kNumJoints> out;
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    for (int i = 0; i < kNumJoints; ++i) {
        t = t * dh_transform(model.dh[i], q[i]);
        out[i] = Pose::from_isometry(t);
    }
    return out;
}

Pose forward_kinematics(const RobotModel& model, const JointVector& q) {
    return link_poses(model, q).back();
}

JointVector random_configuration(const RobotModel& model, Rng& rng) {
    JointVector q;
    for (int i = 0; i < kNumJoints; ++i) q[i] = rng.uniform(model.limits[i].lo, model.limits[i].hi);
    return q;
}

JointVector random_configuration(const RobotModel& model, std::uint64_t seed) {
    Rng rng(seed);
    return random_configuration(model, rng);
}

std::string serialize_robot(const RobotModel& model) {
    std::ostringstream os;
    os << "mplan-robot 1\n";
    os << "name " << model.name << "\n";
    for (const auto& r : model.dh)
        os << "dh " << fmt_g17(r.a) << " " << fmt_g17(r.d) << " " << fmt_g17(r.alpha) << " "
           << fmt_g17(r.theta_offset) << "\n";
    for (const auto& l : model.limits) os << "limit " << fmt_g17(l.lo) << " " << fmt_g17(l.hi) << "\n";
    for (const auto& c : model.links)
        os << "capsule " << fmt_g17(c.p0.x()) << " " << fmt_g17(c.p0.y()) << " " << fmt_g17(c.p0.z()) << " "
           << fmt_g17(c.p1.x()) << " " << fmt_g17(c.p1.y()) << " " << fmt_g17(c.p1.z()) << " "
           << fmt_g17(c.radius) << "\n";
    return os.str();
}

RobotModel parse_robot(const std::string& text, const std::string& origin) {
    RobotModel m;
    int n_dh = 0, n_limit = 0, n_capsule = 0;
    int line_no = 0;
    std::istringstream is(text);
    std::string line;
    bool saw_magic = false;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string stripped = strip_comment(line);
        if (stripped.empty()) continue;
        std::istringstream ls(stripped);
        std::string tag;
        ls >> tag;
        if (!saw_magic) {
            int version = 0;
            if (tag != "mplan-robot" || !(ls >> version) || version != 1)
                throw ParseError(origin, line_no, "expected header 'mplan-robot 1'");
            saw_magic = true;
            continue;
        }
        if (tag == "name") {
            ls >> m.name;
        } else if (tag == "dh") {
            if (n_dh >= kNumJoints) throw ParseError(origin, line_no, "more than 7 dh rows");
            DhRow& r = m.dh[n_dh++];
            if (!(ls >> r.a >> r.d >> r.alpha >> r.theta_offset))
                throw ParseError(origin, line_no, "dh row needs 4 numbers: a d alpha theta_offset");
        } else if (tag == "limit") {
            if (n_limit >= kNumJoints) throw ParseError(origin, line_no, "more than 7 limit rows");
            JointLimit& l = m.limits[n_limit++];
            if (!(ls >> l.lo >> l.hi)) throw ParseError(origin, line_no, "limit row needs 2 numbers: lo hi");
        } else if (tag == "capsule") {
            if (n_capsule >= kNumJoints) throw ParseError(origin, line_no, "more than 7 capsule rows");
            LinkCapsule& c = m.links[n_capsule++];
            if (!(ls >> c.p0.x() >> c.p0.y() >> c.p0.z() >> c.p1.x() >> c.p1.y() >> c.p1.z() >> c.radius))
                throw ParseError(origin, line_no, "capsule row needs 7 numbers: p0 p1 radius");
        } else {
            throw ParseError(origin, line_no, "unknown directive '" + tag + "'");
        }
    }
    if (!saw_magic) throw ParseError(origin, 1, "missing header 'mplan-robot 1'");
    if (n_dh != kNumJoints || n_limit != kNumJoints || n_capsule != kNumJoints)
        throw ParseError(origin, line_no,
                         "expected exactly 7 dh, 7 limit and 7 capsule rows (got " + std::to_string(n_dh) +
                             "/" + std::to_string(n_limit) + "/" + std::to_string(n_capsule) + ")");
    m.validate();
    return m;
}

RobotModel load_robot(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open robot file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_robot(ss.str(), path);
}

void save_robot(const RobotModel& model, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write robot file: " + path);
    f << serialize_robot(model);
}

}  // namespace mplan
