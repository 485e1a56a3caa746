// Python bindings for the core operations: kinematics, clearance queries,
// dataset generation, the trained VAE, roadmap routing and scenario access.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mplan/pipeline.hpp"
#include "mplan/version.hpp"

namespace py = pybind11;
using namespace mplan;

namespace {

ConvexShape shape_from_args(const std::string& kind, const std::vector<double>& dims, const Vec3& position) {
    Pose pose;
    pose.position = position;
    switch (shape_kind_from_name(kind)) {
        case ShapeKind::Sphere: return ConvexShape::sphere(dims.at(0), position);
        case ShapeKind::Box: return ConvexShape::box(Vec3(dims.at(0), dims.at(1), dims.at(2)), pose);
        case ShapeKind::Cylinder: return ConvexShape::cylinder(dims.at(0), dims.at(1), pose);
        case ShapeKind::Capsule: return ConvexShape::capsule(dims.at(0), dims.at(1), pose);
        case ShapeKind::Hull: break;
    }
    throw DomainError("hull shapes need explicit points; use the C++ API");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Latent-manifold motion planning core";
    m.attr("__version__") = kToolVersion;

    py::register_exception<Error>(m, "MplanError");

    py::class_<Pose>(m, "Pose")
        .def(py::init<>())
        .def_property_readonly("position", [](const Pose& p) { return p.position; })
        .def_property_readonly("quaternion", [](const Pose& p) {
            return std::vector<double>{p.orientation.w(), p.orientation.x(), p.orientation.y(), p.orientation.z()};
        });

    py::class_<RobotModel>(m, "RobotModel")
        .def_static("panda", &RobotModel::panda)
        .def_static("load", &load_robot, py::arg("path"))
        .def("content_hash", &RobotModel::content_hash)
        .def_property_readonly("joint_limits", [](const RobotModel& r) {
            std::vector<std::pair<double, double>> out;
            for (const auto& l : r.limits) out.emplace_back(l.lo, l.hi);
            return out;
        });

    m.def("forward_kinematics", &forward_kinematics, py::arg("model"), py::arg("q"));
    m.def("link_poses", [](const RobotModel& model, const JointVector& q) {
        const auto poses = link_poses(model, q);
        return std::vector<Pose>(poses.begin(), poses.end());
    });
    m.def("random_configuration",
          py::overload_cast<const RobotModel&, std::uint64_t>(&random_configuration), py::arg("model"),
          py::arg("seed"));

    py::class_<ConvexShape>(m, "ConvexShape");
    m.def("make_shape", &shape_from_args, py::arg("kind"), py::arg("dims"), py::arg("position"),
          "kind: sphere(r) | box(hx,hy,hz) | cylinder(r,hh) | capsule(r,hl)");
    m.def("gjk_distance",
          [](const ConvexShape& a, const ConvexShape& b) { return gjk_distance(a, b); });

    py::class_<ClearanceReport>(m, "ClearanceReport")
        .def_readonly("min_distance", &ClearanceReport::min_distance)
        .def_readonly("argmin_link", &ClearanceReport::argmin_link)
        .def_property_readonly("per_link", [](const ClearanceReport& r) {
            return std::vector<double>(r.per_link.begin(), r.per_link.end());
        });
    m.def("arm_clearance", [](const RobotModel& model, const JointVector& q, const ConvexShape& obstacle) {
        return arm_clearance(model, q, obstacle);
    });
    m.def("clearance_cost", [](const ClearanceReport& r, double beta) { return clearance_cost(r, CostParams{beta}); },
          py::arg("report"), py::arg("beta") = 2.0);
    m.def("is_collision", &is_collision, py::arg("model"), py::arg("q"), py::arg("obstacle"), py::arg("margin"));

    m.def(
        "generate_dataset",
        [](const RobotModel& model, int count, const Vec3& lo, const Vec3& hi, std::uint64_t seed) {
            GenerateConfig cfg;
            cfg.count = count;
            cfg.workspace = Box3{lo, hi};
            cfg.seed = seed;
            const Dataset d = generate(model, cfg);
            std::vector<std::array<double, kSampleDim>> rows;
            rows.reserve(d.size());
            for (const auto& s : d.samples) {
                std::array<double, kSampleDim> row;
                const SampleVec v = s.flatten();
                for (int i = 0; i < kSampleDim; ++i) row[static_cast<std::size_t>(i)] = v[i];
                rows.push_back(row);
            }
            return rows;
        },
        py::arg("model"), py::arg("count"), py::arg("workspace_lo"), py::arg("workspace_hi"), py::arg("seed"),
        "Rows are [theta0..theta6, ee pose (pos+quat), obstacle xyz, collision flag].");

    py::class_<VaeModel>(m, "VaeModel")
        .def_static("load", &load_vae, py::arg("path"))
        .def("encode",
             [](const VaeModel& v, const SampleVec& x) { return Vec2(v.encode_mean(v.norm.normalize(x))); })
        .def("decode", [](const VaeModel& v, const Vec2& z) { return SampleVec(v.norm.denormalize(v.decode(z))); })
        .def("flag_score", [](const VaeModel& v, const Vec2& z) { return v.flag_score(v.decode(z)); })
        .def("content_hash", &VaeModel::content_hash);

    py::class_<Roadmap>(m, "Roadmap")
        .def_static("load", &load_roadmap, py::arg("path"))
        .def("size", &Roadmap::size)
        .def("nearest_node", [](const Roadmap& r, const Vec2& z) { return nearest_node(r, z); })
        .def("shortest_path",
             [](const Roadmap& r, int start, int goal) { return shortest_path(r, start, goal); })
        .def("node_latent", [](const Roadmap& r, int i) { return Vec2(r.nodes.at(static_cast<std::size_t>(i)).z); })
        .def("node_joints",
             [](const Roadmap& r, int i) { return JointVector(r.nodes.at(static_cast<std::size_t>(i)).joints); });

    m.def("builtin_scenario_ids", &builtin_scenario_ids);
}
