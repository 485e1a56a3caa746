#include "mplan/config.hpp"

#include <fstream>
#include <sstream>

#include "mplan/errors.hpp"
#include "mplan/robot.hpp"
#include "mplan/textio.hpp"

namespace mplan {

void RunConfig::validate() const {
    if (dataset_count < 1) throw ConfigError("dataset.count must be >= 1");
    if (workspace.degenerate()) throw ConfigError("dataset.workspace box is degenerate");
    if (!(obstacle_radius > 0.0)) throw ConfigError("dataset.obstacle_radius must be positive");
    if (!(rebalance_fraction > 0.0 && rebalance_fraction < 1.0))
        throw ConfigError("dataset.rebalance_fraction must be in (0, 1)");
    if (max_samples < 0) throw ConfigError("dataset.max_samples must be >= 0");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("dataset.train_fraction must be in (0, 1)");
    if (vae.hidden.empty()) throw ConfigError("vae.hidden must name at least one layer");
    for (const int h : vae.hidden)
        if (h < 1) throw ConfigError("vae.hidden sizes must be positive");
    if (vae.epochs < 1) throw ConfigError("vae.epochs must be >= 1");
    if (vae.batch < 1) throw ConfigError("vae.batch must be >= 1");
    if (!(vae.learning_rate > 0.0)) throw ConfigError("vae.learning_rate must be positive");
    if (vae.momentum < 0.0 || vae.momentum >= 1.0) throw ConfigError("vae.momentum must be in [0, 1)");
    if (vae.kl_weight < 0.0) throw ConfigError("vae.kl_weight must be >= 0");
    if (knn_k < 1) throw ConfigError("roadmap.k must be >= 1");
    if (grid_resolution < 2) throw ConfigError("roadmap.grid_resolution must be >= 2");
    if (bounds_margin < 0.0) throw ConfigError("roadmap.bounds_margin must be >= 0");
    if (!(bridge_cap_factor > 0.0)) throw ConfigError("roadmap.bridge_cap_factor must be positive");
    if (metrics_k < 1) throw ConfigError("metrics.k must be >= 1");
    if (metric_bins.empty()) throw ConfigError("metrics.bins must not be empty");
    if (max_ticks < 1) throw ConfigError("sim.max_ticks must be >= 1");
    safety.validate();
}

std::string RunConfig::canonical_text() const {
    std::ostringstream os;
    os << "mplan-config 1\n";
    os << "robot " << robot_ref << "\n";
    os << "out_dir " << out_dir << "\n";
    os << "dataset.count " << dataset_count << "\n";
    os << "dataset.workspace " << fmt_g17(workspace.lo.x()) << " " << fmt_g17(workspace.lo.y()) << " "
       << fmt_g17(workspace.lo.z()) << " " << fmt_g17(workspace.hi.x()) << " " << fmt_g17(workspace.hi.y()) << " "
       << fmt_g17(workspace.hi.z()) << "\n";
    os << "dataset.obstacle_radius " << fmt_g17(obstacle_radius) << "\n";
    os << "dataset.rebalance_fraction " << fmt_g17(rebalance_fraction) << "\n";
    os << "dataset.max_samples " << max_samples << "\n";
    os << "dataset.train_fraction " << fmt_g17(train_fraction) << "\n";
    os << "dataset.seed " << dataset_seed << "\n";
    os << "vae.hidden";
    for (const int h : vae.hidden) os << " " << h;
    os << "\n";
    os << "vae.epochs " << vae.epochs << "\n";
    os << "vae.batch " << vae.batch << "\n";
    os << "vae.learning_rate " << fmt_g17(vae.learning_rate) << "\n";
    os << "vae.momentum " << fmt_g17(vae.momentum) << "\n";
    os << "vae.kl_weight " << fmt_g17(vae.kl_weight) << "\n";
    os << "vae.warmup_fraction " << fmt_g17(vae.warmup_fraction) << "\n";
    os << "vae.seed " << vae.seed << "\n";
    os << "roadmap.k " << knn_k << "\n";
    os << "roadmap.grid_resolution " << grid_resolution << "\n";
    os << "roadmap.bounds_margin " << fmt_g17(bounds_margin) << "\n";
    os << "roadmap.bridge_cap_factor " << fmt_g17(bridge_cap_factor) << "\n";
    os << "metrics.k " << metrics_k << "\n";
    os << "metrics.bins";
    for (const int b : metric_bins) os << " " << b;
    os << "\n";
    os << "metrics.seed " << metrics_seed << "\n";
    os << "safety.clearance_threshold " << fmt_g17(safety.clearance_threshold) << "\n";
    os << "safety.check_period " << safety.check_period << "\n";
    os << "safety.relabel_radius " << fmt_g17(safety.relabel_radius) << "\n";
    os << "safety.joint_speed " << fmt_g17(safety.joint_speed) << "\n";
    os << "safety.goal_tolerance " << fmt_g17(safety.goal_tolerance) << "\n";
    os << "sim.max_ticks " << max_ticks << "\n";
    return os.str();
}

std::uint64_t RunConfig::hash() const {
    std::istringstream is(canonical_text());
    std::string line, kept;
    while (std::getline(is, line)) {
        if (line.rfind("robot ", 0) == 0 || line.rfind("out_dir ", 0) == 0) continue;
        kept += line;
        kept += '\n';
    }
    return fnv1a64(kept);
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
    RunConfig c;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    bool saw_magic = false;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string s = strip_comment(line);
        if (s.empty()) continue;
        std::istringstream ls(s);
        std::string key;
        ls >> key;
        if (!saw_magic) {
            int version = 0;
            if (key != "mplan-config" || !(ls >> version) || version != 1)
                throw ParseError(origin, line_no, "expected header 'mplan-config 1'");
            saw_magic = true;
            continue;
        }
        auto bad = [&](const std::string& what) { return ParseError(origin, line_no, what); };
        if (key == "robot") ls >> c.robot_ref;
        else if (key == "out_dir") ls >> c.out_dir;
        else if (key == "dataset.count") { if (!(ls >> c.dataset_count)) throw bad("integer expected"); }
        else if (key == "dataset.workspace") {
            if (!(ls >> c.workspace.lo.x() >> c.workspace.lo.y() >> c.workspace.lo.z() >> c.workspace.hi.x() >>
                  c.workspace.hi.y() >> c.workspace.hi.z()))
                throw bad("workspace needs 6 numbers: lo.xyz hi.xyz");
        }
        else if (key == "dataset.obstacle_radius") { if (!(ls >> c.obstacle_radius)) throw bad("number expected"); }
        else if (key == "dataset.rebalance_fraction") { if (!(ls >> c.rebalance_fraction)) throw bad("number expected"); }
        else if (key == "dataset.max_samples") { if (!(ls >> c.max_samples)) throw bad("integer expected"); }
        else if (key == "dataset.train_fraction") { if (!(ls >> c.train_fraction)) throw bad("number expected"); }
        else if (key == "dataset.seed") { if (!(ls >> c.dataset_seed)) throw bad("integer expected"); }
        else if (key == "vae.hidden") {
            c.vae.hidden.clear();
            int h;
            while (ls >> h) c.vae.hidden.push_back(h);
            if (c.vae.hidden.empty()) throw bad("vae.hidden needs at least one size");
        }
        else if (key == "vae.epochs") { if (!(ls >> c.vae.epochs)) throw bad("integer expected"); }
        else if (key == "vae.batch") { if (!(ls >> c.vae.batch)) throw bad("integer expected"); }
        else if (key == "vae.learning_rate") { if (!(ls >> c.vae.learning_rate)) throw bad("number expected"); }
        else if (key == "vae.momentum") { if (!(ls >> c.vae.momentum)) throw bad("number expected"); }
        else if (key == "vae.kl_weight") { if (!(ls >> c.vae.kl_weight)) throw bad("number expected"); }
        else if (key == "vae.warmup_fraction") { if (!(ls >> c.vae.warmup_fraction)) throw bad("number expected"); }
        else if (key == "vae.seed") { if (!(ls >> c.vae.seed)) throw bad("integer expected"); }
        else if (key == "roadmap.k") { if (!(ls >> c.knn_k)) throw bad("integer expected"); }
        else if (key == "roadmap.grid_resolution") { if (!(ls >> c.grid_resolution)) throw bad("integer expected"); }
        else if (key == "roadmap.bounds_margin") { if (!(ls >> c.bounds_margin)) throw bad("number expected"); }
        else if (key == "roadmap.bridge_cap_factor") { if (!(ls >> c.bridge_cap_factor)) throw bad("number expected"); }
        else if (key == "metrics.k") { if (!(ls >> c.metrics_k)) throw bad("integer expected"); }
        else if (key == "metrics.bins") {
            c.metric_bins.clear();
            int b;
            while (ls >> b) c.metric_bins.push_back(b);
            if (c.metric_bins.empty()) throw bad("metrics.bins needs at least one size");
        }
        else if (key == "metrics.seed") { if (!(ls >> c.metrics_seed)) throw bad("integer expected"); }
        else if (key == "safety.clearance_threshold") { if (!(ls >> c.safety.clearance_threshold)) throw bad("number expected"); }
        else if (key == "safety.check_period") { if (!(ls >> c.safety.check_period)) throw bad("integer expected"); }
        else if (key == "safety.relabel_radius") { if (!(ls >> c.safety.relabel_radius)) throw bad("number expected"); }
        else if (key == "safety.joint_speed") { if (!(ls >> c.safety.joint_speed)) throw bad("number expected"); }
        else if (key == "safety.goal_tolerance") { if (!(ls >> c.safety.goal_tolerance)) throw bad("number expected"); }
        else if (key == "sim.max_ticks") { if (!(ls >> c.max_ticks)) throw bad("integer expected"); }
        else throw bad("unknown config key '" + key + "'");
    }
    if (!saw_magic) throw ParseError(origin, 1, "missing header 'mplan-config 1'");
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path);
}

void save_config(const RunConfig& c, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write config file: " + path);
    f << c.canonical_text();
}

RobotModel resolve_robot(const std::string& robot_ref) {
    if (robot_ref == "builtin:panda") return RobotModel::panda();
    if (robot_ref.rfind("builtin:", 0) == 0) throw InputError("unknown builtin robot '" + robot_ref + "'");
    return load_robot(robot_ref);
}

}  // namespace mplan
