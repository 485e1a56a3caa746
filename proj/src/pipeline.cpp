#include "mplan/pipeline.hpp"

#include <fstream>

#include "mplan/errors.hpp"
#include "mplan/textio.hpp"

namespace mplan::pipeline {

Paths Paths::in(const std::string& out_dir) {
    Paths p;
    const std::string base = out_dir.empty() ? "." : out_dir;
    p.dataset_csv = base + "/dataset.csv";
    p.dataset_meta = base + "/dataset.meta";
    p.model = base + "/vae.bin";
    p.train_report = base + "/train_report.json";
    p.roadmap = base + "/roadmap.txt";
    p.embedding_csv = base + "/embedding_report.csv";
    p.latent_csv = base + "/latent_points.csv";
    return p;
}

Dataset run_generate(const RunConfig& cfg, const RobotModel& robot) {
    GenerateConfig g;
    g.count = cfg.dataset_count;
    g.workspace = cfg.workspace;
    g.obstacle_radius = cfg.obstacle_radius;
    g.seed = cfg.dataset_seed;
    Dataset d = generate(robot, g);
    d = rebalance(d, cfg.rebalance_fraction, cfg.dataset_seed);
    if (cfg.max_samples > 0 && static_cast<std::size_t>(cfg.max_samples) < d.size())
        d = subsample(d, static_cast<std::size_t>(cfg.max_samples), cfg.dataset_seed);
    return d;
}

TrainOut run_train(const RunConfig& cfg, const RobotModel& robot, const Dataset& corpus) {
    if (corpus.robot_hash != robot.content_hash())
        throw InputError("dataset was generated with a different robot model");
    TrainOut out;
    auto [train_split, heldout_split] = split(corpus, cfg.train_fraction, cfg.dataset_seed);
    train_split.norm = compute_normalization(train_split);
    auto [model, report] = train_vae(train_split, heldout_split, cfg.vae, cfg.hash());
    out.model = std::move(model);
    out.report = std::move(report);
    out.train_split = std::move(train_split);
    out.heldout_split = std::move(heldout_split);
    return out;
}

GraphOut run_build_graph(const RunConfig& cfg, const RobotModel& robot, const Dataset& corpus,
                         const VaeModel& model) {
    if (model.config_hash != cfg.hash())
        throw InputError("model was trained under a different configuration (config hash mismatch)");
    if (corpus.robot_hash != robot.content_hash())
        throw InputError("dataset was generated with a different robot model");

    GraphOut out;
    out.reports = stability_across_bins(corpus, model, cfg.metric_bins, cfg.metrics_k, cfg.metrics_seed);

    // Safe dataset samples become data-encoded nodes.
    std::vector<LatentPoint> points;
    const Eigen::MatrixXd x = normalized_matrix(corpus, model.norm);
    const Eigen::MatrixXd z = model.encode_batch(x);
    for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
        if (corpus.samples[i].collision_flag != 0) continue;
        LatentPoint p;
        p.z = z.col(static_cast<Eigen::Index>(i));
        p.origin = PointOrigin::DataEncoded;
        p.joints = clamp_to_limits(robot, corpus.samples[i].joints);
        points.push_back(p);
    }

    const Box2 bounds = latent_bounds(z, cfg.bounds_margin);
    const auto grid_points =
        densify_grid(model, robot, bounds, cfg.grid_resolution, corpus.obstacle_radius, &out.grid);
    points.insert(points.end(), grid_points.begin(), grid_points.end());

    Roadmap knn = build_knn(points, cfg.knn_k);
    knn.grid_resolution = cfg.grid_resolution;
    knn.model_hash = model.content_hash();
    knn.config_hash = cfg.hash();
    const double cap = cfg.bridge_cap_factor * median_knn_edge_length(knn);
    out.roadmap = ensure_connected(knn, cap, &out.connect);
    out.roadmap.validate();
    return out;
}

SimOut run_simulate(const RunConfig& cfg, const RobotModel& robot, const Roadmap& roadmap, const VaeModel& model,
                    const Scenario& scenario, std::uint64_t run_seed, double jitter) {
    if (roadmap.model_hash != model.content_hash())
        throw InputError("roadmap was built from a different model (model hash mismatch)");
    if (roadmap.config_hash != cfg.hash())
        throw InputError("roadmap was built under a different configuration (config hash mismatch)");

    JointVector start = scenario.start_joints;
    JointVector goal = scenario.goal_joints;
    if (run_seed != 0 && jitter > 0.0) {
        Rng rng(run_seed ^ scenario.content_hash());
        for (int i = 0; i < kNumJoints; ++i) {
            start[i] += rng.uniform(-jitter, jitter);
            goal[i] += rng.uniform(-jitter, jitter);
            const double lo = robot.limits[i].lo + 1e-3, hi = robot.limits[i].hi - 1e-3;
            start[i] = std::min(std::max(start[i], lo), hi);
            goal[i] = std::min(std::max(goal[i], lo), hi);
        }
    }

    const auto live0 = obstacles_at(scenario, 0);
    PlanState plan =
        plan_initial(roadmap, model, robot, start, goal, std::span<const ObstacleSnapshot>(live0), cfg.safety);

    TraceHeader header;
    header.config_hash = cfg.hash();
    header.model_hash = model.content_hash();
    header.roadmap_hash = roadmap.structure_hash();
    header.run_seed = run_seed;

    SimOut out;
    auto [final_state, trace] = execute(std::move(plan), roadmap, model, robot, scenario, cfg.safety,
                                        cfg.max_ticks, header);
    out.final_state = std::move(final_state);
    out.trace = std::move(trace);
    return out;
}

void save_latent_cloud(const Dataset& corpus, const VaeModel& model, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write latent cloud: " + path);
    const Eigen::MatrixXd x = normalized_matrix(corpus, model.norm);
    const Eigen::MatrixXd z = model.encode_batch(x);
    f << "z0,z1,collision\n";
    for (Eigen::Index i = 0; i < z.cols(); ++i)
        f << fmt_g17(z(0, i)) << "," << fmt_g17(z(1, i)) << ","
          << corpus.samples[static_cast<std::size_t>(i)].collision_flag << "\n";
}

}  // namespace mplan::pipeline
