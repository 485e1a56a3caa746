#pragma once

#include <string>

#include "mplan/config.hpp"
#include "mplan/metrics.hpp"
#include "mplan/verify.hpp"

namespace mplan::pipeline {

/// Canonical artifact names inside the configured output directory.
struct Paths {
    std::string dataset_csv, dataset_meta, model, train_report, roadmap, embedding_csv, latent_csv;
    static Paths in(const std::string& out_dir);
};

/// generate + rebalance (+ optional stratified cap at dataset.max_samples).
Dataset run_generate(const RunConfig& cfg, const RobotModel& robot);

struct TrainOut {
    VaeModel model;
    TrainReport report;
    Dataset train_split, heldout_split;
};
TrainOut run_train(const RunConfig& cfg, const RobotModel& robot, const Dataset& corpus);

struct GraphOut {
    Roadmap roadmap;
    std::vector<EmbeddingReport> reports;
    GridStats grid;
    ConnectReport connect;
};
GraphOut run_build_graph(const RunConfig& cfg, const RobotModel& robot, const Dataset& corpus,
                         const VaeModel& model);

struct SimOut {
    PlanState final_state;
    Trace trace;
};
/// run_seed != 0 jitters start and goal joints uniformly by +-jitter (clamped
/// inside limits) so seeded repetitions explore distinct planning problems.
SimOut run_simulate(const RunConfig& cfg, const RobotModel& robot, const Roadmap& roadmap, const VaeModel& model,
                    const Scenario& scenario, std::uint64_t run_seed, double jitter);

/// Latent encodings of a corpus with class labels, for external plotting.
void save_latent_cloud(const Dataset& corpus, const VaeModel& model, const std::string& path);

}  // namespace mplan::pipeline
